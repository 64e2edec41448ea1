"""Entanglement measures expressed as functions of two-qubit concurrence."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np

MU_EXCLUSION = 1e-9
DEFAULT_GRID = 10_000


def _check_unit_interval(name, value, lo=0.0, hi=1.0):
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < lo) or np.any(arr > hi):
        raise ValueError(f"{name} must lie in [{lo}, {hi}], got {value!r}")


class EntanglementMeasure(ABC):
    """A nondecreasing, continuous function of concurrence.

    Subclasses implement :meth:`evaluate`; instances are callable and accept
    scalars or numpy arrays.
    """

    @abstractmethod
    def evaluate(self, c):
        ...

    def __call__(self, c):
        out = self.evaluate(np.asarray(c, dtype=float))
        return float(out) if np.ndim(out) == 0 else out


def eq_eval(c, q):
    """Maximum LOCC conversion probability to a target with concurrence 1-q.

    Equals ``(1 - sqrt(1 - c^2)) / (1 - sqrt(1 - (1-q)^2))`` for
    ``c <= 1-q`` and 1 above.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"Q must lie in (0, 1), got {q!r}")
    _check_unit_interval("C", c)
    c = np.asarray(c, dtype=float)
    target = 1.0 - q
    # 1 - sqrt(1 - c^2) written as c^2 / (1 + sqrt(1 - c^2)) to avoid cancellation
    num = c**2 / (1.0 + np.sqrt(1.0 - c**2))
    den = target**2 / (1.0 + np.sqrt(1.0 - target**2))
    out = np.where(c >= target, 1.0, np.minimum(num / den, 1.0))
    return float(out) if out.ndim == 0 else out


def lambda_q(q):
    """Smaller Schmidt weight of the target state with concurrence 1-q."""
    t = 1.0 - q
    return (1.0 - np.sqrt(1.0 - t * t)) / 2.0


@dataclass(frozen=True)
class EQMeasure(EntanglementMeasure):
    """Conversion-probability measure E_Q."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"Q must lie in (0, 1), got {self.q!r}")

    @property
    def lambda_q(self):
        return lambda_q(self.q)

    def evaluate(self, c):
        return eq_eval(c, self.q)


class ConcurrenceMeasure(EntanglementMeasure):
    """The concurrence itself, E(C) = C."""

    def evaluate(self, c):
        _check_unit_interval("C", c)
        return np.asarray(c, dtype=float)


@dataclass(frozen=True)
class FunctionMeasure(EntanglementMeasure):
    """Wrap an arbitrary vectorized callable as a measure."""

    func: Callable

    def evaluate(self, c):
        _check_unit_interval("C", c)
        return np.asarray(self.func(c), dtype=float)


def mu_condition_check(m, q, mu, grid_n=DEFAULT_GRID):
    """Check ``E(C) - mu (C - 1 + q) < E(1 - q)`` on a uniform grid of [0, 1].

    Grid points within 1e-9 of ``C = 1 - q`` are skipped; there the two
    sides coincide by construction.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if grid_n < 3:
        raise ValueError("grid_n must be at least 3")
    c = np.arange(grid_n + 1, dtype=float) / grid_n
    c = c[np.abs(c - (1.0 - q)) > MU_EXCLUSION]
    lhs = np.asarray(m(c), dtype=float) - mu * (c - 1.0 + q)
    return bool(np.all(lhs < m(1.0 - q)))


def privacy_k(lam, m):
    """Residual privacy K(lambda) = E(2 sqrt(lambda (1 - lambda)))."""
    _check_unit_interval("lambda", lam)
    lam = np.asarray(lam, dtype=float)
    c = np.clip(2.0 * np.sqrt(lam * (1.0 - lam)), 0.0, 1.0)
    return m(c)
