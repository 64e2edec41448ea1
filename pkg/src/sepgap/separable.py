"""
Separable instruments in the product parametrization

    G = w [[1+x, xi], [xi*, 1-x]] (x) [[1+y, eta], [eta*, 1-y]],

their success/failure probability functionals, the concurrence bound from
diagonal data, and the mean residual entanglement of an instrument.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import algebra

COMPLETENESS_TOL = 1e-10
ZERO_P = 1e-12
EFFICIENCY_SLACK = 1e-12
RAY_GUARD = 1e-14
PARAM_SLACK = 1e-12


@dataclass(frozen=True)
class SeparableElement:
    w: float
    x: float
    y: float
    xi: complex = 0j
    eta: complex = 0j

    def __post_init__(self):
        if not -PARAM_SLACK <= self.w <= 1.0 + PARAM_SLACK:
            raise ValueError(f"w must lie in [0, 1], got {self.w!r}")
        for name, v in (("x", self.x), ("y", self.y)):
            if not -1.0 - PARAM_SLACK <= v <= 1.0 + PARAM_SLACK:
                raise ValueError(f"{name} must lie in [-1, 1], got {v!r}")
        if abs(self.xi) ** 2 > 1.0 - self.x**2 + PARAM_SLACK:
            raise ValueError("|xi|^2 exceeds 1 - x^2")
        if abs(self.eta) ** 2 > 1.0 - self.y**2 + PARAM_SLACK:
            raise ValueError("|eta|^2 exceeds 1 - y^2")

    @property
    def alice_factor(self):
        return np.array([[1 + self.x, self.xi], [np.conj(self.xi), 1 - self.x]], dtype=complex)

    @property
    def bob_factor(self):
        return np.array([[1 + self.y, self.eta], [np.conj(self.eta), 1 - self.y]], dtype=complex)

    def matrix(self):
        return self.w * np.kron(self.alice_factor, self.bob_factor)

    def kraus_pair(self):
        """Canonical Kraus pair: positive square roots of sqrt(w) times each factor."""
        s = np.sqrt(max(self.w, 0.0))
        return algebra.psd_sqrt(s * self.alice_factor), algebra.psd_sqrt(s * self.bob_factor)

    @classmethod
    def from_gram_params(cls, a: algebra.LocalGramParams, b: algebra.LocalGramParams):
        return cls(w=a.w * b.w, x=a.x, y=b.x, xi=a.xi, eta=b.xi)


@dataclass(frozen=True)
class OutcomeStats:
    p_plus: float
    p_minus: float
    q: float
    c_plus: Optional[float] = None
    c_minus: Optional[float] = None

    @property
    def p(self):
        return (self.p_plus + self.p_minus) / 2.0


@dataclass(frozen=True)
class SeparableInstrument:
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def povm_sum(self):
        return sum((e.matrix() for e in self.elements), np.zeros((4, 4), dtype=complex))

    def completeness_error(self):
        return float(np.max(np.abs(self.povm_sum() - np.eye(4))))

    def is_complete(self, tol=COMPLETENESS_TOL):
        return self.completeness_error() <= tol


def p_functional(g: SeparableElement):
    """Success-probability functional w (1 + x y)."""
    return g.w * (1.0 + g.x * g.y)


def q_functional(g: SeparableElement):
    """Failure-probability functional w (1 - x y)."""
    return g.w * (1.0 - g.x * g.y)


def p_of_matrix(g):
    g = np.asarray(g)
    return float(np.real(g[0, 0] + g[3, 3])) / 2.0


def q_of_matrix(g):
    g = np.asarray(g)
    return float(np.real(g[1, 1] + g[2, 2])) / 2.0


def c_bound(x, y):
    """Upper bound sqrt((1-x^2)(1-y^2)) / (1 + x y) on the post-measurement concurrence.

    Works elementwise on arrays. Raises on the ray 1 + x y <= 1e-14, where
    the outcome never occurs for the Bell inputs.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    den = 1.0 + x * y
    if np.any(den <= RAY_GUARD):
        raise ValueError("c_bound undefined where 1 + x*y vanishes")
    num = np.sqrt(np.clip((1.0 - x * x) * (1.0 - y * y), 0.0, None))
    out = np.clip(num / den, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def build_optimal_instrument(q):
    """Four diagonal elements reaching mean residual entanglement E(1-Q)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"Q must lie in (0, 1), got {q!r}")
    s = np.sqrt(q / (2.0 - q))
    w_fail = q / 4.0
    w_keep = (2.0 - q) / 4.0
    return SeparableInstrument(
        (
            SeparableElement(w_fail, 1.0, -1.0),
            SeparableElement(w_fail, -1.0, 1.0),
            SeparableElement(w_keep, s, s),
            SeparableElement(w_keep, -s, -s),
        )
    )


def product_zz_instrument():
    """Projective Z measurement on both qubits, one element per basis state."""
    return SeparableInstrument(
        SeparableElement(0.25, sx, sy) for sx in (1.0, -1.0) for sy in (1.0, -1.0)
    )


def identity_instrument():
    return SeparableInstrument((SeparableElement(1.0, 0.0, 0.0),))


def outcome_stats(a, b):
    """Branch probabilities and true concurrences for Kraus pair ``a (x) b``."""
    plus = algebra.apply_product_kraus(a, b, algebra.PHI_PLUS)
    minus = algebra.apply_product_kraus(a, b, algebra.PHI_MINUS)
    p_plus = float(algebra.norm2(plus))
    p_minus = float(algebra.norm2(minus))
    q = (
        float(algebra.norm2(algebra.apply_product_kraus(a, b, algebra.KET01)))
        + float(algebra.norm2(algebra.apply_product_kraus(a, b, algebra.KET10)))
    ) / 2.0
    c_plus = float(algebra.concurrence_pure(plus)) if p_plus > ZERO_P else None
    c_minus = float(algebra.concurrence_pure(minus)) if p_minus > ZERO_P else None
    return OutcomeStats(p_plus, p_minus, q, c_plus, c_minus)


@dataclass(frozen=True)
class EbarResult:
    ebar: float
    stats: tuple
    efficiency: float

    def __iter__(self):
        return iter((self.ebar, self.stats, self.efficiency))


def mean_residual(stats, m):
    """Average of p(+/-) E(C(+/-)) over outcomes with a surviving Bell state."""
    total = 0.0
    for st in stats:
        if st.p <= ZERO_P:
            continue
        if st.c_plus is not None:
            total += st.p_plus * m(st.c_plus)
        if st.c_minus is not None:
            total += st.p_minus * m(st.c_minus)
    return total / 2.0


def discrimination_efficiency(stats):
    return float(sum(st.q for st in stats if st.p <= ZERO_P))


def evaluate_ebar(inst: SeparableInstrument, m):
    """Mean residual entanglement, per-outcome statistics and efficiency.

    Each element is realized by its canonical Kraus pair.
    """
    if not inst.is_complete():
        raise ValueError(
            f"instrument is incomplete (max deviation {inst.completeness_error():.3e})"
        )
    stats = tuple(outcome_stats(*e.kraus_pair()) for e in inst.elements)
    return EbarResult(mean_residual(stats, m), stats, discrimination_efficiency(stats))


def check_efficiency(inst: SeparableInstrument, q):
    """True when the p = 0 outcomes carry total failure probability at least Q."""
    eff = sum(q_functional(e) for e in inst.elements if p_functional(e) <= ZERO_P)
    return bool(eff >= q - EFFICIENCY_SLACK)


def random_diagonal_instrument(rng, n_random=3, q_hint=None):
    """A random complete instrument of diagonal product elements.

    ``n_random`` random rank-one diagonal elements are scaled to fit under
    the identity and the remainder is filled with the four basis
    projectors. If ``q_hint`` is given, the elements of the optimal
    instrument at that Q are perturbed instead, giving near-optimal samples.
    """
    rows = []
    if q_hint is not None:
        for e in build_optimal_instrument(q_hint):
            a = np.array([1 + e.x, 1 - e.x]) * (1 + 0.2 * rng.standard_normal(2))
            b = np.array([1 + e.y, 1 - e.y]) * (1 + 0.2 * rng.standard_normal(2))
            rows.append((e.w * np.clip(a, 0, None), np.clip(b, 0, None)))
    for _ in range(n_random):
        a = rng.random(2)
        b = rng.random(2)
        # occasionally hit the axes exactly so that p = 0 outcomes occur
        if rng.random() < 0.3:
            a[rng.integers(2)] = 0.0
        if rng.random() < 0.3:
            b[rng.integers(2)] = 0.0
        rows.append((a, b))
    total = sum(np.outer(a, b) for a, b in rows)
    scale = 1.0 / max(total.max(), 1.0)
    elements = []
    for a, b in rows:
        m = scale * np.outer(a, b)
        elements.append(_diag_element(m))
    rest = np.ones((2, 2)) - scale * total
    for i in range(2):
        for j in range(2):
            if rest[i, j] > 0:
                m = np.zeros((2, 2))
                m[i, j] = rest[i, j]
                elements.append(_diag_element(m))
    return SeparableInstrument(e for e in elements if e.w > 0)


def _diag_element(m):
    """Element whose diagonal is the rank-one table m[i, j] = <ij|G|ij>."""
    total = float(m.sum())
    if total <= 0:
        return SeparableElement(0.0, 0.0, 0.0)
    x = float(m[0].sum() - m[1].sum()) / total
    y = float(m[:, 0].sum() - m[:, 1].sum()) / total
    return SeparableElement(total / 4.0, float(np.clip(x, -1, 1)), float(np.clip(y, -1, 1)))


def instrument_to_json(inst: SeparableInstrument):
    return json.dumps(
        [
            {
                "w": e.w,
                "x": e.x,
                "y": e.y,
                "xi_re": float(np.real(e.xi)),
                "xi_im": float(np.imag(e.xi)),
                "eta_re": float(np.real(e.eta)),
                "eta_im": float(np.imag(e.eta)),
            }
            for e in inst.elements
        ],
        indent=2,
    )


def instrument_from_json(text):
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("instrument JSON must be an array of elements")
    elements = []
    for obj in data:
        elements.append(
            SeparableElement(
                w=float(obj["w"]),
                x=float(obj["x"]),
                y=float(obj["y"]),
                xi=complex(obj.get("xi_re", 0.0), obj.get("xi_im", 0.0)),
                eta=complex(obj.get("eta_re", 0.0), obj.get("eta_im", 0.0)),
            )
        )
    return SeparableInstrument(elements)
