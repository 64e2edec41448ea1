"""
Small dense complex linear algebra for two qubits.

States are length-4 complex vectors in the basis |00>, |01>, |10>, |11>
(unnormalized vectors are allowed; the squared norm is the branch
probability). Local operators are 2x2 complex arrays. Functions accept a
leading batch dimension where noted.
"""

from dataclasses import dataclass

import numpy as np

POSITIVITY_FLOOR = -1e-12
NULL_TRACE = 1e-14

IDENTITY = np.eye(2, dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
PROJ0 = np.diag([1.0, 0.0]).astype(complex)
PROJ1 = np.diag([0.0, 1.0]).astype(complex)


class NullElementError(ValueError):
    """The operator has (numerically) zero trace; the outcome never occurs."""


class NotPositiveError(ValueError):
    """The operator is not positive semidefinite."""


def ket(a00, a01=0.0, a10=0.0, a11=0.0):
    """Two-qubit state vector from its four amplitudes."""
    return np.array([a00, a01, a10, a11], dtype=complex)


PHI_PLUS = ket(1.0, 0.0, 0.0, 1.0) / np.sqrt(2.0)
PHI_MINUS = ket(1.0, 0.0, 0.0, -1.0) / np.sqrt(2.0)
KET01 = ket(0.0, 1.0, 0.0, 0.0)
KET10 = ket(0.0, 0.0, 1.0, 0.0)


def norm2(state):
    """Squared norm of a state (or of each state along the last axis)."""
    state = np.asarray(state)
    return np.sum(np.abs(state) ** 2, axis=-1)


def apply_product_kraus(a, b, state):
    """Return the unnormalized state (a (x) b) |state>.

    Batched inputs of shape (..., 2, 2) and (..., 4) broadcast against
    each other.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    state = np.asarray(state, dtype=complex)
    amps = state.reshape(state.shape[:-1] + (2, 2))
    # (A (x) B) vec(M) = vec(A M B^T) in row-major ordering
    out = a @ amps @ np.swapaxes(b, -1, -2)
    return out.reshape(out.shape[:-2] + (4,))


def concurrence_pure(state):
    """Concurrence 2|a00 a11 - a01 a10| / ||psi||^2 of a pure two-qubit state.

    Raises
    ------
    ValueError
        If the state has zero norm.
    """
    state = np.asarray(state, dtype=complex)
    n2 = norm2(state)
    if np.any(n2 <= 0.0):
        raise ValueError("concurrence of a zero-norm state is undefined")
    det = state[..., 0] * state[..., 3] - state[..., 1] * state[..., 2]
    c = 2.0 * np.abs(det) / n2
    return np.clip(c, 0.0, 1.0)


@dataclass(frozen=True)
class LocalGramParams:
    """One local factor w * [[1+x, xi], [xi*, 1-x]] of a product POVM element."""

    w: float
    x: float
    xi: complex = 0j

    def matrix(self):
        return self.w * np.array(
            [[1.0 + self.x, self.xi], [np.conj(self.xi), 1.0 - self.x]], dtype=complex
        )


def is_positive(h, floor=POSITIVITY_FLOOR):
    h = np.asarray(h, dtype=complex)
    if np.abs(h - h.conj().T).max() > 1e-12:
        return False
    return bool(np.linalg.eigvalsh(h).min() >= floor)


def kron2(a, b):
    """Kronecker product of two 2x2 matrices."""
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(4, 4)


def gram_params(h):
    """Invert the local parametrization of a positive 2x2 operator.

    Returns ``LocalGramParams(w, x, xi)`` with ``w = Tr(h)/2``,
    ``x = (h00 - h11)/Tr(h)`` and ``xi = 2 h01 / Tr(h)``.

    Raises
    ------
    NullElementError
        If ``Tr(h) <= 1e-14``.
    NotPositiveError
        If ``h`` has an eigenvalue below ``-1e-12`` or is not Hermitian.
    """
    h = np.asarray(h, dtype=complex)
    tr = float(np.real(h[0, 0] + h[1, 1]))
    if not is_positive(h):
        raise NotPositiveError("operator is not positive semidefinite")
    if tr <= NULL_TRACE:
        raise NullElementError(f"operator trace {tr!r} is below the null threshold")
    return _params(h, tr)


def _params(h, tr):
    x = float(np.real(h[0, 0] - h[1, 1])) / tr
    xi = complex(2.0 * h[0, 1] / tr)
    return LocalGramParams(w=tr / 2.0, x=x, xi=xi)


def gram_params_of_operator(op):
    """Parameters of op^dagger op, which is positive by construction.

    Skips the eigenvalue check of :func:`gram_params`.
    """
    h = gram(op)
    tr = float(np.real(h[0, 0] + h[1, 1]))
    if tr <= NULL_TRACE:
        raise NullElementError(f"operator trace {tr!r} is below the null threshold")
    return _params(h, tr)


def gram_params_batch(h):
    """Vectorized (w, x, xi) for an array of operators of shape (..., 2, 2).

    No validation; entries with zero trace give nan.
    """
    h = np.asarray(h)
    tr = np.real(h[..., 0, 0] + h[..., 1, 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        x = np.real(h[..., 0, 0] - h[..., 1, 1]) / tr
        xi = 2.0 * h[..., 0, 1] / tr
    return tr / 2.0, x, xi


def gram(op):
    """op^dagger op, batched over leading axes."""
    op = np.asarray(op, dtype=complex)
    return np.swapaxes(op.conj(), -1, -2) @ op


def psd_sqrt(h):
    """Positive square root of a positive semidefinite Hermitian matrix."""
    vals, vecs = np.linalg.eigh(np.asarray(h, dtype=complex))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def concurrence_from_gram(g, p_branch):
    """Post-measurement concurrence det(G)^(1/4) / p for a product POVM element.

    Valid for any Kraus decomposition of ``g`` into a product A (x) B acting
    on a maximally entangled input.
    """
    if p_branch <= 0.0:
        raise ValueError("branch probability must be positive")
    det = float(np.real(np.linalg.det(np.asarray(g, dtype=complex))))
    return max(det, 0.0) ** 0.25 / p_branch
