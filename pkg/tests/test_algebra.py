import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepgap import algebra
from sepgap.algebra import (
    KET01,
    PHI_MINUS,
    PHI_PLUS,
    LocalGramParams,
    NotPositiveError,
    NullElementError,
    apply_product_kraus,
    concurrence_from_gram,
    concurrence_pure,
    gram,
    gram_params,
    norm2,
)
from sepgap.separable import build_optimal_instrument

N_PROPERTY = 10_000


def _gaussian_ops(rng, n):
    return rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))


def _random_unitaries(rng, n):
    q, r = np.linalg.qr(_gaussian_ops(rng, n))
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def test_apply_identity():
    out = apply_product_kraus(np.eye(2), np.eye(2), PHI_PLUS)
    assert np.allclose(out, PHI_PLUS, atol=1e-15)
    assert norm2(out) == pytest.approx(1.0, abs=1e-15)


def test_apply_projector_on_bell_state():
    out = apply_product_kraus(algebra.PROJ0, np.eye(2), PHI_PLUS)
    assert np.allclose(out, [1 / np.sqrt(2), 0, 0, 0], atol=1e-15)
    assert norm2(out) == pytest.approx(0.5, abs=1e-15)


def test_apply_partial_diagonal():
    t = np.pi / 6
    out = apply_product_kraus(np.diag([np.cos(t), np.sin(t)]), np.eye(2), PHI_PLUS)
    expected = np.array([np.cos(t), 0, 0, np.sin(t)]) / np.sqrt(2)
    assert np.allclose(out, expected, atol=1e-15)
    assert norm2(out) == pytest.approx(0.5, abs=1e-15)


def test_apply_matches_kron(rng):
    a, b = _gaussian_ops(rng, 2)
    s = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert np.allclose(apply_product_kraus(a, b, s), np.kron(a, b) @ s, atol=1e-12)


def test_concurrence_examples():
    assert concurrence_pure(PHI_PLUS) == pytest.approx(1.0, abs=1e-15)
    assert concurrence_pure(KET01) == 0.0
    s = algebra.ket(np.sqrt(0.2), 0, 0, np.sqrt(0.8))
    assert concurrence_pure(s) == pytest.approx(0.8, abs=1e-15)


def test_concurrence_rejects_zero_norm():
    with pytest.raises(ValueError):
        concurrence_pure(np.zeros(4))


def test_gram_params_examples():
    assert gram_params(np.eye(2)) == LocalGramParams(1.0, 0.0, 0j)
    assert gram_params(np.diag([2.0, 0.0])) == LocalGramParams(1.0, 1.0, 0j)
    p = gram_params(np.array([[1.5, 0.5], [0.5, 0.5]]))
    assert (p.w, p.x, p.xi) == (1.0, 0.5, 0.5 + 0j)


def test_gram_params_errors_are_distinct():
    with pytest.raises(NotPositiveError):
        gram_params(np.diag([1.0, -0.5]))
    with pytest.raises(NotPositiveError):
        gram_params(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(NullElementError):
        gram_params(np.zeros((2, 2)))
    assert not issubclass(NullElementError, NotPositiveError)


def test_unchecked_params_agree(rng):
    for op in _gaussian_ops(rng, 50):
        assert algebra.gram_params_of_operator(op) == gram_params(gram(op))


def test_concurrence_from_gram_examples():
    assert concurrence_from_gram(np.eye(4), 1.0) == pytest.approx(1.0, abs=1e-15)
    el = build_optimal_instrument(0.2).elements[2]
    assert concurrence_from_gram(el.matrix(), 0.5) == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(ValueError):
        concurrence_from_gram(np.eye(4), 0.0)


def test_norm_is_expectation_of_gram(rng):
    a = _gaussian_ops(rng, N_PROPERTY)
    b = _gaussian_ops(rng, N_PROPERTY)
    s = rng.standard_normal((N_PROPERTY, 4)) + 1j * rng.standard_normal((N_PROPERTY, 4))
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    lhs = norm2(apply_product_kraus(a, b, s))
    g = np.einsum("nij,nkl->nikjl", gram(a), gram(b)).reshape(N_PROPERTY, 4, 4)
    rhs = np.real(np.einsum("ni,nij,nj->n", s.conj(), g, s))
    assert np.max(np.abs(lhs - rhs) / np.maximum(1.0, rhs)) <= 1e-12


def test_concurrence_local_unitary_invariance(rng):
    s = rng.standard_normal((N_PROPERTY, 4)) + 1j * rng.standard_normal((N_PROPERTY, 4))
    u = _random_unitaries(rng, N_PROPERTY)
    v = _random_unitaries(rng, N_PROPERTY)
    before = concurrence_pure(s)
    after = concurrence_pure(apply_product_kraus(u, v, s))
    assert np.max(np.abs(before - after)) <= 1e-10


def test_concurrence_from_gram_matches_propagation(rng):
    a = _gaussian_ops(rng, N_PROPERTY)
    b = _gaussian_ops(rng, N_PROPERTY)
    ga, gb = gram(a), gram(b)
    worst = 0.0
    for bell in (PHI_PLUS, PHI_MINUS):
        psi = apply_product_kraus(a, b, bell)
        p = norm2(psi)
        c_true = concurrence_pure(psi)
        # det(GA (x) GB) = det(GA)^2 det(GB)^2
        det = np.real(np.linalg.det(ga) ** 2 * np.linalg.det(gb) ** 2)
        c_gram = np.maximum(det, 0.0) ** 0.25 / p
        worst = max(worst, float(np.max(np.abs(c_true - c_gram))))
    assert worst <= 1e-10
    g = np.kron(ga[0], gb[0])
    psi = apply_product_kraus(a[0], b[0], PHI_PLUS)
    assert concurrence_from_gram(g, norm2(psi)) == pytest.approx(
        concurrence_pure(psi), abs=1e-10
    )


_unit = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(w=st.floats(1e-6, 10.0), x=_unit, frac=st.floats(0.0, 1.0), phase=st.floats(0.0, 2 * np.pi))
def test_gram_params_roundtrip(w, x, frac, phase):
    xi = frac * np.sqrt(1.0 - x * x) * np.exp(1j * phase)
    h = LocalGramParams(w, x, xi).matrix()
    back = gram_params(h)
    assert np.max(np.abs(back.matrix() - h)) <= 1e-12 * max(1.0, w)
    assert abs(back.w - w) <= 1e-12 * w
    assert abs(back.x - x) <= 1e-12
    assert abs(back.xi - xi) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(w=st.floats(0.0, 10.0), x=_unit, frac=st.floats(0.0, 1.0), phase=st.floats(0.0, 2 * np.pi))
def test_valid_params_reconstruct_positive(w, x, frac, phase):
    xi = frac * np.sqrt(1.0 - x * x) * np.exp(1j * phase)
    h = LocalGramParams(w, x, xi).matrix()
    assert np.real(np.trace(h)) >= 0.0
    assert np.real(np.linalg.det(h)) >= -1e-12 * max(1.0, w * w)
