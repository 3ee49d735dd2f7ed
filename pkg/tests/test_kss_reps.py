import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from hhvb import holo
from hhvb.errors import DimensionMismatch, NotAdmissible, UnsupportedDimension
from hhvb.kss_reps import (ChainSpec, IrrepLabel, admissible, ad_pminus, cg_projection,
                           eval_irrep, irrep_lie, is_filiform_triple, rho_matrix, rho_tilde,
                           sym_lie, sym_rep, _random_su2)
from hhvb.mobius import KFactor

seeds = st.integers(0, 2**32 - 1)
degrees = st.integers(0, 5)


def _gl2(rng):
    return rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))


@given(degrees, seeds)
def test_sym_is_multiplicative(m, seed):
    rng = np.random.default_rng(seed)
    A, B = _gl2(rng), _gl2(rng)
    lhs = sym_rep(m, A @ B)
    assert np.abs(lhs - sym_rep(m, A) @ sym_rep(m, B)).max() < 1e-9 * (1 + np.abs(lhs).max())


@given(degrees, seeds)
def test_sym_respects_adjoints(m, seed):
    rng = np.random.default_rng(seed)
    A = _gl2(rng)
    assert np.allclose(sym_rep(m, A.conj().T), sym_rep(m, A).conj().T)
    U = _random_su2(rng)
    S = sym_rep(m, U)
    assert np.allclose(S @ S.conj().T, np.eye(m + 1))


def test_sym_small_cases():
    A = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.allclose(sym_rep(0, A), [[1]])
    assert np.allclose(sym_rep(1, A), A)
    assert np.isclose(np.linalg.det(sym_rep(2, A)), np.linalg.det(A) ** 3)


@given(degrees, seeds)
def test_sym_lie_is_derivative(m, seed):
    rng = np.random.default_rng(seed)
    a = _gl2(rng)
    num = holo.derivative(lambda t: sym_rep(m, np.array([expm(s * a) for s in t[:, 0]])).reshape(len(t), -1),
                          [0.0], [1.0])
    assert np.abs(num.reshape(m + 1, m + 1) - sym_lie(m, a)).max() < 1e-9


@given(st.integers(0, 3), st.floats(-5, 0), seeds)
def test_irrep_multiplicative_with_logs(m, lam, seed):
    rng = np.random.default_rng(seed)
    lab = IrrepLabel(2, m, lam)
    d1, d2 = np.exp(1j * rng.normal(size=2) * 3)
    k1 = KFactor(_gl2(rng), d1, np.log(d1) + 2j * np.pi)
    k2 = KFactor(_gl2(rng), d2, np.log(d2))
    lhs = eval_irrep(lab, k1 @ k2)
    rhs = eval_irrep(lab, k1) @ eval_irrep(lab, k2)
    assert np.abs(lhs - rhs).max() < 1e-8 * (1 + np.abs(lhs).max())


def test_irrep_lie_is_derivative(rng):
    lab = IrrepLabel(2, 2, -1.7)
    a = _gl2(rng)
    d = 0.3 - 0.2j

    def F(t):
        t = t[:, 0]
        k = KFactor(np.array([expm(s * a) for s in t]), np.exp(t * d), t * d)
        return eval_irrep(lab, k).reshape(len(t), -1)

    num = holo.derivative(F, [0.0], [1.0]).reshape(3, 3)
    assert np.abs(num - irrep_lie(lab, a, d)).max() < 1e-9


def test_label_u_and_round_trip():
    lab = IrrepLabel(2, 1, -3.0)
    assert lab.u == (3 * -3.0 - 1) / 2
    again = IrrepLabel.from_u(2, 1, lab.u)
    assert again.lam == pytest.approx(lab.lam)
    with pytest.raises(UnsupportedDimension):
        IrrepLabel(1, 1, -1.0)
    with pytest.raises(UnsupportedDimension):
        IrrepLabel(3, 2, -1.0)


@pytest.mark.parametrize("s,t", [(0, 1), (1, 0), (1, 2), (2, 1), (3, 4), (4, 3)])
def test_cg_partial_isometry_and_equivariance(s, t, rng):
    P = cg_projection(s, t)
    assert np.abs(P.P @ P.P.conj().T - np.eye(t + 1)).max() < 1e-12
    for _ in range(4):
        A = _gl2(rng)
        delta = np.linalg.det(A)
        k = KFactor(A, delta, np.log(delta))
        src = np.kron(ad_pminus(k), sym_rep(s, A))
        # A^{-T} = J A J⁻¹ / det A and C²⊗Sym^s = Sym^{s+1} ⊕ det⊗Sym^{s-1}
        twist = delta / np.linalg.det(A) if t == s + 1 else delta
        rhs = twist * sym_rep(t, A) @ P.P
        assert np.abs(P.P @ src - rhs).max() < 1e-9 * (1 + np.abs(rhs).max())


@pytest.mark.parametrize("s,t", [(0, 1), (1, 2), (2, 1)])
def test_cg_phase_convention(s, t):
    P = cg_projection(s, t).P
    first = P[0][np.abs(P[0]) > 1e-10][0]
    assert abs(first.imag) < 1e-14 and first.real > 0
    assert not P.flags.writeable


@pytest.mark.parametrize("s,t", [(0, 0), (1, 3), (2, 2), (0, 2)])
def test_cg_not_admissible(s, t):
    assert not admissible(2, s, t)
    with pytest.raises(NotAdmissible):
        cg_projection(s, t)


def test_disc_cg_is_trivial():
    P = cg_projection(0, 0, n=1)
    assert np.allclose(P.P, [[1]])
    with pytest.raises(NotAdmissible):
        cg_projection(0, 1, n=1)


def test_rho_linear_and_checked(rng):
    P = cg_projection(1, 2)
    y1, y2 = rng.normal(size=2), rng.normal(size=2)
    assert np.allclose(rho_matrix(P, y1 + 2 * y2), rho_matrix(P, y1) + 2 * rho_matrix(P, y2))
    with pytest.raises(DimensionMismatch):
        rho_tilde(P, y1, np.ones(3))


def test_filiform_triples():
    assert is_filiform_triple(0, 1, 2)
    assert is_filiform_triple(2, 1, 0)
    for k in range(3):
        assert not is_filiform_triple(k, k + 1, k)
    assert not is_filiform_triple(2, 1, 2)


def test_chain_spec_validation():
    ch = ChainSpec.from_degrees(2, (0, 1, 2), -3.0)
    assert ch.degrees == (0, 1, 2) and ch.lam == -3.0 and ch.is_filiform()
    with pytest.raises(NotAdmissible):
        ChainSpec.from_degrees(2, (0, 2), -3.0)
    with pytest.raises(ValueError):
        ChainSpec((IrrepLabel(2, 0, -3.0), IrrepLabel(2, 1, -3.5)))
