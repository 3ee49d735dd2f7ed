"""Irreducible representations of the K-part and Clebsch–Gordan data.

An irrep is labelled by the Sym-degree ``m`` of the A-block (only m = 0 when
n = 1) and the real number λ with zhat acting by iλ. On a K-factor it is
exp(-u·log δ)·Sym^m(A) with u = (pλ - m)/n.

Sym^m(C²) uses the basis sqrt(C(m,k))·x^{m-k}y^k, which is orthonormal for
the SU(2)-invariant inner product, so adjoints are conjugate transposes.
p⁻ is identified with C^n through the B_ν-orthonormal basis
F(ε_β)/sqrt(2p); a p⁻ element with row data c has coordinates sqrt(2p)·c.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import DimensionMismatch, NotAdmissible, UnsupportedDimension
from .lie_core import DomainConstants


def _polymul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return out


def sym_rep_entries(m, a11, a12, a21, a22):
    """Entries of Sym^m of [[a11, a12], [a21, a22]] as a nested list.

    Works for any ring elements supporting + and * (numbers, numpy arrays,
    polynomial objects).
    """
    rows = []
    for k in range(m + 1):
        poly = [1]
        for _ in range(m - k):
            poly = _polymul(poly, [a11, a12])
        for _ in range(k):
            poly = _polymul(poly, [a21, a22])
        rows.append([poly[j] * np.sqrt(comb(m, k) / comb(m, j)) for j in range(m + 1)])
    return rows


def sym_rep(m, A):
    """Sym^m(A) for A of shape (..., n, n); n = 1 gives the 1×1 identity."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[-1]
    batch = A.shape[:-2]
    if n == 1:
        if m != 0:
            raise UnsupportedDimension("n = 1 only carries m = 0")
        return np.ones(batch + (1, 1), dtype=complex)
    if n > 2:
        if m == 0:
            return np.ones(batch + (1, 1), dtype=complex)
        raise UnsupportedDimension("Sym^m with m > 0 needs n <= 2")
    rows = sym_rep_entries(m, A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1])
    out = np.empty(batch + (m + 1, m + 1), dtype=complex)
    for k in range(m + 1):
        for j in range(m + 1):
            out[..., k, j] = rows[k][j]
    return out


def sym_lie(m, a):
    """Derivative of Sym^m at the identity in the direction a (2×2)."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    if n != 2:
        if m != 0:
            raise UnsupportedDimension("Sym^m with m > 0 needs n = 2")
        return np.zeros((1, 1), dtype=complex)
    out = np.zeros((m + 1, m + 1), dtype=complex)
    for k in range(m + 1):
        out[k, k] = (m - k) * a[0, 0] + k * a[1, 1]
        if k < m:
            out[k, k + 1] = (m - k) * a[0, 1] * np.sqrt(comb(m, k) / comb(m, k + 1))
        if k > 0:
            out[k, k - 1] = k * a[1, 0] * np.sqrt(comb(m, k) / comb(m, k - 1))
    return out


@dataclass(frozen=True)
class IrrepLabel:
    """χ_λ ⊗ Sym^m on the K-part of the ball B_n."""

    n: int
    m: int
    lam: float

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if self.n == 1 and self.m != 0:
            raise UnsupportedDimension("n = 1 only carries m = 0")
        if self.n > 2 and self.m != 0:
            raise UnsupportedDimension("non-scalar K-types need n <= 2")

    @classmethod
    def from_u(cls, n, m, u):
        p = DomainConstants(n).p
        return cls(n, m, (n * u + m) / p)

    @property
    def p(self):
        return self.n + 1

    @property
    def u(self):
        return (self.p * self.lam - self.m) / self.n

    @property
    def dim(self):
        return self.m + 1

    def shifted(self, k):
        """Same K_ss-type with λ replaced by λ - k."""
        return IrrepLabel(self.n, self.m, self.lam - k)


def eval_irrep(label, k):
    """exp(-u·log δ)·Sym^m(A); accepts batched K-factors."""
    scal = np.exp(-label.u * np.asarray(k.logdelta))
    return scal[..., None, None] * sym_rep(label.m, k.A)


def irrep_lie(label, a, d):
    """Derivative of ``eval_irrep`` at the identity along diag(a, d)."""
    return -label.u * d * np.eye(label.dim) + sym_lie(label.m, a)


class IrrepRep:
    """Representation handle for an irrep label (see ``factor_derivative_residuals``)."""

    def __init__(self, label):
        self.label = label

    def group(self, A, delta, logdelta):
        return np.exp(-self.label.u * np.asarray(logdelta))[..., None, None] * sym_rep(self.label.m, A)

    def lie(self, a, d):
        return irrep_lie(self.label, a, d)


class SymARep:
    """Sym^m acting on the A-block only."""

    def __init__(self, m):
        self.m = m

    def group(self, A, delta, logdelta):
        return sym_rep(self.m, A)

    def lie(self, a, d):
        return sym_lie(self.m, a)


class AdPMinusRep:
    """Adjoint action on p⁻ in row-data coordinates: c ↦ δ·c·A⁻¹ (as columns δA^{-T})."""

    def group(self, A, delta, logdelta):
        Ainv_T = np.swapaxes(np.linalg.inv(A), -1, -2)
        return np.asarray(delta)[..., None, None] * Ainv_T

    def lie(self, a, d):
        return d * np.eye(a.shape[-1]) - a.T


def ad_pminus(k):
    return AdPMinusRep().group(k.A, k.delta, k.logdelta)


@dataclass(frozen=True)
class CGProjection:
    n: int
    source_m: int
    target_m: int
    P: np.ndarray

    @property
    def source_dim(self):
        return self.source_m + 1

    @property
    def target_dim(self):
        return self.target_m + 1

    def block(self, beta):
        """The map W^source → W^target for the p⁻ basis vector β."""
        s = self.source_dim
        return self.P[:, beta * s:(beta + 1) * s]


def _random_su2(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a = q[0] + 1j * q[1]
    b = q[2] + 1j * q[3]
    return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


def admissible(n, s, t):
    if n == 1:
        return s == 0 and t == 0
    if n == 2:
        return s >= 0 and t >= 0 and abs(s - t) == 1
    return False


@lru_cache(maxsize=None)
def _cg_matrix(n, s, t):
    if n == 1:
        if s != 0 or t != 0:
            raise NotAdmissible(f"n=1 admits only (0, 0), got ({s}, {t})")
        return np.ones((1, 1), dtype=complex)
    if n != 2:
        raise UnsupportedDimension("Clebsch–Gordan data implemented for n <= 2")
    if s < 0 or t < 0:
        raise NotAdmissible("negative Sym-degree")
    ds, dt = s + 1, t + 1
    rng = np.random.default_rng(12345)
    rows = []
    for _ in range(3):
        U = _random_su2(rng)
        src = np.kron(U.conj(), sym_rep(s, U))
        tgt = sym_rep(t, U)
        # P·src = tgt·P in column-major vec form
        rows.append(np.kron(src.T, np.eye(dt)) - np.kron(np.eye(2 * ds), tgt))
    _, sv, vh = np.linalg.svd(np.vstack(rows))
    null = vh[sv < 1e-9 * sv[0]].conj()
    if null.shape[0] == 0:
        raise NotAdmissible(f"Sym^{t} does not occur in p⁻ ⊗ Sym^{s}")
    if null.shape[0] > 1:
        raise AssertionError("multiplicity larger than one")
    P = null[0].reshape((2 * ds, dt)).T
    scale = np.real(np.trace(P @ P.conj().T)) / dt
    P = P / np.sqrt(scale)
    first = P[0][np.abs(P[0]) > 1e-10][0]
    P = P * (abs(first) / first)
    P.setflags(write=False)
    return P


def cg_projection(source_m, target_m, n=2):
    return CGProjection(n, source_m, target_m, _cg_matrix(n, source_m, target_m))


def pminus_coords(Y):
    """B_ν-orthonormal coordinates of a p⁻ element given by row data."""
    Y = np.asarray(Y, dtype=complex)
    n = Y.shape[-1]
    return np.sqrt(2 * (n + 1)) * Y


def rho_matrix(P, Y):
    """ρ̃(Y) as a (target_dim × source_dim) matrix; Y may be batched (..., n)."""
    y = pminus_coords(Y)
    if y.shape[-1] != P.n:
        raise DimensionMismatch("p⁻ vector has the wrong length")
    blocks = np.stack([P.block(b) for b in range(P.n)])
    return np.einsum("...b,bts->...ts", y, blocks)


def rho_tilde(P, Y, v):
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] != P.source_dim:
        raise DimensionMismatch("vector does not live in the source irrep")
    return rho_matrix(P, Y) @ v


def is_filiform_triple(a, b, c, n=2, tol=1e-10):
    P1 = cg_projection(a, b, n)
    P2 = cg_projection(b, c, n)
    eye = np.eye(n)
    for i in range(n):
        for j in range(n):
            lhs = rho_matrix(P2, eye[j]) @ rho_matrix(P1, eye[i])
            rhs = rho_matrix(P2, eye[i]) @ rho_matrix(P1, eye[j])
            if np.abs(lhs - rhs).max() > tol:
                return False
    return True


@dataclass(frozen=True)
class ChainSpec:
    """Irrep labels (α_j, ..., α_i) with λ dropping by one at each step."""

    labels: tuple

    def __post_init__(self):
        labs = self.labels
        for x, y in zip(labs, labs[1:]):
            if abs((x.lam - y.lam) - 1) > 1e-12:
                raise ValueError("consecutive labels must differ by one in λ")
            if not admissible(x.n, x.m, y.m):
                raise NotAdmissible(f"({x.m}, {y.m}) is not admissible")

    @classmethod
    def from_degrees(cls, n, ms, lam):
        return cls(tuple(IrrepLabel(n, m, lam - j) for j, m in enumerate(ms)))

    @property
    def n(self):
        return self.labels[0].n

    @property
    def lam(self):
        return self.labels[0].lam

    @property
    def degrees(self):
        return tuple(x.m for x in self.labels)

    def is_filiform(self):
        ms = self.degrees
        return all(is_filiform_triple(a, b, c, self.n) for a, b, c in zip(ms, ms[1:], ms[2:]))
