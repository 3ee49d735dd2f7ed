"""The complex Lie algebra sl(n+1, C) graded as p⁺ + k + p⁻.

Lie algebra elements are plain ``(n+1, n+1)`` complex arrays. In block form
``[[A, b], [c, d]]`` the column ``b`` is p⁺, the row ``c`` is p⁻ and the
block-diagonal part is k.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DomainConstants:
    """Structure constants of the unit ball B_n (rank one)."""

    n: int
    r: int = 1
    a: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.r != 1:
            raise ValueError("only the rank-one ball is supported")

    @property
    def b(self) -> int:
        return self.n - 1

    @property
    def p(self) -> int:
        return (self.r - 1) * self.a + self.b + 2


@dataclass(frozen=True)
class KPart:
    """Block-diagonal element diag(A, a) of k, with a = -tr A."""

    A: np.ndarray
    a: complex

    @classmethod
    def from_matrix(cls, X):
        X = np.asarray(X)
        n = X.shape[0] - 1
        return cls(X[:n, :n].copy(), complex(X[n, n]))

    def matrix(self):
        n = self.A.shape[0]
        X = np.zeros((n + 1, n + 1), dtype=complex)
        X[:n, :n] = self.A
        X[n, n] = self.a
        return X


def embed_pplus(zeta):
    zeta = np.asarray(zeta, dtype=complex).ravel()
    n = zeta.size
    X = np.zeros((n + 1, n + 1), dtype=complex)
    X[:n, n] = zeta
    return X


def embed_pminus(eta):
    eta = np.asarray(eta, dtype=complex).ravel()
    n = eta.size
    X = np.zeros((n + 1, n + 1), dtype=complex)
    X[n, :n] = eta
    return X


def zhat(n):
    """Central element of k; ad(zhat) is +i on p⁺ and -i on p⁻."""
    d = np.ones(n + 1, dtype=complex)
    d[n] = -n
    return np.diag(1j / (n + 1) * d)


def bracket(X, Y):
    return X @ Y - Y @ X


def killing(X, Y):
    n = X.shape[0] - 1
    return 2 * (n + 1) * np.trace(X @ Y)


def nu(Y):
    """Conjugation with respect to the compact real form su(n+1)."""
    return -Y.conj().T


def b_nu(X, Y):
    return -killing(X, nu(Y))


def decompose(X):
    """Split X into its (p⁺, k, p⁻) components."""
    n = X.shape[0] - 1
    plus = np.zeros_like(X)
    minus = np.zeros_like(X)
    plus[:n, n] = X[:n, n]
    minus[n, :n] = X[n, :n]
    return plus, X - plus - minus, minus


def sl_basis(n):
    """A basis of sl(n+1): off-diagonal units plus E_ii - E_{i+1,i+1}."""
    N = n + 1
    basis = []
    for i in range(N):
        for j in range(N):
            if i != j:
                E = np.zeros((N, N), dtype=complex)
                E[i, j] = 1
                basis.append(E)
    for i in range(N - 1):
        H = np.zeros((N, N), dtype=complex)
        H[i, i] = 1
        H[i + 1, i + 1] = -1
        basis.append(H)
    return basis


def ad_matrix(X, basis):
    """Matrix of ad(X) in the given basis (coordinates by least squares)."""
    B = np.array([b.ravel() for b in basis]).T
    cols = [bracket(X, b).ravel() for b in basis]
    return np.linalg.lstsq(B, np.array(cols).T, rcond=None)[0]


def killing_adtrace(X, Y):
    """Killing form from its definition tr(ad X ad Y); slow, used as an oracle."""
    basis = sl_basis(X.shape[0] - 1)
    return np.trace(ad_matrix(X, basis) @ ad_matrix(Y, basis))


def dual_basis(n):
    """Pairs (e_β, e'_{-β}) with killing(e'_{-β}, e_γ) = δ_{βγ}."""
    p = DomainConstants(n).p
    eye = np.eye(n)
    return [(embed_pplus(eye[b]), embed_pminus(eye[b]) / (2 * p)) for b in range(n)]


def pairing(z, w):
    """The Killing-normalized pairing <z, w> = 2p · w*z on p⁺."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return 2 * (z.size + 1) * np.vdot(w, z)


def random_sl(n, rng, scale=1.0):
    X = rng.normal(size=(n + 1, n + 1)) + 1j * rng.normal(size=(n + 1, n + 1))
    X -= np.trace(X) / (n + 1) * np.eye(n + 1)
    return scale * X
