"""SU(n,1) acting on the unit ball and the factorization g·exp(z) = exp(gz)·k·exp(Y).

``KFactor`` and ``Factorization`` accept leading batch dimensions so that the
same code evaluates one point or a whole sample grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import SingularFactorization
from .lie_core import bracket, embed_pminus, embed_pplus
from . import holo

SINGULAR_TOL = 1e-14
PATH_STEPS = 64


def _jmat(n):
    return np.diag(np.r_[np.ones(n), -1.0]).astype(complex)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of SU(n,1), optionally with a path of generators.

    ``generators`` is a tuple (X1, ..., Xk) with mat = exp(X1)···exp(Xk).
    The path t ↦ exp(X1)···exp(t Xj) is used to continue log of the
    bottom-right entry, which emulates working on the universal cover.
    """

    mat: np.ndarray
    generators: tuple | None = None
    _logd: list = field(default_factory=list, repr=False, compare=False)

    @property
    def n(self):
        return self.mat.shape[0] - 1

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n + 1, dtype=complex), ())

    @classmethod
    def exp(cls, X):
        X = np.asarray(X, dtype=complex)
        return cls(expm(X), (X,))

    @classmethod
    def random(cls, n, rng, scale=0.5):
        """exp(X) for a random X in su(n,1) with Frobenius norm ``scale``."""
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A = A - A.conj().T
        d = 1j * rng.normal()
        shift = (np.trace(A) + d) / (n + 1)
        b = rng.normal(size=n) + 1j * rng.normal(size=n)
        X = np.zeros((n + 1, n + 1), dtype=complex)
        X[:n, :n] = A - shift * np.eye(n)
        X[n, n] = d - shift
        X[:n, n] = b
        X[n, :n] = b.conj()
        X *= scale / np.linalg.norm(X)
        return cls.exp(X)

    def __matmul__(self, other):
        gens = None
        if self.generators is not None and other.generators is not None:
            gens = self.generators + other.generators
        return GroupElement(self.mat @ other.mat, gens)

    def inverse(self):
        gens = None
        if self.generators is not None:
            gens = tuple(-X for X in reversed(self.generators))
        return GroupElement(np.linalg.inv(self.mat), gens)

    def membership_residual(self):
        J = _jmat(self.n)
        return max(np.abs(self.mat.conj().T @ J @ self.mat - J).max(),
                   abs(np.linalg.det(self.mat) - 1))

    def blocks(self):
        n = self.n
        M = self.mat
        return M[:n, :n], M[:n, n], M[n, :n], M[n, n]

    @property
    def logd(self):
        """Path-continued log of the bottom-right entry (principal if no path)."""
        if not self._logd:
            self._logd.append(self._track_logd())
        return self._logd[0]

    def _track_logd(self):
        n = self.n
        if self.generators is None:
            return np.log(self.mat[n, n])
        prefix = np.eye(n + 1, dtype=complex)
        logd = 0j
        prev = 1.0 + 0j
        for X in self.generators:
            step = expm(X / PATH_STEPS)
            cur = prefix
            for _ in range(PATH_STEPS):
                cur = cur @ step
                d = cur[n, n]
                logd += np.log(d / prev)
                prev = d
            prefix = prefix @ expm(X)
        return logd


def exp_wbar(w):
    """exp(-w̄): the complexified element [[I, 0], [-w*, 1]] (not in SU(n,1))."""
    w = np.asarray(w, dtype=complex).ravel()
    X = -embed_pminus(w.conj())
    return GroupElement(np.eye(w.size + 1, dtype=complex) + X, None)


@dataclass(frozen=True)
class KFactor:
    """Block-diagonal K-part diag(A, δ) with a tracked logarithm of δ."""

    A: np.ndarray
    delta: complex
    logdelta: complex

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n, dtype=complex), 1.0 + 0j, 0j)

    def __matmul__(self, other):
        return KFactor(self.A @ other.A, self.delta * other.delta,
                       self.logdelta + other.logdelta)

    def inverse(self):
        return KFactor(np.linalg.inv(self.A), 1 / self.delta, -self.logdelta)

    def matrix(self):
        n = self.A.shape[-1]
        M = np.zeros(self.A.shape[:-2] + (n + 1, n + 1), dtype=complex)
        M[..., :n, :n] = self.A
        M[..., n, n] = self.delta
        return M


@dataclass(frozen=True)
class Factorization:
    gz: np.ndarray
    k: KFactor
    y: np.ndarray

    def recompose(self):
        n = self.gz.shape[-1]
        left = np.eye(n + 1, dtype=complex) + embed_pplus(self.gz)
        right = np.eye(n + 1, dtype=complex) + embed_pminus(self.y)
        return left @ self.k.matrix() @ right


def factorize_batch(g, Z):
    """Factorize g·exp(z) for every row z of Z (shape (M, n))."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    A, b, c, d = g.blocks()
    M12 = Z @ A.T + b
    M22 = Z @ c + d
    if np.any(np.abs(M22) < SINGULAR_TOL):
        raise SingularFactorization("bottom-right block vanishes")
    gz = M12 / M22[:, None]
    y = np.broadcast_to(c, Z.shape) / M22[:, None]
    K11 = A[None] - M12[:, :, None] * c[None, None, :] / M22[:, None, None]
    if g.generators is not None:
        logdelta = g.logd + np.log(M22 / d)
    else:
        logdelta = np.log(M22)
    return Factorization(gz, KFactor(K11, M22, logdelta), y)


def _single(fb):
    return Factorization(fb.gz[0], KFactor(fb.k.A[0], fb.k.delta[0], fb.k.logdelta[0]),
                         fb.y[0])


def factorize(g, z):
    return _single(factorize_batch(g, np.asarray(z, dtype=complex)[None, :]))


def act(g, z):
    z = np.asarray(z, dtype=complex)
    if z.ndim == 2:
        return factorize_batch(g, z).gz
    return factorize(g, z).gz


def h(z, w):
    """h(z, w) = 1 - w*z."""
    return 1 - np.vdot(w, z)


def kcal(z, w):
    """The kernel factor (k̃(exp(-w̄), z))⁻¹, in closed form."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    hz = h(z, w)
    A = np.eye(z.size, dtype=complex) - np.outer(z, w.conj())
    return KFactor(A, 1 / hz, -np.log(hz))


def y_zw(z, w):
    """Row data of Y(exp(-w̄), z) = -w*/(1 - w*z)."""
    w = np.asarray(w, dtype=complex)
    return -w.conj() / h(z, w)


def jacobian(g, z):
    """Holomorphic Jacobian of z ↦ gz, i.e. ζ ↦ A ζ δ⁻¹ for the K-factor."""
    f = factorize(g, z)
    return f.k.A / f.k.delta


def factor_derivative_residuals(tau, g, z, X, radius=0.05, nodes=24):
    """Residuals of the two derivative formulas for k̃ and Y along X ∈ p⁺.

    (a) D_X τ(k̃⁻¹) = -dτ([Y, X]) τ(k̃⁻¹)
    (b) D_X Y = ½ [Y, [Y, X]]

    ``tau`` provides ``group(A, delta, logdelta)`` and ``lie(a, d)``.
    Derivatives come from contour sampling (see ``holo``).
    """
    z = np.asarray(z, dtype=complex)
    X = np.asarray(X, dtype=complex)
    f = factorize(g, z)

    def tau_kinv(Z):
        fb = factorize_batch(g, Z)
        return tau.group(np.linalg.inv(fb.k.A), 1 / fb.k.delta, -fb.k.logdelta)

    def yrow(Z):
        return factorize_batch(g, Z).y

    D_tau = holo.derivative(tau_kinv, z, X, radius, nodes)
    D_y = holo.derivative(yrow, z, X, radius, nodes)

    Ymat = embed_pminus(f.y)
    br = bracket(Ymat, embed_pplus(X))
    n = z.size
    tk = tau.group(np.linalg.inv(f.k.A)[None], np.array([1 / f.k.delta]),
                   np.array([-f.k.logdelta]))[0]
    res_a = np.linalg.norm(D_tau + tau.lie(br[:n, :n], br[n, n]) @ tk)
    rhs_b = 0.5 * bracket(Ymat, br)
    res_b = np.linalg.norm(D_y - rhs_b[n, :n]) + np.linalg.norm(rhs_b - embed_pminus(rhs_b[n, :n]))
    return float(res_a), float(res_b)


def random_ball_points(n, count, rng, radius=0.8):
    """Points with uniformly random direction and radius ≤ ``radius``."""
    v = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = radius * rng.uniform(0, 1, size=(count, 1)) ** (1 / (2 * n))
    return v * r
