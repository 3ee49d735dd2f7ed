"""Symbolic kernels Σ h(z,w)^{-s}·z^a·w̄^b·C and the checks built on them.

A ``KernelExpr`` stores terms keyed by (s, a + b) with matrix coefficients C,
where h(z, w) = 1 - w*z. The algebra is closed under ∂/∂z_i and ∂/∂w̄_i,
which is all that the gradient operators ιD and PιD need.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from . import holo
from .bundle import multiplier_batch
from .errors import NonDiagonalExpansion, ShapeMismatch, UnknownIdentity
from .gamma_op import c_constant, gamma_terms
from .kss_reps import AdPMinusRep, cg_projection, sym_rep_entries
from .mobius import act, kcal, random_ball_points
from .poly import monomials

PRUNE_TOL = 1e-14


def _key_s(s):
    return round(float(s), 12)


class KernelExpr:
    def __init__(self, n, shape, terms=None):
        self.n = n
        self.shape = tuple(shape)
        self.terms = {}
        for (s, mono), C in (terms or {}).items():
            C = np.asarray(C, dtype=complex).reshape(self.shape)
            key = (_key_s(s), tuple(mono))
            self.terms[key] = self.terms[key] + C if key in self.terms else C

    # construction -----------------------------------------------------------
    @classmethod
    def zero(cls, n, shape):
        return cls(n, shape)

    @classmethod
    def h_power(cls, n, s, C=None):
        """C·h^{-s}; C defaults to the 1×1 identity."""
        C = np.eye(1) if C is None else np.asarray(C)
        return cls(n, C.shape, {(s, (0,) * (2 * n)): C})

    @classmethod
    def pairing(cls, n):
        """The Killing-normalized pairing <z, w> = 2p·w*z as a scalar kernel."""
        terms = {}
        for i in range(n):
            mono = [0] * (2 * n)
            mono[i] = 1
            mono[n + i] = 1
            terms[(0.0, tuple(mono))] = [[2 * (n + 1)]]
        return cls(n, (1, 1), terms)

    # algebra ----------------------------------------------------------------
    def pruned(self, tol=PRUNE_TOL):
        return KernelExpr(self.n, self.shape,
                          {k: C for k, C in self.terms.items() if np.abs(C).max() > tol})

    def __add__(self, other):
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} vs {other.shape}")
        out = KernelExpr(self.n, self.shape, self.terms)
        for k, C in other.terms.items():
            out.terms[k] = out.terms[k] + C if k in out.terms else C
        return out

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, KernelExpr):
            return self.pointwise(c)
        return KernelExpr(self.n, self.shape, {k: c * C for k, C in self.terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        if self.shape[1] != other.shape[0]:
            raise ShapeMismatch(f"{self.shape} @ {other.shape}")
        terms = {}
        for (s1, m1), C1 in self.terms.items():
            for (s2, m2), C2 in other.terms.items():
                key = (_key_s(s1 + s2), tuple(a + b for a, b in zip(m1, m2)))
                C = C1 @ C2
                terms[key] = terms[key] + C if key in terms else C
        return KernelExpr(self.n, (self.shape[0], other.shape[1]), terms)

    def pointwise(self, scalar):
        """Product with a scalar (1×1) kernel."""
        if scalar.shape != (1, 1):
            scalar, other = self, scalar
            if scalar.shape != (1, 1):
                raise ShapeMismatch("pointwise product needs a scalar factor")
        else:
            other = self
        terms = {}
        for (s1, m1), c in scalar.terms.items():
            for (s2, m2), C in other.terms.items():
                key = (_key_s(s1 + s2), tuple(a + b for a, b in zip(m1, m2)))
                terms[key] = terms[key] + c[0, 0] * C if key in terms else c[0, 0] * C
        return KernelExpr(self.n, other.shape, terms)

    def left(self, M):
        M = np.asarray(M)
        return KernelExpr(self.n, (M.shape[0], self.shape[1]),
                          {k: M @ C for k, C in self.terms.items()})

    def right(self, M):
        M = np.asarray(M)
        return KernelExpr(self.n, (self.shape[0], M.shape[1]),
                          {k: C @ M for k, C in self.terms.items()})

    def kron_left(self, M):
        """M ⊗ K (M constant, outer index)."""
        M = np.asarray(M)
        shape = (M.shape[0] * self.shape[0], M.shape[1] * self.shape[1])
        return KernelExpr(self.n, shape, {k: np.kron(M, C) for k, C in self.terms.items()})

    def rows(self, sl):
        return KernelExpr(self.n, (len(range(*sl.indices(self.shape[0]))), self.shape[1]),
                          {k: C[sl, :] for k, C in self.terms.items()})

    def sharp(self):
        """K^♯(z, w) = K(w, z)*."""
        n = self.n
        return KernelExpr(n, self.shape[::-1],
                          {(s, m[n:] + m[:n]): C.conj().T for (s, m), C in self.terms.items()})

    # calculus ---------------------------------------------------------------
    def _d(self, idx, partner):
        terms = {}
        for (s, m), C in self.terms.items():
            if m[idx] > 0:
                mm = list(m)
                mm[idx] -= 1
                key = (s, tuple(mm))
                terms[key] = terms[key] + m[idx] * C if key in terms else m[idx] * C
            if s != 0:
                mm = list(m)
                mm[partner] += 1
                key = (_key_s(s + 1), tuple(mm))
                terms[key] = terms[key] + s * C if key in terms else s * C
        return KernelExpr(self.n, self.shape, terms)

    def dz(self, i):
        """∂/∂z_i, using ∂h^{-s}/∂z_i = s·w̄_i·h^{-s-1}."""
        return self._d(i, self.n + i)

    def dwbar(self, i):
        return self._d(self.n + i, i)

    def iota_d(self):
        """ιD in z: rows become p⁻ ⊗ rows, p⁻ index outermost."""
        n = self.n
        scale = 1 / np.sqrt(2 * (n + 1))
        out = None
        for b in range(n):
            e = np.zeros((n, 1))
            e[b, 0] = scale
            t = self.dz(b).kron_left(e)
            out = t if out is None else out + t
        return out

    def p_iota_d(self, P, d=1):
        """(I_d ⊗ P)ιD in z for rows laid out as C^d ⊗ W^source."""
        n = self.n
        scale = 1 / np.sqrt(2 * (n + 1))
        out = None
        for b in range(n):
            t = self.dz(b).left(np.kron(np.eye(d), P.block(b)) * scale)
            out = t if out is None else out + t
        return out

    def sharp_apply(self, op):
        """T^{(w)♯}K = (T in the first variable of K^♯)^♯."""
        return op(self.sharp()).sharp()

    # evaluation -------------------------------------------------------------
    def evaluate_pairs(self, Z, W):
        """Values at the pairs (Z[k], W[k]); returns (M, rows, cols)."""
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        W = np.atleast_2d(np.asarray(W, dtype=complex))
        Wb = W.conj()
        logh = np.log(1 - np.sum(Z * Wb, axis=1))
        out = np.zeros((Z.shape[0],) + self.shape, dtype=complex)
        n = self.n
        for (s, m), C in self.terms.items():
            a = np.array(m[:n])
            b = np.array(m[n:])
            scal = np.prod(Z ** a, axis=1) * np.prod(Wb ** b, axis=1)
            if s != 0:
                scal = scal * np.exp(-s * logh)
            out += scal[:, None, None] * C[None]
        return out

    def __call__(self, z, w):
        return self.evaluate_pairs(np.asarray(z)[None], np.asarray(w)[None])[0]

    # series -----------------------------------------------------------------
    def expansion(self, max_z, max_w=None):
        """Taylor coefficients: {(a, b): C} with K = Σ z^a C w̄^b, |a| <= max_z, |b| <= max_w."""
        max_w = max_z if max_w is None else max_w
        n = self.n
        out = {}
        gammas = {k: monomials(n, k) for k in range(max(max_z, max_w) + 1)}
        for (s, m), C in self.terms.items():
            a0, b0 = m[:n], m[n:]
            poch = 1.0
            for k in range(max(max_z - sum(a0), max_w - sum(b0), -1) + 1):
                if k > 0:
                    poch *= (s + k - 1) / k
                if poch == 0:
                    break
                if sum(a0) + k > max_z or sum(b0) + k > max_w:
                    break
                for g in gammas[k]:
                    multi = factorial(k)
                    for gi in g:
                        multi //= factorial(gi)
                    key = (tuple(x + y for x, y in zip(a0, g)), tuple(x + y for x, y in zip(b0, g)))
                    val = poch * multi * C
                    out[key] = out[key] + val if key in out else val
        return out


# --- constructors for the bundle kernels ---------------------------------------

class _MPoly:
    """Scalar polynomial in (z, w̄), used to expand Sym^m(I - z w*)."""

    def __init__(self, terms):
        self.terms = {k: v for k, v in terms.items() if v != 0}

    def __add__(self, other):
        if not isinstance(other, _MPoly):
            other = _MPoly.const(other, self._nv())
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return _MPoly(out)

    __radd__ = __add__

    def __mul__(self, other):
        if not isinstance(other, _MPoly):
            return _MPoly({k: v * other for k, v in self.terms.items()})
        out = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return _MPoly(out)

    __rmul__ = __mul__

    def _nv(self):
        return len(next(iter(self.terms))) if self.terms else 0

    @classmethod
    def const(cls, c, nv):
        return cls({(0,) * nv: c})


def _affine_entries(n):
    """Entries of I - z w* as _MPoly objects."""
    ent = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            mono = [0] * (2 * n)
            mono[i] = 1
            mono[n + j] = 1
            t = {tuple(mono): -1.0}
            if i == j:
                t[(0,) * (2 * n)] = 1.0
            ent[i][j] = _MPoly(t)
    return ent


def sym_kernel_poly(n, m):
    """Sym^m(I - z w*) as a dict {mono: matrix}."""
    if m == 0:
        return {(0,) * (2 * n): np.eye(1)}
    A = _affine_entries(n)
    rows = sym_rep_entries(m, A[0][0], A[0][1], A[1][0], A[1][1])
    out = {}
    for r in range(m + 1):
        for c in range(m + 1):
            e = rows[r][c]
            if not isinstance(e, _MPoly):
                e = _MPoly.const(e, 2 * n)
            for mono, v in e.terms.items():
                out.setdefault(mono, np.zeros((m + 1, m + 1), dtype=complex))[r, c] += v
    return out


def k_irred(label):
    """(χ_λ ⊗ Sym^m)(kernel factor) = h^{u}·Sym^m(I - z w*), u = (pλ - m)/n."""
    s = -label.u
    poly = sym_kernel_poly(label.n, label.m)
    return KernelExpr(label.n, (label.dim, label.dim), {(s, mono): C for mono, C in poly.items()})


def k0(spec):
    blocks = spec.blocks
    out = KernelExpr(spec.n, (spec.dim, spec.dim))
    for b in blocks:
        Kb = k_irred(b.label).kron_left(np.linalg.inv(spec.mu_of(b.j, b.idx)))
        E = np.zeros((spec.dim, b.size))
        E[b.slice, :] = np.eye(b.size)
        out = out + Kb.left(E).right(E.T)
    return out


def gamma_z(spec, K, terms=None):
    """Γ acting on the z-variable of a kernel with rows indexed by V."""
    terms = gamma_terms(spec) if terms is None else terms
    out = K
    for t in terms:
        sub = K.rows(t.src.slice)
        for P in t.projections:
            sub = sub.p_iota_d(P, t.src.d)
        sub = sub.left(np.kron(t.y, np.eye(t.tgt.label.dim)) * t.coef)
        E = np.zeros((spec.dim, t.tgt.size))
        E[t.tgt.slice, :] = np.eye(t.tgt.size)
        out = out + sub.left(E)
    return out.pruned()


def ky(spec):
    """ΓΓ^♯K⁰ for the spec's Γ."""
    terms = gamma_terms(spec)
    K = k0(spec)
    if not terms:
        return K
    return gamma_z(spec, K.sharp_apply(lambda X: gamma_z(spec, X, terms)), terms)


def a_kernel(src, tgt):
    """P(Y_{zw}Y_{wz}^♯ ⊗ ϱ⁰_src(kernel factor))P^♯ with Y_{zw} = -w̄/h."""
    n = src.n
    P = cg_projection(src.m, tgt.m, n)
    terms = {}
    for b in range(n):
        for g in range(n):
            mono = [0] * (2 * n)
            mono[g] += 1
            mono[n + b] += 1
            E = np.zeros((n, n))
            E[b, g] = 2 * (n + 1)
            terms[(2.0, tuple(mono))] = E
    YY = KernelExpr(n, (n, n), terms)
    Ks = k_irred(src)
    # kron(YY, Ks) as a kernel product
    big = None
    for (s1, m1), C1 in YY.terms.items():
        for (s2, m2), C2 in Ks.terms.items():
            k = KernelExpr(n, (n * src.dim, n * src.dim),
                           {(s1 + s2, tuple(a + b for a, b in zip(m1, m2))): np.kron(C1, C2)})
            big = k if big is None else big + k
    return big.left(P.P).right(P.P.conj().T)


def ad_pminus_kernel(n):
    """Ad_{p⁻} of the kernel factor: h^{-1}I + h^{-2}w̄z^T."""
    terms = {(1.0, (0,) * (2 * n)): np.eye(n)}
    for b in range(n):
        for g in range(n):
            mono = [0] * (2 * n)
            mono[g] += 1
            mono[n + b] += 1
            E = np.zeros((n, n))
            E[b, g] = 1
            terms[(2.0, tuple(mono))] = E
    return KernelExpr(n, (n, n), terms)


# --- Gram certificates -------------------------------------------------------

POS_TOL = 1e-9


@dataclass
class GramReport:
    points: list
    gram: np.ndarray = field(repr=False)
    min_eig: float
    max_eig: float
    verdict: str
    tolerance: float
    seed: int | None = None

    @property
    def positive(self):
        return self.verdict == "positive"

    def to_dict(self):
        return {"min_eig": self.min_eig, "max_eig": self.max_eig, "verdict": self.verdict,
                "points": [[[float(c.real), float(c.imag)] for c in p] for p in self.points],
                "seed": self.seed}

    def to_json(self):
        return json.dumps(self.to_dict())


def _report(G, points, seed=None, tol=POS_TOL):
    G = 0.5 * (G + G.conj().T)
    ev = np.linalg.eigvalsh(G)
    lo, hi = float(ev[0]), float(ev[-1])
    verdict = "positive" if lo >= -tol * (hi + 1) else "indefinite"
    return GramReport([np.asarray(p) for p in points], G, lo, hi, verdict, tol, seed)


def gram_matrix(K, points, vectors=None):
    Z = np.atleast_2d(np.asarray(points, dtype=complex))
    M = Z.shape[0]
    I, J = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    vals = K.evaluate_pairs(Z[I.ravel()], Z[J.ravel()]).reshape(M, M, *K.shape)
    if vectors is not None:
        V = np.asarray(vectors, dtype=complex)
        return np.einsum("ia,ijab,jb->ij", V.conj(), vals, V)
    return vals.transpose(0, 2, 1, 3).reshape(M * K.shape[0], M * K.shape[1])


def gram(K, points, vectors=None, seed=None, tol=POS_TOL):
    return _report(gram_matrix(K, points, vectors), points, seed, tol)


def dominance(K0, K1, c, points, vectors=None, tol=POS_TOL):
    """Gram report for c²K1 - K0; a positive verdict certifies K0 ≺ c²K1 on the sample."""
    if K0.shape != K1.shape:
        raise ShapeMismatch(f"{K0.shape} vs {K1.shape}")
    return gram(K1 * (c * c) - K0, points, vectors, tol=tol)


def sample_points(n, count=12, seed=0, radius=0.8):
    return random_ball_points(n, count, np.random.default_rng(seed), radius)


def monomial_norms(K, max_degree, tol=1e-12):
    """ν_m = ‖z^m‖² read off from K(z,w) = Σ z^m w̄^m / ν_m."""
    if K.shape != (1, 1):
        raise ShapeMismatch("monomial norms need a scalar kernel")
    coeffs = K.expansion(max_degree)
    norms = {}
    for (a, b), C in coeffs.items():
        c = C[0, 0]
        if a != b:
            if abs(c) > tol:
                raise NonDiagonalExpansion(f"cross term z^{a} w̄^{b} = {c}")
            continue
        norms[a] = (1 / c.real) if c != 0 else np.inf
    for d in range(max_degree + 1):
        for m in monomials(K.n, d):
            norms.setdefault(m, np.inf)
    return norms


def is_positive(K, points, vectors=None, weights=6, tol=POS_TOL):
    """Sample-Gram positivity together with positivity of low-order expansion blocks."""
    rep = gram(K, points, vectors, tol=tol)
    if not rep.positive:
        return False, rep.min_eig
    coeffs = K.expansion(weights)
    for d in range(weights + 1):
        mons = monomials(K.n, d)
        r = K.shape[0]
        B = np.zeros((len(mons) * r, len(mons) * r), dtype=complex)
        for i, a in enumerate(mons):
            for j, b in enumerate(mons):
                C = coeffs.get((a, b))
                if C is not None:
                    B[i * r:(i + 1) * r, j * r:(j + 1) * r] = C
        ev = np.linalg.eigvalsh(0.5 * (B + B.conj().T))
        if ev[0] < -tol * (abs(ev[-1]) + 1):
            return False, float(ev[0])
    return True, rep.min_eig


def positivity_threshold(kernel_of, lo, hi, points, width=1e-3, vectors=None):
    """Bisection for the largest λ with kernel_of(λ) positive.

    Needs kernel_of(lo) positive and kernel_of(hi) not. Returns (lo, hi) bracket.
    """
    if not is_positive(kernel_of(lo), points, vectors)[0]:
        raise ValueError("lower end of the bracket is not positive")
    if is_positive(kernel_of(hi), points, vectors)[0]:
        raise ValueError("upper end of the bracket is positive")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if is_positive(kernel_of(mid), points, vectors)[0]:
            lo = mid
        else:
            hi = mid
    return lo, hi


# --- named identities ----------------------------------------------------------

def _mixed_log_h(z, w, radius=0.05, nodes=16):
    """[∂²/∂z_β∂w̄_γ log h] by contour sampling in the 2n variables (z, w̄)."""
    n = len(z)
    x0 = np.concatenate([z, np.conj(w)])
    F = lambda X: np.log(1 - np.sum(X[:, :n] * X[:, n:], axis=1))[:, None]
    co = holo.taylor_coefficients(F, x0, 2, radius, nodes)
    out = np.zeros((n, n), dtype=complex)
    for b in range(n):
        for g in range(n):
            k = [0] * (2 * n)
            k[b] += 1
            k[n + g] += 1
            out[b, g] = co[tuple(k)][0]
    return out


def split_log_kernel(n):
    """h^{-2}(ιDh)(ιD^♯h) - h^{-1}ιDιD^♯h as a kernel."""
    h = KernelExpr.h_power(n, -1.0)
    Dh = h.iota_d()
    Dsh = h.sharp_apply(lambda X: X.iota_d())
    DDh = Dh.sharp_apply(lambda X: X.iota_d())
    return (Dh @ Dsh) * KernelExpr.h_power(n, 2.0) - DDh * KernelExpr.h_power(n, 1.0)


def dominance_gap(n, ell, C=None):
    """C·h^{-ℓ}Ad(kernel factor) - ιDιD^♯h^{-ℓ}; C defaults to ℓ(ℓ+1)/(2p)."""
    p = n + 1
    C = ell * (ell + 1) / (2 * p) if C is None else C
    hl = KernelExpr.h_power(n, ell)
    grad = hl.iota_d().sharp_apply(lambda X: X.iota_d())
    return ad_pminus_kernel(n).pointwise(hl) * C - grad


def gradient_kernel_sides(src, tgt):
    """Both sides of (PιD^z)(PιD^w)^♯ϱ⁰_src = |c|²A + c̄ϱ⁰_tgt as kernels."""
    P = cg_projection(src.m, tgt.m, src.n)
    K = k_irred(src)
    lhs = K.sharp_apply(lambda X: X.p_iota_d(P)).p_iota_d(P)
    c = c_constant(src, tgt)
    rhs = a_kernel(src, tgt) * (abs(c) ** 2) + k_irred(tgt) * np.conj(c)
    return lhs, rhs


IDENTITIES = ("adjoint_log_kernel", "log_derivative_split", "pairing_gradient",
              "gradient_kernel", "dominance_gap", "quasi_invariance")


def verify_identity(name, n=1, samples=30, seed=0, **kw):
    """Max residual of a named kernel identity over seeded samples.

    adjoint_log_kernel   Ad_{p⁻}(kernel factor) = -2p·ιD^z(ιD^w)^♯ log h
    log_derivative_split -ιD^z(ιD^w)^♯ log h = h⁻²(ιDh)(ιD^♯h) - h⁻¹ιDιD^♯h
    pairing_gradient     ιD^z(ιD^w)^♯<z, w> = I
    gradient_kernel      (PιD^z)(PιD^w)^♯ϱ⁰_src = |c|²A + c̄·ϱ⁰_tgt   (src, tgt labels)
    dominance_gap        C h^{-ℓ}Ad - ιDιD^♯h^{-ℓ} = (ℓ²/2p)h^{-ℓ-1}I    (ell)
    quasi_invariance     K(gz, gw) = m(g,z)K(z,w)m(g,w)^♯                 (spec, kernel)
    """
    rng = np.random.default_rng(seed)
    p = n + 1
    if name not in IDENTITIES:
        raise UnknownIdentity(name)
    Z = random_ball_points(n, samples, rng, 0.7)
    W = random_ball_points(n, samples, rng, 0.7)
    if kw.get("include_origin"):
        Z[0] = 0
        W[0] = 0
    res = 0.0
    if name == "adjoint_log_kernel":
        ad = AdPMinusRep()
        for z, w in zip(Z, W):
            k = kcal(z, w)
            lhs = ad.group(k.A, k.delta, k.logdelta)
            rhs = -2 * p * ((1 / (2 * p)) * _mixed_log_h(z, w))
            res = max(res, np.abs(lhs - rhs).max())
    elif name == "log_derivative_split":
        S = split_log_kernel(n)
        vals = S.evaluate_pairs(Z, W)
        for z, w, v in zip(Z, W, vals):
            lhs = -(1 / (2 * p)) * _mixed_log_h(z, w)
            res = max(res, np.abs(lhs - v).max())
    elif name == "pairing_gradient":
        K = KernelExpr.pairing(n)
        G = K.sharp_apply(lambda X: X.iota_d()).iota_d()
        vals = G.evaluate_pairs(Z, W)
        res = np.abs(vals - np.eye(n)).max()
    elif name == "gradient_kernel":
        lhs, rhs = gradient_kernel_sides(kw["src"], kw["tgt"])
        res = np.abs(lhs.evaluate_pairs(Z, W) - rhs.evaluate_pairs(Z, W)).max()
    elif name == "dominance_gap":
        ell = kw["ell"]
        gap = dominance_gap(n, ell, kw.get("C"))
        target = KernelExpr.h_power(n, ell + 1, np.eye(n) * ell**2 / (2 * p))
        res = np.abs(gap.evaluate_pairs(Z, W) - target.evaluate_pairs(Z, W)).max()
    elif name == "quasi_invariance":
        spec = kw["spec"]
        K = kw.get("kernel") or ky(spec)
        from .mobius import GroupElement
        for z, w in zip(Z, W):
            g = GroupElement.random(n, rng)
            lhs = K(act(g, z), act(g, w))
            m = multiplier_batch(spec, g, np.array([z, w]))
            rhs = m[0] @ K(z, w) @ m[1].conj().T
            res = max(res, np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max()))
    return float(res)
