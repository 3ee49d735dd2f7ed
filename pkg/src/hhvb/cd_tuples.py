"""Truncated reproducing-kernel spaces and the multiplication tuple on them.

Basis vectors are z^a·e_c (monomial times a standard vector of V). The kernel
expansion K = Σ z^a C_{ab} w̄^b has coefficient matrix C, and the Gram of the
monomial basis is C⁻¹, taken blockwise in the weight |a| + layer(c). Γ moves
degree d in layer j to degree d - k in layer j + k, so the weight is conserved
and every kernel here is block diagonal in it; truncating by weight is exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .bundle import act_batch
from .errors import IndefiniteGram
from .kernel_engine import k0, k_irred, ky
from .kss_reps import cg_projection
from .mobius import act
from .poly import Poly, monomials


@dataclass
class TruncatedSpace:
    n: int
    dim: int
    layer: tuple
    max_weight: int
    basis: list                  # (weight, mono, component)
    index: dict
    blocks: dict                 # weight -> list of basis positions
    gram_blocks: dict            # weight -> Gram on that block
    coeff_blocks: dict = field(repr=False)

    @property
    def size(self):
        return len(self.basis)

    @property
    def gram(self):
        return sla.block_diag(*[self.gram_blocks[w] for w in range(self.max_weight + 1)
                                if self.blocks[w]])

    def inner(self, f, g):
        """<f, g> for coefficient vectors in basis order."""
        return np.vdot(g, self.gram @ f)

    def coefficients(self, poly):
        """Coefficient vector of a Poly (terms above the truncation are dropped)."""
        out = np.zeros(self.size, dtype=complex)
        for a, v in poly.terms.items():
            for c in range(self.dim):
                pos = self.index.get((a, c))
                if pos is not None:
                    out[pos] = v[c]
        return out


def _layers(spec, dim):
    if spec is None:
        return (0,) * dim
    lay = [0] * dim
    for b in spec.blocks:
        for c in range(b.slice.start, b.slice.stop):
            lay[c] = b.j
    return tuple(lay)


def build_space(spec, K, N, tol=1e-12):
    """Weight-≤N truncation of the space with reproducing kernel K."""
    n, dim = K.n, K.shape[0]
    layer = _layers(spec, dim)
    basis, index = [], {}
    blocks = {w: [] for w in range(N + 1)}
    for w in range(N + 1):
        for c in range(dim):
            d = w - layer[c]
            if d < 0:
                continue
            for a in monomials(n, d):
                index[(a, c)] = len(basis)
                blocks[w].append(len(basis))
                basis.append((w, a, c))
    coeffs = K.expansion(N)
    gram_blocks, coeff_blocks = {}, {}
    for w, pos in blocks.items():
        if not pos:
            continue
        m = len(pos)
        C = np.zeros((m, m), dtype=complex)
        for r, pr in enumerate(pos):
            _, a, c = basis[pr]
            for s, ps in enumerate(pos):
                _, b, e = basis[ps]
                blk = coeffs.get((a, b))
                if blk is not None:
                    C[r, s] = blk[c, e]
        C = 0.5 * (C + C.conj().T)
        ev = np.linalg.eigvalsh(C)
        if ev[0] <= tol * max(1.0, abs(ev[-1])):
            raise IndefiniteGram(f"kernel coefficients at weight {w} are not positive definite",
                                 float(ev[0]))
        coeff_blocks[w] = C
        G = np.linalg.inv(C)
        gram_blocks[w] = 0.5 * (G + G.conj().T)
    return TruncatedSpace(n, dim, layer, N, basis, index, blocks, gram_blocks, coeff_blocks)


@dataclass
class OperatorMatrix:
    matrix: np.ndarray
    source: TruncatedSpace
    target: TruncatedSpace
    i: int


def mult_op(space, i, target=None):
    """Exact matrix of f ↦ z_i f from weight ≤ N into weight ≤ N+1."""
    if target is None:
        raise ValueError("pass the weight-(N+1) space as target")
    M = np.zeros((target.size, space.size), dtype=complex)
    for col, (_, a, c) in enumerate(space.basis):
        aa = list(a)
        aa[i] += 1
        M[target.index[(tuple(aa), c)], col] = 1.0
    return OperatorMatrix(M, space, target, i)


def _sub(M, rows, cols):
    return M[np.ix_(rows, cols)]


def block_norms(space, target, M, shift=1):
    """Norm of M restricted to each weight block w, landing in weight w + shift."""
    out = []
    for w in range(space.max_weight + 1):
        cols, rows = space.blocks[w], target.blocks.get(w + shift, [])
        if not cols or not rows:
            out.append(0.0)
            continue
        A = _sub(M, rows, cols)
        H = A.conj().T @ target.gram_blocks[w + shift] @ A
        ev = sla.eigh(0.5 * (H + H.conj().T), space.gram_blocks[w], eigvals_only=True)
        out.append(float(np.sqrt(max(ev[-1], 0.0))))
    return out


def op_norm_estimate(spec, i, N, K=None):
    """(‖M_i‖ on weight ≤ N, running-max sequence over N' = 1..N)."""
    K = ky(spec) if K is None else K
    src = build_space(spec, K, N)
    tgt = build_space(spec, K, N + 1)
    per = block_norms(src, tgt, mult_op(src, i, tgt).matrix)
    seq = list(np.maximum.accumulate(per))[1:]
    return float(seq[-1]), [float(x) for x in seq]


def adjoint(op):
    """Gram-adjoint of an OperatorMatrix: G_src⁻¹ Mᴴ G_tgt."""
    Gs = op.source.gram
    Gt = op.target.gram
    return np.linalg.solve(Gs, op.matrix.conj().T @ Gt)


def kernel_section(space, K, w, v):
    """Coefficients of z ↦ K(z, w)v truncated to the space."""
    coeffs = K.expansion(space.max_weight)
    wb = np.conj(np.asarray(w, dtype=complex))
    out = np.zeros(space.size, dtype=complex)
    for (a, b), C in coeffs.items():
        wt = np.prod(wb ** np.array(b))
        col = C @ v * wt
        for c in range(space.dim):
            pos = space.index.get((a, c))
            if pos is not None:
                out[pos] += col[c]
    return out


def eigenvector_check(space, K, w, v, i=0):
    """‖P M_i^*x - w̄_i x‖/‖x‖ with x = P(K_w v), adjoint taken inside the truncation."""
    x = kernel_section(space, K, w, v)
    M = np.zeros((space.size, space.size), dtype=complex)
    for col, (_, a, c) in enumerate(space.basis):
        aa = list(a)
        aa[i] += 1
        pos = space.index.get((tuple(aa), c))
        if pos is not None:
            M[pos, col] = 1.0
    G = space.gram
    Mstar = np.linalg.solve(G, M.conj().T @ G)
    r = Mstar @ x - np.conj(w[i]) * x
    nx = np.sqrt(abs(np.vdot(x, G @ x)))
    return float(np.sqrt(abs(np.vdot(r, G @ r))) / nx) if nx > 0 else 0.0


def homogeneity_residual(spec, g, i=0, f=None, points=None, seed=0):
    """max |z_i(U_g f)(z) - (U_g[(g·)_i f])(z)| over sample points.

    The right side multiplies by the i-th coordinate of g·ζ before
    transporting, the left side after; they agree iff U_g⁻¹M_iU_g = g(M)_i.
    """
    rng = np.random.default_rng(seed)
    n = spec.n
    if f is None:
        f = Poly.random(n, spec.dim, 3, rng)
    if points is None:
        from .mobius import random_ball_points
        points = random_ball_points(n, 8, rng, 0.6)
    Z = np.atleast_2d(points)
    lhs = Z[:, i:i + 1] * act_batch(spec, g, f, Z)
    gf = lambda X: act(g, X)[:, i:i + 1] * f(X)
    rhs = act_batch(spec, g, gf, Z)
    return float(np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max()))


@dataclass
class SimilarityReport:
    ratio_low: float
    ratio_high: float
    per_degree: list

    def to_dict(self):
        return {"ratio_low": self.ratio_low, "ratio_high": self.ratio_high,
                "per_degree": self.per_degree}

    def to_json(self):
        return json.dumps(self.to_dict())

    def to_csv(self):
        lines = ["degree,ratio_low,ratio_high"]
        lines += [f"{d},{lo!r},{hi!r}" for d, lo, hi in self.per_degree]
        return "\n".join(lines)


def similarity_report(spec, N):
    """Extremes of ‖f‖_y/‖f‖_0 over weight ≤ N, running per weight."""
    S0 = build_space(spec, k0(spec), N)
    Sy = build_space(spec, ky(spec), N)
    per, lo, hi = [], np.inf, 0.0
    for w in range(N + 1):
        if not S0.blocks[w]:
            continue
        ev = sla.eigh(Sy.gram_blocks[w], S0.gram_blocks[w], eigvals_only=True)
        ev = np.sqrt(np.clip(ev, 0, None))
        lo, hi = min(lo, float(ev[0])), max(hi, float(ev[-1]))
        per.append((w, lo, hi))
    return SimilarityReport(lo, hi, per)


def p_iota_d_norms(src, tgt, N):
    """Norms of PιD: H(K^src) → H(K^tgt) on each degree ≤ N, from the two Grams."""
    P = cg_projection(src.m, tgt.m, src.n)
    n = src.n
    Ss = build_space(None, k_irred(src), N)
    St = build_space(None, k_irred(tgt), max(N - 1, 0))
    M = np.zeros((St.size, Ss.size), dtype=complex)
    scale = 1 / np.sqrt(2 * (n + 1))
    for col, (_, a, c) in enumerate(Ss.basis):
        for b in range(n):
            if a[b] == 0:
                continue
            aa = list(a)
            aa[b] -= 1
            blk = P.block(b)
            for r in range(tgt.dim):
                M[St.index[(tuple(aa), r)], col] += scale * a[b] * blk[r, c]
    return block_norms(Ss, St, M, shift=-1)[1:]
