"""The constants c_j(λ), path coefficients, and the intertwining operator Γ.

Γ is block lower-triangular with identity diagonal. Its (ℓ, β) ← (j, α)
block is a sum over filiform paths of c·(y-product ⊗ iterated PιD), where
PιD f = Σ_β P(e'_{-β} ⊗ ∂f/∂z_β) is a constant-coefficient operator.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from . import holo
from .bundle import act, act_batch, chain_spec
from .errors import DegenerateTest, SingularLambda
from .kss_reps import IrrepLabel, cg_projection, irrep_lie, is_filiform_triple, rho_matrix
from .poly import Poly

SINGULAR_TOL = 1e-12


def _bracket_kpart(y, beta, n):
    """[F(y), E(ε_β)] as the pair (A-block, δ-entry)."""
    a = np.zeros((n, n), dtype=complex)
    a[beta, :] = -y
    return a, y[beta]


def c_operator(src, tgt, Y):
    """Σ_β ρ̃(e'_{-β})·ϱ⁰_src([Y, e_β]) as a matrix W^src → W^tgt."""
    n = src.n
    p = n + 1
    P = cg_projection(src.m, tgt.m, n)
    Y = np.asarray(Y, dtype=complex)
    out = np.zeros((tgt.dim, src.dim), dtype=complex)
    for beta in range(n):
        e = np.zeros(n, dtype=complex)
        e[beta] = 1 / (2 * p)
        a, d = _bracket_kpart(Y, beta, n)
        out += rho_matrix(P, e) @ irrep_lie(src, a, d)
    return out


_PROBES = (np.array([1.0, 0.3 - 0.2j]), np.array([0.2j, -0.7]), np.array([0.5 + 0.5j, 1.1]))


@lru_cache(maxsize=None)
def _c_constant(n, sm, tm, lam):
    src = IrrepLabel(n, sm, lam)
    tgt = IrrepLabel(n, tm, lam - 1)
    P = cg_projection(sm, tm, n)
    vals = []
    for probe in _PROBES:
        Y = probe[:n]
        R = rho_matrix(P, Y)
        if np.abs(R).max() < 1e-14:
            continue
        C = c_operator(src, tgt, Y)
        c = np.vdot(R, C) / np.vdot(R, R)
        if np.abs(C - c * R).max() > 1e-10 * max(1.0, abs(c)):
            raise AssertionError("c-operator is not proportional to ρ̃(Y)")
        vals.append(c)
    if not vals:
        raise DegenerateTest("every probe gives ρ̃(Y) = 0")
    if max(abs(v - vals[0]) for v in vals) > 1e-10 * max(1.0, abs(vals[0])):
        raise AssertionError("c-constant depends on the probe")
    return float(np.real(vals[0]))


def c_constant(src, tgt, lambda_j=None):
    """The scalar c with Σ_β ρ̃(e'_{-β})ϱ⁰_src([Y, e_β]) = c·ρ̃(Y).

    ``lambda_j`` overrides the λ of the source label.
    """
    lam = src.lam if lambda_j is None else lambda_j
    return _c_constant(src.n, src.m, tgt.m, float(lam))


def step_constants(n, degrees, lam):
    """[c_1, ..., c_m] for consecutive steps of a chain whose first layer has λ."""
    return [c_constant(IrrepLabel(n, a, lam - k), IrrepLabel(n, b, lam - k - 1))
            for k, (a, b) in enumerate(zip(degrees, degrees[1:]))]


@dataclass(frozen=True)
class ChainConstants:
    """Affine data c_k(λ) = intercept_k + slope·λ for each step of a chain."""

    n: int
    degrees: tuple
    intercepts: tuple
    slopes: tuple

    @classmethod
    def of(cls, chain):
        degrees = chain.degrees
        n = chain.n
        c0 = step_constants(n, degrees, 0.0)
        c1 = step_constants(n, degrees, 1.0)
        return cls(n, degrees, tuple(c0), tuple(b - a for a, b in zip(c0, c1)))

    def values(self, lam):
        return [a + s * lam for a, s in zip(self.intercepts, self.slopes)]

    @property
    def u(self):
        return self.intercepts[0]

    @property
    def w(self):
        return self.intercepts[1] - self.intercepts[0] if len(self.intercepts) > 1 else None


def coefficient_from_steps(cs, i, j, path=None):
    """c_ij from step constants cs = [c_1, c_2, ...] (cs[k-1] is c_k)."""
    if i == j:
        return 1.0
    if i < j:
        raise ValueError("need j <= i")
    bad = []
    prod = 1.0
    for k in range(1, i - j + 1):
        f = cs[j] + cs[j + k - 1]
        if abs(f) < SINGULAR_TOL:
            bad.append((path, k, f))
        prod *= f
    if bad:
        names = ", ".join(f"c_{j + 1}+c_{j + k}" for _, k, _ in bad)
        raise SingularLambda(f"vanishing factor(s) {names} in path coefficient c_{i}{j}", bad)
    return 2.0 ** (i - j) / factorial(i - j) / prod


def path_coefficient(chain, i, j, lam=None):
    """c_ij for positions j <= i of ``chain``; λ is that of position 0."""
    lam = chain.lam if lam is None else lam
    cs = step_constants(chain.n, chain.degrees, lam)
    return coefficient_from_steps(cs, i, j, path=chain.degrees)


# --- operators on polynomial sections ---------------------------------------

def p_iota_d(P, f, d=1):
    """Σ_β P(e'_{-β} ⊗ ∂f/∂z_β) for f with values in C^d ⊗ W^source."""
    n = P.n
    scale = 1 / np.sqrt(2 * (n + 1))
    out = Poly(f.n, d * P.target_dim)
    for beta in range(n):
        Pb = P.block(beta)
        df = f.deriv(beta)
        terms = {k: (v.reshape(d, P.source_dim) @ Pb.T).ravel() * scale
                 for k, v in df.terms.items()}
        out = out + Poly(f.n, d * P.target_dim, terms)
    return out


def iota_d(f):
    """ιD f = Σ_β e'_{-β} ⊗ ∂f/∂z_β, values in p⁻ ⊗ C^dim (p⁻ index outermost)."""
    n = f.n
    scale = 1 / np.sqrt(2 * (n + 1))
    out = Poly(n, n * f.dim)
    for beta in range(n):
        e = np.zeros(n)
        e[beta] = scale
        out = out + f.deriv(beta).map(np.kron(e[:, None], np.eye(f.dim)))
    return out


@dataclass(frozen=True)
class GammaTerm:
    """One path contribution c·(y ⊗ P_ℓιD ⋯ P_{j+1}ιD) from block src to tgt."""

    src: object
    tgt: object
    coef: float
    y: np.ndarray
    projections: tuple
    path: tuple


def filiform_paths(spec):
    """All paths of length >= 1 along nonzero edges whose triples are filiform."""
    out_edges = {}
    for (j, a, b), y in spec.nonzero_edges().items():
        out_edges.setdefault((j - 1, a), []).append(((j, b), y))
    paths = []

    def extend(path, ys):
        last = path[-1]
        for nxt, y in out_edges.get(last, []):
            if len(path) >= 2 and spec.n > 1:
                ms = [spec.layers[j][i].m for j, i in (path[-2], last, nxt)]
                if not is_filiform_triple(*ms, n=spec.n):
                    continue
            newp = path + [nxt]
            newy = ys + [y]
            paths.append((tuple(newp), newy))
            extend(newp, newy)

    for b in spec.blocks:
        extend([(b.j, b.idx)], [])
    return paths


def path_steps(spec, path):
    cs = []
    for (j0, a), (j1, b) in zip(path, path[1:]):
        cs.append(c_constant(spec.block(j0, a).label, spec.block(j1, b).label))
    return cs


def gamma_terms(spec):
    terms = []
    for path, ys in filiform_paths(spec):
        cs = path_steps(spec, path)
        coef = coefficient_from_steps(cs, len(cs), 0, path=path)
        Y = ys[0]
        for y in ys[1:]:
            Y = y @ Y
        Ps = tuple(cg_projection(spec.block(*u).label.m, spec.block(*v).label.m, spec.n)
                   for u, v in zip(path, path[1:]))
        terms.append(GammaTerm(spec.block(*path[0]), spec.block(*path[-1]), coef, Y, Ps, path))
    return terms


def is_regular(spec):
    """(True, []) if every filiform path coefficient is defined, else witnesses."""
    witnesses = []
    for path, _ in filiform_paths(spec):
        cs = path_steps(spec, path)
        try:
            coefficient_from_steps(cs, len(cs), 0, path=path)
        except SingularLambda as exc:
            witnesses.append({"path": path, "message": str(exc), "factors": exc.factors})
    return (not witnesses), witnesses


def _apply_term(term, f, dim):
    s = term.src
    comp = Poly(f.n, s.size, {k: v[s.slice] for k, v in f.terms.items()})
    d = s.d
    for P in term.projections:
        comp = p_iota_d(P, comp, d)
    t = term.tgt
    wt = t.label.dim
    terms = {}
    for k, v in comp.terms.items():
        full = np.zeros(dim, dtype=complex)
        full[t.slice] = (term.y @ v.reshape(d, wt)).ravel() * term.coef
        terms[k] = full
    return Poly(f.n, dim, terms)


def gamma_apply(spec, f, terms=None):
    terms = gamma_terms(spec) if terms is None else terms
    out = f.copy()
    for t in terms:
        out = out + _apply_term(t, f, spec.dim)
    return out


def gamma_inverse(spec, f):
    terms = gamma_terms(spec)
    out = f.copy()
    cur = f
    for _ in range(spec.depth):
        nxt = Poly(f.n, spec.dim)
        for t in terms:
            nxt = nxt + _apply_term(t, cur, spec.dim)
        cur = nxt * -1
        out = out + cur
    return out


# --- pointwise checks ---------------------------------------------------------

def local_taylor(F, z, order, radius=0.08, nodes=24):
    """Taylor polynomial of a holomorphic map about z, as a Poly in ζ = w - z."""
    coeffs = holo.taylor_coefficients(F, z, order, radius, nodes)
    dim = next(iter(coeffs.values())).shape[0]
    return Poly(len(np.asarray(z).ravel()), dim, coeffs)


def intertwining_residual(spec, g, f, z, terms=None):
    """|Γ(U⁰_g f)(z) - (U^y_g Γf)(z)| with the left side differentiated by contour sampling."""
    terms = gamma_terms(spec) if terms is None else terms
    spec0 = spec.with_edges({})
    F = lambda Z: act_batch(spec0, g, f, Z)
    local = local_taylor(F, z, max(spec.depth, 1))
    lhs = gamma_apply(spec, local, terms)(np.zeros(spec.n))
    rhs = act(spec, g, gamma_apply(spec, f, terms), z)
    return float(np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max()))


def transport_residual(src, tgt, g, F, z):
    """Transport of PιD through the U⁰ action, one step.

    PιD{ϱ⁰_src(k̃⁻¹)F(gz)} = -c·ρ̃(Y)ϱ⁰_src(k̃⁻¹)F(gz) + ϱ⁰_tgt(k̃⁻¹)(PιD F)(gz)
    with (k̃, Y) from factorize(g, z).
    """
    from .kss_reps import eval_irrep
    from .mobius import factorize, factorize_batch, KFactor

    P = cg_projection(src.m, tgt.m, src.n)
    c = c_constant(src, tgt)

    def G(Z):
        fb = factorize_batch(g, Z)
        kinv = KFactor(np.linalg.inv(fb.k.A), 1 / fb.k.delta, -fb.k.logdelta)
        return np.einsum("mij,mj->mi", eval_irrep(src, kinv), F(fb.gz))

    local = local_taylor(G, z, 1)
    lhs = p_iota_d(P, local)(np.zeros(src.n))
    f = factorize(g, z)
    kinv = f.k.inverse()
    val = eval_irrep(src, kinv) @ F(f.gz[None])[0]
    dF = p_iota_d(P, local_taylor(F, f.gz, 1))(np.zeros(src.n))
    rhs = -c * rho_matrix(P, f.y) @ val + eval_irrep(tgt, kinv) @ dF
    return float(np.abs(lhs - rhs).max())


def rho_gradient_residual(degrees, lam, g, z, n=2):
    """P_{j+1}ιD ρ̃_j(Y(g,z)) against -(w/2)ρ̃_{j+1}(Y)ρ̃_j(Y) for a 3-term chain."""
    from .mobius import factorize, factorize_batch

    a, b, c = degrees
    P1 = cg_projection(a, b, n)
    P2 = cg_projection(b, c, n)
    cs = step_constants(n, degrees, lam)
    w = cs[1] - cs[0]

    def R(Z):
        return rho_matrix(P1, factorize_batch(g, Z).y).reshape(len(Z), -1)

    local = local_taylor(R, z, 1)
    # columns of ρ̃_j(Y) are W^b-valued functions; apply P2ιD column by column
    lhs = np.zeros((P2.target_dim, P1.source_dim), dtype=complex)
    for col in range(P1.source_dim):
        sel = np.zeros((P1.target_dim, P1.target_dim * P1.source_dim))
        for r in range(P1.target_dim):
            sel[r, r * P1.source_dim + col] = 1
        lhs[:, col] = p_iota_d(P2, local.map(sel))(np.zeros(n))
    y = factorize(g, z).y
    rhs = -(w / 2) * rho_matrix(P2, y) @ rho_matrix(P1, y)
    return float(np.abs(lhs - rhs).max())


def coefficient_recursion_residual(cs, i, j, l):
    """((ℓ-i+1)/2)c_ij(c_{i+1}+c_{ℓ+1}) + c_{i-1,j} - (c_ℓj/c_{ℓ+1,j})c_ij."""
    cij = coefficient_from_steps(cs, i, j)
    cprev = coefficient_from_steps(cs, i - 1, j) if i - 1 >= j else 0.0
    lhs = (l - i + 1) / 2 * cij * (cs[i] + cs[l]) + cprev
    rhs = coefficient_from_steps(cs, l, j) / coefficient_from_steps(cs, l + 1, j) * cij
    return abs(lhs - rhs)


__all__ = [
    "ChainConstants", "GammaTerm", "c_constant", "chain_spec", "coefficient_from_steps",
    "filiform_paths", "gamma_apply", "gamma_inverse", "gamma_terms", "intertwining_residual",
    "iota_d", "is_regular", "p_iota_d", "path_coefficient", "step_constants",
]
