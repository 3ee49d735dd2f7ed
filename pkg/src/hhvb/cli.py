"""Command-line driver: runs the check suites and writes JSON or CSV reports.

Exit codes: 0 all checks pass, 2 some check failed, 3 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import holo
from .bundle import chain_spec, load_spec, multiplier_batch, scalar_spec, validate
from .cd_tuples import (build_space, eigenvector_check, homogeneity_residual,
                        op_norm_estimate, similarity_report)
from .errors import HhvbError, IndefiniteGram, SingularLambda, SpecError, UnsupportedDimension
from .gamma_op import gamma_apply, gamma_inverse, gamma_terms, intertwining_residual, is_regular
from .kernel_engine import (dominance, gram, k0, k_irred, ky, positivity_threshold,
                            sample_points, verify_identity, KernelExpr, ad_pminus_kernel)
from .kss_reps import IrrepLabel, IrrepRep
from .lie_core import embed_pplus
from .mobius import GroupElement, act, factor_derivative_residuals, factorize, jacobian
from .poly import Poly

COMMANDS = ("verify-identities", "gamma-intertwine", "kernel-suite", "tuple-suite",
            "regularity-scan")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    spec: str | None = None
    n: int | None = None
    lam: float | None = None
    samples: int = 30
    seed: int = 7
    max_degree: int = 12
    tol: float | None = None
    format: str = "json"
    out: str | None = None


class Report:
    def __init__(self, config):
        self.config = config
        self.records = []
        self.series = {}

    def add(self, name, anchor, value, tolerance, passed, **detail):
        if not anchor:
            raise ValueError("every record needs an anchor")
        rec = {"name": name, "anchor": anchor, "value": value, "tolerance": tolerance,
               "pass": bool(passed)}
        if detail:
            rec["detail"] = detail
        self.records.append(rec)

    def check(self, name, anchor, residual, tol):
        """Residual record; a config ``--tol`` replaces the default tolerance."""
        tol = self.config.tol if self.config.tol is not None else tol
        self.add(name, anchor, float(residual), tol, residual <= tol)

    @property
    def ok(self):
        return all(r["pass"] for r in self.records)

    def body(self):
        passed = sum(r["pass"] for r in self.records)
        return {"command": self.config.command, "config": asdict(self.config),
                "records": self.records, "series": self.series,
                "summary": {"passed": passed, "failed": len(self.records) - passed}}

    def render(self, fmt):
        if fmt == "json":
            return json.dumps(_clean(self.body()), indent=2, sort_keys=True)
        lines = ["series,degree,value"]
        for name in sorted(self.series):
            for d, v in self.series[name]:
                lines.append(f"{name},{d},{v!r}")
        if len(lines) == 1:
            lines = ["name,value,tolerance,pass"]
            lines += [f"{r['name']},{r['value']!r},{r['tolerance']!r},{r['pass']}"
                      for r in self.records]
        return "\n".join(lines)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


# --- helpers -----------------------------------------------------------------

def _spec(config, default):
    if config.spec:
        spec = load_spec(config.spec)
        if config.lam is not None:
            spec = spec.with_lambda(config.lam)
    else:
        spec = default()
    rep = validate(spec)
    if not rep.valid:
        raise ConfigError("; ".join(f"{v.kind} at {v.location}: {v.detail}" for v in rep.violations))
    return spec


def _ell(n, lam):
    return -(n + 1) * lam / n


# --- commands ------------------------------------------------------------------

def cmd_verify_identities(config, report):
    n = config.n or 1
    if n not in (1, 2):
        raise ConfigError("verify-identities supports n = 1 or 2")
    rng = np.random.default_rng(config.seed)
    S = config.samples
    lam = -3.0
    spec = chain_spec(n, [0, 0] if n == 1 else [0, 1], lam)
    label = IrrepLabel(n, 0, lam)
    ldu = jac = coc = fa = fb = 0.0
    for _ in range(S):
        g = GroupElement.random(n, rng)
        g2 = GroupElement.random(n, rng)
        z = sample_points(n, 1, int(rng.integers(1 << 30)), 0.7)[0]
        X = rng.normal(size=n) + 1j * rng.normal(size=n)
        expz = np.eye(n + 1, dtype=complex) + embed_pplus(z)
        ldu = max(ldu, np.abs(factorize(g, z).recompose() - g.mat @ expz).max())
        Jnum = holo.jacobian(lambda Z: act(g, Z), z)
        jac = max(jac, np.abs(Jnum - jacobian(g, z)).max())
        m12 = multiplier_batch(spec, g @ g2, z[None])[0]
        m1 = multiplier_batch(spec, g, act(g2, z)[None])[0]
        m2 = multiplier_batch(spec, g2, z[None])[0]
        coc = max(coc, np.abs(m12 - m1 @ m2).max())
        a, b = factor_derivative_residuals(IrrepRep(label), g, z, X)
        fa, fb = max(fa, a), max(fb, b)
    report.check("ldu_recomposition", "g·exp z = exp(gz)·k̃(g,z)·exp Y(g,z)", ldu, 1e-10)
    report.check("k_factor_derivative", "D_X τ(k̃⁻¹) = -dτ([Y, X])·τ(k̃⁻¹)", fa, 1e-8)
    report.check("y_derivative", "D_X Y = ½[Y, [Y, X]]", fb, 1e-8)
    report.check("jacobian", "holomorphic Jacobian of z ↦ gz equals the K-factor A-block over δ",
                 jac, 1e-8)
    report.check("multiplier_cocycle", "m(gg', z) = m(g, g'z)·m(g', z)", coc, 1e-9)

    kw = dict(n=n, samples=S, seed=config.seed)
    report.check("pairing_gradient", "ιD^z(ιD^w)^♯<z, w> = I on p⁻",
                 verify_identity("pairing_gradient", **kw), 1e-12)
    report.check("adjoint_log_kernel", "Ad_{p⁻}(kernel factor) = -2p·ιD^z(ιD^w)^♯ log h",
                 verify_identity("adjoint_log_kernel", **kw), 1e-8)
    report.check("log_derivative_split", "-ιDιD^♯ log h = h⁻²(ιDh)(ιD^♯h) - h⁻¹ιDιD^♯h",
                 verify_identity("log_derivative_split", **kw), 1e-8)
    for ell in (0.5, 1.0, 3.0):
        report.check(f"dominance_gap[ell={ell}]",
                     "C·h^{-ℓ}Ad - ιDιD^♯h^{-ℓ} = (ℓ²/2p)h^{-ℓ-1}I with C = ℓ(ℓ+1)/2p",
                     verify_identity("dominance_gap", ell=ell, **kw), 1e-10)
    pairs = [(0, 0)] if n == 1 else [(0, 1), (1, 2), (1, 0)]
    for s, t in pairs:
        res = verify_identity("gradient_kernel", src=IrrepLabel(n, s, lam),
                              tgt=IrrepLabel(n, t, lam - 1), **kw)
        report.check(f"gradient_kernel[{s}->{t}]",
                     "(PιD^z)(PιD^w)^♯K_src = |c|²A + c̄·K_tgt", res, 1e-8)


def cmd_gamma_intertwine(config, report):
    spec = _spec(config, lambda: load_spec("disc_m2"))
    rng = np.random.default_rng(config.seed)
    try:
        terms = gamma_terms(spec)
    except SingularLambda as exc:
        report.add("singular_lambda", "path coefficient denominators c_{j+1} + c_{j+k} ≠ 0",
                   str(exc), None, False,
                   factors=[{"path": [list(p) for p in path], "k": k, "value": v}
                            for path, k, v in exc.factors])
        return
    regular, witnesses = is_regular(spec)
    report.add("regular", "all path coefficients finite", regular, None, regular)
    report.add("path_coefficients", "c_ij from the step constants c_k(λ)",
               len(terms), None, True,
               coefficients=[{"path": [list(p) for p in t.path], "coef": float(t.coef)}
                             for t in terms])
    worst = trip = 0.0
    for _ in range(config.samples):
        g = GroupElement.random(spec.n, rng)
        z = sample_points(spec.n, 1, int(rng.integers(1 << 30)), 0.6)[0]
        f = Poly.random(spec.n, spec.dim, 4, rng)
        worst = max(worst, intertwining_residual(spec, g, f, z, terms))
        back = gamma_apply(spec, gamma_inverse(spec, f), terms)
        trip = max(trip, back.max_abs_diff(f))
    report.check("intertwining", "Γ·U⁰_g = U^y_g·Γ on polynomial sections", worst, 1e-8)
    report.check("inverse_round_trip", "Γ(Γ⁻¹f) = f coefficientwise", trip, 1e-10)


def cmd_kernel_suite(config, report):
    spec = _spec(config, lambda: load_spec("disc_m1"))
    n = spec.n
    try:
        K = ky(spec)
    except SingularLambda as exc:
        report.add("singular_lambda", "path coefficient denominators nonzero", str(exc), None, False)
        return
    pts = sample_points(n, 12, config.seed)
    rep = gram(K, pts, seed=config.seed)
    report.add("ky_positive", "Σ<K(z_j, z_k)v_k, v_j> ≥ 0 on sampled points",
               rep.min_eig, rep.tolerance, rep.positive, verdict=rep.verdict, max_eig=rep.max_eig)
    rep0 = gram(k0(spec), pts, seed=config.seed)
    report.add("k0_positive", "direct-sum kernel positive on sampled points",
               rep0.min_eig, rep0.tolerance, rep0.positive, verdict=rep0.verdict)
    s = min(np.linalg.svd(K(np.zeros(n), np.zeros(n)), compute_uv=False))
    report.add("ky_origin_invertible", "K^y(0, 0) invertible", float(s), 1e-12, s > 1e-12)
    report.check("ky_quasi_invariance", "K(gz, gw) = m(g,z)K(z,w)m(g,w)^♯",
                 verify_identity("quasi_invariance", n=n, samples=min(config.samples, 20),
                                 seed=config.seed, spec=spec, kernel=K), 1e-8)
    Z = sample_points(n, 10, config.seed + 1)
    W = sample_points(n, 10, config.seed + 2)
    herm = np.abs(K.evaluate_pairs(Z, W) - np.conj(np.swapaxes(K.evaluate_pairs(W, Z), 1, 2))).max()
    report.check("ky_hermitian", "K(z, w)^♯ = K(w, z)", herm, 1e-10)
    ell = _ell(n, spec.lam)
    if ell > 0:
        hl = KernelExpr.h_power(n, ell)
        grad = hl.iota_d().sharp_apply(lambda X: X.iota_d())
        C = ell * (ell + 1) / (2 * (n + 1))
        rd = dominance(grad, ad_pminus_kernel(n).pointwise(hl), np.sqrt(C), pts)
        report.add("gradient_dominance", "ιDιD^♯h^{-ℓ} ≺ C·h^{-ℓ}Ad with C = ℓ(ℓ+1)/2p",
                   rd.min_eig, rd.tolerance, rd.positive, verdict=rd.verdict)


def cmd_tuple_suite(config, report):
    n = config.n or 1
    default_lam = -n / (n + 1)
    spec = _spec(config, lambda: scalar_spec(n, config.lam if config.lam is not None else default_lam))
    n = spec.n
    N = config.max_degree
    rng = np.random.default_rng(config.seed)
    try:
        K = ky(spec)
        build_space(spec, K, N + 1)
    except SingularLambda as exc:
        report.add("singular_lambda", "path coefficient denominators nonzero", str(exc), None, False)
        return
    except IndefiniteGram as exc:
        report.add("unitarizable", "kernel expansion positive definite on every weight",
                   exc.eigenvalue, 0.0, False, message=str(exc))
        return
    for i in range(n):
        norm, seq = op_norm_estimate(spec, i, N, K)
        report.series[f"norm_M{i + 1}"] = [(d + 1, v) for d, v in enumerate(seq)]
        report.add(f"op_norm_M{i + 1}", "multiplication operators preserve H and are bounded",
                   norm, None, bool(np.isfinite(norm)))
    w = np.zeros(n, dtype=complex)
    w[0] = 0.5
    v = np.zeros(spec.dim, dtype=complex)
    v[0] = 1
    res = []
    for M in (N - 4, N):
        res.append(eigenvector_check(build_space(spec, K, M), K, w, v))
    ratio = res[1] / res[0] if res[0] > 0 else 0.0
    report.series["eigenvector_residual"] = [(N - 4, res[0]), (N, res[1])]
    # the tail carries a polynomial factor in N on top of |w|^4, so only
    # strict geometric decay is asserted here
    report.add("eigenvector_decay", "K_w v spans the joint eigenspace of M^* for w̄",
               ratio, abs(w[0]) ** 2, ratio < abs(w[0]) ** 2,
               residuals=res, within_four_degree_bound=bool(ratio < 1.5 * abs(w[0]) ** 4))
    hom = max(homogeneity_residual(spec, GroupElement.random(n, rng), i=i, seed=k)
              for k in range(min(config.samples, 20)) for i in range(n))
    report.check("homogeneity", "U_g⁻¹ M_i U_g = (g·M)_i", hom, 1e-8)
    if spec.edges:
        sim = similarity_report(spec, N)
        report.series["similarity_low"] = [(d, lo) for d, lo, _ in sim.per_degree]
        report.series["similarity_high"] = [(d, hi) for d, _, hi in sim.per_degree]
        okay = 1e-3 < sim.ratio_low and sim.ratio_high < 1e3
        report.add("similarity_ratios", "H⁰ and H^y agree as sets with equivalent norms",
                   [sim.ratio_low, sim.ratio_high], [1e-3, 1e3], okay)


def cmd_regularity_scan(config, report):
    if config.spec:
        spec = _spec(config, None)
        n, m = spec.n, spec.layers[0][0].m
    else:
        n, m = config.n or 2, 0
    pts = sample_points(n, 12, config.seed)
    kernel_of = lambda lam: k_irred(IrrepLabel(n, m, lam))
    lo, hi = -1.0, 1.0
    while not _positive(kernel_of, lo, pts):
        lo -= 2.0
        if lo < -64:
            raise ConfigError("no positive kernel found for λ ≥ -64")
    while _positive(kernel_of, hi, pts):
        hi += 2.0
        if hi > 64:
            raise ConfigError("kernel stays positive up to λ = 64")
    lo, hi = positivity_threshold(kernel_of, lo, hi, pts, width=1e-3)
    report.series["threshold_bracket"] = [(0, lo), (1, hi)]
    report.add("threshold_bracket_width", "bisection on sampled Gram and expansion positivity",
               hi - lo, 1e-3, hi - lo <= 1e-3, bracket=[lo, hi], m=m, n=n, empirical=True)
    if m == 0:
        inside = lo - 1e-3 <= 0.0 <= hi + 1e-3
        report.add("scalar_threshold", "scalar kernels are positive exactly for λ < 0",
                   0.5 * (lo + hi), 1e-3, inside)


def _positive(kernel_of, lam, pts):
    from .kernel_engine import is_positive
    return is_positive(kernel_of(lam), pts)[0]


HANDLERS = {
    "verify-identities": cmd_verify_identities,
    "gamma-intertwine": cmd_gamma_intertwine,
    "kernel-suite": cmd_kernel_suite,
    "tuple-suite": cmd_tuple_suite,
    "regularity-scan": cmd_regularity_scan,
}


def build_parser():
    p = _Parser(prog="hhvb", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--spec", help="spec file, or the name of a bundled example")
    p.add_argument("--n", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--samples", type=int, default=30)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--max-degree", dest="max_degree", type=int, default=12)
    p.add_argument("--tol", type=float, help="replace every residual tolerance")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    return p


def run(config):
    report = Report(config)
    HANDLERS[config.command](config, report)
    return report


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = RunConfig(**vars(args))
    if config.samples < 1 or config.max_degree < 1:
        print("hhvb: --samples and --max-degree must be positive", file=sys.stderr)
        return 3
    try:
        report = run(config)
    except (ConfigError, SpecError, UnsupportedDimension, FileNotFoundError) as exc:
        print(f"hhvb: {exc}", file=sys.stderr)
        return 3
    except HhvbError as exc:
        print(f"hhvb: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = report.render(config.format)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if report.ok else 2


if __name__ == "__main__":
    sys.exit(main())
