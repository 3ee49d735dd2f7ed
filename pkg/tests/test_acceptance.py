"""The twelve acceptance criteria, at their stated tolerances.

Each test prints one PASS/FAIL line (bypassing pytest's capture) and then
asserts. ``python3 tests/test_acceptance.py`` prints the same lines without
pytest.
"""
import time

import numpy as np
import pytest

from hhvb import holo
from hhvb.bundle import BundleSpec, chain_spec, load_spec, multiplier_batch, scalar_spec, validate
from hhvb.cd_tuples import (build_space, eigenvector_check, homogeneity_residual,
                            op_norm_estimate, similarity_report)
from hhvb.errors import IndefiniteGram, SingularLambda
from hhvb.gamma_op import (c_constant, gamma_apply, gamma_inverse, gamma_terms,
                           intertwining_residual)
from hhvb.kernel_engine import (KernelExpr, gram, k0, k_irred, ky, monomial_norms,
                                positivity_threshold, sample_points, verify_identity)
from hhvb.kss_reps import IrrepLabel, IrrepRep
from hhvb.lie_core import (bracket, decompose, dual_basis, embed_pminus, embed_pplus, killing,
                           random_sl, zhat)
from hhvb.mobius import (GroupElement, act, factor_derivative_residuals, factorize, jacobian,
                         random_ball_points)
from hhvb.poly import Poly

RESULTS = {}


def report(num, title, ok, detail, started, capsys=None):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {title}: {detail} ({time.perf_counter() - started:.2f}s)"
    RESULTS[num] = ok
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


# --- the criteria ------------------------------------------------------------------

def criterion_1(capsys=None):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in range(1, 5):
        X, Y, Z = (random_sl(n, rng) for _ in range(3))
        jac = bracket(X, bracket(Y, Z)) + bracket(Y, bracket(Z, X)) + bracket(Z, bracket(X, Y))
        worst = max(worst, np.abs(jac).max())
        worst = max(worst, abs(killing(bracket(X, Y), Z) + killing(Y, bracket(X, Z))))
        worst = max(worst, abs(killing(zhat(n), zhat(n)) + 2 * n))
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        worst = max(worst, np.abs(bracket(zhat(n), embed_pplus(u)) - 1j * embed_pplus(u)).max())
        worst = max(worst, np.abs(bracket(zhat(n), embed_pminus(u)) + 1j * embed_pminus(u)).max())
        plus, k, minus = decompose(bracket(embed_pplus(u), embed_pminus(u)))
        worst = max(worst, np.abs(plus).max(), np.abs(minus).max())
        worst = max(worst, np.abs(bracket(embed_pplus(u), embed_pplus(u[::-1]))).max())
        pairs = dual_basis(n)
        for b, (e, _) in enumerate(pairs):
            for g, (_, f) in enumerate(pairs):
                worst = max(worst, abs(killing(f, e) - (b == g)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 1.0
    return report(1, "structure suite", ok, f"max residual {worst:.1e}, n ≤ 4", t0, capsys)


def criterion_2(capsys=None):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    ldu = fa = fb = jac = coc = 0.0
    for n in (1, 2):
        spec = chain_spec(n, [0, 0] if n == 1 else [0, 1], -3.0)
        rep = IrrepRep(IrrepLabel(n, 0, -2.5))
        for _ in range(50):
            g, g2 = GroupElement.random(n, rng), GroupElement.random(n, rng)
            z = random_ball_points(n, 1, rng, 0.7)[0]
            X = rng.normal(size=n) + 1j * rng.normal(size=n)
            f = factorize(g, z)
            ldu = max(ldu, np.abs(f.recompose() - g.mat @ (np.eye(n + 1) + embed_pplus(z))).max())
            a, b = factor_derivative_residuals(rep, g, z, X)
            fa, fb = max(fa, a), max(fb, b)
            jac = max(jac, np.abs(holo.jacobian(lambda W: act(g, W), z) - jacobian(g, z)).max())
            m12 = multiplier_batch(spec, g @ g2, z[None])[0]
            m = multiplier_batch(spec, g, act(g2, z)[None])[0] @ multiplier_batch(spec, g2, z[None])[0]
            coc = max(coc, np.abs(m12 - m).max())
    elapsed = time.perf_counter() - t0
    ok = ldu < 1e-10 and fa < 1e-8 and fb < 1e-8 and jac < 1e-8 and coc < 1e-9 and elapsed < 5
    detail = f"LDU {ldu:.1e}, derivatives {max(fa, fb):.1e}, Jacobian {jac:.1e}, cocycle {coc:.1e}"
    return report(2, "factorization suite", ok, detail, t0, capsys)


def criterion_3(capsys=None):
    t0 = time.perf_counter()
    lam = np.array([-4.0, -3.0, -2.0, -1.0, -0.5])
    ok = True
    fits = []
    for n, s, t in ((1, 0, 0), (2, 0, 1)):
        c = np.array([c_constant(IrrepLabel(n, s, x), IrrepLabel(n, t, x - 1)) for x in lam])
        slope, icpt = np.polyfit(lam, c, 1)
        fit = np.abs(c - (slope * lam + icpt)).max()
        fits.append(fit)
        ok &= fit < 1e-10 and abs(slope + 1 / (2 * n)) < 1e-10
        neg = -np.random.default_rng(3).uniform(0.01, 10, size=10)
        ok &= all(c_constant(IrrepLabel(n, s, x), IrrepLabel(n, t, x - 1)) > 0 for x in neg)
    c_disc = c_constant(IrrepLabel(1, 0, -2.0), IrrepLabel(1, 0, -3.0))
    ok &= abs(c_disc - 1) < 1e-10
    detail = f"slopes -1/(2n), fit {max(fits):.1e}, disc c₁(-2) = {c_disc:.12f}"
    return report(3, "constants", bool(ok), detail, t0, capsys)


def criterion_4(capsys=None):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    chains = [(1, [0, 0]), (1, [0, 0, 0]), (2, [0, 1]), (2, [0, 1, 2]), (2, [2, 1, 0])]
    worst = trip = 0.0
    for n, degs in chains:
        for lam in (-2.5, -3.0, -4.25):
            spec = chain_spec(n, degs, lam)
            terms = gamma_terms(spec)
            for _ in range(30):
                g = GroupElement.random(n, rng)
                z = random_ball_points(n, 1, rng, 0.6)[0]
                f = Poly.random(n, spec.dim, 4, rng)
                worst = max(worst, intertwining_residual(spec, g, f, z, terms))
            f = Poly.random(n, spec.dim, 4, rng)
            trip = max(trip, gamma_apply(spec, gamma_inverse(spec, f), terms).max_abs_diff(f))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and trip < 1e-10 and elapsed < 60
    detail = f"intertwining {worst:.1e}, round trip {trip:.1e}, 450 samples"
    return report(4, "Γ intertwining", ok, detail, t0, capsys)


def criterion_5(capsys=None):
    t0 = time.perf_counter()
    pg = max(verify_identity("pairing_gradient", n=n, samples=30) for n in (1, 2))
    adj = max(verify_identity("adjoint_log_kernel", n=n, samples=30) for n in (1, 2))
    grad = max(verify_identity("gradient_kernel", n=2, samples=30, src=IrrepLabel(2, s, -3.0),
                               tgt=IrrepLabel(2, t, -4.0)) for s, t in ((0, 1), (1, 2), (1, 0)))
    gap = max(verify_identity("dominance_gap", n=n, ell=ell, samples=30)
              for n in (1, 2) for ell in (0.5, 1.0, 3.0))
    ok = pg < 1e-14 and adj < 1e-8 and grad < 1e-8 and gap < 1e-10
    detail = f"pairing {pg:.1e}, adjoint-log {adj:.1e}, gradient kernel {grad:.1e}, dominance gap {gap:.1e}"
    return report(5, "kernel identities", ok, detail, t0, capsys)


def criterion_6(capsys=None):
    t0 = time.perf_counter()
    ok = True
    for n in (1, 2):
        pts = sample_points(n, 12, 6)
        ok &= all(gram(KernelExpr.h_power(n, ell), pts).positive for ell in (0.1, 0.5, 1.0, 2.7))
        ok &= all(gram(KernelExpr.h_power(n, ell), pts).verdict == "indefinite" for ell in (-0.5, -1.0))
    pts = sample_points(2, 12, 6)
    lo, hi = positivity_threshold(lambda lam: k_irred(IrrepLabel(2, 0, lam)), -1.0, 1.0, pts)
    ok &= hi - lo <= 1e-3 and -1e-3 <= lo and hi <= 1e-3
    detail = f"positive for ℓ > 0, indefinite for ℓ < 0, threshold bracket [{lo:.2e}, {hi:.2e}]"
    return report(6, "positivity windows", bool(ok), detail, t0, capsys)


def criterion_7(capsys=None):
    t0 = time.perf_counter()
    worst = 0.0
    from math import factorial
    for n in (1, 2):
        for ell in (1.0, 2.0, 3.5):
            for m, nu in monomial_norms(KernelExpr.h_power(n, ell), 8).items():
                exp = np.prod([factorial(x) for x in m]) / np.prod([ell + k for k in range(sum(m))])
                worst = max(worst, abs(nu - exp) / max(1.0, exp))
    ones = max(abs(v - 1) for v in monomial_norms(KernelExpr.h_power(1, 1.0), 8).values())
    ok = worst < 1e-12 and ones < 1e-12
    return report(7, "monomial norms", ok, f"max deviation {worst:.1e}, disc ℓ=1 {ones:.1e}", t0, capsys)


def criterion_8(capsys=None):
    t0 = time.perf_counter()
    gaps = {}
    for ell in (0.5, 1.0, 2.0):
        norm, _ = op_norm_estimate(scalar_spec(1, -ell / 2), 0, 200)
        gaps[ell] = abs(norm - max(1.0, ell ** -0.5))
    _, seq0 = op_norm_estimate(scalar_spec(2, -4 / 3), 0, 12)
    _, seq1 = op_norm_estimate(scalar_spec(2, -4 / 3), 1, 12)
    ball = max(seq0 + seq1)
    ok = all(g < 1e-6 for g in gaps.values()) and ball <= 1 + 1e-9
    detail = ", ".join(f"ℓ={k}: gap {v:.1e}" for k, v in gaps.items()) + f"; ball max {ball:.6f}"
    return report(8, "operator norms", ok, detail, t0, capsys)


def criterion_9(capsys=None):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    hom = 0.0
    for spec in (load_spec("disc_m1"), scalar_spec(2, -4 / 3)):
        for k in range(20):
            g = GroupElement.random(spec.n, rng)
            hom = max(hom, max(homogeneity_residual(spec, g, i=i, seed=k) for i in range(spec.n)))
    K = KernelExpr.h_power(1, 2.0)
    w = np.array([0.5])
    r20 = eigenvector_check(build_space(None, K, 20), K, w, np.ones(1))
    r24 = eigenvector_check(build_space(None, K, 24), K, w, np.ones(1))
    ratio = r24 / r20
    ok = hom < 1e-8 and ratio < 0.5**4 * 1.5 and r20 < 1e-4
    detail = f"homogeneity {hom:.1e}, eigenvector residual {r20:.1e} → {r24:.1e} (ratio {ratio:.3f} < {0.5**4 * 1.5:.3f})"
    return report(9, "homogeneity and eigenvectors", ok, detail, t0, capsys)


def criterion_10(capsys=None):
    t0 = time.perf_counter()
    ok = True
    qi = 0.0
    smin = np.inf
    for name in ("disc_m1", "ball2_chain012"):
        spec = load_spec(name)
        K = ky(spec)
        ok &= gram(K, sample_points(spec.n, 12, 10)).positive
        qi = max(qi, verify_identity("quasi_invariance", n=spec.n, samples=20, spec=spec, kernel=K))
        smin = min(smin, np.linalg.svd(K(np.zeros(spec.n), np.zeros(spec.n)), compute_uv=False).min())
        zero = spec.scaled(0.0)
        a, b = ky(zero), k0(zero)
        ok &= a.terms.keys() == b.terms.keys() and all(np.array_equal(a.terms[k], b.terms[k]) for k in a.terms)
    ok &= qi < 1e-8 and smin > 1e-12
    detail = f"positive, quasi-invariance {qi:.1e}, min singular value at origin {smin:.3f}, y=0 identical to K⁰"
    return report(10, "K^y suite", bool(ok), detail, t0, capsys)


def criterion_11(capsys=None):
    t0 = time.perf_counter()
    spec = load_spec("disc_m1")
    reps = {N: similarity_report(spec, N) for N in (6, 10, 14)}
    lo = [reps[N].ratio_low for N in (6, 10, 14)]
    hi = [reps[N].ratio_high for N in (6, 10, 14)]
    shrink_lo = abs(lo[1] - lo[0]) / abs(lo[2] - lo[1])
    shrink_hi = abs(hi[1] - hi[0]) / abs(hi[2] - hi[1])
    bounded = all(1e-3 < x < 1e3 for x in lo + hi)
    trivial = similarity_report(spec.scaled(0.0), 14)
    exact = trivial.ratio_low == pytest.approx(1, abs=1e-12) and trivial.ratio_high == pytest.approx(1, abs=1e-12)
    ok = shrink_lo >= 2 and shrink_hi >= 2 and bounded and exact
    detail = (f"ratios low {lo[0]:.4f}/{lo[1]:.4f}/{lo[2]:.4f}, high {hi[0]:.4f}/{hi[1]:.4f}/{hi[2]:.4f}; "
              f"increment shrink {shrink_lo:.2f}× and {shrink_hi:.2f}× (need ≥ 2×); y=0 exact {exact}")
    return report(11, "similarity", ok, detail, t0, capsys)


def criterion_12(capsys=None):
    t0 = time.perf_counter()
    rejected = []
    for k in range(3):
        spec = BundleSpec(2, -3.0, [[(k, 1)], [(k + 1, 1)], [(k, 1)]],
                          {(1, 0, 0): [[1.0]], (2, 0, 0): [[1.0]]})
        rejected.append(any(v.kind == "filiform" for v in validate(spec).violations))
    try:
        spec = load_spec("disc_m1").with_lambda(1.0)
        build_space(spec, ky(spec), 4)
        indefinite = False
    except IndefiniteGram:
        indefinite = True
    try:
        gamma_terms(load_spec("disc_singular"))
        named = ""
    except SingularLambda as exc:
        named = str(exc) if exc.factors else ""
    ok = all(rejected) and indefinite and "c_1+c_2" in named
    detail = f"filiform rejections {rejected}, IndefiniteGram {indefinite}, SingularLambda '{named}'"
    return report(12, "negative controls", ok, detail, t0, capsys)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{i + 1:02d}" for i in range(12)])
def test_acceptance(crit, capsys):
    assert crit(capsys)


if __name__ == "__main__":
    for crit in CRITERIA:
        crit()
    print(f"{sum(RESULTS.values())}/{len(RESULTS)} criteria pass")
