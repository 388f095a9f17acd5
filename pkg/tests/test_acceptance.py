"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
Run directly (``python tests/test_acceptance.py``) to get just the lines.
"""

import math
import time

import numpy as np
import pytest

from ferromf.core import mf_residual
from ferromf.dynamics import characteristic_curve, verify_final_bound, verify_lemma1, verify_lemma2
from ferromf.exact import coupling_identity_check, curie_weiss_exact, gibbs_exact, lee_yang_zeros, pointwise, polynomial
from ferromf.models import (
    CurieWeissFamily,
    DilutedSpec,
    KacSpec,
    diluted,
    diluted_variance_check,
    kac,
    kac_center,
    positive_state_experiment,
    random_ferromagnet,
)
from ferromf.sampler import detailed_balance_defect, glauber_estimate
from ferromf.solver import fixed_point, scalar_curie_weiss

pytestmark = pytest.mark.acceptance

RESULTS = []


def report(number, title, ok, detail, started):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail} ({time.perf_counter() - started:.1f}s)"
    RESULTS.append(line)
    print(line)
    return ok


def bisect_root(h, beta, lo, hi, iters=200):
    g = lambda m: m - math.tanh(h + beta * m)  # noqa: E731
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if g(mid) < 0 else (lo, mid)
    return 0.5 * (lo + hi)


def test_bound_on_random_systems():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    failures = 0
    for _ in range(500):
        s = random_ferromagnet(int(rng.integers(2, 17)), rng)
        r = mf_residual(s, gibbs_exact(s).m)
        worst = max(worst, r.ratio)
        failures += not r.ratio <= 1.0
    assert report(1, "residual bound, 500 random systems", failures == 0, f"max ratio {worst:.3g}, {failures} failures", t0)


def test_curie_weiss_inverse_n_rate():
    t0 = time.perf_counter()
    beta, h = 1.5, 0.3
    scaled = []
    for n in (100, 1000, 10_000):
        m, _ = curie_weiss_exact(n, beta, h)
        scaled.append(n * abs(m - math.tanh(h + beta * m)))
    spread = max(scaled) / min(scaled)
    detail = "N*residual " + ", ".join(f"{v:.4g}" for v in scaled) + f"; spread {spread:.3f}"
    assert report(2, "Curie-Weiss 1/N rate", spread < 3, detail, t0)


def _random_observable(rng, n):
    if rng.uniform() < 0.5:
        terms = [(rng.normal(), [])]
        for _ in range(int(rng.integers(1, 6))):
            deg = int(rng.integers(1, n + 1))
            terms.append((rng.normal(), sorted(rng.choice(n, deg, replace=False).tolist())))
        return polynomial(terms)
    c = rng.normal(size=n)
    return pointwise(lambda s: math.exp(0.3 * float(c @ s)) + float(s[0] * s[-1]))


def test_coupling_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 9))
        s = random_ferromagnet(n, rng, j_max=rng.uniform(0.1, 1.5))
        i, j = (int(x) for x in rng.choice(n, 2, replace=False))
        lhs, rhs = coupling_identity_check(s, _random_observable(rng, n), i, j)
        worst = max(worst, abs(lhs - rhs))
    assert report(3, "coupling-derivative identity, 200 triples", worst <= 1e-10, f"max |lhs-rhs| {worst:.2e}", t0)


def test_correlation_inequalities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    violations = 0
    tightest = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        s = random_ferromagnet(n, rng, j_max=rng.uniform(0.1, 2.0), h_range=(0.1, 1.0))
        c = verify_lemma1(s, rng.uniform(0, 1, n), int(rng.integers(n)), float(rng.uniform()))
        violations += not c.holds(slack=1e-12)
        if c.rhs1 > 0:
            tightest = max(tightest, c.lhs1 / c.rhs1)
    detail = f"{violations} violations, max lhs1/rhs1 {tightest:.3g}"
    assert report(4, "first and second order correlation bounds, 1000 trials", violations == 0, detail, t0)


def test_characteristic_curve_bounds():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    failures = 0
    drift = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        s = random_ferromagnet(n, rng, h_range=(0.3, 1.5))
        coarse = characteristic_curve(s, 200)
        fine = characteristic_curve(s, 400)
        col = s.couplings[:, 0]
        l2, l2f = verify_lemma2(s, col, trace=coarse), verify_lemma2(s, col, trace=fine)
        fb, fbf = verify_final_bound(s, trace=coarse), verify_final_bound(s, trace=fine)
        failures += not (l2.holds() and fb.holds())
        drift = max(drift, abs(l2.sup_deviation - l2f.sup_deviation), abs(fb.lhs - fbf.lhs))
    ok = failures == 0 and drift < 1e-6
    detail = f"{failures} failures, max lhs change on halving step {drift:.2e}"
    assert report(5, "weighted-average drift and end-to-end bound along the curve", ok, detail, t0)


def test_lee_yang_circle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        s = random_ferromagnet(int(rng.integers(1, 13)), rng, j_max=rng.uniform(0.05, 2.0))
        worst = max(worst, lee_yang_zeros(s).max_modulus_deviation)
    assert report(6, "Lee-Yang zeros on the unit circle, 100 systems", worst < 1e-8, f"max modulus deviation {worst:.2e}", t0)


def _diluted_residuals(n, seeds=20, beta=0.8, h=0.4, p=0.05, sweeps=4000, burn_in=500):
    out = []
    for seed in range(seeds):
        s = diluted(DilutedSpec(n, beta, p, h, seed))
        m = glauber_estimate(s, sweeps, burn_in, seed).m_cond
        out.append(abs(m[0] - math.tanh(h + beta * m.mean())))
    return np.median(out)


def test_diluted_concentration():
    t0 = time.perf_counter()
    small, large = _diluted_residuals(200), _diluted_residuals(2000)
    var = diluted_variance_check()
    drop = small / large
    ok = drop >= 2 and var.holds()
    detail = (
        f"median residual {small:.3e} -> {large:.3e} (drop {drop:.2f}); "
        f"variance {var.variance:.4g} vs bound {var.bound:.4g} (rse {var.rel_std_err:.3f})"
    )
    assert report(7, "diluted model concentration", ok, detail, t0)


def test_kac_scaling():
    t0 = time.perf_counter()
    beta, h = 0.8, 0.5
    per_lambda = []
    for lam, L in ((0.8, 10), (0.4, 20), (0.2, 40)):
        spec = KacSpec(1, L, lam, beta, h)
        s, c = kac(spec), kac_center(spec)
        if L <= 20:
            m = gibbs_exact(s).m
        else:
            est = glauber_estimate(s, 400_000, 5000, seed=1)
            m = est.m_cond
            # noise on the residual must be small next to the signal
            assert est.cond_std_err.max() < 0.05 * lam
        r = abs(m[c] - math.tanh(h + s.couplings[c] @ m))
        per_lambda.append(r / lam)
    spread = max(per_lambda) / min(per_lambda)
    detail = "residual/lambda " + ", ".join(f"{v:.4g}" for v in per_lambda) + f"; spread {spread:.3f}"
    assert report(8, "Kac center-site residual proportional to lambda", spread <= 2, detail, t0)


def test_positive_state_selection():
    t0 = time.perf_counter()
    sizes = [100, 1000, 10_000]
    sup = positive_state_experiment(CurieWeissFamily(1.5), sizes, 0.25)
    sub = positive_state_experiment(CurieWeissFamily(0.5), [10_000], 0.25)[0]
    ok = all(r["max_m"] >= 0.5 for r in sup) and sub["max_m"] <= 2 * sub["h"]
    detail = (
        "beta=1.5 max m " + ", ".join(f"{r['max_m']:.4f}" for r in sup)
        + f"; beta=0.5 max m {sub['max_m']:.4f} vs 2h {2 * sub['h']:.4f}"
    )
    assert report(9, "positive state selection by a vanishing field", ok, detail, t0)


def test_solver_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 30))
        s = random_ferromagnet(n, rng, j_max=rng.uniform(0.1, 3.0), h_range=(-1.0, 1.0))
        row = s.couplings.sum(axis=0).max()
        if row >= 1:
            s = s.scaled(0.99 / row)
        a = fixed_point(s, init=np.ones(n))
        b = fixed_point(s, init=-np.ones(n))
        worst = max(worst, float(np.abs(a.m_star - b.m_star).max()))
    ref = bisect_root(0.0, 2.0, 0.5, 1.0)
    m = scalar_curie_weiss(0.0, 2.0)
    ok = worst <= 1e-10 and abs(m - 0.957504) <= 1e-6 and abs(m - ref) <= 1e-12
    detail = f"init spread {worst:.2e}; scalar root {m:.9f} (bisection {ref:.9f})"
    assert report(10, "mean-field solver", ok, detail, t0)


def test_sampler_validity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    defect = 0.0
    for n in (1, 2, 3, 4):
        for _ in range(10):
            s = random_ferromagnet(n, rng, j_max=2.0, h_range=(-1.0, 1.0))
            defect = max(defect, detailed_balance_defect(s))
    s = random_ferromagnet(12, rng)
    exact = gibbs_exact(s).m
    inside = 0
    for seed in range(100):
        est = glauber_estimate(s, 20_000, 1000, seed)
        inside += int(np.sum(np.abs(est.m_hat - exact) <= 2 * est.std_err))
    coverage = inside / (100 * 12)
    ok = defect <= 1e-12 and coverage >= 0.9
    detail = f"detailed-balance defect {defect:.1e}; coverage {coverage:.3f}"
    assert report(11, "heat-bath sampler", ok, detail, t0)


if __name__ == "__main__":
    for name, func in list(globals().items()):
        if name.startswith("test_"):
            try:
                func()
            except AssertionError:
                pass
