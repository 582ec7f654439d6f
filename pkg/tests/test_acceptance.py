"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Every tolerance is pinned in this module; nothing is deferred to runtime
calibration.  Grid steps are chosen per criterion so that the documented
crossing-overshoot bias (about 0.6 sqrt(dt) per barrier) stays inside the
stated bands; wall times are printed for the runtime targets.

Criterion 5 is asserted at its pinned parameters and is expected to FAIL: at
those parameters (T = 1, eps = 0.05, gamma = 3) the upper barrier sits at
eps e^3 ~ 1.0, and excursions destined for it last E[tau | up] ~ a^2/3 ~ 0.34,
a third of the whole horizon.  The cost expectation therefore runs ~13%
below its eps -> 0 limit (the product ~45% below) at ANY grid step, so the
asymptotic ratio F(3, 1.5) is not reachable in this configuration.  The
companion test reruns the identical assertion structure at gamma = 1.25,
where the asymptotic regime holds, and passes well inside the band.
"""

import math
import time

import numpy as np
import pytest

from hedgesim.models import BM, ModelSpec
from hedgesim.moments import (
    bernoulli_distribution,
    bernoulli_ratio,
    center,
    DiscreteDistribution,
    efficiency_factor,
    exact_moments,
    fukasawa_gap,
    g,
    ks1_margin,
    ks20_margin,
    pearson_gap,
)
from hedgesim.montecarlo import (
    _run_pool,
    hitting_exit_stats,
    run_experiment,
    run_paired,
    theoretical_bound,
)
from hedgesim.schemes import SchemeSpec, ShatMode
from hedgesim.utility import UtilityParams, mu_check, mu_hat, scaled_utility_experiment
from scipy.optimize import minimize_scalar


def report(num, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    return ok


# ------------------------------------------------------------------ 1


def test_criterion_1_inequality_suite():
    t0 = time.time()
    ks1_betas = (0.0, 0.25, 0.5, 0.75, 0.99)
    ks20_alphas = (0.0, 0.5, 1.0)
    ks20_betas = (0.0, 0.5, 1.5)
    rng = np.random.default_rng(11)
    worst = {"pearson": np.inf, "fukasawa": np.inf, "ks1": np.inf, "ks20": np.inf}
    for _ in range(1000):
        n = rng.integers(2, 9)
        values = rng.uniform(-5.0, 5.0, n)
        while len(np.unique(values)) < 2:
            values = rng.uniform(-5.0, 5.0, n)
        weights = rng.uniform(0.05, 1.0, n)
        d = center(DiscreteDistribution(list(zip(values, weights / weights.sum()))))
        m1 = exact_moments(d, 1.0)
        worst["pearson"] = min(worst["pearson"], pearson_gap(m1) - 1.0)
        worst["fukasawa"] = min(worst["fukasawa"], fukasawa_gap(m1))
        for b in ks1_betas:
            worst["ks1"] = min(worst["ks1"], ks1_margin(exact_moments(d, b)))
        for b in ks20_betas:
            mb = exact_moments(d, b)
            for a in ks20_alphas:
                worst["ks20"] = min(worst["ks20"], ks20_margin(mb, a))

    grid_ok = True
    for x in np.arange(-5.0, 5.0 + 1e-9, 0.1):
        x = float(x)
        m1 = exact_moments(bernoulli_distribution(x), 1.0)
        grid_ok &= abs(pearson_gap(m1) - 1.0) <= 1e-12
        grid_ok &= abs(fukasawa_gap(m1)) <= 1e-12
        for b in ks1_betas:
            margin = ks1_margin(exact_moments(bernoulli_distribution(x), b))
            worst["ks1"] = min(worst["ks1"], margin)
            if abs(x) < 1e-9:
                grid_ok &= abs(margin) <= 1e-12
            else:
                grid_ok &= margin > 1e-10  # equality only at x = 0
        mb = exact_moments(bernoulli_distribution(x), 0.5)
        for a in ks20_alphas:
            worst["ks20"] = min(worst["ks20"], ks20_margin(mb, a))

    elapsed = time.time() - t0
    ok = (worst["pearson"] >= -1e-10 and worst["fukasawa"] >= -1e-10
          and worst["ks1"] >= -1e-10 and worst["ks20"] >= -1e-10 and grid_ok)
    assert report(1, ok,
                  f"worst margins pearson-1={worst['pearson']:.2e} "
                  f"fukasawa={worst['fukasawa']:.2e} ks1={worst['ks1']:.2e} "
                  f"ks20={worst['ks20']:.2e} grid_equalities={grid_ok} [{elapsed:.1f}s]")
    assert elapsed < 5.0


# ------------------------------------------------------------------ 2


def test_criterion_2_closed_forms():
    t0 = time.time()
    ok = all(efficiency_factor(0.0, b) == 1.0 for b in (1.1, 1.5, 1.9))
    ok &= abs(efficiency_factor(20.0, 1.5) - 1.0 / 3.0) <= 1e-6
    for x in np.linspace(-5.0, 5.0, 50):
        for b in (1.1, 1.5, 1.9):
            ok &= abs(efficiency_factor(float(x), b)
                      - bernoulli_ratio(float(x), 2.0 / 3.0, b)) <= 1e-10
    ok &= all(g(0.0, b) == 1.0 for b in (0.0, 0.5, 1.1, 1.5, 1.9))
    ok &= abs(g(30.0, 1.5) ** (-2.0 / 0.5) - 4.0) <= 1e-6
    elapsed = time.time() - t0
    assert report(2, ok, f"F(0)=1 exact, F(20,1.5)-1/3={efficiency_factor(20.0, 1.5)-1/3:.2e}, "
                         f"F==ratio(2/3) on 50pt grid, g checks [{elapsed:.1f}s]")
    assert elapsed < 1.0


# ------------------------------------------------------------------ 3


def test_criterion_3_unbiased_efficiency():
    # dt = 2.5e-5 <= 1e-4 keeps the overshoot bias of the product near -2%
    t0 = time.time()
    model = ModelSpec(kind=BM, T=1.0, dt=2.5e-5)
    ep = run_experiment(model, SchemeSpec.hitting_unbiased(0.05), 0.0, 10_000, 2024,
                        workers=2)
    rel = ep.product * 6.0 - 1.0
    ok = abs(rel) <= 0.10 and ep.bound == pytest.approx(1 / 6)
    assert report(3, ok, f"E[N]E[<Z>]={ep.product:.5f} vs 1/6, rel={rel:+.3%} "
                         f"(band 10%) [{time.time()-t0:.0f}s]")


# ------------------------------------------------------------------ 4


def test_criterion_4_equidistant_inefficiency():
    t0 = time.time()
    model = ModelSpec(kind=BM, T=1.0, dt=5e-5)
    ep = run_experiment(model, SchemeSpec.equidistant(200), 0.0, 10_000, 2025,
                        workers=2)
    rel = ep.product / 0.5 - 1.0
    ok = abs(rel) <= 0.05
    assert report(4, ok, f"equidistant product={ep.product:.5f} vs 0.5, rel={rel:+.3%} "
                         f"(band 5%) [{time.time()-t0:.0f}s]")


# ------------------------------------------------------------------ 5


def _biased_vs_unbiased(model, eps, gamma, beta, n_paths, seed):
    biased = SchemeSpec.hitting_biased(eps, gamma, beta)
    unbiased = SchemeSpec.hitting_unbiased(eps, ShatMode.power_s(beta))
    prod_b, prod_u = run_paired(model, [biased, unbiased], beta, n_paths, seed,
                                workers=2)
    return prod_b, prod_u


def test_criterion_5_biased_superiority_as_specified():
    # See the module docstring: the horizon-truncation analysis says the
    # ratio converges to ~0.23, not F(3, 1.5) ~ 0.402, so this assertion
    # fails honestly at these parameters.
    t0 = time.time()
    model = ModelSpec(kind=BM, T=1.0, dt=1e-6)
    prod_b, prod_u = _biased_vs_unbiased(model, 0.05, 3.0, 1.5, 10_000, 2026)
    f_target = efficiency_factor(3.0, 1.5)
    ratio = prod_b.product / prod_u.product
    floor = 0.9 * theoretical_bound(model, 1.5, "biased")
    ok_ratio = abs(ratio / f_target - 1.0) <= 0.15
    ok_bounds = prod_b.product >= floor and prod_u.product >= floor
    ok = ok_ratio and ok_bounds
    report(5, ok,
           f"ratio={ratio:.4f} vs F(3,1.5)={f_target:.4f} (band 15%: {ok_ratio}); "
           f"products b={prod_b.product:.4f} u={prod_u.product:.4f} vs 0.9/18={floor:.4f} "
           f"({ok_bounds}) [{time.time()-t0:.0f}s]")
    assert ok, (
        f"biased/unbiased ratio {ratio:.4f} is outside 15% of F(3,1.5)={f_target:.4f} "
        f"and/or biased product {prod_b.product:.4f} < {floor:.4f}. At eps=0.05, "
        "gamma=3, T=1 the upper barrier is ~1.0 and E[tau|up] ~ T/3, so upper-barrier "
        "trades in flight at the horizon are never booked: E[C] sits ~13% below its "
        "asymptotic limit at every dt (measured dt-converged ratio ~0.23). "
        "See test_criterion_5_feasible_regime for the same physics where the "
        "asymptotics apply."
    )


def test_criterion_5_feasible_regime():
    # identical assertion structure at gamma = 1.25, where eps e^gamma ~ 0.17
    # keeps excursions short relative to T and the asymptotic ratio is reachable
    t0 = time.time()
    model = ModelSpec(kind=BM, T=1.0, dt=2.05e-6)
    prod_b, prod_u = _biased_vs_unbiased(model, 0.05, 1.25, 1.5, 2500, 505)
    f_target = efficiency_factor(1.25, 1.5)
    ratio = prod_b.product / prod_u.product
    floor = 0.9 * theoretical_bound(model, 1.5, "biased")
    ok = (abs(ratio / f_target - 1.0) <= 0.15
          and prod_b.product >= floor and prod_u.product >= floor
          and prod_b.product < prod_u.product)
    assert report("5-supplement", ok,
                  f"gamma=1.25: ratio={ratio:.4f} vs F={f_target:.4f} "
                  f"rel={(ratio/f_target-1):+.2%} (band 15%); biased product "
                  f"{prod_b.product:.4f} < unbiased {prod_u.product:.4f} "
                  f"[{time.time()-t0:.0f}s]")


# ------------------------------------------------------------------ 6


def test_criterion_6_exit_probability():
    # T = 10 suppresses horizon truncation; dt = (0.01 eps)^2 keeps the
    # overshoot bias of the fraction near +1.5% inside the 2% band
    t0 = time.time()
    model = ModelSpec(kind=BM, T=10.0, dt=2.5e-7)
    st = hitting_exit_stats(model, 0.05, 1.0, 100, 123, workers=2)
    want_frac = math.exp(-1.0) / (math.exp(1.0) + math.exp(-1.0))
    want_m3 = 2.0 * math.sinh(1.0)
    rel_f = st.up_fraction / want_frac - 1.0
    rel_m3 = st.m3 / 0.05**3 / want_m3 - 1.0
    ok = st.n_exits >= 100_000 and abs(rel_f) <= 0.02 and abs(rel_m3) <= 0.03
    assert report(6, ok,
                  f"{st.n_exits} exits; up fraction {st.up_fraction:.5f} vs "
                  f"e^-1/(e+e^-1)={want_frac:.5f}, rel={rel_f:+.3%} (band 2%); "
                  f"m3/eps^3={st.m3/0.05**3:.4f} vs 2sinh(1)={want_m3:.4f}, "
                  f"rel={rel_m3:+.3%} (band 3%) [{time.time()-t0:.0f}s]")


# ------------------------------------------------------------------ 7


def test_criterion_7_martingale_identity():
    t0 = time.time()
    model = ModelSpec(kind=BM, T=1.0, dt=4e-4)
    stats, _ = _run_pool(model, [SchemeSpec.hitting_unbiased(0.1)], [0.0],
                         10_000, 2027, workers=2)
    z_stat, qv_stat = stats[0][3], stats[0][2]
    mean_z2 = z_stat.variance * (z_stat.n - 1) / z_stat.n + z_stat.mean**2
    ratio = mean_z2 / qv_stat.mean
    ok = abs(ratio - 1.0) <= 0.05 and abs(z_stat.mean) <= 3.0 * z_stat.stderr
    assert report(7, ok,
                  f"E[Z^2]/E[<Z>]={ratio:.4f} (band 5%); E[Z]={z_stat.mean:+.2e} "
                  f"vs 3se={3*z_stat.stderr:.2e} [{time.time()-t0:.0f}s]")


# ------------------------------------------------------------------ 8


def test_criterion_8_utility_scaling():
    t0 = time.time()
    model = ModelSpec(kind=BM, T=1.0, dt=4.8e-5)
    params = UtilityParams(mu=12.0, beta=0.0, alpha=50.0)
    runs = {f: scaled_utility_experiment(model, params, 2000, 808, workers=2,
                                         eps_factor=f)
            for f in (0.5, 1.0, 2.0)}
    rep = runs[1.0]
    ok = abs(rep.surrogate / 2.0 - 1.0) <= 0.10
    ok &= rep.surrogate < runs[0.5].surrogate and rep.surrogate < runs[2.0].surrogate

    # closed forms vs golden-section minimization to 1e-10
    def oracle(mu, beta, denom):
        c = mu / (2.0 * denom)
        f = lambda x: x + c * x ** (-2.0 / (2.0 - beta))
        res = minimize_scalar(f, bracket=(1e-3, 1.0, 1e3), method="golden",
                              options={"xtol": 1e-12})
        return f(res.x)

    for mu in (0.5, 12.0, 40.0):
        for b in (0.0, 0.5, 1.0):
            ok &= abs(mu_hat(mu, b) - oracle(mu, b, 6.0)) <= 1e-10
        for b in (1.2, 1.5, 1.8):
            ok &= abs(mu_check(mu, b) - oracle(mu, b, 18.0)) <= 1e-10

    assert report(8, ok,
                  f"surrogate={rep.surrogate:.4f} vs mu_hat=2 "
                  f"(rel {rep.surrogate/2-1:+.3%}, band 10%); brackets "
                  f"{runs[0.5].surrogate:.3f} / {runs[2.0].surrogate:.3f} both above; "
                  f"mu_hat/mu_check match golden-section to 1e-10 [{time.time()-t0:.0f}s]")


# ------------------------------------------------------------------ 9


def test_criterion_9_reproducibility(tmp_path):
    from hedgesim.cli import main

    t0 = time.time()

    def body(path):
        return [l for l in path.read_text().splitlines() if not l.startswith("#")]

    ok = True
    sweep_args = ["sweep", "--model=bm", "--scheme=hitting", "--dt=0.002",
                  "--eps-list=0.4,0.2", "--beta=0", "--n-paths=200", "--seed=7"]
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert main(sweep_args + [f"--output={a}"]) == 0
    assert main(sweep_args + [f"--output={b}"]) == 0
    assert main(sweep_args + [f"--output={c}", "--workers=2"]) == 0
    ok &= body(a) == body(b)
    ok &= body(a) == body(c)  # worker count must not change the bytes

    sim_args = ["simulate", "--model=bm", "--scheme=biased", "--eps=0.2",
                "--gamma=1.0", "--beta=1.5", "--dt=0.002", "--n-paths=50", "--seed=3"]
    d, e = tmp_path / "d.csv", tmp_path / "e.csv"
    assert main(sim_args + [f"--output={d}"]) == 0
    assert main(sim_args + [f"--output={e}"]) == 0
    ok &= body(d) == body(e)

    util_args = ["utility", "--mu=12", "--alpha=50", "--beta=0", "--dt=1e-4",
                 "--n-paths=150", "--seed=5"]
    f1, f2 = tmp_path / "f1.csv", tmp_path / "f2.csv"
    assert main(util_args + [f"--output={f1}"]) == 0
    assert main(util_args + [f"--output={f2}", "--workers=2"]) == 0
    ok &= body(f1) == body(f2)

    assert report(9, ok, f"sweep/simulate/utility bodies byte-identical across "
                         f"reruns and worker counts [{time.time()-t0:.0f}s]")
