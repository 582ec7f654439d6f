import math

import numpy as np
import pytest

from hedgesim.models import BM, BS_DELTA, DRIFTED, ModelSpec
from hedgesim.montecarlo import (
    BIASED,
    UNBIASED,
    Estimate,
    RunningStat,
    _modular_paths,
    _stream_paths,
    hitting_exit_stats,
    inner_expectation,
    run_experiment,
    run_paired,
    scheme_limits,
    sweep,
    sweep_csv_row,
    theoretical_bound,
)
from hedgesim.schemes import SchemeSpec, ShatMode

BM_COARSE = ModelSpec(kind=BM, T=1.0, dt=1e-3)


# ---------------------------------------------------------------- accumulator


def test_running_stat_matches_numpy():
    rng = np.random.default_rng(0)
    xs = rng.lognormal(size=500)
    st = RunningStat()
    for x in xs:
        st.push(x)
    assert st.mean == pytest.approx(xs.mean(), rel=1e-12)
    assert st.variance == pytest.approx(xs.var(ddof=1), rel=1e-10)
    assert st.stderr == pytest.approx(xs.std(ddof=1) / math.sqrt(len(xs)), rel=1e-10)


def test_merge_any_association_order():
    rng = np.random.default_rng(1)
    xs = rng.normal(loc=0.2, scale=1.3, size=400)

    def build(order_seed):
        parts = np.array_split(xs, 13)
        stats = []
        for p in parts:
            s = RunningStat()
            for x in p:
                s.push(x)
            stats.append(s)
        order = np.random.default_rng(order_seed)
        while len(stats) > 1:
            i = order.integers(len(stats) - 1)
            stats[i].merge(stats.pop(i + 1))
        return stats[0]

    ref = build(0)
    for k in range(1, 6):
        other = build(k)
        assert abs(other.mean - ref.mean) <= 1e-12
        assert abs(other.stderr - ref.stderr) <= 1e-12
        assert other.n == ref.n


def test_estimate_validation():
    with pytest.raises(ValueError):
        Estimate(mean=0.0, stderr=-1.0, count=10)
    with pytest.raises(ValueError):
        Estimate(mean=0.0, stderr=0.0, count=1)


# ---------------------------------------------------------------- bounds


def test_bound_closed_forms():
    assert theoretical_bound(BM_COARSE, 0.0, UNBIASED) == pytest.approx(1 / 6)
    assert theoretical_bound(BM_COARSE, 0.0, BIASED) == pytest.approx(1 / 18)
    two = ModelSpec(kind=BM, T=2.0, dt=1e-2)
    assert theoretical_bound(two, 0.0, UNBIASED) == pytest.approx((1 / 6) * 4.0)
    drift = ModelSpec(kind=DRIFTED, drift=0.7, T=1.0, dt=1e-2)
    assert theoretical_bound(drift, 1.5, UNBIASED) == pytest.approx(1 / 6)
    with pytest.raises(ValueError):
        theoretical_bound(BM_COARSE, 0.0, "midway")


def test_inner_expectation_bs_matches_gbm_closed_form():
    # with unit S the integrand is K d<X> = d<Y>, and E[<Y>_T] for a GBM is
    # spot^2 vol^2 (e^{(2r+vol^2)T} - 1)/(2r+vol^2)
    spec = ModelSpec(kind=BS_DELTA, T=1.0, dt=1e-3, spot=1.0, strike=1.2,
                     vol=0.3, rate=0.05, maturity=2.0)
    a = 2 * spec.rate + spec.vol**2
    want = spec.spot**2 * spec.vol**2 * (math.exp(a * spec.T) - 1.0) / a
    got, se = inner_expectation(spec, 0.0, n_paths=4000, seed=5)
    assert se > 0.0
    assert abs(got - want) <= 3 * se


def test_scheme_limits_closed_forms():
    eps = 0.05
    c_lim, q_lim = scheme_limits(BM_COARSE, eps, ShatMode.const(1.0), 0.0)
    assert c_lim == pytest.approx(eps**-2)
    assert q_lim == pytest.approx(eps**2 / 6)
    c_lim, _ = scheme_limits(BM_COARSE, eps, ShatMode.const(1.0), 1.0)
    assert c_lim == pytest.approx(eps**-1)
    # exponent continuity towards beta = 2
    c_lim, _ = scheme_limits(BM_COARSE, eps, ShatMode.const(1.0), 2.0 - 1e-9)
    assert c_lim == pytest.approx(BM_COARSE.T, rel=1e-6)
    c_lim, q_lim = scheme_limits(BM_COARSE, eps, ShatMode.const(2.0), 0.0)
    assert c_lim == pytest.approx(0.25 * eps**-2)
    assert q_lim == pytest.approx(4.0 * eps**2 / 6)


# ---------------------------------------------------------------- engines agree


def test_stream_and_modular_engines_agree():
    model = ModelSpec(kind=BM, T=1.0, dt=1e-3)
    schemes = [SchemeSpec.hitting_unbiased(0.2),
               SchemeSpec.hitting_biased(0.2, 1.0, 1.5)]
    barriers = [(0.2, 0.2, 0.0),
                (0.2 * math.e, 0.2 / math.e, (2 / 3) * 0.2 * math.sinh(1.0))]
    s_stats, s_sums = _stream_paths(model, barriers, [1.5, 1.5], 77, 0, 50)
    with pytest.warns(UserWarning):
        m_stats, m_sums = _modular_paths(model, schemes, [1.5, 1.5], 77, 0, 50)
    assert np.allclose(s_sums, m_sums, rtol=1e-9)
    for j in range(2):
        for a, b in zip(s_stats[j], m_stats[j]):
            assert a.n == b.n
            assert a.mean == pytest.approx(b.mean, rel=1e-9, abs=1e-12)
            assert a.stderr == pytest.approx(b.stderr, rel=1e-6, abs=1e-12)


def test_worker_pool_is_deterministic():
    model = ModelSpec(kind=BM, T=1.0, dt=1e-3)
    scheme = SchemeSpec.hitting_unbiased(0.2)
    a = run_experiment(model, scheme, 0.0, 200, 3, workers=1)
    b = run_experiment(model, scheme, 0.0, 200, 3, workers=2)
    assert a.cost.mean == b.cost.mean
    assert a.qv.mean == b.qv.mean
    assert a.cost.stderr == pytest.approx(b.cost.stderr, rel=1e-12)


# ---------------------------------------------------------------- experiments


def test_run_experiment_smoke():
    ep = run_experiment(BM_COARSE, SchemeSpec.hitting_unbiased(0.2), 0.0, 400, 11)
    assert ep.bound == pytest.approx(1 / 6)
    assert 0.12 < ep.product < 0.21
    assert ep.ratio == pytest.approx(ep.product / ep.bound)
    assert ep.cost.count == 400
    assert ep.product_stderr > 0.0
    with pytest.raises(ValueError):
        run_experiment(BM_COARSE, SchemeSpec.hitting_unbiased(0.2), 0.0, 50, 1)


def test_biased_outside_convex_range_warns():
    with pytest.warns(UserWarning, match="outside"):
        run_experiment(BM_COARSE, SchemeSpec.hitting_biased(0.2, 1.0, 0.5), 0.5, 100, 2)


def test_wald_trade_count_at_spec_scale():
    # E[N] eps^2 = T within 10% (1e4 paths at eps = 0.05; dt keeps the
    # overshoot bias near -5%)
    model = ModelSpec(kind=BM, T=1.0, dt=6.25e-6)
    ep = run_experiment(model, SchemeSpec.hitting_unbiased(0.05), 0.0, 10_000, 12, workers=2)
    assert ep.cost.mean * 0.05**2 == pytest.approx(1.0, rel=0.10)


def test_run_paired_gamma_zero_equals_unbiased():
    model = ModelSpec(kind=BM, T=1.0, dt=2.5e-4)
    out = run_paired(model, [SchemeSpec.hitting_biased(0.1, 0.0, 1.5),
                             SchemeSpec.hitting_unbiased(0.1, ShatMode.power_s(1.5))],
                     1.5, 300, 21)
    assert out[0].cost.mean == out[1].cost.mean
    assert out[0].qv.mean == out[1].qv.mean
    assert out[0].bound == pytest.approx(1 / 18)
    assert out[1].bound == pytest.approx(1 / 6)


def test_sweep_single_point_equals_run_experiment():
    scheme = SchemeSpec.hitting_unbiased(0.25)
    pts = sweep(BM_COARSE, scheme, 0.0, [0.25], 200, 9)
    direct = run_experiment(BM_COARSE, scheme, 0.0, 200, (9, 0))
    assert pts[0].cost.mean == direct.cost.mean
    assert pts[0].qv.mean == direct.qv.mean


def test_sweep_fresh_seeds_and_labels():
    pts = sweep(BM_COARSE, SchemeSpec.hitting_unbiased(0.2), 0.0, [0.4, 0.2], 150, 13)
    assert [p.eps_or_n for p in pts] == [0.4, 0.2]
    assert pts[0].cost.mean != pts[1].cost.mean
    row = sweep_csv_row(pts[0])
    assert row.split(",")[0] == "hitting_unbiased"
    assert len(row.split(",")) == 12


def test_equidistant_sweep_product_stable():
    # analytic product (n-1)/n * T^2/2, n-independent up to the grid factor
    model = ModelSpec(kind=BM, T=1.0, dt=5e-5)
    pts = sweep(model, SchemeSpec.equidistant(50), 0.0, [50, 100, 200], 2000, 17, workers=2)
    for p in pts:
        assert p.product == pytest.approx(0.5, rel=0.05)
        assert p.scheme == "equidistant"


def test_exit_stats_smoke():
    model = ModelSpec(kind=BM, T=5.0, dt=4e-6)
    st = hitting_exit_stats(model, 0.1, 1.0, 40, 31, workers=2)
    assert st.n_exits > 15_000
    want = math.exp(-1) / (math.exp(1) + math.exp(-1))
    assert st.up_fraction == pytest.approx(want, rel=0.05)
    assert st.m3 / 0.1**3 == pytest.approx(2 * math.sinh(1.0), rel=0.08)
    assert st.m2 / 0.1**2 == pytest.approx(1.0, rel=0.06)
    assert abs(st.mean) < 5 * math.sqrt(st.m2 / st.n_exits)
    assert st.up_fraction_stderr > 0.0


def test_efficiency_attainment_across_betas():
    # the tuned hitting scheme reaches its bound for beta in {0, 0.5, 1}:
    # ratio to the unbiased bound lands in [0.9, 1.15] at eps = 0.05
    model = ModelSpec(kind=BM, T=1.0, dt=2.5e-5)
    for beta in (0.0, 0.5, 1.0):
        scheme = SchemeSpec.hitting_unbiased(0.05, ShatMode.power_s(beta))
        ep = run_experiment(model, scheme, beta, 2000, 57, workers=2)
        assert 0.9 <= ep.ratio <= 1.15, (beta, ep.ratio)


def test_sweep_ratio_band():
    # shrinking eps keeps the hitting-scheme product inside a tight band
    # around the bound (residual grid bias is O(dt/eps^2))
    model = ModelSpec(kind=BM, T=1.0, dt=2.5e-5)
    pts = sweep(model, SchemeSpec.hitting_unbiased(0.2), 0.0, [0.2, 0.1, 0.05],
                2000, 58, workers=2)
    for p in pts:
        assert abs(p.ratio - 1.0) <= 0.03
