"""Multi-path experiments: efficiency products, theoretical bounds, sweeps.

The efficiency product is |E[C]|^{2/(2-beta)} * E[<Z>], estimated with the
two means taken separately across paths (never the mean of per-path
products).  Paths are processed in blocks by a pool of worker processes;
each worker owns its counter-based generator streams and a local
accumulator, and block results merge associatively in block order, so the
output is bit-identical for any worker count.

For Brownian-family models with unit cost weight every hitting scheme has
constant barriers, and experiments run through a fused streaming kernel
(increments are generated in chunks and never stored as a full PathGrid).
The kernel consumes the same Philox stream as :func:`hedgesim.models.simulate`,
so it reproduces the modular path exactly; tests cross-validate the two
engines.  Other configurations fall back to the modular per-path pipeline.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from multiprocessing import get_context

import numpy as np
from numba import njit

from . import metrics as metrics_mod
from .models import BM, DRIFTED, S_UNIT, ModelSpec, rng_stream, simulate, subseed
from .schemes import (
    EQUIDISTANT,
    HITTING_BIASED,
    HITTING_UNBIASED,
    SHAT_CONST,
    SHAT_POWER_K,
    SHAT_POWER_S,
    SchemeSpec,
    build_schedule,
)

UNBIASED = "unbiased"
BIASED = "biased"

_CHUNK = 1 << 21  # increments per RNG call in the streaming engine


class RunningStat:
    """Streaming mean/variance accumulator with an associative merge."""

    __slots__ = ("n", "mean", "_m2")

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self._m2 = 0.0

    def push(self, x: float) -> None:
        x = float(x)  # keep plain-float state; numpy scalars would leak into reprs
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self._m2 += delta * (x - self.mean)

    def merge(self, other: "RunningStat") -> "RunningStat":
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mean, self._m2 = other.n, other.mean, other._m2
            return self
        tot = self.n + other.n
        delta = other.mean - self.mean
        self._m2 += other._m2 + delta * delta * (self.n * other.n / tot)
        self.mean += delta * other.n / tot
        self.n = tot
        return self

    @property
    def variance(self) -> float:
        return self._m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n > 1 else 0.0

    def estimate(self) -> "Estimate":
        return Estimate(mean=self.mean, stderr=self.stderr, count=self.n)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    stderr: float
    count: int

    def __post_init__(self):
        if self.stderr < 0.0:
            raise ValueError("stderr must be nonnegative")
        if self.count < 2:
            raise ValueError("count must be at least 2")


@dataclass(frozen=True)
class EfficiencyProduct:
    """Estimated |E[C]|^{2/(2-beta)} E[<Z>] next to its theoretical bound."""

    cost: Estimate
    qv: Estimate
    product: float
    bound: float
    ratio: float
    beta: float
    scheme: str = ""
    eps_or_n: float = 0.0
    gamma: float = 0.0
    n_paths: int = 0
    product_stderr: float = 0.0


SWEEP_CSV_HEADER = ("scheme,beta,eps_or_n,gamma,n_paths,cost_mean,cost_stderr,"
                    "qv_mean,qv_stderr,product,bound,ratio")


def sweep_csv_row(ep: EfficiencyProduct) -> str:
    return ",".join([
        ep.scheme, repr(ep.beta), repr(ep.eps_or_n), repr(ep.gamma), str(ep.n_paths),
        repr(ep.cost.mean), repr(ep.cost.stderr), repr(ep.qv.mean), repr(ep.qv.stderr),
        repr(ep.product), repr(ep.bound), repr(ep.ratio),
    ])


# --------------------------------------------------------------------------
# streaming kernel (Brownian-family models, constant barriers)
# --------------------------------------------------------------------------


@njit(cache=True)
def _bm_hitting_chunk(dw, sqrt_dt, drift_dt, dt, up, dn, offset, beta, state, acc):
    """Advance one path through one chunk of standard-normal increments.

    state = [x, ref];  acc = [n_trades, cost, qv_z, z_term, s1, s2, s3, s6, n_up]
    where s_k are raw sums of per-exit increment powers.  The held position on
    [tau_j, tau_{j+1}) is ref + offset; S = K = 1.
    """
    x = state[0]
    ref = state[1]
    n_tr = 0.0
    cost = 0.0
    qv = 0.0
    zt = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    s6 = 0.0
    n_up = 0.0
    for i in range(dw.shape[0]):
        d = x - ref - offset
        qv += d * d * dt
        step = drift_dt + sqrt_dt * dw[i]
        zt += d * step
        x += step
        e = x - ref
        if e >= up or e <= -dn:
            e2 = e * e
            e3 = e2 * e
            s1 += e
            s2 += e2
            s3 += e3
            s6 += e3 * e3
            if e >= up:
                n_up += 1.0
            n_tr += 1.0
            if beta == 0.0:
                cost += 1.0
            else:
                cost += abs(e) ** beta
            ref = x
    state[0] = x
    state[1] = ref
    acc[0] += n_tr
    acc[1] += cost
    acc[2] += qv
    acc[3] += zt
    acc[4] += s1
    acc[5] += s2
    acc[6] += s3
    acc[7] += s6
    acc[8] += n_up


def _fast_barriers(model: ModelSpec, scheme: SchemeSpec):
    """(up, dn, offset) scalars if the config is streaming-eligible, else None."""
    if model.kind not in (BM, DRIFTED) or model.s_mode != S_UNIT:
        return None
    if scheme.kind == HITTING_UNBIASED:
        shat = scheme.shat
        if shat.kind == SHAT_CONST:
            width = scheme.eps * shat.c
        elif shat.kind in (SHAT_POWER_S, SHAT_POWER_K):
            width = scheme.eps  # S = K = 1 on these models
        else:
            return None
        return width, width, 0.0
    if scheme.kind == HITTING_BIASED:
        up = scheme.eps * math.exp(scheme.gamma)
        dn = scheme.eps * math.exp(-scheme.gamma)
        return up, dn, (2.0 / 3.0) * scheme.eps * math.sinh(scheme.gamma)
    return None


def _push_path(stats_j, exit_sums_j, trades, cost_val, qv, z, util):
    stats_j[0].push(trades)
    stats_j[1].push(cost_val)
    stats_j[2].push(qv)
    stats_j[3].push(z)
    if util is not None:
        arg = util[0] * z + util[1] * cost_val
        if arg < 700.0:
            stats_j[4].push(math.exp(arg))
        else:
            exit_sums_j[6] += 1.0  # exp overflow, path dropped from the mean


def _stream_paths(model, barrier_sets, betas, seed, lo, hi, util=None):
    """Run paths lo..hi-1 through the streaming kernel for each barrier set.

    Returns per-scheme lists of RunningStats (trades, cost, qv, z, exp-util)
    plus raw exit sums, all associatively mergeable.  ``util`` = (a_z, a_c)
    requests the exponential-utility accumulator exp(a_z Z + a_c C).
    """
    n_schemes = len(barrier_sets)
    stats = [[RunningStat() for _ in range(5)] for _ in range(n_schemes)]
    exit_sums = np.zeros((n_schemes, 7))  # s1 s2 s3 s6 n_up n_exits n_overflow
    n_steps = model.n_steps
    sqrt_dt = math.sqrt(model.dt)
    drift_dt = (model.drift if model.kind == DRIFTED else 0.0) * model.dt
    buf = np.empty(min(n_steps, _CHUNK))
    state = np.zeros((n_schemes, 2))
    acc = np.zeros((n_schemes, 9))
    for ipath in range(lo, hi):
        rng = rng_stream(seed, ipath)
        state[:] = 0.0
        acc[:] = 0.0
        done = 0
        while done < n_steps:
            m = min(_CHUNK, n_steps - done)
            rng.standard_normal(out=buf[:m])
            for j, (up, dn, offset) in enumerate(barrier_sets):
                _bm_hitting_chunk(buf[:m], sqrt_dt, drift_dt, model.dt,
                                  up, dn, offset, betas[j], state[j], acc[j])
            done += m
        for j in range(n_schemes):
            exit_sums[j, 0:4] += acc[j, 4:8]
            exit_sums[j, 4] += acc[j, 8]
            exit_sums[j, 5] += acc[j, 0]
            _push_path(stats[j], exit_sums[j], acc[j, 0], acc[j, 1],
                       acc[j, 2], acc[j, 3], util)
    return stats, exit_sums


def _modular_paths(model, schemes, betas, seed, lo, hi, util=None):
    """Per-path pipeline through simulate / build_schedule / metrics."""
    n_schemes = len(schemes)
    stats = [[RunningStat() for _ in range(5)] for _ in range(n_schemes)]
    exit_sums = np.zeros((n_schemes, 7))
    for ipath in range(lo, hi):
        path = simulate(model, subseed(seed, ipath))
        for j, scheme in enumerate(schemes):
            sched = build_schedule(scheme, path)
            rep = metrics_mod.evaluate(path, sched, betas[j])
            d = np.diff(path.x[sched.stop_idx])
            exit_sums[j, :6] += [d.sum(), (d**2).sum(), (d**3).sum(), (d**6).sum(),
                                 float(np.count_nonzero(d >= 0.0)) if len(d) else 0.0,
                                 float(len(d))]
            _push_path(stats[j], exit_sums[j], float(rep.n_trades), rep.cost,
                       rep.qv_z, rep.z_terminal, util)
    return stats, exit_sums


def _run_block(args):
    engine, model, payload, betas, seed, lo, hi, util = args
    if engine == "stream":
        return _stream_paths(model, payload, betas, seed, lo, hi, util)
    return _modular_paths(model, payload, betas, seed, lo, hi, util)


def _default_workers(total_steps: float) -> int:
    if total_steps < 2e8:
        return 1
    return max(1, os.cpu_count() or 1)


def _run_pool(model, schemes, betas, n_paths, seed, workers, util=None):
    """Dispatch path blocks to workers and merge results in block order."""
    barrier_sets = [_fast_barriers(model, s) for s in schemes]
    if all(b is not None for b in barrier_sets):
        engine, payload = "stream", barrier_sets
    else:
        engine, payload = "modular", schemes
    if workers is None:
        workers = _default_workers(float(n_paths) * model.n_steps)
    workers = max(1, min(workers, n_paths))
    # block structure is a function of n_paths only, so results are
    # bit-identical for any worker count (partials merge in block order)
    n_blocks = min(n_paths, 8)
    bounds = np.linspace(0, n_paths, n_blocks + 1).astype(int)
    tasks = [(engine, model, payload, betas, seed, int(lo), int(hi), util)
             for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if workers == 1:
        parts = [_run_block(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("fork")) as ex:
            parts = list(ex.map(_run_block, tasks))
    stats, exit_sums = parts[0]
    for more_stats, more_sums in parts[1:]:
        for j in range(len(schemes)):
            for a, b in zip(stats[j], more_stats[j]):
                a.merge(b)
        exit_sums += more_sums
    return stats, exit_sums


# --------------------------------------------------------------------------
# bounds and limits
# --------------------------------------------------------------------------


def inner_expectation(model: ModelSpec, beta: float, n_paths: int = 10_000,
                      seed=202, workers=None) -> tuple[float, float]:
    """E[(S^{2/(4-beta)} K) . <X>_T] with its standard error.

    Closed form (T, 0) for Brownian-family models with unit S; otherwise an
    auxiliary fine-path Monte Carlo average.
    """
    if model.kind in (BM, DRIFTED) and model.s_mode == S_UNIT:
        return model.T, 0.0
    expo = 2.0 / (4.0 - beta)

    def integrand(path):
        return float(np.dot(path.s[:-1] ** expo * path.k[:-1], np.diff(path.qv_x)))

    stat = _aux_mc(model, integrand, n_paths, seed)
    return stat.mean, stat.stderr


def _aux_mc(model, integrand, n_paths, seed) -> RunningStat:
    stat = RunningStat()
    for i in range(n_paths):
        stat.push(integrand(simulate(model, subseed(seed, i))))
    return stat


def theoretical_bound(model: ModelSpec, beta: float, kind: str = UNBIASED,
                      n_paths: int = 10_000, seed=202) -> float:
    """Sharp asymptotic lower bound for the efficiency product.

    (1/6) |E[(S^{2/(4-beta)} K) . <X>_T]|^{(4-beta)/(2-beta)} for unbiased
    schemes; one third of that (constant 1/18) for the general class with
    beta in (1, 2).
    """
    if kind not in (UNBIASED, BIASED):
        raise ValueError(f"kind must be {UNBIASED!r} or {BIASED!r}")
    inner, _ = inner_expectation(model, beta, n_paths=n_paths, seed=seed)
    const = 1.0 / 6.0 if kind == UNBIASED else 1.0 / 18.0
    return const * abs(inner) ** ((4.0 - beta) / (2.0 - beta))


def scheme_limits(model: ModelSpec, eps: float, shat, beta: float,
                  n_paths: int = 10_000, seed=202) -> tuple[float, float]:
    """Limiting (cost, qv) levels of the symmetric hitting scheme at width eps.

    Returns (E[(S Shat^{beta-2}) . <Y>_T] eps^{beta-2},
             (1/6) E[Shat^2 . <Y>_T] eps^2).
    """
    if model.kind in (BM, DRIFTED) and model.s_mode == S_UNIT and shat.kind == SHAT_CONST:
        c = shat.c
        return c ** (beta - 2.0) * model.T * eps ** (beta - 2.0), c**2 * model.T * eps**2 / 6.0

    def both(path):
        sh = shat.values(path)
        dqv_y = path.k[:-1] * np.diff(path.qv_x)
        return (float(np.dot(path.s[:-1] * sh[:-1] ** (beta - 2.0), dqv_y)),
                float(np.dot(sh[:-1] ** 2, dqv_y)))

    c_stat, q_stat = RunningStat(), RunningStat()
    for i in range(n_paths):
        c_val, q_val = both(simulate(model, subseed(seed, i)))
        c_stat.push(c_val)
        q_stat.push(q_val)
    return c_stat.mean * eps ** (beta - 2.0), q_stat.mean * eps**2 / 6.0


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------


def _product_from_stats(cost_stat, qv_stat, beta, bound, scheme, eps_or_n, gamma, n_paths):
    cost_est = cost_stat.estimate()
    qv_est = qv_stat.estimate()
    p = 2.0 / (2.0 - beta)
    product = abs(cost_est.mean) ** p * qv_est.mean
    # first-order delta method; reported, not used for gating
    dc = p * abs(cost_est.mean) ** (p - 1.0) * qv_est.mean * cost_est.stderr
    dq = abs(cost_est.mean) ** p * qv_est.stderr
    return EfficiencyProduct(
        cost=cost_est, qv=qv_est, product=product, bound=bound,
        ratio=product / bound if bound else math.inf, beta=beta,
        scheme=scheme, eps_or_n=eps_or_n, gamma=gamma, n_paths=n_paths,
        product_stderr=math.hypot(dc, dq),
    )


def _scheme_label(scheme: SchemeSpec) -> tuple[str, float, float]:
    if scheme.kind == EQUIDISTANT:
        return scheme.kind, float(scheme.n), 0.0
    return scheme.kind, scheme.eps, scheme.gamma if scheme.kind == HITTING_BIASED else 0.0


def _check_combination(scheme: SchemeSpec, beta: float) -> None:
    if scheme.kind == HITTING_BIASED and not 1.0 < beta < 2.0:
        warnings.warn(f"biased scheme with cost beta = {beta} outside (1, 2); "
                      "the biased bound does not apply", stacklevel=3)


def run_experiment(model: ModelSpec, scheme: SchemeSpec, beta: float,
                   n_paths: int, seed, workers=None) -> EfficiencyProduct:
    """Estimate the efficiency product of one scheme over n_paths paths."""
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    _check_combination(scheme, beta)
    kind = BIASED if scheme.kind == HITTING_BIASED else UNBIASED
    bound = theoretical_bound(model, beta, kind)
    stats, _ = _run_pool(model, [scheme], [beta], n_paths, seed, workers)
    label, eps_or_n, gamma = _scheme_label(scheme)
    return _product_from_stats(stats[0][1], stats[0][2], beta, bound,
                               label, eps_or_n, gamma, n_paths)


def run_paired(model: ModelSpec, schemes: list[SchemeSpec], beta: float,
               n_paths: int, seed, workers=None) -> list[EfficiencyProduct]:
    """Estimate several schemes on the same simulated paths (common random numbers)."""
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    for s in schemes:
        _check_combination(s, beta)
    stats, _ = _run_pool(model, schemes, [beta] * len(schemes), n_paths, seed, workers)
    out = []
    for j, scheme in enumerate(schemes):
        kind = BIASED if scheme.kind == HITTING_BIASED else UNBIASED
        bound = theoretical_bound(model, beta, kind)
        label, eps_or_n, gamma = _scheme_label(scheme)
        out.append(_product_from_stats(stats[j][1], stats[j][2], beta, bound,
                                       label, eps_or_n, gamma, n_paths))
    return out


def sweep(model: ModelSpec, scheme: SchemeSpec, beta: float, values,
          n_paths: int, seed, workers=None) -> list[EfficiencyProduct]:
    """One experiment per sweep value (eps for hitting schemes, n for equidistant).

    Each point uses a fresh independent seed block (seed, point_index, .).
    """
    values = list(values)
    if len(values) < 1:
        raise ValueError("sweep needs at least one value")
    out = []
    for j, v in enumerate(values):
        if scheme.kind == EQUIDISTANT:
            spec_j = replace(scheme, n=int(v))
        else:
            spec_j = replace(scheme, eps=float(v))
        out.append(run_experiment(model, spec_j, beta, n_paths, subseed(seed, j), workers))
    return out


@dataclass(frozen=True)
class ExitStats:
    """Aggregated per-exit statistics of a hitting scheme."""

    n_exits: int
    n_up: int
    up_fraction: float
    up_fraction_stderr: float
    mean: float
    m2: float
    m3: float
    m3_stderr: float


def hitting_exit_stats(model: ModelSpec, eps: float, gamma: float,
                       n_paths: int, seed, scheme_beta: float = 0.0,
                       workers=None) -> ExitStats:
    """Per-exit increment statistics of the asymmetric hitting scheme.

    Counts every completed exit across paths; the up fraction is the share
    of exits at the upper barrier eps e^{gamma}.
    """
    scheme = SchemeSpec.hitting_biased(eps, gamma, scheme_beta)
    stats, sums = _run_pool(model, [scheme], [scheme_beta], n_paths, seed, workers)
    s1, s2, s3, s6, n_up, n_ex = sums[0][:6]
    if n_ex < 2:
        raise ValueError("too few exits to form statistics")
    frac = n_up / n_ex
    m3 = s3 / n_ex
    m3_var = max(s6 / n_ex - m3**2, 0.0)
    return ExitStats(
        n_exits=int(n_ex), n_up=int(n_up), up_fraction=frac,
        up_fraction_stderr=math.sqrt(frac * (1.0 - frac) / n_ex),
        mean=s1 / n_ex, m2=s2 / n_ex, m3=m3,
        m3_stderr=math.sqrt(m3_var / n_ex),
    )
