"""Seeded fine-grid simulation of the driving processes (X, Y, <X>, K, S, H).

Three market models are supported:

* ``brownian_martingale`` -- X = Y = standard Brownian motion, K = 1.
* ``drifted_brownian``    -- X = Y = h t + W, K = 1.
* ``black_scholes_delta`` -- Y geometric Brownian motion, X the call delta
  evaluated along Y, K = d<Y>/d<X> = 1/gamma^2 from the closed-form greeks.

Randomness comes from counter-based Philox streams keyed through
``numpy.random.SeedSequence`` spawn keys, so distinct (seed, subkey) pairs
give independent streams with no draw-order coupling, and every path is
bit-reproducible from its key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

BM = "brownian_martingale"
DRIFTED = "drifted_brownian"
BS_DELTA = "black_scholes_delta"
_KINDS = (BM, DRIFTED, BS_DELTA)

S_UNIT = "unit"
S_LINEAR = "linear_cost"


def subseed(seed, *idx: int) -> tuple:
    """Flatten a stream id: (s, a) + idx -> (s, a, *idx)."""
    if isinstance(seed, (tuple, list)):
        return tuple(int(v) for v in seed) + idx
    return (int(seed),) + idx


def rng_stream(seed, *subkey: int) -> np.random.Generator:
    """Independent Philox generator for (seed, subkey...).

    ``seed`` may be an int or a tuple; a tuple (s, a, b) is shorthand for
    seed s with spawn key (a, b, subkey...).
    """
    key = subseed(seed, *subkey)
    ss = np.random.SeedSequence(entropy=key[0], spawn_key=key[1:])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ModelSpec:
    """Configuration of one simulated market model.

    ``drift`` is the h of the drifted model; the spot/strike/vol/rate/maturity
    block configures the Black-Scholes delta model.  ``s_mode`` selects the
    cost weight process: S = 1 or S = Y/K (the latter requires positive Y and
    is only accepted for the Black-Scholes model).  ``k_cap`` bounds K where
    gamma degenerates near expiry.
    """

    kind: str = BM
    T: float = 1.0
    dt: float = 1e-3
    drift: float = 0.0
    spot: float = 100.0
    strike: float = 100.0
    vol: float = 0.2
    rate: float = 0.0
    maturity: float = 2.0
    s_mode: str = S_UNIT
    k_cap: float = 1e8

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.T > 0.0:
            raise ValueError("T must be positive")
        if not 0.0 < self.dt <= self.T / 100.0:
            raise ValueError(f"dt must be in (0, T/100]; got dt={self.dt} for T={self.T}")
        if self.s_mode not in (S_UNIT, S_LINEAR):
            raise ValueError(f"unknown s_mode {self.s_mode!r}")
        if self.s_mode == S_LINEAR and self.kind != BS_DELTA:
            # S = Y/K needs Y > 0, which Brownian Y cannot guarantee
            raise ValueError("linear_cost S requires the black_scholes_delta model")
        if self.kind == BS_DELTA:
            for name in ("spot", "strike", "vol", "k_cap"):
                if not getattr(self, name) > 0.0:
                    raise ValueError(f"{name} must be positive")
            if self.maturity < self.T:
                raise ValueError("maturity must be >= T")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class PathGrid:
    """One realization of (X, Y, <X>, K, S, H) on a uniform grid over [0, T].

    ``qv_x`` is the running quadratic variation of X and satisfies
    d<Y> = k d<X> exactly by construction.  ``k_clamped`` flags paths where
    K hit the configured cap.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    qv_x: np.ndarray
    k: np.ndarray
    s: np.ndarray
    h: np.ndarray
    k_clamped: bool = False

    def __post_init__(self):
        n = len(self.t)
        if n < 2:
            raise ValueError("grid needs at least 2 points")
        for name in ("x", "y", "qv_x", "k", "s", "h"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"array {name} has mismatched length")
        if np.any(np.diff(self.qv_x) < 0.0):
            raise ValueError("qv_x must be non-decreasing")
        if not (np.all(self.k > 0.0) and np.all(self.s > 0.0)):
            raise ValueError("k and s must be positive")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def _const(value: float, n: int) -> np.ndarray:
    return np.broadcast_to(np.float64(value), (n,))


def simulate(spec: ModelSpec, seed) -> PathGrid:
    """Simulate one path of the model; deterministic given (spec, seed)."""
    n = spec.n_steps
    rng = rng_stream(seed)
    dw = rng.standard_normal(n) * math.sqrt(spec.dt)
    t = np.arange(n + 1) * spec.dt
    w = np.empty(n + 1)
    w[0] = 0.0
    np.cumsum(dw, out=w[1:])

    if spec.kind == BM:
        return PathGrid(t=t, x=w, y=w, qv_x=t, k=_const(1.0, n + 1),
                        s=_const(1.0, n + 1), h=_const(0.0, n + 1))
    if spec.kind == DRIFTED:
        x = spec.drift * t + w
        return PathGrid(t=t, x=x, y=x, qv_x=t, k=_const(1.0, n + 1),
                        s=_const(1.0, n + 1), h=_const(spec.drift, n + 1))
    return _simulate_bs(spec, t, w)


def bs_d1(y, strike: float, vol: float, rate: float, ttm):
    return (np.log(y / strike) + (rate + 0.5 * vol**2) * ttm) / (vol * np.sqrt(ttm))


def bs_delta(y, strike: float, vol: float, rate: float, ttm):
    """Call delta N(d1)."""
    return norm.cdf(bs_d1(y, strike, vol, rate, ttm))


def bs_gamma(y, strike: float, vol: float, rate: float, ttm):
    """Call gamma, the y-derivative of the delta."""
    return norm.pdf(bs_d1(y, strike, vol, rate, ttm)) / (y * vol * np.sqrt(ttm))


def _simulate_bs(spec: ModelSpec, t: np.ndarray, w: np.ndarray) -> PathGrid:
    vol, rate, strike = spec.vol, spec.rate, spec.strike
    y = spec.spot * np.exp((rate - 0.5 * vol**2) * t + vol * w)
    ttm = np.maximum(spec.maturity - t, 1e-12)
    d1 = bs_d1(y, strike, vol, rate, ttm)
    x = norm.cdf(d1)
    sig = vol * np.sqrt(ttm)
    gamma = norm.pdf(d1) / (y * sig)

    gamma_sq = gamma**2
    k = 1.0 / np.maximum(gamma_sq, 1.0 / spec.k_cap)
    clamped = bool(np.any(gamma_sq <= 1.0 / spec.k_cap))

    # d<Y> = (vol y)^2 dt and d<X> = d<Y>/k, so <Y> = K.<X> holds exactly even
    # where k is clamped.
    dqv = (vol * y[:-1]) ** 2 * spec.dt / k[:-1]
    qv_x = np.empty_like(t)
    qv_x[0] = 0.0
    np.cumsum(dqv, out=qv_x[1:])

    # Ito drift of X = delta(t, Y_t): time decay + r y gamma + 0.5 vol^2 y^2 speed
    ddelta_dt = norm.pdf(d1) * (np.log(y / strike) / (2.0 * vol * ttm**1.5)
                                - (rate + 0.5 * vol**2) / (2.0 * vol * np.sqrt(ttm)))
    speed = -(gamma / y) * (1.0 + d1 / sig)
    drift_x = ddelta_dt + rate * y * gamma + 0.5 * vol**2 * y**2 * speed
    diffusion_sq = np.maximum((gamma * vol * y) ** 2, 1e-300)
    h = drift_x / diffusion_sq

    if spec.s_mode == S_LINEAR:
        s = y / k
    else:
        s = _const(1.0, len(t))
    return PathGrid(t=t, x=x, y=y, qv_x=qv_x, k=k, s=s, h=h, k_clamped=clamped)


def refine(path: PathGrid, spec: ModelSpec, seed) -> PathGrid:
    """Halve the grid step by conditional (Brownian-bridge) midpoint insertion.

    Only defined for the Brownian-family models, where the bridge law is
    exact: the refined path agrees with ``path`` at the shared grid points
    and has the correct conditional law in between, so paired coarse/fine
    comparisons see the same underlying realization.
    """
    if spec.kind not in (BM, DRIFTED):
        raise ValueError("refine supports only the Brownian-family models")
    x = path.x
    n = len(x)
    dt = path.dt
    rng = rng_stream(seed)
    mid = 0.5 * (x[:-1] + x[1:]) + 0.5 * math.sqrt(dt) * rng.standard_normal(n - 1)
    x2 = np.empty(2 * n - 1)
    x2[0::2] = x
    x2[1::2] = mid
    t2 = np.arange(2 * n - 1) * (dt / 2.0)
    m = len(t2)
    hval = spec.drift if spec.kind == DRIFTED else 0.0
    return PathGrid(t=t2, x=x2, y=x2, qv_x=t2, k=_const(1.0, m),
                    s=_const(1.0, m), h=_const(hval, m))


PATH_CSV_HEADER = "t,x,y,qv_x,k,s,h"


def path_csv_rows(path: PathGrid):
    """Yield CSV rows (header first) for a path dump."""
    yield PATH_CSV_HEADER
    for i in range(len(path)):
        yield ",".join(
            repr(float(a[i])) for a in (path.t, path.x, path.y, path.qv_x, path.k, path.s, path.h)
        )
