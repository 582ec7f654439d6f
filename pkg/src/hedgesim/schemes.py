"""Rebalancing schedules: equidistant, symmetric-barrier, and asymmetric-barrier.

A schedule is the pair (stop indices, held positions): the position set at
stop j is held on [tau_j, tau_{j+1}), trades execute at the stop sample, and
the final partial interval runs to T with no forced terminal trade.

Hitting times are detected on the grid with overshoot: the stop is the first
grid index at or beyond the barrier.  There is no barrier snapping or bridge
interpolation, so the grid path stays the single source of truth for error
and cost.  The price is an O(sqrt(dt)/barrier) overshoot bias; callers should
keep dt well below (eps * min barrier factor)^2 / 25 and a warning is issued
otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .models import PathGrid

EQUIDISTANT = "equidistant"
HITTING_UNBIASED = "hitting_unbiased"
HITTING_BIASED = "hitting_biased"

SHAT_CONST = "const"
SHAT_POWER_S = "power_s"
SHAT_POWER_K = "power_k"


@dataclass(frozen=True)
class ShatMode:
    """Barrier-width process: a constant, S^{1/(4-beta)}, or K^{-1/4}."""

    kind: str = SHAT_CONST
    c: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in (SHAT_CONST, SHAT_POWER_S, SHAT_POWER_K):
            raise ValueError(f"unknown shat kind {self.kind!r}")
        if self.kind == SHAT_CONST and not self.c > 0.0:
            raise ValueError("const shat needs c > 0")
        if self.kind == SHAT_POWER_S and not 0.0 <= self.beta < 2.0:
            raise ValueError("power_s shat needs beta in [0, 2)")

    @classmethod
    def const(cls, c: float = 1.0) -> "ShatMode":
        return cls(kind=SHAT_CONST, c=c)

    @classmethod
    def power_s(cls, beta: float) -> "ShatMode":
        return cls(kind=SHAT_POWER_S, beta=beta)

    @classmethod
    def power_k(cls) -> "ShatMode":
        return cls(kind=SHAT_POWER_K)

    def values(self, path: PathGrid) -> np.ndarray:
        if self.kind == SHAT_CONST:
            return np.broadcast_to(np.float64(self.c), (len(path),))
        if self.kind == SHAT_POWER_S:
            return np.asarray(path.s) ** (1.0 / (4.0 - self.beta))
        return np.asarray(path.k) ** -0.25


@dataclass(frozen=True)
class SchemeSpec:
    """Configuration of one rebalancing scheme.

    ``equidistant`` uses ``n`` intervals; the hitting schemes use barrier
    scale ``eps`` with either a ShatMode (unbiased) or the asymmetric
    (gamma, beta) barriers e^{+gamma}, e^{-gamma} times S^{1/(4-beta)}.
    """

    kind: str
    n: int = 0
    eps: float = 0.0
    shat: ShatMode = ShatMode.const(1.0)
    gamma: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind == EQUIDISTANT:
            if self.n < 1:
                raise ValueError("equidistant scheme needs n >= 1")
        elif self.kind in (HITTING_UNBIASED, HITTING_BIASED):
            if not self.eps > 0.0:
                raise ValueError("hitting scheme needs eps > 0")
            if self.kind == HITTING_BIASED and not 0.0 <= self.beta < 2.0:
                raise ValueError("biased scheme needs beta in [0, 2)")
        else:
            raise ValueError(f"unknown scheme kind {self.kind!r}")

    @classmethod
    def equidistant(cls, n: int) -> "SchemeSpec":
        return cls(kind=EQUIDISTANT, n=n)

    @classmethod
    def hitting_unbiased(cls, eps: float, shat: ShatMode | None = None) -> "SchemeSpec":
        return cls(kind=HITTING_UNBIASED, eps=eps, shat=shat or ShatMode.const(1.0))

    @classmethod
    def hitting_biased(cls, eps: float, gamma: float, beta: float) -> "SchemeSpec":
        return cls(kind=HITTING_BIASED, eps=eps, gamma=gamma, beta=beta)


@dataclass
class RebalanceSchedule:
    """Stop indices into a PathGrid plus the position held from each stop on."""

    stop_idx: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        self.stop_idx = np.asarray(self.stop_idx, dtype=np.int64)
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if len(self.stop_idx) != len(self.positions):
            raise ValueError("stop_idx and positions must have equal length")
        if len(self.stop_idx) == 0 or self.stop_idx[0] != 0:
            raise ValueError("schedule must start with stop_idx[0] = 0")
        if np.any(np.diff(self.stop_idx) <= 0):
            raise ValueError("stop_idx must be strictly increasing")

    def __len__(self) -> int:
        return len(self.stop_idx)


@njit(cache=True)
def _scan_hitting(x, up, dn):
    """First-passage scan: stop at the first grid index at-or-beyond a barrier.

    ``up``/``dn`` hold the barrier widths that apply when a stop occurs at that
    index.  Returns the stop indices (always starting with 0).
    """
    n = x.shape[0]
    stops = np.empty(n, np.int64)
    stops[0] = 0
    m = 1
    ref = x[0]
    u = up[0]
    d = dn[0]
    for i in range(1, n):
        e = x[i] - ref
        if e >= u or e <= -d:
            stops[m] = i
            m += 1
            ref = x[i]
            u = up[i]
            d = dn[i]
    return stops[:m].copy()


def schedule_equidistant(path: PathGrid, n: int) -> RebalanceSchedule:
    """Stops at t = j T / n for j = 0..n-1, snapped to the nearest grid index.

    The position is X at the stop; there is no stop at T itself (the final
    interval [ (n-1)T/n, T ] is left to run out).
    """
    n_grid = len(path) - 1
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > n_grid:
        raise ValueError(f"n = {n} exceeds the grid resolution ({n_grid} steps)")
    idx = np.unique(np.rint(np.arange(n) * n_grid / n).astype(np.int64))
    return RebalanceSchedule(stop_idx=idx, positions=path.x[idx])


def _check_barrier_resolution(eps: float, min_factor: float, dt: float) -> None:
    if eps**2 * min_factor**2 < 25.0 * dt:
        warnings.warn(
            f"barrier width {eps * min_factor:.3g} is under 5 grid-step sigmas "
            f"(dt = {dt:.3g}); crossing overshoot will bias results",
            stacklevel=3,
        )


def schedule_hitting_unbiased(path: PathGrid, eps: float, shat: ShatMode) -> RebalanceSchedule:
    """Symmetric-barrier hitting scheme: stop when |X - X_stop| reaches eps * Shat.

    Positions equal X at the stops exactly.
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    shat_vals = shat.values(path)
    barrier = np.ascontiguousarray(eps * shat_vals)
    _check_barrier_resolution(eps, float(np.min(shat_vals)), path.dt)
    stops = _scan_hitting(np.ascontiguousarray(path.x), barrier, barrier)
    return RebalanceSchedule(stop_idx=stops, positions=path.x[stops])


def schedule_hitting_biased(path: PathGrid, eps: float, gamma: float, beta: float) -> RebalanceSchedule:
    """Asymmetric-barrier scheme with a skew-matched position offset.

    Stops when X - X_stop reaches +eps e^{gamma} S^{1/(4-beta)} or falls to
    -eps e^{-gamma} S^{1/(4-beta)}.  The held position is X at the stop plus
    (2/3) eps sinh(gamma) S^{1/(4-beta)}, which centers the next exit's
    conditional third moment.
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    if not 0.0 <= beta < 2.0:
        raise ValueError("beta must be in [0, 2)")
    scale = np.asarray(path.s) ** (1.0 / (4.0 - beta))
    up = eps * math.exp(gamma) * scale
    dn = eps * math.exp(-gamma) * scale
    _check_barrier_resolution(eps, math.exp(-abs(gamma)) * float(np.min(scale)), path.dt)
    stops = _scan_hitting(np.ascontiguousarray(path.x), np.ascontiguousarray(up), np.ascontiguousarray(dn))
    offset = (2.0 / 3.0) * eps * math.sinh(gamma) * scale[stops]
    return RebalanceSchedule(stop_idx=stops, positions=path.x[stops] + offset)


def build_schedule(spec: SchemeSpec, path: PathGrid) -> RebalanceSchedule:
    """Dispatch a SchemeSpec to the matching schedule constructor."""
    if spec.kind == EQUIDISTANT:
        return schedule_equidistant(path, spec.n)
    if spec.kind == HITTING_UNBIASED:
        return schedule_hitting_unbiased(path, spec.eps, spec.shat)
    return schedule_hitting_biased(path, spec.eps, spec.gamma, spec.beta)


SCHEDULE_CSV_HEADER = "stop_index,time,x,position"


def schedule_csv_rows(path: PathGrid, sched: RebalanceSchedule):
    """Yield CSV rows (header first) for a schedule dump."""
    yield SCHEDULE_CSV_HEADER
    for j, idx in enumerate(sched.stop_idx):
        yield f"{idx},{float(path.t[idx])!r},{float(path.x[idx])!r},{float(sched.positions[j])!r}"
