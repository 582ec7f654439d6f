"""Discretization error and transaction cost of a (path, schedule) pair.

The error process is Z = (X - X^n) . Y.  Its quadratic variation is
integrated with the left-endpoint rule on the fine grid, matching the
predictable (left-continuous) role of the held position; the terminal error
uses the same grid for both the fine Ito sum and the rebalanced sum, so a
schedule that tracks X exactly gives zero by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import PathGrid
from .schemes import RebalanceSchedule


@dataclass(frozen=True)
class ErrorReport:
    """Per-path summary: error quadratic variation, terminal error, cost, trades."""

    qv_z: float
    z_terminal: float
    cost: float
    n_trades: int

    def __post_init__(self):
        if self.qv_z < 0.0 or self.cost < 0.0 or self.n_trades < 0:
            raise ValueError("qv_z, cost and n_trades must be nonnegative")


def position_path(path: PathGrid, sched: RebalanceSchedule) -> np.ndarray:
    """Held position at every grid index (piecewise constant from each stop)."""
    n = len(path)
    if sched.stop_idx[-1] >= n:
        raise ValueError("schedule does not fit this path")
    counts = np.diff(np.append(sched.stop_idx, n))
    return np.repeat(sched.positions, counts)


def error_qv(path: PathGrid, sched: RebalanceSchedule) -> float:
    """<Z>_T = integral of (X - X^n)^2 d<Y> by left-endpoint quadrature."""
    pos = position_path(path, sched)
    d = path.x[:-1] - pos[:-1]
    return float(np.dot(d * d * path.k[:-1], np.diff(path.qv_x)))


def terminal_error(path: PathGrid, sched: RebalanceSchedule) -> float:
    """Z_T: fine-grid Ito sum of X dY minus the rebalanced Riemann sum.

    Both sums telescope against the same grid increments of Y, leaving
    sum_i (x_i - pos_i)(y_{i+1} - y_i).
    """
    pos = position_path(path, sched)
    return float(np.dot(path.x[:-1] - pos[:-1], np.diff(path.y)))


def cost(path: PathGrid, sched: RebalanceSchedule, beta: float) -> float:
    """Transaction cost sum S K |d position|^beta over the nonzero trades.

    S and K are taken at the grid index where the trade executes.  With
    beta = 0 each nonzero trade contributes S K (trade count when S K = 1).
    """
    if not 0.0 <= beta < 2.0:
        raise ValueError("beta must be in [0, 2)")
    if len(sched) < 2:
        return 0.0
    jumps = np.abs(np.diff(sched.positions))
    idx = sched.stop_idx[1:]
    nonzero = jumps > 0.0
    if beta == 0.0:
        mag = nonzero.astype(np.float64)
    else:
        mag = np.where(nonzero, jumps, 1.0) ** beta * nonzero
    return float(np.dot(path.s[idx] * path.k[idx], mag))


def trade_count(sched: RebalanceSchedule) -> int:
    """Number of stops with a nonzero position change."""
    if len(sched) < 2:
        return 0
    return int(np.count_nonzero(np.diff(sched.positions)))


def evaluate(path: PathGrid, sched: RebalanceSchedule, beta: float) -> ErrorReport:
    """All per-path metrics in one report."""
    return ErrorReport(
        qv_z=error_qv(path, sched),
        z_terminal=terminal_error(path, sched),
        cost=cost(path, sched, beta),
        n_trades=trade_count(sched),
    )


REPORT_CSV_HEADER = "seed,qv_z,z_terminal,cost,n_trades"


def report_csv_row(seed_label, rep: ErrorReport) -> str:
    return f"{seed_label},{rep.qv_z!r},{rep.z_terminal!r},{rep.cost!r},{rep.n_trades}"
