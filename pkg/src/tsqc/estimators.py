"""Rolling second-difference covariation estimators.

Everything here operates on :class:`BlockSeries`, a cumulative process (an
integrated-variance estimate, a trade count, a log-price) sampled at the
boundaries of a :class:`~tsqc.timegrid.BlockGrid`.

The core statistic is the rolling quadratic covariation

    QV_K(A, B) = (1/K) sum_{i=K}^{B-K} d2_K A(i) * d2_K B(i),
    d2_K A(i) = A(t_{i+K}) - 2 A(t_i) + A(t_{i-K}),

which, scaled by ``1.5 / (K delta)^2``, estimates the covariation of the
underlying spot processes. The two-scale version (TSQC) differences QV at
half-windows ``K1`` and ``K2 = gamma K1`` to remove the error-martingale term
carried by noisy integrated estimates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .simulate import TickSeries
from .timegrid import BlockGrid, check_window

logger = logging.getLogger(__name__)

__all__ = [
    "BlockSeries",
    "TsqcConfig",
    "EstimateReport",
    "UndefinedEstimateError",
    "second_diff",
    "rolling_qv",
    "qv_scaled",
    "tsqc",
    "preaverage",
    "default_preavg_window",
    "tsrv",
    "integrated_vol_series",
    "cumulative_count",
    "rho_tsqc",
    "beta_tsqc",
    "leverage_qv",
    "estimate_report",
    "estimate_ticks",
]


class UndefinedEstimateError(ValueError):
    """A ratio estimate whose denominator TSQC is not positive.

    Two-scale diagonals can be negative in finite samples; the offending
    values are kept on the exception.
    """

    def __init__(self, message, diag_a=None, diag_b=None):
        super().__init__(message)
        self.diag_a = diag_a
        self.diag_b = diag_b


@dataclass(frozen=True, eq=False)
class BlockSeries:
    """Cumulative values at the ``B + 1`` boundaries of ``grid``."""

    grid: BlockGrid
    values: np.ndarray
    sparse_blocks: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.B + 1,):
            raise ValueError(
                f"expected {self.grid.B + 1} boundary values, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def increment(self, i: int, j: int) -> float:
        """Increment over ``(t_i, t_j]``."""
        return float(self.values[j] - self.values[i])

    def __mul__(self, c):
        return BlockSeries(self.grid, self.values * c, self.sparse_blocks)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, BlockSeries):
            _check_grids(self, other)
            return BlockSeries(self.grid, self.values + other.values)
        return BlockSeries(self.grid, self.values + other, self.sparse_blocks)


@dataclass(frozen=True)
class TsqcConfig:
    """Two-scale window pair ``K1 < K2 = gamma_ratio * K1``."""

    K1: int
    gamma_ratio: int = 2

    def __post_init__(self):
        if int(self.K1) != self.K1 or self.K1 < 1:
            raise ValueError(f"K1 must be a positive integer, got {self.K1}")
        if int(self.gamma_ratio) != self.gamma_ratio or self.gamma_ratio < 2:
            raise ValueError(f"gamma_ratio must be an integer >= 2, got {self.gamma_ratio}")

    @property
    def K2(self) -> int:
        return self.K1 * self.gamma_ratio


@dataclass
class EstimateReport:
    """Daily (or per-run) covariation estimates for ``(sigma^2, lambda)``.

    ``rho_hat`` and ``beta_hat`` are NaN when undefined; ``clamped`` flags a
    correlation that was pulled back into ``[-1, 1]``.
    """

    qv_ss: float
    qv_sl: float
    qv_ll: float
    rho_hat: float
    beta_hat: float
    leverage: Optional[float] = None
    clamped: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        return self.clamped or not (np.isfinite(self.rho_hat) and np.isfinite(self.beta_hat))


def _check_grids(a: BlockSeries, b: BlockSeries):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def _resolve_delta(grid: BlockGrid, delta):
    if delta is None:
        return grid.delta
    if not math.isclose(delta, grid.delta, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"delta={delta} inconsistent with grid spacing {grid.delta}")
    return grid.delta


def second_diff(series: BlockSeries, i: int, K: int) -> float:
    """``A(t_{i+K}) - 2 A(t_i) + A(t_{i-K})``."""
    B = series.grid.B
    if not K <= i <= B - K or K < 1:
        raise ValueError(f"index {i} outside [{K}, {B - K}]")
    v = series.values
    return float(v[i + K] - 2.0 * v[i] + v[i - K])


def _second_diffs(values: np.ndarray, K: int) -> np.ndarray:
    # entry j corresponds to the window centred at i = K + j
    return values[2 * K:] - 2.0 * values[K:-K] + values[:-2 * K]


def rolling_qv(A: BlockSeries, Bser: BlockSeries, K: int) -> float:
    """Rolling quadratic covariation ``QV_K(A, Bser)`` (unscaled)."""
    _check_grids(A, Bser)
    K = check_window(K, A.grid.B)
    da = _second_diffs(A.values, K)
    db = da if Bser is A else _second_diffs(Bser.values, K)
    return float(np.dot(da, db) / K)


def qv_scaled(A: BlockSeries, Bser: BlockSeries, K: int, delta=None) -> float:
    """Single-scale spot covariation estimate ``1.5 QV_K / (K delta)^2``."""
    delta = _resolve_delta(A.grid, delta)
    return 1.5 * rolling_qv(A, Bser, K) / (K * delta) ** 2


def tsqc(A: BlockSeries, Bser: BlockSeries, cfg: TsqcConfig, delta=None) -> float:
    """Two-scale quadratic covariation of the spot processes behind ``A`` and ``Bser``."""
    delta = _resolve_delta(A.grid, delta)
    K1, K2 = cfg.K1, cfg.K2
    check_window(K2, A.grid.B)
    diff = rolling_qv(A, Bser, K2) - rolling_qv(A, Bser, K1)
    return 1.5 * diff / ((K2 * K2 - K1 * K1) * delta * delta)


def preaverage(ticks: TickSeries, m: int) -> TickSeries:
    """Means of consecutive non-overlapping groups of ``m`` ticks.

    Each mean is stamped with the time of the last tick in its group; a
    trailing group shorter than ``m`` is dropped.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"pre-averaging window must be a positive integer, got {m}")
    m = int(m)
    N = len(ticks) // m
    if N == 0:
        return TickSeries(np.empty(0), np.empty(0))
    prices = ticks.prices[: N * m].reshape(N, m).mean(axis=1)
    times = ticks.times[m - 1 : N * m : m]
    return TickSeries(times, prices)


def default_preavg_window(n_ticks: int, B: int) -> int:
    """``ceil(sqrt(average ticks per block))``, at least 1."""
    return max(1, math.ceil(math.sqrt(n_ticks / B)))


def tsrv(Ybar, K: int = 2, J: int = 1) -> float:
    """Two-scales realized variance of (pre-averaged) observations ``Ybar``.

    ``[Y,Y]^(K) = K^{-1} sum_{i=1}^{N-K} (Y_{i+K} - Y_i)^2`` and the estimate is
    ``(K [Y,Y]^(K) - J [Y,Y]^(J)) / ((1 - (K - J + 1/3) / N) (K - J))``.
    Not clamped; can come out negative on short or odd inputs.
    """
    y = Ybar.prices if isinstance(Ybar, TickSeries) else np.asarray(Ybar, dtype=float)
    N = y.size
    if not K > J >= 1:
        raise ValueError(f"need K > J >= 1, got K={K}, J={J}")
    if N <= K:
        raise ValueError(f"need more than K={K} observations, got {N}")
    sum_k = np.sum((y[K:] - y[:-K]) ** 2)
    sum_j = np.sum((y[J:] - y[:-J]) ** 2)
    factor = (1.0 - (K - J + 1.0 / 3.0) / N) * (K - J)
    return float((sum_k - sum_j) / factor)


def integrated_vol_series(ticks: TickSeries, grid: BlockGrid, m=None, K=2, J=1,
                          method: str = "block") -> BlockSeries:
    """Additive integrated-variance estimate built from TSRV.

    ``method="block"``: ticks in ``(t_{i-1}, t_i]`` are pre-averaged with
    window ``m`` and fed to :func:`tsrv` block by block; the block values are
    cumulated. Blocks with ``K`` or fewer averaged points contribute 0 and
    are counted in ``sparse_blocks``. Each block loses the price movement
    between its first and last averaged points and its neighbours', so the
    result is biased down by roughly ``4 / (3 N)`` with ``N`` averaged points
    per block.

    ``method="global"``: the whole series is pre-averaged once and every
    squared difference in the day's TSRV is booked to the block holding its
    later endpoint. Block values sum to the full-sample TSRV and nothing is
    lost at block edges. ``sparse_blocks`` counts blocks that received no
    terms at all.
    """
    if m is None:
        m = default_preavg_window(len(ticks), grid.B)
    if method == "block":
        values, sparse = _block_tsrv(ticks, grid, m, K, J)
    elif method == "global":
        values, sparse = _global_tsrv(ticks, grid, m, K, J)
    else:
        raise ValueError(f"unknown method {method!r}")
    if sparse:
        logger.debug("%d of %d blocks too sparse for TSRV", sparse, grid.B)
    return BlockSeries(grid, np.concatenate(([0.0], np.cumsum(values))), sparse)


def _block_index(times, grid):
    # time in (t_{i-1}, t_i] -> i - 1, zero-based
    block = np.searchsorted(grid.boundaries, times, side="left")
    return np.clip(block, 1, grid.B) - 1


def _block_tsrv(ticks, grid, m, K, J):
    block = _block_index(ticks.times, grid)
    starts = np.searchsorted(block, np.arange(grid.B + 1), side="left")
    values = np.zeros(grid.B)
    sparse = 0
    for b in range(grid.B):
        lo, hi = starts[b], starts[b + 1]
        averaged = preaverage(TickSeries(ticks.times[lo:hi], ticks.prices[lo:hi]), m)
        if len(averaged) <= K:
            sparse += 1
            continue
        values[b] = tsrv(averaged, K, J)
    return values, sparse


def _global_tsrv(ticks, grid, m, K, J):
    averaged = preaverage(ticks, m)
    N = len(averaged)
    if not K > J >= 1:
        raise ValueError(f"need K > J >= 1, got K={K}, J={J}")
    if N <= K:
        return np.zeros(grid.B), grid.B
    y, block = averaged.prices, _block_index(averaged.times, grid)
    values = np.bincount(block[K:], weights=(y[K:] - y[:-K]) ** 2, minlength=grid.B)
    values -= np.bincount(block[J:], weights=(y[J:] - y[:-J]) ** 2, minlength=grid.B)
    values /= (1.0 - (K - J + 1.0 / 3.0) / N) * (K - J)
    touched = np.bincount(block[J:], minlength=grid.B)
    return values, int(np.sum(touched == 0))


def cumulative_count(times, grid: BlockGrid, scale: float = 1.0) -> BlockSeries:
    """``scale * #{T_j <= t_i}`` at every boundary ``t_i``."""
    times = np.asarray(times, dtype=float)
    if times.size > 1 and np.any(np.diff(times) < 0):
        raise ValueError("event times must be sorted ascending")
    counts = np.searchsorted(times, grid.boundaries, side="right")
    return BlockSeries(grid, scale * counts.astype(float))


def _rho(A, Bser, cfg, delta):
    cross = tsqc(A, Bser, cfg, delta)
    diag_a = tsqc(A, A, cfg, delta)
    diag_b = tsqc(Bser, Bser, cfg, delta)
    if not (diag_a > 0 and diag_b > 0):
        raise UndefinedEstimateError(
            f"correlation undefined: diagonal TSQCs {diag_a:.6g}, {diag_b:.6g}",
            diag_a, diag_b,
        )
    r = cross / math.sqrt(diag_a * diag_b)
    clamped = abs(r) > 1.0
    return min(1.0, max(-1.0, r)), clamped


def rho_tsqc(A: BlockSeries, Bser: BlockSeries, cfg: TsqcConfig, delta=None, *, with_flag=False):
    """Two-scale correlation estimate, clamped into ``[-1, 1]``.

    Raises :class:`UndefinedEstimateError` if either diagonal TSQC is not
    positive. With ``with_flag=True`` returns ``(rho, clamped)``.
    """
    r, clamped = _rho(A, Bser, cfg, delta)
    return (r, clamped) if with_flag else r


def beta_tsqc(A: BlockSeries, Bser: BlockSeries, cfg: TsqcConfig, delta=None) -> float:
    """Regression coefficient ``TSQC(A, Bser) / TSQC(Bser, Bser)``."""
    denom = tsqc(Bser, Bser, cfg, delta)
    if not denom > 0:
        raise UndefinedEstimateError(f"beta undefined: TSQC denominator {denom:.6g}", None, denom)
    return tsqc(A, Bser, cfg, delta) / denom


def leverage_qv(theta_hat: BlockSeries, X: BlockSeries, K: int, delta=None) -> float:
    """Rolling leverage estimate of ``[sigma^2, X]``.

    ``(K delta)^{-1} K^{-1} sum_i d2_K theta_hat(i) * (X(t_{i+K}) - X(t_{i-K}))``.
    """
    _check_grids(theta_hat, X)
    delta = _resolve_delta(theta_hat.grid, delta)
    K = check_window(K, theta_hat.grid.B)
    d2 = _second_diffs(theta_hat.values, K)
    dx = X.values[2 * K:] - X.values[:-2 * K]
    return float(np.dot(d2, dx) / K / (K * delta))


def estimate_report(theta_hat: BlockSeries, lambda_hat: BlockSeries, cfg: TsqcConfig,
                    X: Optional[BlockSeries] = None, **metadata) -> EstimateReport:
    """TSQC covariance matrix of ``(theta_hat, lambda_hat)`` with rho and beta."""
    qv_ss = tsqc(theta_hat, theta_hat, cfg)
    qv_sl = tsqc(theta_hat, lambda_hat, cfg)
    qv_ll = tsqc(lambda_hat, lambda_hat, cfg)
    rho, clamped = math.nan, False
    if qv_ss > 0 and qv_ll > 0:
        rho = qv_sl / math.sqrt(qv_ss * qv_ll)
        clamped = abs(rho) > 1
        rho = min(1.0, max(-1.0, rho))
    beta = qv_sl / qv_ll if qv_ll > 0 else math.nan
    leverage = leverage_qv(theta_hat, X, cfg.K1) if X is not None else None
    meta = {"K1": cfg.K1, "gamma": cfg.gamma_ratio, "B": theta_hat.grid.B,
            "sparse_blocks": theta_hat.sparse_blocks}
    meta.update(metadata)
    return EstimateReport(qv_ss, qv_sl, qv_ll, rho, beta, leverage, clamped, meta)


def estimate_ticks(ticks: TickSeries, grid: BlockGrid, cfg: TsqcConfig, m=None,
                   tsrv_k: int = 2, tsrv_j: int = 1, count_scale: float = 1.0,
                   theta_method: str = "global") -> EstimateReport:
    """Full pipeline for one day: block TSRV for ``sigma^2``, trade counts for ``lambda``."""
    if m is None:
        m = default_preavg_window(len(ticks), grid.B)
    theta_hat = integrated_vol_series(ticks, grid, m, tsrv_k, tsrv_j, theta_method)
    lambda_hat = cumulative_count(ticks.times, grid, count_scale)
    return estimate_report(theta_hat, lambda_hat, cfg, m=m, count=len(ticks),
                           count_scale=count_scale)
