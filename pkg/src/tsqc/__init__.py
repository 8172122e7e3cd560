"""Rolling second-difference quadratic covariation estimators.

Two-scale (TSQC) estimation of the covariation between spot volatility and
trade intensity, a simulator for a correlated CIR volatility-intensity model,
brute-force oracles, and Monte Carlo drivers.
"""

from .estimators import (
    BlockSeries,
    EstimateReport,
    TsqcConfig,
    UndefinedEstimateError,
    beta_tsqc,
    cumulative_count,
    estimate_report,
    estimate_ticks,
    integrated_vol_series,
    leverage_qv,
    preaverage,
    qv_scaled,
    rho_tsqc,
    rolling_qv,
    second_diff,
    tsqc,
    tsrv,
)
from .simulate import LatentPaths, ModelParams, TickSeries, simulate_day, simulate_latent
from .timegrid import BlockGrid, build_grid, eval_f, eval_g, residue_members

__version__ = "0.1.0"
