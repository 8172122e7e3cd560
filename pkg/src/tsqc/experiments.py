"""Monte Carlo and empirical drivers.

* :func:`run_mc_deviance` reruns the deviance study: simulate a day, estimate
  ``[sigma^2, lambda]``, ``rho`` and ``beta`` by TSQC for a ladder of ``K1``
  values and subtract the latent truth.
* :func:`run_rate_experiment` measures how fast the single-scale estimator
  converges when the integrated paths are known exactly.
* :func:`limit_ratios` checks the large-``n`` limits of the model.
* :func:`run_empirical` produces the daily estimate table from cleaned ticks.

Replicates are independent work units keyed by index; tables are sorted by
key before they are returned, so results do not depend on worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .estimators import (
    BlockSeries,
    TsqcConfig,
    cumulative_count,
    default_preavg_window,
    estimate_report,
    estimate_ticks,
    integrated_vol_series,
    qv_scaled,
)
from .oracle import closed_form_limit, latent_qcv, latent_truth
from .simulate import ModelParams, TickSeries, simulate_day, simulate_latent, sample_times
from .timegrid import build_grid

logger = logging.getLogger(__name__)

__all__ = [
    "McConfig",
    "replicate_seed",
    "run_mc_deviance",
    "summarize_deviance",
    "best_k1",
    "run_rate_experiment",
    "limit_ratios",
    "run_empirical",
    "DEFAULT_K1",
]

DEFAULT_K1 = (5, 10, 20, 40, 80)
DEVIANCE_COLUMNS = ["k1", "rep", "target", "estimate", "truth", "deviance", "flag"]
DAILY_COLUMNS = ["date", "qv_ss", "qv_sl", "qv_ll", "rho", "beta", "clamped_flag", "sparse_blocks"]


def replicate_seed(seed: int, rep: int) -> np.random.SeedSequence:
    """Seed of replicate ``rep``: the root seed with the index as spawn key."""
    return np.random.SeedSequence(int(seed), spawn_key=(int(rep),))


@dataclass(frozen=True)
class McConfig:
    """Deviance-study settings.

    ``B = 11 700`` splits the day into 2-second blocks (about 15 ticks each at
    ``n = 20 000``) so that the largest preset window ``K2 = 160`` still spans
    under 1.5% of the day.
    """

    model: ModelParams = field(default_factory=ModelParams.desk)
    reps: int = 100
    k1_list: Sequence[int] = DEFAULT_K1
    gamma_ratio: int = 2
    B: int = 11_700
    m: Optional[int] = None
    seed: int = 0
    tsrv_k: int = 2
    tsrv_j: int = 1
    theta_method: str = "global"
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        object.__setattr__(self, "k1_list", tuple(int(k) for k in self.k1_list))
        for k1 in self.k1_list:
            TsqcConfig(k1, self.gamma_ratio)
            if 2 * self.gamma_ratio * k1 > self.B:
                raise ValueError(f"K2 = {self.gamma_ratio * k1} exceeds B/2 = {self.B / 2}")


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _deviance_replicate(args):
    cfg, rep = args
    paths, ticks = simulate_day(cfg.model, replicate_seed(cfg.seed, rep))
    truth = latent_truth(paths)
    grid = build_grid(cfg.model.T, cfg.B)
    m = cfg.m or default_preavg_window(len(ticks), grid.B)
    theta_hat = integrated_vol_series(ticks, grid, m, cfg.tsrv_k, cfg.tsrv_j, cfg.theta_method)
    lambda_hat = cumulative_count(ticks.times, grid)
    rows = []
    for k1 in cfg.k1_list:
        rep_ = estimate_report(theta_hat, lambda_hat, TsqcConfig(k1, cfg.gamma_ratio))
        rho_flag = "clamped" if rep_.clamped else ""
        if not np.isfinite(rep_.rho_hat):
            rho_flag = "undefined"
        for target, est, tru, flag in (
            ("qcv_sl", rep_.qv_sl, truth.qcv_sl, ""),
            ("rho", rep_.rho_hat, truth.rho_true, rho_flag),
            ("beta", rep_.beta_hat, truth.beta_true, "" if np.isfinite(rep_.beta_hat) else "undefined"),
        ):
            rows.append((k1, rep, target, est, tru, est - tru, flag))
    return rows


def run_mc_deviance(cfg: McConfig) -> pd.DataFrame:
    """Deviance table with one row per ``(k1, rep, target)``.

    All ``K1`` values of a replicate are evaluated on the same simulated day.
    Undefined estimates (a nonpositive TSQC diagonal) appear as NaN with
    ``flag == "undefined"``.
    """
    chunks = _map(_deviance_replicate, [(cfg, r) for r in range(cfg.reps)], cfg.workers)
    df = pd.DataFrame([row for chunk in chunks for row in chunk], columns=DEVIANCE_COLUMNS)
    return df.sort_values(["k1", "target", "rep"], kind="stable").reset_index(drop=True)


def summarize_deviance(df: pd.DataFrame, band=(0.05, 0.95)) -> pd.DataFrame:
    """Per ``(k1, target)`` mean deviance, its MC standard error and percentile band.

    Bands are empirical quantiles across replicates. ``sign_agree`` is the
    share of defined replicates whose estimate has the sign of the truth.
    """
    out = []
    for (k1, target), g in df.groupby(["k1", "target"], sort=True):
        d = g.loc[np.isfinite(g["deviance"]), "deviance"].to_numpy()
        defined = np.isfinite(g["estimate"]).to_numpy()
        est, tru = g["estimate"].to_numpy()[defined], g["truth"].to_numpy()[defined]
        n = d.size
        se = d.std(ddof=1) / math.sqrt(n) if n > 1 else math.nan
        out.append({
            "k1": k1, "target": target, "n_defined": n, "n": len(g),
            "mean_deviance": d.mean() if n else math.nan,
            "se": se,
            "rmse": math.sqrt(np.mean(d**2)) if n else math.nan,
            "band_lo": np.quantile(d, band[0]) if n else math.nan,
            "band_hi": np.quantile(d, band[1]) if n else math.nan,
            "sign_agree": np.mean(np.sign(est) == np.sign(tru)) if n else math.nan,
            "band_method": "monte-carlo percentile",
        })
    return pd.DataFrame(out)


def best_k1(summary: pd.DataFrame, target: str = "qcv_sl") -> int:
    """``K1`` with the smallest root-mean-square deviance for ``target``."""
    s = summary[summary["target"] == target]
    return int(s.loc[s["rmse"].idxmin(), "k1"])


def _integrate(path, dt, step):
    # exact integral of the piecewise-constant (left-point) path
    cum = np.concatenate(([0.0], np.cumsum(path[:-1]) * dt))
    return cum[::step]


def _rate_replicate(args):
    params, seed, rep, K, kdeltas, pair = args
    paths = simulate_latent(params, replicate_seed(seed, rep))
    series = {"sigma2": paths.sigma2, "lambda": paths.lambda_n}
    a, b = series[pair[0]], series[pair[1]]
    truth = latent_qcv(a, b)
    errors = []
    for kd in kdeltas:
        B = int(round(K * params.T / kd))
        step = params.sim_steps // B
        grid = build_grid(params.T, B)
        A = BlockSeries(grid, _integrate(a, paths.dt, step))
        Bs = BlockSeries(grid, _integrate(b, paths.dt, step))
        errors.append(qv_scaled(A, Bs, K) - truth)
    return errors


def run_rate_experiment(params: Optional[ModelParams] = None, reps: int = 200,
                        log2_kdelta=range(-9, -3), K: int = 64, seed: int = 0,
                        pair=("sigma2", "lambda"), workers: int = 1,
                        n_boot: int = 200):
    """RMSE of ``qv_scaled`` against the latent covariation across window widths.

    The integrated paths are exact integrals of the simulated spot paths, so
    the only error is the window approximation itself. ``K`` is held fixed
    and the block width varies to realize each ``K * delta`` on the ladder;
    every block count must divide ``params.sim_steps``.

    Returns ``(table, fit)`` where ``table`` has columns ``log2_kdelta``,
    ``log2_rmse``, ``rmse`` and ``fit`` holds the least-squares slope, its
    regression standard error and a bootstrap standard error over replicates.
    """
    params = params or ModelParams.desk()
    exps = [int(e) for e in log2_kdelta]
    if len(exps) < 3:
        raise ValueError("rate experiment needs at least 3 ladder points")
    kdeltas = [2.0**e * params.T for e in exps]
    for kd in kdeltas:
        B = K * params.T / kd
        if B != int(B) or params.sim_steps % int(B):
            raise ValueError(f"block count {B} does not divide sim_steps={params.sim_steps}")
    jobs = [(params, seed, r, K, kdeltas, tuple(pair)) for r in range(reps)]
    err = np.array(_map(_rate_replicate, jobs, workers))
    rmse = np.sqrt(np.mean(err**2, axis=0))
    x = np.array(exps, dtype=float)
    fit = stats.linregress(x, np.log2(rmse))

    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
    boot = []
    for _ in range(n_boot):
        idx = rng.integers(0, reps, reps)
        boot.append(stats.linregress(x, np.log2(np.sqrt(np.mean(err[idx] ** 2, axis=0)))).slope)
    table = pd.DataFrame({"log2_kdelta": x, "log2_rmse": np.log2(rmse), "rmse": rmse})
    summary = {"slope": fit.slope, "intercept": fit.intercept, "stderr": fit.stderr,
               "boot_se": float(np.std(boot, ddof=1)) if n_boot > 1 else math.nan,
               "reps": reps, "K": K}
    return table, summary


def _limit_replicate(args):
    params, seed, rep = args
    paths = simulate_latent(params, replicate_seed(seed, rep))
    qcv = latent_qcv(paths.sigma2, paths.lambda_n) / params.n
    limit = closed_form_limit(params, np.sqrt(paths.sigma2), paths.dt)
    times = sample_times(paths.lambda_n, paths.dt, replicate_seed(seed, rep), T=params.T)
    return qcv / limit, times.size / (params.n * params.xi * params.T)


def limit_ratios(params: Optional[ModelParams] = None, reps: int = 50, seed: int = 0,
                 workers: int = 1) -> pd.DataFrame:
    """Per-replicate ratios for the model's large-``n`` limits.

    ``qcv_ratio``: ``n^{-1} [sigma^2, lambda_n]_T`` over its closed-form limit.
    ``count_ratio``: the number of events in ``[0, T]`` over ``n xi T``.
    """
    params = params or ModelParams.paper()
    res = _map(_limit_replicate, [(params, seed, r) for r in range(reps)], workers)
    return pd.DataFrame(res, columns=["qcv_ratio", "count_ratio"]).rename_axis("rep").reset_index()


def run_empirical(days, B: int = 390, k1: int = 5, gamma_ratio: int = 2, m=None,
                  tsrv_k: int = 2, tsrv_j: int = 1, count_scale: float = 1e-6,
                  theta_method: str = "global") -> pd.DataFrame:
    """Daily TSQC table from ``(date, TickSeries)`` pairs.

    Days whose estimation fails are kept as rows of NaN with ``clamped_flag``
    set to 1, and the run carries on.
    """
    grid = build_grid(1.0, B)
    cfg = TsqcConfig(k1, gamma_ratio)
    rows = []
    for date, ticks in days:
        try:
            rep = estimate_ticks(ticks, grid, cfg, m, tsrv_k, tsrv_j, count_scale, theta_method)
        except ValueError as exc:
            logger.warning("day %s failed: %s", date, exc)
            rows.append((date, *([math.nan] * 5), 1, B))
            continue
        flag = int(rep.flagged)
        rows.append((date, rep.qv_ss, rep.qv_sl, rep.qv_ll, rep.rho_hat, rep.beta_hat,
                     flag, rep.metadata["sparse_blocks"]))
    df = pd.DataFrame(rows, columns=DAILY_COLUMNS)
    return df.sort_values("date", kind="stable").reset_index(drop=True)
