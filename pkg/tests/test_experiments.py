import math

import numpy as np
import pandas as pd
import pytest

from tsqc.experiments import (
    DEVIANCE_COLUMNS, McConfig, best_k1, limit_ratios, replicate_seed, run_empirical,
    run_mc_deviance, run_rate_experiment, summarize_deviance,
)
from tsqc.simulate import ModelParams, TickSeries, simulate_day

SMALL = ModelParams.desk().with_(n=2000, sim_steps=2**15)


def small_cfg(**kw):
    base = dict(model=SMALL, reps=2, k1_list=(2, 4), B=390, seed=3)
    base.update(kw)
    return McConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_cfg(reps=0)
    with pytest.raises(ValueError):
        small_cfg(k1_list=(200,))


def test_replicate_seeds_differ():
    a = np.random.default_rng(replicate_seed(0, 1)).random()
    b = np.random.default_rng(replicate_seed(0, 2)).random()
    assert a != b


def test_mc_table_deterministic_and_shaped():
    df1 = run_mc_deviance(small_cfg(reps=1))
    df2 = run_mc_deviance(small_cfg(reps=1))
    pd.testing.assert_frame_equal(df1, df2)
    assert list(df1.columns) == DEVIANCE_COLUMNS
    assert len(df1) == 2 * 3
    fin = np.isfinite(df1["estimate"]) & np.isfinite(df1["truth"])
    np.testing.assert_allclose(df1.loc[fin, "deviance"], (df1["estimate"] - df1["truth"])[fin])
    assert set(df1.loc[~np.isfinite(df1["estimate"]), "flag"]) <= {"undefined"}


def test_mc_independent_of_worker_count():
    a = run_mc_deviance(small_cfg())
    b = run_mc_deviance(small_cfg(workers=2))
    pd.testing.assert_frame_equal(a, b)


def test_independent_constant_processes():
    # near-constant variance and intensity: both covariations vanish and so does the deviance
    flat = SMALL.with_(gamma_vol=1e-6, nu=1e-6, rho=0.0, noise_sd=0.0)
    df = run_mc_deviance(McConfig(model=flat, reps=10, k1_list=(5,), B=390, seed=1))
    d = df[df["target"] == "qcv_sl"]
    assert np.all(np.abs(d["truth"]) < 1e-6)
    summ = summarize_deviance(df)
    row = summ[summ["target"] == "qcv_sl"].iloc[0]
    assert abs(row["mean_deviance"]) <= 2 * row["se"]


def test_summary_and_best_k1():
    df = pd.DataFrame({
        "k1": [1, 1, 2, 2], "rep": [0, 1, 0, 1], "target": ["qcv_sl"] * 4,
        "estimate": [1.0, 3.0, 2.1, 1.9], "truth": [2.0] * 4,
        "deviance": [-1.0, 1.0, 0.1, -0.1], "flag": [""] * 4,
    })
    s = summarize_deviance(df)
    assert s.loc[s.k1 == 1, "mean_deviance"].item() == 0.0
    assert s.loc[s.k1 == 1, "se"].item() == pytest.approx(math.sqrt(2) / math.sqrt(2))
    assert s.loc[s.k1 == 2, "rmse"].item() == pytest.approx(0.1)
    assert (s["sign_agree"] == 1.0).all()
    assert best_k1(s) == 2


RATE = ModelParams.desk().with_(sim_steps=2**16)


def test_rate_deterministic_paths():
    flat = RATE.with_(gamma_vol=1e-9, nu=1e-9)
    table, _ = run_rate_experiment(flat, reps=2, log2_kdelta=range(-9, -3), K=16, n_boot=0)
    assert table["rmse"].max() < 1e-6


def test_rate_ladder_errors():
    with pytest.raises(ValueError):
        run_rate_experiment(RATE, reps=2, log2_kdelta=[-9, -8], K=16)
    with pytest.raises(ValueError):
        run_rate_experiment(RATE, reps=2, log2_kdelta=range(-9, -3), K=3)


@pytest.mark.slow
def test_rate_standard_error_scales_with_reps():
    # spread of the fitted slope across independent batches; 4x the replicates should halve it
    def spread(reps):
        slopes = [run_rate_experiment(RATE, reps=reps, K=16, seed=10_000 * reps + b, n_boot=0)[1]["slope"]
                  for b in range(24)]
        return np.std(slopes, ddof=1)

    ratio = spread(20) / spread(80)
    assert 1.3 < ratio < 3.2


def test_limit_ratios_columns():
    df = limit_ratios(SMALL.with_(sim_steps=2**12), reps=2)
    assert list(df.columns) == ["rep", "qcv_ratio", "count_ratio"]
    assert np.all(np.isfinite(df[["qcv_ratio", "count_ratio"]]))


def test_empirical_identical_days_and_failures():
    _, ticks = simulate_day(SMALL, 8)
    days = [("2024-01-02", ticks), ("2024-01-03", ticks),
            ("2024-01-04", TickSeries(np.array([0.5]), np.array([0.0])))]
    df = run_empirical(days, B=78, k1=3)
    a, b, bad = df.iloc[0], df.iloc[1], df.iloc[2]
    pd.testing.assert_series_equal(a.drop("date"), b.drop("date"), check_names=False)
    assert bad["clamped_flag"] == 1
    rho = df["rho"].to_numpy()
    ok = np.isfinite(rho)
    assert np.all(np.abs(rho[ok]) <= 1)
    assert np.all(df.loc[~ok, "clamped_flag"] == 1)
