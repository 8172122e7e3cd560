import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tsqc.estimators import (
    BlockSeries, TsqcConfig, UndefinedEstimateError, beta_tsqc, cumulative_count,
    default_preavg_window, estimate_report, estimate_ticks, integrated_vol_series,
    leverage_qv, preaverage, qv_scaled, rho_tsqc, rolling_qv, second_diff, tsqc, tsrv,
)
from tsqc.oracle import naive_qv
from tsqc.simulate import ModelParams, TickSeries, simulate_day
from tsqc.timegrid import build_grid

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def series_pair(draw, max_B=40):
    B = draw(st.integers(4, max_B))
    K = draw(st.integers(1, B // 2))
    a = draw(arrays(float, B + 1, elements=finite))
    b = draw(arrays(float, B + 1, elements=finite))
    g = build_grid(1.0, B)
    return BlockSeries(g, a), BlockSeries(g, b), K


def close(x, y, scale):
    return abs(x - y) <= 1e-9 * max(1.0, scale)


# -- hand-computed examples -------------------------------------------------

def test_second_diff_by_hand():
    g = build_grid(1.0, 6)
    s = BlockSeries(g, [0, 1, 4, 9, 16, 25, 36])
    assert second_diff(s, 3, 1) == 2.0       # 16 - 18 + 4
    assert second_diff(s, 3, 3) == 18.0      # 36 - 18 + 0


def test_rolling_qv_by_hand():
    g = build_grid(1.0, 4)
    a = BlockSeries(g, [0, 1, 4, 9, 16])     # second differences all 2 for K=1
    b = BlockSeries(g, [0, 0, 1, 0, 0])      # -2, 2, -2... : 1-0+0? see below
    # K=1, i = 1..3: d2a = 2, 2, 2; d2b = 1, -2, 1
    assert rolling_qv(a, b, 1) == 2 * (1 - 2 + 1)
    assert rolling_qv(a, a, 1) == 12.0
    # K=2, i = 2 only: d2a = 16 - 8 + 0 = 8, divided by K
    assert rolling_qv(a, a, 2) == 32.0


def test_qv_scaled_recovers_quadratic_curvature():
    # Theta(t) = c t^2 / 2 has theta' = c t; second differences are c (K delta)^2 exactly
    B, c = 100, 3.0
    g = build_grid(1.0, B)
    s = BlockSeries(g, 0.5 * c * g.boundaries**2)
    K = 5
    expected = 1.5 * (B - 2 * K + 1) / K * c * c * (K * g.delta) ** 2
    assert qv_scaled(s, s, K) == pytest.approx(expected, rel=1e-10)


def test_tsqc_by_hand():
    g = build_grid(1.0, 12)
    rng = np.random.default_rng(0)
    a = BlockSeries(g, rng.standard_normal(13))
    b = BlockSeries(g, rng.standard_normal(13))
    cfg = TsqcConfig(2, 3)
    d = g.delta
    want = 1.5 * (naive_qv(a, b, 6) - naive_qv(a, b, 2)) / ((36 - 4) * d * d)
    assert tsqc(a, b, cfg) == pytest.approx(want, rel=1e-12)


def test_rolling_qv_errors():
    g = build_grid(1.0, 10)
    a = BlockSeries(g, np.zeros(11))
    with pytest.raises(ValueError):
        rolling_qv(a, a, 6)
    other = BlockSeries(build_grid(2.0, 10), np.zeros(11))
    with pytest.raises(ValueError):
        rolling_qv(a, other, 2)
    with pytest.raises(ValueError):
        BlockSeries(g, np.zeros(10))
    with pytest.raises(ValueError):
        qv_scaled(a, a, 2, delta=0.2)
    with pytest.raises(ValueError):
        TsqcConfig(0)
    with pytest.raises(ValueError):
        TsqcConfig(3, 1)


def test_block_series_is_read_only():
    g = build_grid(1.0, 3)
    s = BlockSeries(g, [0, 1, 2, 3])
    with pytest.raises(ValueError):
        s.values[0] = 5.0
    assert s.increment(1, 3) == 2.0
    assert (2 * s).values[-1] == 6.0
    assert (s + s).values[-1] == 6.0


# -- property tests -------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(series_pair(), st.floats(-10, 10), st.floats(-10, 10))
def test_bilinear_and_symmetric(pair, c1, c2):
    a, b, K = pair
    m = np.abs(a.values).max() + np.abs(b.values).max()
    scale = 16 * a.grid.B * m * m * (1 + abs(c1) + abs(c2))
    assert close(rolling_qv(a, b, K), rolling_qv(b, a, K), scale)
    lhs = rolling_qv(c1 * a + c2 * b, b, K)
    rhs = c1 * rolling_qv(a, b, K) + c2 * rolling_qv(b, b, K)
    assert close(lhs, rhs, scale)


@settings(max_examples=200, deadline=None)
@given(series_pair(), st.floats(-100, 100), st.floats(-100, 100))
def test_affine_trends_are_annihilated(pair, c0, c1):
    a, b, K = pair
    trend = BlockSeries(a.grid, c0 + c1 * a.grid.boundaries)
    scale = (np.abs(a.values).max() + abs(c0) + abs(c1) + np.abs(b.values).max()) ** 2 * 16 * a.grid.B
    assert close(rolling_qv(trend, b, K), 0.0, scale)
    assert close(rolling_qv(a + trend, b, K), rolling_qv(a, b, K), scale)


@settings(max_examples=200, deadline=None)
@given(series_pair())
def test_cauchy_schwarz(pair):
    a, b, K = pair
    ab, aa, bb = rolling_qv(a, b, K), rolling_qv(a, a, K), rolling_qv(b, b, K)
    assert aa >= 0 and bb >= 0
    assert ab * ab <= aa * bb * (1 + 1e-9) + 1e-300


@settings(max_examples=100, deadline=None)
@given(series_pair(max_B=60), st.floats(-50, 50), st.floats(-50, 50))
def test_tsqc_affine_invariance(pair, c0, c1):
    a, b, _ = pair
    if a.grid.B < 4:
        return
    cfg = TsqcConfig(1, 2)
    shifted = a + BlockSeries(a.grid, c0 + c1 * a.grid.boundaries)
    scale = (np.abs(a.values).max() + abs(c0) + abs(c1) + np.abs(b.values).max()) ** 2 * 64 * a.grid.B ** 3
    assert close(tsqc(shifted, b, cfg), tsqc(a, b, cfg), scale)


def _positive_diag_pair(rng, B=60):
    g = build_grid(1.0, B)
    a = BlockSeries(g, np.cumsum(np.r_[0, np.cumsum(rng.standard_normal(B))]) / B)
    b = BlockSeries(g, np.cumsum(np.r_[0, np.cumsum(rng.standard_normal(B))]) / B)
    return a, b


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100), st.floats(0.01, 100))
def test_rho_scale_invariance_and_self_correlation(seed, c1, c2):
    a, b = _positive_diag_pair(np.random.default_rng(seed))
    cfg = TsqcConfig(2, 2)
    try:
        r = rho_tsqc(a, b, cfg)
    except UndefinedEstimateError:
        return
    assert rho_tsqc(c1 * a, c2 * b, cfg) == pytest.approx(r, rel=1e-9, abs=1e-12)
    assert rho_tsqc(-c1 * a, c2 * b, cfg) == pytest.approx(-r, rel=1e-9, abs=1e-12)
    if tsqc(a, a, cfg) > 0:
        assert rho_tsqc(a, a, cfg) == 1.0
    assert -1.0 <= r <= 1.0


def test_rho_and_beta_undefined():
    g = build_grid(1.0, 20)
    a = BlockSeries(g, np.linspace(0, 1, 21))  # affine: zero diagonal
    rng = np.random.default_rng(1)
    b = BlockSeries(g, rng.standard_normal(21))
    with pytest.raises(UndefinedEstimateError) as exc:
        rho_tsqc(a, b, TsqcConfig(2))
    assert exc.value.diag_a == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(UndefinedEstimateError):
        beta_tsqc(b, a, TsqcConfig(2))
    rep = estimate_report(b, a, TsqcConfig(2))
    assert math.isnan(rep.rho_hat) and math.isnan(rep.beta_hat) and rep.flagged


def test_rho_clamp_flag():
    # a smooth u has a positive TSQC diagonal and white noise w a negative one, so on
    # a = u + s w, b = u - s w the cross term beats both diagonals
    rng = np.random.default_rng(7)
    g = build_grid(1.0, 60)
    u = BlockSeries(g, np.cumsum(np.r_[0, np.cumsum(rng.standard_normal(60))]) / 60)
    w = BlockSeries(g, rng.standard_normal(61))
    cfg = TsqcConfig(2)
    tuu, tww, tuw = tsqc(u, u, cfg), tsqc(w, w, cfg), tsqc(u, w, cfg)
    assert tuu > 0 > tww
    s = math.sqrt(tuu / (4 * abs(tww)))
    a, b = u + s * w, u + (-s) * w
    assert tsqc(a, a, cfg) > 0 and tsqc(b, b, cfg) > 0, tuw
    r, clamped = rho_tsqc(a, b, cfg, with_flag=True)
    assert clamped and r == 1.0
    rep = estimate_report(a, b, cfg)
    assert rep.clamped and rep.flagged and rep.rho_hat == 1.0


def test_beta_exact_for_proportional_series():
    a, b = _positive_diag_pair(np.random.default_rng(3))
    cfg = TsqcConfig(2)
    if tsqc(b, b, cfg) <= 0:
        pytest.skip("nonpositive diagonal")
    assert beta_tsqc(2.5 * b, b, cfg) == pytest.approx(2.5, rel=1e-12)


# -- TSRV, pre-averaging, counts ------------------------------------------

def test_preaverage():
    t = TickSeries(np.arange(1, 8) / 8, np.arange(7.0))
    p = preaverage(t, 3)
    np.testing.assert_allclose(p.prices, [1.0, 4.0])
    np.testing.assert_allclose(p.times, [3 / 8, 6 / 8])
    assert len(preaverage(t, 8)) == 0
    with pytest.raises(ValueError):
        preaverage(t, 0)


def test_default_preavg_window():
    assert default_preavg_window(390 * 16, 390) == 4
    assert default_preavg_window(390 * 17, 390) == 5
    assert default_preavg_window(0, 390) == 1


def test_tsrv_by_hand():
    y = np.array([0.0, 1.0, 0.0, 2.0, 1.0])
    # K=2: (0-0)^2 + (2-1)^2 + (1-0)^2 = 2; J=1: 1 + 1 + 4 + 1 = 7
    factor = (1 - (1 + 1 / 3) / 5) * 1
    assert tsrv(y) == pytest.approx((2 - 7) / factor)
    with pytest.raises(ValueError):
        tsrv(y[:2])
    with pytest.raises(ValueError):
        tsrv(y, K=1, J=1)


def test_tsrv_is_unbiased_for_white_noise_alone():
    # pure noise has zero integrated variance; the two-scale difference cancels its bias
    rng = np.random.default_rng(0)
    vals = [tsrv(rng.standard_normal(5000) * 0.01) for _ in range(200)]
    assert abs(np.mean(vals)) < 4 * np.std(vals) / np.sqrt(200)


def test_integrated_vol_series_methods_agree_on_totals():
    params = ModelParams.desk().with_(sim_steps=2**16, n=2000)
    _, ticks = simulate_day(params, 5)
    g = build_grid(1.0, 39)
    glob = integrated_vol_series(ticks, g, m=3, method="global")
    direct = tsrv(preaverage(ticks, 3))
    assert glob.values[-1] == pytest.approx(direct, rel=1e-10)
    blk = integrated_vol_series(ticks, g, m=3, method="block")
    assert blk.values[0] == 0.0 and glob.values[0] == 0.0
    assert blk.sparse_blocks == 0
    with pytest.raises(ValueError):
        integrated_vol_series(ticks, g, m=3, method="other")


def test_sparse_blocks_counted():
    ticks = TickSeries(np.array([0.05, 0.06, 0.07, 0.08, 0.09]), np.array([0, 1, 0, 1, 0.0]))
    g = build_grid(1.0, 10)
    blk = integrated_vol_series(ticks, g, m=1, method="block")
    assert blk.sparse_blocks == 9
    glob = integrated_vol_series(ticks, g, m=1, method="global")
    assert glob.sparse_blocks == 9
    few = integrated_vol_series(TickSeries(np.array([0.5]), np.array([1.0])), g, m=1, method="global")
    assert few.sparse_blocks == 10 and np.all(few.values == 0)


def test_cumulative_count():
    g = build_grid(1.0, 4)
    c = cumulative_count([0.1, 0.25, 0.3, 0.9, 1.0], g, scale=2.0)
    np.testing.assert_array_equal(c.values, [0, 4, 6, 6, 10])
    with pytest.raises(ValueError):
        cumulative_count([0.3, 0.1], g)


def test_leverage_by_hand():
    g = build_grid(1.0, 4)
    theta = BlockSeries(g, [0, 1, 4, 9, 16])
    X = BlockSeries(g, [0, 1, 3, 6, 10])
    # K=1: i = 1..3, d2 = 2 each, dX = 3, 5, 7; times 1/(K delta) = 4
    assert leverage_qv(theta, X, 1) == pytest.approx(4 * 2 * 15)


def test_estimate_ticks_report():
    params = ModelParams.desk().with_(sim_steps=2**16, n=4000)
    _, ticks = simulate_day(params, 11)
    g = build_grid(1.0, 390)
    rep = estimate_ticks(ticks, g, TsqcConfig(5))
    assert np.isfinite(rep.qv_ss) and np.isfinite(rep.qv_sl) and np.isfinite(rep.qv_ll)
    assert rep.metadata["K1"] == 5 and rep.metadata["B"] == 390
    assert rep.metadata["count"] == len(ticks)
