"""Brute-force references for the estimators.

Nothing here imports :mod:`tsqc.estimators`; every quantity is recomputed
from plain arrays so that agreement between the two is evidence, not a
tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .timegrid import BlockGrid, eval_f, residue_members

__all__ = [
    "LatentTruth",
    "latent_qcv",
    "latent_truth",
    "closed_form_limit",
    "integrate_jumps",
    "f_representation_qv",
    "naive_qv",
    "weighted_qcv",
]


@dataclass(frozen=True)
class LatentTruth:
    """Fine-grid covariations of ``(sigma^2, lambda_n)`` and derived targets."""

    qcv_ss: float
    qcv_sl: float
    qcv_ll: float
    rho_true: float
    beta_true: float
    int_sigma: float
    int_sigma2: float


def latent_qcv(pathA, pathB) -> float:
    """Realized covariation ``sum_k dA_k dB_k`` of two sampled paths."""
    a = np.asarray(pathA, dtype=float)
    b = np.asarray(pathB, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"path lengths differ: {a.shape} vs {b.shape}")
    return float(np.dot(np.diff(a), np.diff(b)))


def _trapezoid(y, dt) -> float:
    y = np.asarray(y, dtype=float)
    return float(dt * (y.sum() - 0.5 * (y[0] + y[-1])))


def latent_truth(paths) -> LatentTruth:
    """Targets of the estimators computed from a :class:`LatentPaths` instance."""
    ss = latent_qcv(paths.sigma2, paths.sigma2)
    sl = latent_qcv(paths.sigma2, paths.lambda_n)
    ll = latent_qcv(paths.lambda_n, paths.lambda_n)
    dt = paths.times[1] - paths.times[0]
    rho = sl / math.sqrt(ss * ll) if ss > 0 and ll > 0 else math.nan
    beta = sl / ll if ll > 0 else math.nan
    return LatentTruth(
        ss, sl, ll, rho, beta,
        _trapezoid(np.sqrt(paths.sigma2), dt),
        _trapezoid(paths.sigma2, dt),
    )


def closed_form_limit(params, sigma, dt) -> float:
    """Large-``n`` limit of ``n^{-1} [sigma^2, lambda_n]_T``.

    ``rho * gamma * nu * sqrt(xi) * int sigma ds`` with the integral by the
    trapezoid rule; ``sigma`` is the volatility path (not the variance).
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma path must be nonnegative")
    return params.rho * params.gamma_vol * params.nu * math.sqrt(params.xi) * _trapezoid(sigma, dt)


def integrate_jumps(jumps, grid: BlockGrid, level: float = 0.0):
    """Exact integral at the grid boundaries of a piecewise-constant spot path.

    The spot path starts at ``level`` and jumps by
    ``size`` at each ``(time, size)`` in ``jumps``. Returns
    ``int_0^{t_i} theta_s ds`` for ``i = 0..B`` as a list.
    """
    out = []
    for i in range(grid.B + 1):
        t = i * grid.delta
        total = level * t
        for tau, size in jumps:
            if tau < t:
                total += size * (t - tau)
        out.append(total)
    return out


def f_representation_qv(theta_jumps, lambda_jumps, grid: BlockGrid, K: int) -> float:
    """``(1/K) sum_l sum_{i = l [2K]} (int f dtheta)(int f dlambda)``.

    ``theta`` and ``lambda`` are pure-jump spot paths given as ``(time, size)``
    lists, so each integral against the tent weight ``f`` is a finite sum of
    ``size * f(time)``. Equals ``QV_K(Theta, Lambda) / (K delta)^2`` for the
    integrated paths.
    """
    for tau, _ in list(theta_jumps) + list(lambda_jumps):
        if not 0.0 <= tau <= grid.T:
            raise ValueError(f"jump time {tau} outside [0, {grid.T}]")
    total = 0.0
    for l in range(1, 2 * K + 1):
        members = residue_members(l, K, grid.B)
        if not members:
            continue
        # each jump falls in at most one window of the class
        per_window = {}
        for which, jumps in ((0, theta_jumps), (1, lambda_jumps)):
            for tau, size in jumps:
                w = eval_f(tau, l, K, grid)
                if w == 0.0:
                    continue
                i = _window_of(tau, members, K, grid)
                acc = per_window.setdefault(i, [0.0, 0.0])
                acc[which] += size * w
        for a, b in per_window.values():
            total += a * b
    return total / K


def _window_of(tau, members, K, grid):
    for i in members:
        if (i - K) * grid.delta <= tau < (i + K) * grid.delta:
            return i
    raise AssertionError("positive tent weight outside every window")


def naive_qv(A, Bser, K: int) -> float:
    """Nested-loop rolling covariation straight from its definition.

    Takes raw value sequences (or anything with a ``values`` attribute).
    """
    a = list(getattr(A, "values", A))
    b = list(getattr(Bser, "values", Bser))
    if len(a) != len(b):
        raise ValueError("series lengths differ")
    nb = len(a) - 1
    if K < 1 or 2 * K > nb:
        raise ValueError(f"half-window {K} invalid for {nb} blocks")
    total = 0.0
    for i in range(K, nb - K + 1):
        fwd_a = a[i + K] - a[i]
        bwd_a = a[i] - a[i - K]
        fwd_b = b[i + K] - b[i]
        bwd_b = b[i] - b[i - K]
        total += (fwd_a - bwd_a) * (fwd_b - bwd_b)
    return total / K


def weighted_qcv(pathA, pathB, times, grid: BlockGrid, K: int) -> float:
    """Fine-grid covariation weighted by the mean squared tent.

    ``(1.5/K) sum_k w(s_k) dA_k dB_k`` with ``w(s) = sum_l f^{(l)}(s)^2``:
    the deterministic centre that ``1.5 QV_K / (K delta)^2`` fluctuates
    around when ``A`` and ``B`` are integrals of the sampled spot paths.
    The squared tents are evaluated at each increment's left endpoint.
    """
    a = np.diff(np.asarray(pathA, dtype=float))
    b = np.diff(np.asarray(pathB, dtype=float))
    s = np.asarray(times, dtype=float)[:-1]
    width = K * grid.delta
    centres = np.arange(K, grid.B - K + 1) * grid.delta
    w = np.zeros_like(s)
    for c in centres:
        d = np.abs(s - c)
        inside = d < width
        w[inside] += (1.0 - d[inside] / width) ** 2
    return float(1.5 / K * np.dot(w * a, b))
