"""Equispaced block grids, residue classes and the tent/step weight functions.

A grid splits ``[0, T]`` into ``B`` blocks ``(t_{i-1}, t_i]`` with
``t_i = i * delta``. Rolling windows of half-width ``K`` blocks are centred
at ``t_i`` for ``K <= i <= B - K``; the centres are partitioned into ``2K``
residue classes ``i = 2K j + l`` whose windows never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BlockGrid",
    "build_grid",
    "check_window",
    "residue_members",
    "eval_f",
    "eval_g",
]


@dataclass(frozen=True)
class BlockGrid:
    """Equispaced block boundaries ``0 = t_0 < t_1 < ... < t_B = T``."""

    T: float
    B: int

    def __post_init__(self):
        if not np.isfinite(self.T) or self.T <= 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if int(self.B) != self.B or self.B < 2:
            raise ValueError(f"block count B must be an integer >= 2, got {self.B}")
        object.__setattr__(self, "B", int(self.B))

    @property
    def delta(self) -> float:
        return self.T / self.B

    def boundary(self, i: int) -> float:
        return i * self.delta

    @property
    def boundaries(self) -> np.ndarray:
        # i * delta rather than a running sum, so no drift accumulates
        return np.arange(self.B + 1) * self.delta


def build_grid(T: float, B: int) -> BlockGrid:
    return BlockGrid(float(T), B)


def check_window(K: int, B: int) -> int:
    """Validate a half-window ``1 <= K <= B/2`` and return it as ``int``."""
    if int(K) != K or K < 1:
        raise ValueError(f"half-window K must be a positive integer, got {K}")
    if 2 * K > B:
        raise ValueError(f"half-window K={K} exceeds B/2 with B={B}")
    return int(K)


def residue_members(l: int, K: int, B: int) -> list[int]:
    """Window centres ``i`` in ``[K, B-K]`` with ``i = l (mod 2K)``, ascending."""
    K = check_window(K, B)
    if int(l) != l or not 1 <= l <= 2 * K:
        raise ValueError(f"class label l must lie in 1..{2 * K}, got {l}")
    first = l if l >= K else l + 2 * K
    return list(range(first, B - K + 1, 2 * K))


def _locate(s: float, l: int, K: int, grid: BlockGrid):
    """Centre index of the class-``l`` window containing ``s``, or None.

    Windows are half-open, ``[t_{i-K}, t_{i+K})``; neighbouring members of a
    class are 2K apart so at most one window can contain ``s``.
    """
    if not 0.0 <= s <= grid.T:
        raise ValueError(f"time {s} outside [0, {grid.T}]")
    for i in residue_members(l, K, grid.B):
        lo = grid.boundary(i - K)
        hi = grid.boundary(i + K)
        if lo <= s < hi:
            return i
    return None


def eval_f(s: float, l: int, K: int, grid: BlockGrid) -> float:
    """Tent weight of class ``l`` at time ``s``.

    Rises linearly from 0 at ``t_{i-K}`` to 1 at ``t_i`` and falls back to 0
    at ``t_{i+K}``, for the class member ``i`` whose window contains ``s``.
    Zero off every window of the class.
    """
    i = _locate(s, l, K, grid)
    if i is None:
        return 0.0
    ti = grid.boundary(i)
    width = K * grid.delta
    if s >= ti:
        return (grid.boundary(i + K) - s) / width
    return (s - grid.boundary(i - K)) / width


def eval_g(s: float, l: int, K: int, grid: BlockGrid) -> float:
    """Step weight: +1 on the forward half-window, -1 on the backward one."""
    i = _locate(s, l, K, grid)
    if i is None:
        return 0.0
    return 1.0 if s >= grid.boundary(i) else -1.0
