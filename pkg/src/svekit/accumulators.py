"""Streaming per-time-point moment accumulators.

Paths arrive in fixed-size blocks merged strictly in path-index order, so
the result does not depend on how many workers produced the blocks.  The
merge updates central-moment sums up to order 8 (Pebay-style pairwise
combination generalized to arbitrary order).
"""

from __future__ import annotations

from math import comb

import numpy as np

MAX_ORDER = 8


class RunningMoments:
    """count, mean and central-moment sums M_2..M_8 per time point."""

    def __init__(self, n_points: int):
        self.count = 0
        self.mean = np.zeros(n_points)
        # sums[p] = sum over samples of (x - mean)^p, orders 2..MAX_ORDER
        self.sums = {p: np.zeros(n_points) for p in range(2, MAX_ORDER + 1)}

    def add_block(self, block: np.ndarray) -> None:
        """Merge a (paths, n_points) block of values."""
        nb = block.shape[0]
        if nb == 0:
            return
        mean_b = block.mean(axis=0)
        centered = block - mean_b
        sums_b = {p: (centered ** p).sum(axis=0) for p in range(2, MAX_ORDER + 1)}
        if self.count == 0:
            self.count = nb
            self.mean = mean_b
            self.sums = sums_b
            return
        na = self.count
        n = na + nb
        delta = mean_b - self.mean
        merged = {}
        for p in range(2, MAX_ORDER + 1):
            m = self.sums[p] + sums_b[p]
            for k in range(1, p - 1):
                m = m + comb(p, k) * delta ** k * (
                    (-nb / n) ** k * self.sums[p - k]
                    + (na / n) ** k * sums_b[p - k])
            m = m + (na * nb / n * delta) ** p * (
                1.0 / nb ** (p - 1) - (-1.0 / na) ** (p - 1))
            merged[p] = m
        self.mean = self.mean + delta * (nb / n)
        self.sums = merged
        self.count = n

    def central_moment(self, p: int) -> np.ndarray:
        """E[(X - mean)^p] estimate; p = 1 is identically zero."""
        if p == 1:
            return np.zeros_like(self.mean)
        if not 2 <= p <= MAX_ORDER:
            raise ValueError(f"order must lie in [1, {MAX_ORDER}]")
        return self.sums[p] / self.count

    def variance(self) -> np.ndarray:
        """Unbiased sample variance per time point."""
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return self.sums[2] / (self.count - 1)
