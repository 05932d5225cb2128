"""Blockwise reductions whose scratch memory is bounded by BLOCK elements."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

BLOCK = 1 << 16


class PathStats(NamedTuple):
    argmax_abs: int  # 1-based, smallest maximiser of |path|
    max_abs: float
    max: float
    min: float


def centered_path(x: np.ndarray, center: float, shift: float = 0.0) -> PathStats:
    """Extremes of path_i = shift + sum_{j<=i} (x_j - center), i = 1..n."""
    best_i, best = 1, -1.0
    hi, lo = -np.inf, np.inf
    offset = shift
    for s in range(0, x.size, BLOCK):
        path = np.cumsum(x[s:s + BLOCK] - center)
        path += offset
        offset = float(path[-1])
        hi = max(hi, float(path.max()))
        lo = min(lo, float(path.min()))
        a = np.abs(path)
        j = int(np.argmax(a))
        if a[j] > best:
            best, best_i = float(a[j]), s + j + 1
    return PathStats(best_i, best, hi, lo)


def sum_sq_dev(x: np.ndarray, center: float) -> float:
    total = 0.0
    for s in range(0, x.size, BLOCK):
        d = x[s:s + BLOCK] - center
        total += float(d @ d)
    return total


def lag1_products(x: np.ndarray, center: float) -> tuple[float, float]:
    """(sum_{t>=2} d_t d_{t-1}, sum_{t<=n-1} d_t^2) with d = x - center."""
    num = den = 0.0
    for s in range(0, x.size - 1, BLOCK):
        d = x[s:s + BLOCK + 1] - center
        num += float(d[1:] @ d[:-1])
        den += float(d[:-1] @ d[:-1])
    return num, den
