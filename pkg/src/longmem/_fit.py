from __future__ import annotations

from typing import NamedTuple

import numpy as np


class LineFit(NamedTuple):
    slope: float
    intercept: float
    stderr: float
    n: int


def ols_line(x, y) -> LineFit:
    """Least-squares line y = a + b x with the usual slope standard error."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 2:
        raise ValueError("need at least two points")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("regressor is constant")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    if n > 2:
        resid = y - intercept - slope * x
        stderr = float(np.sqrt((resid @ resid) / (n - 2) / sxx))
    else:
        stderr = float("nan")
    return LineFit(slope, intercept, stderr, n)
