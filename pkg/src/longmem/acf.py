"""Sample autocovariance / autocorrelation of order-sign series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from ._fit import LineFit, ols_line
from .errors import DegenerateSeries, LagOutOfRange, MixedLags
from .series import SeriesLabel, SignSeries

_BLOCK = 1 << 16


def as_float_array(series) -> np.ndarray:
    if isinstance(series, SignSeries):
        return series.values()
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("series must be one-dimensional")
    return arr


def label_of(series) -> SeriesLabel | None:
    return series.label if isinstance(series, SignSeries) else None


def autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Divisor-N sample autocovariance for lags 0..max_lag.

    Blockwise FFT correlation: each block of length L is correlated against
    the following L + max_lag samples, so memory stays O(L + max_lag) and the
    cost is O(N log(L + max_lag)).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if not 0 <= max_lag < n:
        raise LagOutOfRange(f"max lag {max_lag} must lie in [0, {n})")
    mean = float(x.mean())
    K = max_lag
    L = max(_BLOCK, 4 * K)
    nfft = sfft.next_fast_len(L + K + 1, real=True)
    acc = np.zeros(K + 1)
    comp = np.zeros(K + 1)  # Neumaier compensation across blocks
    for s in range(0, n, L):
        a = x[s:s + L] - mean
        b = x[s:s + L + K] - mean
        c = sfft.irfft(np.conj(sfft.rfft(a, nfft)) * sfft.rfft(b, nfft), nfft)[:K + 1]
        t = acc + c
        comp += np.where(np.abs(acc) >= np.abs(c), (acc - t) + c, (c - t) + acc)
        acc = t
    return (acc + comp) / n


@dataclass(frozen=True)
class AcfEstimate:
    max_lag: int
    gamma_hat: np.ndarray
    rho_hat: np.ndarray
    n: int
    label: SeriesLabel | None = None

    def lags(self) -> np.ndarray:
        return np.arange(self.max_lag + 1)


def default_max_lag(n: int) -> int:
    return max(1, min(10_000, n // 10))


def sample_acf(series, max_lag: int | None = None) -> AcfEstimate:
    x = as_float_array(series)
    n = x.size
    K = default_max_lag(n) if max_lag is None else int(max_lag)
    if not 0 < K < n:
        raise LagOutOfRange(f"max lag {K} must satisfy 0 < K < N = {n}")
    gamma = autocovariance(x, K)
    if not gamma[0] > 0:
        raise DegenerateSeries("series is constant; autocorrelation undefined")
    rho = gamma / gamma[0]
    rho[0] = 1.0
    return AcfEstimate(K, gamma, rho, n, label_of(series))


def mean_acf(estimates: Sequence[AcfEstimate]) -> AcfEstimate:
    """Pointwise average of daily ACFs; ``n`` becomes the number of days."""
    if not estimates:
        raise ValueError("no estimates to average")
    lags = {e.max_lag for e in estimates}
    if len(lags) != 1:
        raise MixedLags(f"estimates have different max lags: {sorted(lags)}")
    gamma = np.mean([e.gamma_hat for e in estimates], axis=0)
    rho = np.mean([e.rho_hat for e in estimates], axis=0)
    labels = {e.label for e in estimates}
    label = labels.pop() if len(labels) == 1 else None
    return AcfEstimate(estimates[0].max_lag, gamma, rho, len(estimates), label)


def loglog_points(est: AcfEstimate, k_min: int = 50) -> np.ndarray:
    """(log10 k, log10 rho(k)) for lags k >= k_min with rho(k) > 0, shape (m, 2)."""
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    k = est.lags()
    keep = (k >= k_min) & (est.rho_hat > 0)
    return np.column_stack([np.log10(k[keep]), np.log10(est.rho_hat[keep])])


def loglog_slope(est: AcfEstimate, k_min: int = 50, k_max: int = 2000) -> LineFit:
    """Power-law decay exponent fit (slope = -alpha) over [k_min, k_max]."""
    pts = loglog_points(est, k_min)
    pts = pts[pts[:, 0] <= np.log10(k_max)]
    if pts.shape[0] < 2:
        raise ValueError("fewer than two positive ACF values in the fit window")
    return ols_line(pts[:, 0], pts[:, 1])
