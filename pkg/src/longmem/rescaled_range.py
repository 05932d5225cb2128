"""Rescaled-range statistic, pox plots and Lo's modified R/S test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from ._blocks import centered_path, lag1_products, sum_sq_dev
from ._fit import ols_line
from .acf import as_float_array, autocovariance, label_of
from .errors import DegenerateSeries, EmptyGrid, NonPositiveVariance, ZeroVariance
from .series import SeriesLabel

LO_CRITICAL_REGION = (0.809, 1.862)  # asymptotic 5% acceptance interval for V
PHI_CLAMP = 1e-6
DEFAULT_LO_BANDWIDTHS = (0, 5, 10, 25, 50, 100, 250, 500)


def _range_and_sd(x: np.ndarray) -> tuple[float, float]:
    m = float(x.mean())
    path = centered_path(x, m)
    return path.max - path.min, math.sqrt(sum_sq_dev(x, m) / x.size)


def rescaled_range(series, t: int, k: int) -> float:
    """Q(t, k) = R(t, k) / S(t, k) over the window w[t+1..t+k] (1-based)."""
    x = as_float_array(series)
    if t < 0 or k < 2 or t + k > x.size:
        raise ValueError(f"window (t={t}, k={k}) does not fit in a series of length {x.size}")
    r, s = _range_and_sd(x[t:t + k])
    if s == 0:
        raise ZeroVariance(f"window (t={t}, k={k}) is constant")
    return r / s


def default_k_grid(n: int) -> np.ndarray:
    top = int(math.floor(math.log2(n / 2)))
    return 2 ** np.arange(4, top + 1)


def pox_anchors(n: int, blocks: int) -> np.ndarray:
    i = np.arange(1, blocks + 1)
    return np.unique((n * (i - 1)) // blocks + 1)


@dataclass(frozen=True)
class PoxPlot:
    blocks: int
    k_grid: np.ndarray
    anchors: list  # per k: anchors actually used
    q_values: list  # per k: Q(t, k) for those anchors
    r_bar: np.ndarray
    skipped: np.ndarray  # per k: anchors dropped for constant windows
    slope_hat: float | None
    fit_range: tuple[float, float]
    label: SeriesLabel | None = None

    @property
    def n_anchors(self) -> np.ndarray:
        return np.array([len(a) for a in self.anchors])


def pox_plot(series, blocks: int = 100, k_grid: Sequence[int] | None = None,
             fit_range: tuple[float, float] = (1e4, np.inf)) -> PoxPlot:
    """Mean rescaled range over B block anchors for each window length k.

    ``r_bar`` is NaN where no anchor fits; ``slope_hat`` is the log-log OLS
    slope over grid points inside ``fit_range`` (None if fewer than two).
    """
    if blocks < 1:
        raise ValueError("blocks must be >= 1")
    x = as_float_array(series)
    n = x.size
    ks = default_k_grid(n) if k_grid is None else np.asarray(k_grid, dtype=np.int64)
    if np.any(ks < 2):
        raise ValueError("every window length must be >= 2")
    starts = pox_anchors(n, blocks)

    anchors, qs, r_bar, skipped = [], [], [], []
    for k in ks:
        used, vals, n_skip = [], [], 0
        for t in starts[starts + k <= n]:
            r, s = _range_and_sd(x[t:t + k])
            if s == 0:
                n_skip += 1
                continue
            used.append(int(t))
            vals.append(r / s)
        anchors.append(np.array(used, dtype=np.int64))
        qs.append(np.array(vals))
        r_bar.append(math.fsum(vals) / len(vals) if vals else np.nan)
        skipped.append(n_skip)
    r_bar = np.array(r_bar)
    ok = np.isfinite(r_bar)
    if not ok.any():
        raise EmptyGrid("no window length has a usable anchor")

    lo, hi = fit_range
    sel = ok & (ks >= lo) & (ks <= hi)
    slope = ols_line(np.log10(ks[sel]), np.log10(r_bar[sel])).slope if sel.sum() >= 2 else None
    return PoxPlot(blocks, ks, anchors, qs, r_bar, np.array(skipped), slope, (lo, hi), label_of(series))


def newey_west_sigma(series, q: int, autocov: np.ndarray | None = None) -> float:
    """Newey-West long-run standard deviation with Bartlett weights to lag q.

    ``autocov`` may carry precomputed divisor-N autocovariances (lags 0..>=q).
    """
    x = as_float_array(series)
    n = x.size
    if not 0 <= q < n:
        raise ValueError(f"bandwidth q={q} must lie in [0, {n})")
    var = sum_sq_dev(x, float(x.mean())) / n  # S^2(1, N)
    if q > 0:
        gamma = autocovariance(x, q) if autocov is None else np.asarray(autocov)[:q + 1]
        i = np.arange(1, q + 1)
        var += 2.0 * float(np.sum((1.0 - i / (q + 1.0)) * gamma[1:q + 1]))
    if not var > 0:
        raise NonPositiveVariance(f"Newey-West variance {var:.3g} <= 0 at q={q}")
    return math.sqrt(var)


def ar1_mle(series) -> float:
    """Conditional Gaussian MLE of the AR(1) coefficient, clamped inside (-1, 1)."""
    x = as_float_array(series)
    if x.size < 3:
        raise DegenerateSeries("AR(1) fit needs at least 3 observations")
    num, den = lag1_products(x, float(x.mean()))
    if den == 0:
        raise DegenerateSeries("series is constant; AR(1) coefficient undefined")
    phi = num / den
    return min(max(phi, -1.0 + PHI_CLAMP), 1.0 - PHI_CLAMP)


def andrews_bandwidth(phi: float, n: int) -> int:
    """AR(1) plug-in bandwidth; |2 phi / (1 - phi^2)| keeps negative phi real."""
    base = abs(2.0 * phi / (1.0 - phi * phi))
    q = math.floor((1.5 * n) ** (1.0 / 3.0) * base ** (2.0 / 3.0))
    return int(min(q, n - 1))


def andrews_q(series) -> int:
    x = as_float_array(series)
    return andrews_bandwidth(ar1_mle(x), x.size)


class QSource(str, Enum):
    FIXED = "fixed"
    ANDREWS = "andrews"


@dataclass(frozen=True)
class LoResult:
    q: int
    q_source: QSource
    phi_hat: float | None
    sigma_hat: float
    r_range: float
    q_tilde: float
    v: float
    reject_5pct: bool
    label: SeriesLabel | None = field(default=None, compare=False)


def lo_reject(v: float) -> bool:
    lo, hi = LO_CRITICAL_REGION
    return not (lo <= v <= hi)


def lo_test(series, bandwidth: int | str = "andrews", autocov: np.ndarray | None = None) -> LoResult:
    """Lo's modified rescaled-range test of short memory.

    ``bandwidth`` is a fixed lag q or ``"andrews"`` for the AR(1) plug-in.
    The range R is taken over the full sample.
    """
    x = as_float_array(series)
    n = x.size
    if isinstance(bandwidth, str):
        if bandwidth != "andrews":
            raise ValueError(f"unknown bandwidth rule {bandwidth!r}")
        phi = ar1_mle(x)
        q, source = andrews_bandwidth(phi, n), QSource.ANDREWS
    else:
        phi, q, source = None, int(bandwidth), QSource.FIXED
    if autocov is not None and len(autocov) <= q:
        autocov = None
    sigma = newey_west_sigma(x, q, autocov)
    r, _ = _range_and_sd(x)
    q_tilde = r / sigma
    v = q_tilde / math.sqrt(n)
    return LoResult(q, source, phi, sigma, r, q_tilde, v, lo_reject(v), label_of(series))
