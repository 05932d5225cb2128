"""Hurst-exponent estimation by DFA and log-periodogram (GPH) regression."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from ._fit import ols_line
from .acf import as_float_array, label_of
from .errors import InsufficientPoints, OutOfRange, TooFewFrequencies, TooShort, WindowTooLarge
from .series import SeriesLabel

DEFAULT_M_MIN = 100
_COMPENSATE_ABOVE = 1_000_000
_BLOCK = 1 << 16
_CHUNK_ELEMS = 1 << 20


def alpha_to_h(alpha: float) -> float:
    """Hurst exponent from the ACF decay exponent alpha in (0, 1)."""
    if not 0 < alpha < 1:
        raise OutOfRange(f"alpha={alpha} outside (0, 1)")
    return 1 - alpha / 2


def beta_to_h(beta: float) -> float:
    """Hurst exponent from the spectral exponent beta in (0, 1)."""
    if not 0 < beta < 1:
        raise OutOfRange(f"beta={beta} outside (0, 1)")
    return (beta + 1) / 2


# ---------------------------------------------------------------- DFA

def dfa_profile(series) -> np.ndarray:
    """Running sum of the raw (uncentred) series."""
    x = as_float_array(series)
    if x.size < 2:
        raise TooShort("profile needs N >= 2")
    if x.size <= _COMPENSATE_ABOVE:
        return np.cumsum(x)
    # blockwise cumsum; block offsets come from exactly rounded sums
    out = np.empty_like(x)
    block_sums = []
    for s in range(0, x.size, _BLOCK):
        blk = x[s:s + _BLOCK]
        out[s:s + blk.size] = np.cumsum(blk) + math.fsum(block_sums)
        block_sums.append(math.fsum(blk))
    return out


def _fluctuation_from_profile(y: np.ndarray, m: int) -> float:
    n_win = y.size // m
    if n_win == 0:
        raise WindowTooLarge(f"window length {m} exceeds series length {y.size}")
    if m < 2:
        raise ValueError("window length must be >= 2")
    ic = np.arange(1, m + 1) - (m + 1) / 2.0
    sxx = float(ic @ ic)
    rows_per_chunk = max(1, _CHUNK_ELEMS // m)
    total = 0.0
    for r0 in range(0, n_win, rows_per_chunk):
        r1 = min(n_win, r0 + rows_per_chunk)
        Y = y[r0 * m:r1 * m].reshape(r1 - r0, m)
        mu = Y.mean(axis=1, keepdims=True)
        slope = (Y @ ic)[:, None] / sxx
        resid = Y - mu - slope * ic
        total += float(np.sqrt(np.einsum("ij,ij->i", resid, resid) / m).sum())
    return total / n_win


def dfa_fluctuation(series, m: int) -> float:
    """F(m): mean over floor(N/m) windows of the RMS residual of a linear fit."""
    return _fluctuation_from_profile(dfa_profile(series), int(m))


def default_m_grid(n: int, points: int = 24, lo: int = 10) -> np.ndarray:
    hi = n // 4
    if hi < lo:
        return np.array([], dtype=np.int64)
    return np.unique(np.round(np.geomspace(lo, hi, points)).astype(np.int64))


@dataclass(frozen=True)
class DfaResult:
    m_grid: np.ndarray
    f_of_m: np.ndarray
    m_min: int
    h_hat: float
    fit_stderr: float
    label: SeriesLabel | None = None


def dfa_fit(m_grid, f_of_m, m_min: int = DEFAULT_M_MIN) -> tuple[float, float]:
    """(slope, stderr) of log10 F against log10 m over m >= m_min."""
    m = np.asarray(m_grid, dtype=np.float64)
    f = np.asarray(f_of_m, dtype=np.float64)
    sel = (m >= m_min) & (f > 0)
    if sel.sum() < 3:
        raise InsufficientPoints(f"{int(sel.sum())} usable window lengths >= {m_min}; need 3")
    fit = ols_line(np.log10(m[sel]), np.log10(f[sel]))
    return fit.slope, fit.stderr


def dfa_estimate(series, m_grid: Sequence[int] | None = None, m_min: int = DEFAULT_M_MIN) -> DfaResult:
    y = dfa_profile(series)
    grid = default_m_grid(y.size) if m_grid is None else np.asarray(m_grid, dtype=np.int64)
    if np.count_nonzero(grid >= m_min) < 3:
        raise InsufficientPoints(f"fewer than 3 window lengths >= {m_min} for N={y.size}")
    f = np.array([_fluctuation_from_profile(y, int(m)) for m in grid])
    h, se = dfa_fit(grid, f, m_min)
    return DfaResult(grid, f, m_min, h, se, label_of(series))


# ---------------------------------------------------------------- GPH

def periodogram(series) -> tuple[np.ndarray, np.ndarray]:
    """Fourier frequencies 2 pi j / N, j = 1..floor((N-1)/2), and I(lambda_j)."""
    x = as_float_array(series)
    n = x.size
    if n < 4:
        raise TooShort("periodogram needs N >= 4")
    return fourier_frequencies(n), _periodogram_power(x)


def fourier_frequencies(n: int, count: int | None = None) -> np.ndarray:
    J = (n - 1) // 2 if count is None else count
    return 2 * np.pi * np.arange(1, J + 1) / n


def _periodogram_power(x: np.ndarray) -> np.ndarray:
    n = x.size
    J = (n - 1) // 2
    spec = sfft.rfft(x - x.mean(), overwrite_x=True)
    power = np.square(spec.real[1:J + 1])
    power += np.square(spec.imag[1:J + 1])
    del spec
    power /= 2 * np.pi * n
    return power


class CRule(str, Enum):
    SQRT_N = "sqrt"
    TENTH_HALF_N = "tenth"
    FIXED = "fixed"


def resolve_c(rule: str | int, n: int) -> tuple[int, CRule]:
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        return int(rule), CRule.FIXED
    rule = CRule(rule)
    if rule is CRule.SQRT_N:
        return math.isqrt(n), rule
    if rule is CRule.TENTH_HALF_N:
        return int(math.floor(0.1 * (n / 2))), rule
    raise ValueError("fixed rule needs an integer c")


@dataclass(frozen=True)
class GphResult:
    c: int
    c_rule: CRule
    beta_hat: float
    h_hat: float
    fit_stderr: float
    n_zero: int = 0  # zero periodogram ordinates dropped from the fit
    label: SeriesLabel | None = None


def gph_from_periodogram(lam, power, c: int, c_rule: CRule = CRule.FIXED) -> GphResult:
    lam = np.asarray(lam)[:c]
    power = np.asarray(power)[:c]
    pos = power > 0
    if pos.sum() < 3:
        raise TooFewFrequencies(f"{int(pos.sum())} usable frequencies among the first {c}")
    fit = ols_line(np.log(lam[pos]), np.log(power[pos]))
    beta = -fit.slope
    return GphResult(c, c_rule, beta, (beta + 1) / 2, fit.stderr, int(c - pos.sum()))


def gph_estimate(series, c: str | int = "sqrt") -> GphResult:
    x = as_float_array(series)
    n = x.size
    c_val, rule = resolve_c(c, n)
    J = (n - 1) // 2
    if not 1 <= c_val <= J:
        raise TooFewFrequencies(f"c={c_val} outside [1, {J}]")
    if n < 4:
        raise TooShort("periodogram needs N >= 4")
    res = gph_from_periodogram(fourier_frequencies(n, c_val), _periodogram_power(x), c_val, rule)
    return GphResult(res.c, res.c_rule, res.beta_hat, res.h_hat, res.fit_stderr, res.n_zero, label_of(series))


def default_c_sweep(n: int, points: int = 12) -> np.ndarray:
    """Log-spaced c from 10 up to the 0.1 * N/2 rule, including the sqrt(N) rule."""
    hi = min((n - 1) // 2, int(math.floor(0.1 * (n / 2))))
    if hi < 10:
        return np.array([], dtype=np.int64)
    grid = np.round(np.geomspace(10, hi, points)).astype(np.int64)
    extra = [c for c in (math.isqrt(n),) if 10 <= c <= hi]
    return np.unique(np.concatenate([grid, extra]).astype(np.int64))


def gph_sweep(series, cs: Sequence[int] | None = None) -> list[GphResult]:
    """GPH estimates over several c from one periodogram (diagnostic only)."""
    x = as_float_array(series)
    if x.size < 4:
        raise TooShort("periodogram needs N >= 4")
    power = _periodogram_power(x)
    cs = default_c_sweep(x.size) if cs is None else cs
    return [gph_from_periodogram(fourier_frequencies(x.size, int(c)), power, int(c)) for c in cs]
