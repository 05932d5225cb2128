"""CUSUM change-point estimation and Berkes' long-memory-versus-break test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._blocks import centered_path, sum_sq_dev
from .acf import as_float_array, label_of
from .errors import OutOfRange, SegmentTooShort, TooShort, ZeroVariance
from .rescaled_range import andrews_bandwidth, ar1_mle, newey_west_sigma
from .series import SeriesLabel
from .synth import make_rng, replica_seeds

BERKES_CRITICAL_1PCT = 1.72
MIN_SEGMENT = 10


def _cusum_peak(z: np.ndarray) -> tuple[int, float]:
    """(smallest argmax r in 1..n, max value) of |sum_{i<=r} z_i - (r/n) sum z|."""
    path = centered_path(z, float(np.mean(z)))
    return path.argmax_abs, path.max_abs


def cusum_estimate(series) -> int:
    """1-based change-point estimate; ties resolve to the smallest maximiser."""
    z = as_float_array(series)
    if z.size < 3:
        raise TooShort("change-point estimation needs N >= 3")
    return _cusum_peak(z)[0]


def normalize_cp(r_hat: int, r_star: int, n: int) -> float:
    """Signed distance of r_hat from r*, scaled into [-1, 1] on either side."""
    if not 2 <= r_star <= n - 1:
        raise OutOfRange(f"r*={r_star} outside [2, {n - 1}]")
    if not 1 <= r_hat <= n:
        raise OutOfRange(f"r_hat={r_hat} outside [1, {n}]")
    if r_hat <= r_star:
        return (r_hat - r_star) / r_star
    return (r_hat - r_star) / (n - r_star)


def _segment_sigma(seg: np.ndarray, bandwidth) -> tuple[float, int]:
    if not sum_sq_dev(seg, float(seg.mean())) > 0:
        raise ZeroVariance("segment is constant")
    if bandwidth == "andrews":
        q = andrews_bandwidth(ar1_mle(seg), seg.size)
    else:
        q = min(int(bandwidth), seg.size - 1)
    return newey_west_sigma(seg, q), q


def segment_statistic(seg: np.ndarray, bandwidth="andrews") -> tuple[float, int]:
    """max_i |S_i - (i/n) S_n| / (sigma_hat(q) sqrt(n)) for one segment."""
    if seg.size < MIN_SEGMENT:
        raise SegmentTooShort(f"segment of length {seg.size} < {MIN_SEGMENT}")
    sigma, q = _segment_sigma(seg, bandwidth)
    return _cusum_peak(seg)[1] / (sigma * math.sqrt(seg.size)), q


@dataclass(frozen=True)
class ChangePointResult:
    n_breaks_hypothesized: int
    r_hat: tuple[int, ...]
    t_stats: tuple[float, ...]
    m_stat: float
    q_used: tuple[int, ...]
    reject_1pct: bool
    r_tilde: float | None = None
    label: SeriesLabel | None = field(default=None, compare=False)

    @property
    def t1(self) -> float:
        return self.t_stats[0]

    @property
    def t2(self) -> float | None:
        return self.t_stats[1] if len(self.t_stats) > 1 else None


def _one_break(z: np.ndarray, bandwidth, t2_from_break: bool):
    n = z.size
    r = _cusum_peak(z)[0]
    first, second = z[:r], z[r:]
    if min(first.size, second.size) < MIN_SEGMENT:
        raise SegmentTooShort(f"break at {r} leaves a segment shorter than {MIN_SEGMENT}")
    t1, q1 = segment_statistic(first, bandwidth)
    sigma2, q2 = _segment_sigma(second, bandwidth)
    if t2_from_break:
        # sums start at z_{r*} itself while sigma uses z_{r*+1..N}:
        # |sum_{j=r*}^{i} z_j - (i-r*)/(N-r*) sum_{j=r*}^{N} z_j|, i = r*..N
        seg = z[r - 1:]
        c = float(np.sum(seg)) / (n - r)
        dev = centered_path(seg, c, shift=c).max_abs
    else:
        dev = _cusum_peak(second)[1]
    t2 = dev / (sigma2 * math.sqrt(n - r))
    return (r,), (t1, t2), (q1, q2)


def _two_breaks(z: np.ndarray, bandwidth):
    r1 = _cusum_peak(z)[0]
    left, right = z[:r1], z[r1:]
    candidates = []
    for offset, seg in ((0, left), (r1, right)):
        if seg.size >= 2 * MIN_SEGMENT:
            r, peak = _cusum_peak(seg)
            candidates.append((peak / math.sqrt(seg.size), offset + r))
    if not candidates:
        raise SegmentTooShort("no segment long enough for a second break")
    r2 = max(candidates, key=lambda c: c[0])[1]
    cuts = sorted((r1, r2))
    segs = np.split(z, cuts)
    stats = [segment_statistic(seg, bandwidth) for seg in segs]
    return tuple(cuts), tuple(t for t, _ in stats), tuple(q for _, q in stats)


def berkes_test(series, n_breaks: int = 1, bandwidth="andrews", r_star: int | None = None,
                t2_from_break: bool = True) -> ChangePointResult:
    """Berkes' test of a short-memory series with ``n_breaks`` mean shifts.

    ``bandwidth`` is ``"andrews"`` (AR(1) plug-in per segment) or a fixed q.
    With one break, ``t2_from_break`` keeps the second-segment partial sums
    starting at the break index itself; set False to start one later.
    ``r_star`` (a known boundary) adds the normalised score of the first
    estimated break.
    """
    z = as_float_array(series)
    n = z.size
    if n_breaks == 0:
        t, q = segment_statistic(z, bandwidth)
        r_hat, ts, qs = (), (t,), (q,)
    elif n_breaks == 1:
        r_hat, ts, qs = _one_break(z, bandwidth, t2_from_break)
    elif n_breaks == 2:
        r_hat, ts, qs = _two_breaks(z, bandwidth)
    else:
        raise ValueError("n_breaks must be 0, 1 or 2")
    m = max(ts)
    r_tilde = None
    if r_star is not None:
        r_est = r_hat[0] if n_breaks == 1 else _cusum_peak(z)[0]
        r_tilde = normalize_cp(r_est, r_star, n)
    return ChangePointResult(n_breaks, r_hat, ts, m, qs, m > BERKES_CRITICAL_1PCT, r_tilde, label_of(series))


@dataclass(frozen=True)
class Ecdf:
    values: np.ndarray  # sorted sample
    cum_prob: np.ndarray  # i/n at each sorted value

    def __call__(self, x) -> np.ndarray:
        return np.searchsorted(self.values, x, side="right") / self.values.size

    def median(self) -> float:
        return float(np.median(self.values))


def null_ecdf(n_series: int, series_len: int, seed: int = 0) -> Ecdf:
    """ECDF of the normalised change-point score for i.i.d. N(0,1) series."""
    if n_series < 100:
        raise ValueError("n_series must be >= 100")
    r_star = series_len // 2
    scores = np.empty(n_series)
    for k, ss in enumerate(replica_seeds(seed, n_series)):
        z = make_rng(ss).standard_normal(series_len)
        scores[k] = normalize_cp(_cusum_peak(z)[0], r_star, series_len)
    scores.sort()
    return Ecdf(scores, np.arange(1, n_series + 1) / n_series)
