"""Seeded generators for processes with known memory and break structure.

All randomness flows through numpy's PCG64 bit generator seeded from a
``SeedSequence``; replicas use spawned child sequences, so a replica's
stream depends only on (seed, replica index), not on scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import fft as sfft
from scipy.signal import lfilter

from .errors import EmbeddingFailure, LongMemoryBase
from .series import SeriesLabel, SignSeries

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.PCG64(ss))


def replica_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(count)


class GenKind(str, Enum):
    IID_SIGNS = "iid"
    AR1 = "ar1"
    FGN = "fgn"
    MEAN_SHIFT = "shift"


@dataclass(frozen=True)
class GenSpec:
    kind: GenKind
    n: int
    seed: int = 0
    p_sell: float = 0.5
    phi: float = 0.0
    sigma_eps: float = 1.0
    hurst: float = 0.5
    r_star: int | None = None
    mu_star: float | None = None
    base: "GenSpec | None" = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", GenKind(self.kind))
        if self.n < 2:
            raise ValueError("N must be >= 2")
        if not 0 <= self.p_sell <= 1:
            raise ValueError("p_sell must lie in [0, 1]")
        if not abs(self.phi) < 1:
            raise ValueError("|phi| must be < 1")
        if not 0 < self.hurst < 1:
            raise ValueError("H must lie in (0, 1)")
        if self.kind is GenKind.MEAN_SHIFT:
            if self.base is None or self.r_star is None or self.mu_star is None:
                raise ValueError("mean shift needs base, r_star and mu_star")
            if not 1 <= self.r_star < self.n:
                raise ValueError(f"r* must lie in [1, {self.n})")


def gen_iid_signs(n: int, p_sell: float = 0.5, seed=0, label: SeriesLabel | None = None) -> SignSeries:
    if not 0 <= p_sell <= 1:
        raise ValueError("p_sell must lie in [0, 1]")
    u = make_rng(seed).random(n)
    return SignSeries(np.where(u < p_sell, 1, -1).astype(np.int8), label)


def gen_ar1(n: int, phi: float, sigma_eps: float = 1.0, seed=0) -> np.ndarray:
    """Stationary Gaussian AR(1): W_1 ~ N(0, s^2/(1-phi^2)), then the recursion."""
    if not abs(phi) < 1:
        raise ValueError("|phi| must be < 1")
    eps = make_rng(seed).standard_normal(n) * sigma_eps
    out = np.empty(n)
    out[0] = eps[0] / np.sqrt(1 - phi * phi)
    if n > 1:
        out[1:], _ = lfilter([1.0], [1.0, -phi], eps[1:], zi=[phi * out[0]])
    return out


def fgn_autocovariance(k, hurst: float) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=np.float64))
    h2 = 2 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2 * k ** h2 + np.abs(k - 1) ** h2)


def gen_fgn(n: int, hurst: float, seed=0) -> np.ndarray:
    """Unit-variance fractional Gaussian noise by circulant embedding."""
    if not 0 < hurst < 1:
        raise ValueError("H must lie in (0, 1)")
    if n < 2:
        raise ValueError("N must be >= 2")
    gamma = fgn_autocovariance(np.arange(n + 1), hurst)
    row = np.concatenate([gamma, gamma[n - 1:0:-1]])  # length 2n
    lam = sfft.rfft(row).real
    lam = np.concatenate([lam, lam[-2:0:-1]])  # full spectrum of a symmetric row
    tol = 1e-9 * max(1.0, float(lam.max()))
    if lam.min() < -tol:
        raise EmbeddingFailure(f"circulant eigenvalue {lam.min():.3g} < 0 for H={hurst}, N={n}")
    lam = np.clip(lam, 0.0, None)
    m = lam.size
    rng = make_rng(seed)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    y = sfft.fft(np.sqrt(lam / m) * z)
    return y.real[:n].copy()


def _values(x) -> np.ndarray:
    return x.values() if isinstance(x, SignSeries) else np.asarray(x, dtype=np.float64)


def gen_mean_shift(n: int, r_star: int, mu_star: float, base: GenSpec, seed=0) -> np.ndarray:
    """Z_t = base_t for t <= r*, base_t + mu* afterwards."""
    if base.kind is GenKind.FGN:
        raise LongMemoryBase("structural-break null needs a short-memory base process")
    if base.kind is GenKind.MEAN_SHIFT:
        raise ValueError("base process cannot itself be a mean shift")
    if mu_star == 0:
        raise ValueError("mu* must be nonzero")
    if not 1 <= r_star < n:
        raise ValueError(f"r* must lie in [1, {n})")
    z = _values(generate(GenSpec(**{**base.__dict__, "n": n, "seed": seed}))).copy()
    z[r_star:] += mu_star
    return z


def signs_of(values, label: SeriesLabel | None = None) -> SignSeries:
    """Threshold at zero; exact zeros map to +1."""
    v = np.asarray(values)
    return SignSeries(np.where(v >= 0, 1, -1).astype(np.int8), label)


def generate(spec: GenSpec):
    """Dispatch on ``spec.kind``; signs come back as ``SignSeries``, others as arrays."""
    if spec.kind is GenKind.IID_SIGNS:
        return gen_iid_signs(spec.n, spec.p_sell, spec.seed)
    if spec.kind is GenKind.AR1:
        return gen_ar1(spec.n, spec.phi, spec.sigma_eps, spec.seed)
    if spec.kind is GenKind.FGN:
        return gen_fgn(spec.n, spec.hurst, spec.seed)
    return gen_mean_shift(spec.n, spec.r_star, spec.mu_star, spec.base, spec.seed)
