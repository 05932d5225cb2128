import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longmem.errors import InsufficientPoints, OutOfRange, TooFewFrequencies, WindowTooLarge
from longmem.scaling import (
    CRule, alpha_to_h, beta_to_h, default_m_grid, dfa_estimate, dfa_fit, dfa_fluctuation, dfa_profile,
    gph_estimate, gph_from_periodogram, gph_sweep, periodogram, resolve_c,
)
from longmem.series import SignSeries
from longmem.synth import gen_fgn, gen_iid_signs, replica_seeds


def direct_periodogram(w):
    """I(lambda_j) = |sum_t (w_t - wbar) e^{-i lambda_j t}|^2 / (2 pi N), j = 1..floor((N-1)/2)."""
    n = len(w)
    d = np.asarray(w, dtype=np.float64) - np.mean(w)
    t = np.arange(1, n + 1)
    out = []
    for j in range(1, (n - 1) // 2 + 1):
        lam = 2 * math.pi * j / n
        re = math.fsum(d * np.cos(lam * t))
        im = math.fsum(d * np.sin(lam * t))
        out.append((re * re + im * im) / (2 * math.pi * n))
    return np.array(out)


class TestConversions:
    def test_exact(self):
        assert alpha_to_h(0.6) == 0.7
        assert beta_to_h(0.4) == 0.7

    @pytest.mark.parametrize("fn,v", [(alpha_to_h, 1.2), (alpha_to_h, 0.0), (beta_to_h, 1.0), (beta_to_h, -0.1)])
    def test_out_of_range(self, fn, v):
        with pytest.raises(OutOfRange):
            fn(v)


class TestProfile:
    def test_examples(self):
        assert dfa_profile(SignSeries(np.array([1, 1, -1]))).tolist() == [1, 2, 1]
        assert dfa_profile(SignSeries(np.ones(5, dtype=int))).tolist() == [1, 2, 3, 4, 5]

    @given(st.lists(st.sampled_from([-1, 1]), min_size=2, max_size=50),
           st.lists(st.sampled_from([-1, 1]), min_size=2, max_size=50))
    def test_concatenation(self, a, b):
        pa, pb = dfa_profile(np.array(a, float)), dfa_profile(np.array(b, float))
        np.testing.assert_array_equal(dfa_profile(np.array(a + b, float)), np.concatenate([pa, pb + pa[-1]]))

    def test_compensated_path_matches_exact(self):
        # above the compensation threshold the profile must equal the exact integer cumsum
        s = gen_iid_signs(1_200_000, 0.5, 3)
        np.testing.assert_array_equal(dfa_profile(s), np.cumsum(s.signs.astype(np.int64)))


class TestFluctuation:
    def test_hand_ols(self):
        assert dfa_fluctuation(np.array([1.0, 1.0, -1.0]), 3) == pytest.approx(math.sqrt(2) / 3, abs=1e-15)

    def test_linear_profile(self):
        assert dfa_fluctuation(np.full(100, 0.7), 10) == pytest.approx(0.0, abs=1e-12)

    def test_window_too_large(self):
        with pytest.raises(WindowTooLarge):
            dfa_fluctuation(np.arange(10.0), 11)

    def test_trailing_window_discarded(self):
        x = np.random.default_rng(0).standard_normal(105)
        assert dfa_fluctuation(x, 10) == dfa_fluctuation(x[:100], 10)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_sign_flip_exact(self, seed):
        w = np.where(np.random.default_rng(seed).random(3000) < 0.5, 1.0, -1.0)
        a, b = dfa_estimate(w, m_min=20), dfa_estimate(-w, m_min=20)
        np.testing.assert_array_equal(a.f_of_m, b.f_of_m)
        assert a.h_hat == b.h_hat


class TestDfaEstimate:
    def test_power_law_fit(self):
        m = default_m_grid(2**17)
        h, _ = dfa_fit(m, m.astype(float) ** 0.83, 100)
        assert h == pytest.approx(0.83, abs=1e-12)

    def test_insufficient_points(self):
        with pytest.raises(InsufficientPoints):
            dfa_fit([10, 20, 150, 200], [1.0, 2.0, 3.0, 4.0], 100)

    def test_default_grid(self):
        g = default_m_grid(2**17)
        assert g[0] == 10 and g[-1] == 2**15 and len(g) == 24 and np.all(np.diff(g) > 0)

    def test_iid_slope(self):
        h = [dfa_estimate(gen_iid_signs(2**17, 0.5, s)).h_hat for s in range(5)]
        assert 0.45 <= np.mean(h) <= 0.55

    @pytest.mark.parametrize("hurst,lo,hi", [(0.7, 0.65, 0.75), (0.85, 0.79, 0.91)])
    def test_fgn(self, hurst, lo, hi):
        assert lo <= dfa_estimate(gen_fgn(2**17, hurst, 12)).h_hat <= hi


class TestPeriodogram:
    @pytest.mark.parametrize("n", [5, 64, 255, 1000, 4096])
    def test_matches_direct_dft(self, n):
        w = np.random.default_rng(n).standard_normal(n) + 0.3
        _, power = periodogram(w)
        ref = direct_periodogram(w)
        np.testing.assert_allclose(power, ref, rtol=1e-9, atol=1e-9 * ref.max())

    def test_constant(self):
        _, power = periodogram(np.full(64, 3.0))
        assert np.all(power == 0)

    def test_cosine_peak(self):
        n = 256
        t = np.arange(1, n + 1)
        lam, power = periodogram(np.cos(2 * np.pi * t * 8 / n))
        assert np.argmax(power) + 1 == 8
        assert lam[7] == pytest.approx(2 * np.pi * 8 / n)

    @pytest.mark.parametrize("n", [1001, 1000])
    def test_parseval(self, n):
        w = np.where(np.random.default_rng(n).random(n) < 0.5, 1.0, -1.0)
        _, power = periodogram(w)
        var = np.var(w)
        half = 2 * (2 * np.pi / n) * power.sum()
        d = w - w.mean()
        nyquist = 0.0 if n % 2 else (np.sum(d * (-1.0) ** np.arange(n)) ** 2) / n**2
        assert half + nyquist == pytest.approx(var, rel=1e-12)
        assert abs(half - var) / var <= 2 / n


class TestGph:
    def test_c_rules(self):
        assert resolve_c("sqrt", 2**17) == (362, CRule.SQRT_N)
        assert resolve_c("tenth", 2**17) == (6553, CRule.TENTH_HALF_N)
        assert resolve_c(50, 2**17) == (50, CRule.FIXED)

    def test_power_law(self):
        n = 4096
        lam = 2 * np.pi * np.arange(1, 2048) / n
        g = gph_from_periodogram(lam, lam**-0.4, 64)
        assert g.beta_hat == pytest.approx(0.4, abs=1e-12)
        assert g.h_hat == pytest.approx(0.7, abs=1e-12)

    def test_zero_ordinates_dropped(self):
        lam = 2 * np.pi * np.arange(1, 100) / 200
        power = lam**-0.4
        power[3] = 0.0
        g = gph_from_periodogram(lam, power, 20)
        assert g.n_zero == 1 and g.h_hat == pytest.approx(0.7, abs=1e-12)

    def test_too_few(self):
        lam = 2 * np.pi * np.arange(1, 10) / 20
        with pytest.raises(TooFewFrequencies):
            gph_from_periodogram(lam, np.zeros(9), 5)

    def test_deterministic(self):
        x = gen_fgn(4096, 0.7, 1)
        assert gph_estimate(x) == gph_estimate(x.copy())

    def test_fgn(self):
        assert 0.6 <= gph_estimate(gen_fgn(2**17, 0.7, 13)).h_hat <= 0.8

    def test_iid(self):
        assert 0.4 <= gph_estimate(gen_iid_signs(2**17, 0.5, 14)).h_hat <= 0.6

    def test_sweep(self):
        res = gph_sweep(gen_fgn(2**14, 0.7, 2))
        cs = [r.c for r in res]
        assert cs == sorted(set(cs)) and int(math.isqrt(2**14)) in cs


@pytest.mark.slow
@pytest.mark.parametrize("hurst", [0.55, 0.7, 0.85])
def test_consistency_triangle(hurst):
    close = []
    for ss in replica_seeds(int(hurst * 100), 50):
        x = gen_fgn(2**17, hurst, ss)
        close.append(abs(dfa_estimate(x).h_hat - gph_estimate(x).h_hat) <= 0.1)
    assert np.mean(close) >= 0.9
