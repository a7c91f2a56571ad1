import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reslife.rng import make_rng
from reslife.weibull import (
    WeibullFitError,
    WeibullModel,
    decile_table,
    fit_weibull_mle,
    log_likelihood,
    score,
    weibull_baseline_residual,
    weibull_cdf,
)


def sample(beta, eta, n, seed):
    u = make_rng(seed, "weibull-test").random(n)
    return eta * (-np.log1p(-u)) ** (1.0 / beta)


class TestCdf:
    def test_at_eta(self):
        assert weibull_cdf(WeibullModel(1.7522, 8971), 8971) == pytest.approx(0.6321205588, abs=1e-9)

    def test_at_zero(self):
        assert weibull_cdf(WeibullModel(2.0, 5.0), 0.0) == 0.0

    def test_exponential_case(self):
        assert weibull_cdf(WeibullModel(1.0, 100.0), 100.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            weibull_cdf(WeibullModel(1.0, 1.0), -1.0)

    def test_monotone_and_limits(self):
        m = WeibullModel(1.7, 50.0)
        t = np.linspace(0, 1000, 2001)
        F = np.array([weibull_cdf(m, x) for x in t])
        assert np.all(np.diff(F) >= 0)
        assert F[0] == 0 and F[-1] == pytest.approx(1.0)

    def test_deciles_invert_cdf(self):
        m = WeibullModel(1.7522, 8971)
        for p, t in decile_table(m):
            assert weibull_cdf(m, t) == pytest.approx(p, abs=1e-12)


class TestBaseline:
    @pytest.mark.parametrize("elapsed, expected", [(0, 8971), (8971, 0), (10000, 0), (971, 8000)])
    def test_values(self, elapsed, expected):
        assert weibull_baseline_residual(WeibullModel(1.7522, 8971), elapsed) == expected


class TestFit:
    def test_recovers_truth_and_matches_grid_oracle(self):
        t = sample(1.7522, 8971, 1000, seed=0)
        m = fit_weibull_mle(t)
        assert 1.66 <= m.beta <= 1.85
        assert 8700 <= m.eta <= 9250
        betas = np.linspace(1.0, 3.0, 401)
        etas = np.linspace(8000, 10000, 401)
        ll = np.array([[log_likelihood(t, b, e) for e in etas] for b in betas])
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        assert abs(m.beta - betas[i]) <= betas[1] - betas[0]
        assert abs(m.eta - etas[j]) <= etas[1] - etas[0]

    def test_score_vanishes(self):
        for seed in range(10):
            t = sample(0.5 + seed * 0.4, 10.0 ** (seed % 4), 50, seed)
            m = fit_weibull_mle(t)
            g = score(t, m.beta, m.eta)
            # express the eta component per unit log-scale so units cancel
            assert abs(g[0]) < 1e-6 and abs(g[1] * m.eta) < 1e-6

    def test_score_matches_finite_difference(self):
        t = sample(2.0, 30.0, 40, 1)
        b, e = 1.8, 28.0
        h = 1e-6
        fd = [(log_likelihood(t, b + h, e) - log_likelihood(t, b - h, e)) / (2 * h),
              (log_likelihood(t, b, e + h) - log_likelihood(t, b, e - h)) / (2 * h)]
        np.testing.assert_allclose(score(t, b, e), fd, rtol=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(1e-3, 1e4), seed=st.integers(0, 1000))
    def test_scale_invariance(self, c, seed):
        t = sample(1.5, 100.0, 30, seed)
        a, b = fit_weibull_mle(t), fit_weibull_mle(t * c)
        assert b.beta == pytest.approx(a.beta, abs=1e-8)
        assert b.eta == pytest.approx(a.eta * c, rel=1e-8)

    @pytest.mark.parametrize("bad", [[], [1.0, 2.0], [5.0, 5.0, 5.0], [1.0, 2.0, 0.0], [1.0, -2.0, 3.0]])
    def test_rejects_bad_samples(self, bad):
        with pytest.raises(WeibullFitError):
            fit_weibull_mle(bad)

    def test_model_validation(self):
        with pytest.raises(ValueError):
            WeibullModel(0.0, 1.0)
        with pytest.raises(ValueError):
            WeibullModel(1.0, -1.0)
