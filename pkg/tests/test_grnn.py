import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from reslife.grnn import HALF_RESPONSE, GrnnModel, grnn_build, grnn_predict, grnn_predict_batch, kernel_activations
from reslife.rng import make_rng


class TestBuild:
    def test_bias_for_spread_005(self):
        X = make_rng(0, "g").random((10, 3))
        m = grnn_build(X, np.arange(10.0), 0.05)
        assert m.centers.shape == (10, 3)
        assert m.bias == pytest.approx(16.652, abs=1e-12)

    @pytest.mark.parametrize("spread", [0.01, 0.03, 0.5, 7.0])
    def test_bias_times_spread(self, spread):
        assert grnn_build([[0.0]], [1.0], spread).bias == HALF_RESPONSE / spread

    def test_single_row(self):
        m = grnn_build([[0.2, 0.4]], [3.0], 0.1)
        for x in ([0.0, 0.0], [0.2, 0.4], [50.0, -50.0]):
            assert grnn_predict(m, x) == 3.0

    @pytest.mark.parametrize("spread", [0.0, -1.0])
    def test_bad_spread(self, spread):
        with pytest.raises(ValueError):
            grnn_build([[0.0]], [1.0], spread)

    def test_empty(self):
        with pytest.raises(ValueError):
            grnn_build(np.zeros((0, 2)), [], 0.1)


class TestPredict:
    def test_half_response_at_spread(self):
        spread = 0.04
        m = grnn_build([[0.0, 0.0]], [7.0], spread)
        x = np.array([spread * 0.6, spread * 0.8])  # Euclidean distance = spread
        assert kernel_activations(m, x)[0] == pytest.approx(0.5, abs=1e-4)
        assert grnn_predict(m, x) == 7.0

    def test_exact_recall_small_spread(self):
        X = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]])
        t = np.array([1.0, 2.0, 3.0, 4.0])
        m = grnn_build(X, t, 0.01)
        for x, target in zip(X, t):
            assert grnn_predict(m, x) == pytest.approx(target, abs=1e-6)

    def test_hand_kernel_sum(self):
        m = grnn_build([[0.0], [1.0]], [0.0, 1.0], 1.0)
        b = HALF_RESPONSE
        k0, k1 = math.exp(-(0.25 * b) ** 2), math.exp(-(0.75 * b) ** 2)
        assert grnn_predict(m, [0.25]) == pytest.approx(k1 / (k0 + k1), abs=1e-15)

    def test_underflow_falls_back_to_nearest(self):
        m = grnn_build([[0.0], [1.0], [3.0]], [10.0, 20.0, 30.0], 1e-4)
        assert grnn_predict(m, [0.9]) == 20.0
        # equidistant: lowest index wins
        assert grnn_predict(m, [0.5]) == 10.0
        np.testing.assert_array_equal(grnn_predict_batch(m, [[0.9], [0.5], [2.9]]), [20.0, 10.0, 30.0])

    def test_arity(self):
        with pytest.raises(ValueError):
            grnn_predict(grnn_build([[0.0, 0.0]], [1.0], 0.1), [1.0])

    def test_batch_matches_single(self):
        rng = make_rng(1, "g")
        m = grnn_build(rng.random((30, 4)), rng.random(30), 0.2)
        Q = rng.random((15, 4))
        np.testing.assert_allclose(grnn_predict_batch(m, Q), [grnn_predict(m, q) for q in Q], rtol=1e-12)

    def test_model_immutable(self):
        m = grnn_build([[0.0]], [1.0], 0.1)
        with pytest.raises(ValueError):
            m.targets[0] = 5.0


class TestProperties:
    @settings(max_examples=100, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        spread=st.floats(0.01, 2.0),
        q=arrays(np.float64, 3, elements=st.floats(-2, 2)),
    )
    def test_convex_combination_and_duplication(self, seed, spread, q):
        rng = make_rng(seed, "gp")
        X, t = rng.random((8, 3)), rng.normal(size=8)
        m = grnn_build(X, t, spread)
        y = grnn_predict(m, q)
        assert t.min() - 1e-12 <= y <= t.max() + 1e-12
        m2 = grnn_build(np.vstack([X, X]), np.concatenate([t, t]), spread)
        assert grnn_predict(m2, q) == pytest.approx(y, rel=1e-12, abs=1e-12)
