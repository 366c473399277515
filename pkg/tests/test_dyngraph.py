import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqtlp.dyngraph import (ConfigurationError, DynamicNetwork, gcn_normalize, make_windows,
                            scale_weights, symmetrize_and_clean, unscale, window_at)

from oracles import gcn_normalize_bruteforce, random_weighted_graph


def net_of(adjs, train=None):
    return DynamicNetwork.from_arrays(adjs, train_steps=train)


class TestGcnNormalize:
    def test_empty_graph_is_identity(self):
        assert np.array_equal(gcn_normalize(np.zeros((2, 2))), np.eye(2))

    def test_single_edge(self):
        out = gcn_normalize(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(out, 0.5, rtol=0, atol=1e-15)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 11))
        a = random_weighted_graph(rng, n, isolated=seed % 3)
        assert np.max(np.abs(gcn_normalize(a) - gcn_normalize_bruteforce(a))) < 1e-12

    def test_row_sum_property(self):
        rng = np.random.default_rng(42)
        a = random_weighted_graph(rng, 9, isolated=2)
        ai = a + np.eye(9)
        d = ai.sum(axis=1)
        expected = d ** -0.5 * (ai @ d ** -0.5)
        assert np.allclose(gcn_normalize(a).sum(axis=1), expected, rtol=0, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_symmetric_nonnegative(self, n, seed):
        a = random_weighted_graph(np.random.default_rng(seed), n)
        out = gcn_normalize(a)
        assert np.array_equal(out, out.T)
        assert np.all(out >= 0)


class TestScaling:
    def test_direct_division(self):
        a = np.array([[0.0, 1000.0, 0.0], [1000.0, 0.0, 2000.0], [0.0, 2000.0, 0.0]])
        s = scale_weights(net_of([a]))
        assert set(np.unique(s[0])) == {0.0, 0.5, 1.0}

    def test_unit_max_idempotent(self):
        a = np.array([[0.0, 0.25], [0.25, 0.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        s = scale_weights(net_of([a, b]))
        again = scale_weights(s)
        assert np.array_equal(again[0], s[0]) and np.array_equal(again[1], s[1])

    def test_all_zero_training_rejected(self):
        with pytest.raises(ConfigurationError):
            scale_weights(net_of([np.zeros((3, 3))]))

    def test_test_steps_clamped_and_logged(self, caplog):
        a = np.array([[0.0, 10.0], [10.0, 0.0]])
        b = np.array([[0.0, 30.0], [30.0, 0.0]])
        with caplog.at_level(logging.WARNING):
            s = scale_weights(net_of([a, b]), train_steps=1)
        assert s[1][0, 1] == 1.0
        assert s.clamped == 2
        assert "clamped 2" in caplog.text

    def test_round_trip_on_training_portion(self):
        rng = np.random.default_rng(7)
        adjs = [random_weighted_graph(rng, 8, w_hi=2000.0) for _ in range(5)]
        net = net_of(adjs)
        s = scale_weights(net)
        for t in range(5):
            assert np.max(np.abs(unscale(s[t], net.w_max) - adjs[t])) < 1e-12 * net.w_max

    def test_unscale_examples(self):
        assert np.array_equal(unscale(np.zeros((3, 3)), 2000.0), np.zeros((3, 3)))
        assert unscale(np.array([[0.5]]), 2000.0)[0, 0] == 1000.0


class TestWindows:
    def series(self, T, n=3):
        rng = np.random.default_rng(T)
        return net_of([random_weighted_graph(rng, n) for _ in range(T)])

    def test_count(self):
        assert len(make_windows(self.series(12), 10)) == 2

    def test_single_window(self):
        (w,) = make_windows(self.series(11), 10)
        assert w.t == 10 and w.L == 10

    def test_too_short(self):
        with pytest.raises(ConfigurationError):
            make_windows(self.series(10), 10)

    def test_coverage_and_contiguity(self):
        net = self.series(20)
        ws = make_windows(net, 4)
        assert [w.t for w in ws] == list(range(4, 20))
        for w in ws:
            for k, a in enumerate(w.inputs):
                assert a is net[w.t - 4 + k]
            assert w.target is net[w.t]

    def test_window_at_bounds(self):
        with pytest.raises(ConfigurationError):
            window_at(self.series(12), 3, 4)


class TestSymmetrizeAndClean:
    def test_fixed_point(self):
        a = random_weighted_graph(np.random.default_rng(0), 6)
        assert np.array_equal(symmetrize_and_clean(a), a)

    def test_hand_example(self):
        out = symmetrize_and_clean(np.array([[5.0, 1.0], [3.0, 7.0]]))
        assert np.array_equal(out, [[0.0, 2.0], [2.0, 0.0]])

    def test_all_negative(self):
        assert np.array_equal(symmetrize_and_clean(-np.ones((4, 4))), np.zeros((4, 4)))


class TestDynamicNetwork:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            net_of([np.array([[0.0, 1.0], [0.0, 0.0]])])

    def test_rejects_diagonal(self):
        with pytest.raises(ValueError, match="diagonal"):
            net_of([np.eye(2)])

    def test_rejects_mixed_sizes(self):
        with pytest.raises(ValueError):
            net_of([np.zeros((2, 2)), np.zeros((3, 3))])

    def test_w_max_from_training_only(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        net = net_of([a, 9 * a], train=1)
        assert net.w_max == 1.0 and net.T == 2
