import numpy as np
import pytest

from hqtlp import numcore as nc
from hqtlp.baselines import (CollapseConfig, MFForecaster, RNNForecaster, collapse, cn_nmf_predict,
                             cn_svd_predict, decay_weights, dw_nmf_predict, lstm_cell, mf_baseline_predict,
                             nmf, rnn_baseline_predict, rnn_shapes, truncated_svd, weighted_nmf)
from hqtlp.dyngraph import ConfigurationError, DynamicNetwork
from hqtlp.numcore import ContractError
from hqtlp.training import TrainConfig

from oracles import random_weighted_graph

J3 = np.ones((3, 3)) - np.eye(3)


def valid(a):
    return np.array_equal(a, a.T) and np.all(np.diag(a) == 0) and np.all(a >= 0)


class TestCollapse:
    def test_single(self):
        a = random_weighted_graph(np.random.default_rng(0), 4)
        assert np.allclose(collapse([a], 0.3), a, rtol=0, atol=1e-15)

    def test_hand_weighted_mean(self):
        cn = collapse([2 * J3, 4 * J3], 0.5)
        assert np.allclose(cn, (10 / 3) * J3, rtol=1e-15)

    def test_equal_inputs(self):
        a = random_weighted_graph(np.random.default_rng(1), 5)
        assert np.allclose(collapse([a] * 4, 0.5), a, rtol=1e-14)

    def test_decay_weights(self):
        assert np.array_equal(decay_weights(3, 0.5), [0.25, 0.5, 1.0])

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            CollapseConfig(beta=1.0)
        with pytest.raises(ConfigurationError):
            CollapseConfig(rank=9).rank_for(4)
        assert CollapseConfig().rank_for(64) == 16 and CollapseConfig().rank_for(10) == 5


class TestSvd:
    def test_full_rank_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            a = random_weighted_graph(rng, 8)
            assert np.max(np.abs(truncated_svd(a, 8) - a)) < 1e-8

    def test_rank_one_recovery(self):
        rng = np.random.default_rng(3)
        u = rng.uniform(0.5, 2, 6)
        a = np.outer(u, u)
        np.fill_diagonal(a, 0.0)
        assert np.max(np.abs(truncated_svd(np.outer(u, u), 1) - np.outer(u, u))) < 1e-8
        assert valid(cn_svd_predict(a, 2))

    def test_rank_bounds(self):
        with pytest.raises(ContractError):
            truncated_svd(np.eye(3), 4)

    def test_repeatable(self):
        a = random_weighted_graph(np.random.default_rng(4), 7)
        assert np.array_equal(cn_svd_predict(a, 3), cn_svd_predict(a, 3))


class TestNmf:
    def test_monotone_and_nonnegative(self):
        rng = np.random.default_rng(5)
        for k in range(5):
            v = random_weighted_graph(rng, 8)
            trace = []
            w, h = nmf(v, 3, 100, seed=k, trace=trace)
            assert all(b <= a * (1 + 1e-12) for a, b in zip(trace, trace[1:]))
            assert np.all(w >= 0) and np.all(h >= 0)

    def test_rank_one_recovery(self):
        u = np.random.default_rng(6).uniform(0.5, 2.0, 7)
        v = np.outer(u, u)
        w, h = nmf(v, 1, 500)
        assert np.linalg.norm(w @ h - v) / np.linalg.norm(v) < 1e-3

    def test_zero_matrix_finite(self):
        w, h = nmf(np.zeros((4, 4)), 2, 20)
        assert np.all(np.isfinite(w @ h))

    def test_weighted_objective_monotone(self):
        rng = np.random.default_rng(7)
        snaps = [random_weighted_graph(rng, 6) for _ in range(4)]
        trace = []
        weighted_nmf(snaps, decay_weights(4, 0.5), 2, 80, trace=trace)
        assert all(b <= a * (1 + 1e-12) for a, b in zip(trace, trace[1:]))

    def test_dw_degenerate_matches_cn(self):
        a = random_weighted_graph(np.random.default_rng(8), 6)
        assert np.allclose(dw_nmf_predict([a, a, a], 0.5, 2, 50), cn_nmf_predict(a, 2, 50), atol=1e-10)

    def test_dw_beats_zero_on_stationary(self):
        a = random_weighted_graph(np.random.default_rng(9), 8)
        pred = dw_nmf_predict([a] * 5, 0.5, 4, 300)
        assert np.linalg.norm(pred - a) < np.linalg.norm(a)
        assert valid(pred)


class TestRecurrent:
    def test_lstm_zero_params(self):
        shapes = {k: np.zeros(s) for k, s in rnn_shapes("lstm", 3, 2).items() if k.startswith("lstm_")}
        c_prev = np.array([[0.4, -1.0]])
        h, c = lstm_cell(np.ones((1, 3)), np.array([[0.2, 0.1]]), c_prev, nc.constants(shapes))
        assert np.allclose(c.data, 0.5 * c_prev, atol=0)
        assert np.allclose(h.data, 0.5 * np.tanh(0.5 * c_prev), atol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            rnn_shapes("rnn", 3, 2)

    def test_gru_deterministic(self):
        rng = np.random.default_rng(10)
        net = DynamicNetwork.from_arrays([random_weighted_graph(rng, 5, w_hi=50.0) for _ in range(10)])
        cfg = TrainConfig(L=3, d_h=6, epochs_pretrain=2, epochs_online=1)
        a = rnn_baseline_predict(net, 7, "gru", cfg)
        b = rnn_baseline_predict(net, 7, "gru", cfg)
        assert len(a) == 3
        assert all(np.array_equal(x.pred, y.pred) for x, y in zip(a, b))

    def test_lstm_valid_outputs(self):
        rng = np.random.default_rng(11)
        net = DynamicNetwork.from_arrays([random_weighted_graph(rng, 5, w_hi=50.0) for _ in range(8)])
        recs = rnn_baseline_predict(net, 6, "lstm", TrainConfig(L=3, d_h=4, epochs_pretrain=1, epochs_online=1))
        assert all(valid(r.pred) for r in recs)

    def test_fit_needs_windows(self):
        with pytest.raises(ConfigurationError):
            RNNForecaster("gru", 4, TrainConfig(L=2, d_h=3)).fit([], 1)


class TestMfForecaster:
    @pytest.mark.parametrize("kind", ["cn-svd", "cn-nmf", "dw-nmf"])
    def test_records_valid(self, kind):
        rng = np.random.default_rng(12)
        net = DynamicNetwork.from_arrays([random_weighted_graph(rng, 6, w_hi=80.0) for _ in range(9)])
        recs = mf_baseline_predict(net, 5, kind, TrainConfig(L=3), CollapseConfig(rank=3, nmf_iters=30))
        assert [r.t for r in recs] == [5, 6, 7, 8]
        assert all(valid(r.pred) for r in recs)

    def test_unknown(self):
        with pytest.raises(ValueError):
            MFForecaster("svd++", 4, CollapseConfig())
