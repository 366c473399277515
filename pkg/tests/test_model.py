import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqtlp import model as M
from hqtlp import numcore as nc
from hqtlp.dyngraph import gcn_normalize
from hqtlp.model import ModelDims
from hqtlp.numcore import ShapeError

from oracles import random_weighted_graph

SMALL = ModelDims(n=6, d_z=4, d_1=8, d_2=4, d_h=8, h_1=16, h_2=8)


def const(params):
    return nc.constants(params)


def window(rng, n, L):
    return [random_weighted_graph(rng, n, w_hi=1.0) for _ in range(L)]


class TestShapes:
    def test_generator_shapes_consistent(self):
        s = M.generator_shapes(SMALL)
        assert s["gcn1"] == (4, 8) and s["gcn2"] == (8, 4)
        assert s["gru_W_r"] == (6 * 4, 8) and s["gru_U_c"] == (8, 8)
        assert s["fc_w"] == (8, 15) and s["fc_b"] == (1, 15)

    def test_parameter_count_closed_form(self):
        n, dz, d1, d2, dh = 6, 4, 8, 4, 8
        P = n * (n - 1) // 2
        expected = dz * d1 + d1 * d2 + 3 * (n * d2 * dh + dh * dh + dh) + dh * P + P
        assert M.parameter_count(M.generator_shapes(SMALL)) == expected

    def test_discriminator_shapes(self):
        s = M.discriminator_shapes(SMALL)
        assert [s[k] for k in ("w1", "w2", "w3")] == [(15, 16), (16, 8), (8, 1)]

    def test_init_biases_zero(self):
        p = M.init_generator(SMALL, np.random.default_rng(0))
        assert not np.any(p["gru_b_r"]) and not np.any(p["fc_b"])
        limit = np.sqrt(6 / (4 + 8))
        assert np.all(np.abs(p["gcn1"]) <= limit)


class TestGcnLayer:
    def test_identity_propagation(self):
        h = np.array([[1.0, -2.0], [3.0, 4.0]])
        assert np.array_equal(M.gcn_layer(np.eye(2), h, np.eye(2)).data, h)

    def test_hand_average(self):
        out = M.gcn_layer(np.full((2, 2), 0.5), np.array([[2.0], [4.0]]), np.array([[1.0]]))
        assert np.array_equal(out.data, [[3.0], [3.0]])

    def test_relu_negative(self):
        out = M.gcn_layer(np.eye(3), -np.ones((3, 2)), np.eye(2), "relu")
        assert np.array_equal(out.data, np.zeros((3, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            M.gcn_layer(np.eye(3), np.ones((2, 2)), np.eye(2))

    def test_gcn_stack_permutation_equivariant(self):
        rng = np.random.default_rng(1)
        a = random_weighted_graph(rng, 6)
        z = rng.standard_normal((6, 4))
        p = const(M.init_generator(SMALL, rng))
        perm = rng.permutation(6)
        base = M.gcn_features(gcn_normalize(a), z, p).data
        permuted = M.gcn_features(gcn_normalize(a[perm][:, perm]), z[perm], p).data
        assert np.allclose(permuted, base[perm], atol=1e-12)


def zero_gru(d_in, d_h):
    return {k: np.zeros(s) for k, s in M._gru_shapes("gru_", d_in, d_h).items()}


class TestGru:
    def test_zero_params_halves_state(self):
        h = np.array([[1.0, -2.0, 0.5]])
        out = M.gru_cell(np.ones((1, 4)), h, const(zero_gru(4, 3)))
        assert np.allclose(out.data, 0.5 * h, atol=0)

    def test_zero_state_zero_params(self):
        out = M.gru_cell(np.ones((1, 4)), np.zeros((1, 3)), const(zero_gru(4, 3)))
        assert np.array_equal(out.data, np.zeros((1, 3)))

    def test_update_gate_saturated_carries_state(self):
        p = zero_gru(4, 3)
        p["gru_b_z"][:] = 50.0
        p["gru_b_c"][:] = 1.0
        h = np.array([[0.3, -0.7, 2.0]])
        out = M.gru_cell(np.ones((1, 4)), h, const(p))
        assert np.allclose(out.data, h, atol=1e-12)

    def test_matches_hand_formula(self):
        rng = np.random.default_rng(2)
        p = {k: rng.standard_normal(s) for k, s in M._gru_shapes("gru_", 4, 3).items()}
        x = rng.standard_normal((1, 4))
        h = rng.standard_normal((1, 3))

        def sig(v):
            return 1 / (1 + np.exp(-v))

        r = sig(x @ p["gru_W_r"] + h @ p["gru_U_r"] + p["gru_b_r"])
        z = sig(x @ p["gru_W_z"] + h @ p["gru_U_z"] + p["gru_b_z"])
        c = np.tanh(x @ p["gru_W_c"] + (r * h) @ p["gru_U_c"] + p["gru_b_c"])
        expected = z * h + (1 - z) * c
        assert np.allclose(M.gru_cell(x, h, const(p)).data, expected, atol=1e-13)

    def test_sequence_equals_cell_loop(self):
        rng = np.random.default_rng(3)
        p = const({k: rng.standard_normal(s) for k, s in M._gru_shapes("gru_", 5, 4).items()})
        xs = rng.standard_normal((3, 5))
        h = np.zeros((1, 4))
        for t in range(3):
            h = M.gru_cell(xs[t:t + 1], h, p).data
        assert np.allclose(M.gru_sequence(nc.Tensor(xs), p).data, h, atol=1e-13)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            M.gru_cell(np.ones((1, 5)), np.zeros((1, 3)), const(zero_gru(4, 3)))


class TestGenerator:
    def test_zero_output_layer_gives_half(self):
        rng = np.random.default_rng(4)
        p = M.init_generator(SMALL, rng)
        p["fc_w"][:] = 0.0
        out = M.generator_forward(window(rng, 6, 3), M.draw_noise(rng, 3, 6, 4), const(p)).data
        off = ~np.eye(6, dtype=bool)
        assert np.all(out[off] == 0.5) and np.all(np.diag(out) == 0)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        p = const(M.init_generator(SMALL, rng))
        inputs = window(rng, 6, 3)
        z = M.draw_noise(rng, 3, 6, 4)
        a = M.generator_forward(inputs, z, p).data
        b = M.generator_forward(inputs, z, p).data
        assert np.array_equal(a, b)

    def test_normalized_flag(self):
        rng = np.random.default_rng(6)
        p = const(M.init_generator(SMALL, rng))
        inputs = window(rng, 6, 3)
        z = M.draw_noise(rng, 3, 6, 4)
        a = M.generator_forward(inputs, z, p).data
        b = M.generator_forward([gcn_normalize(x) for x in inputs], z, p, normalized=True).data
        assert np.array_equal(a, b)

    def test_noise_length_checked(self):
        rng = np.random.default_rng(7)
        with pytest.raises(ShapeError):
            M.generator_forward(window(rng, 6, 3), M.draw_noise(rng, 2, 6, 4),
                                const(M.init_generator(SMALL, rng)))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 30.0))
    def test_output_structurally_valid(self, seed, scale):
        rng = np.random.default_rng(seed)
        p = {k: scale * rng.standard_normal(v.shape) for k, v in M.init_generator(SMALL, rng).items()}
        out = M.generator_forward(window(rng, 6, 3), M.draw_noise(rng, 3, 6, 4), const(p)).data
        assert np.array_equal(out, out.T)
        assert np.all(np.diag(out) == 0)
        assert np.all((out >= 0) & (out <= 1))


class TestDiscriminator:
    def test_zero_params(self):
        p = {k: np.zeros(s) for k, s in M.discriminator_shapes(SMALL).items()}
        assert M.discriminator_forward(np.ones((6, 6)), const(p)).item() == 0.5

    def test_open_interval(self):
        rng = np.random.default_rng(8)
        p = const(M.init_discriminator(SMALL, rng))
        for _ in range(10):
            y = M.discriminator_forward(random_weighted_graph(rng, 6, w_hi=1.0), p).item()
            assert 0 < y < 1

    def test_reads_upper_triangle_only(self):
        rng = np.random.default_rng(9)
        p = const(M.init_discriminator(SMALL, rng))
        a = random_weighted_graph(rng, 6, w_hi=1.0)
        b = np.triu(a, 1)
        assert M.discriminator_forward(a, p).item() == M.discriminator_forward(b, p).item()
