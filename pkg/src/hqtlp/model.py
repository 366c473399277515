"""Generator (GCN x2 -> GRU -> dense) and discriminator (MLP) networks.

Parameters are plain ``dict[str, np.ndarray]``; forward functions take the
same keys mapped to :class:`~hqtlp.numcore.Tensor` so one code path serves
training (tracked tensors) and inference (constants).

GRU convention: ``h_t = z * h_prev + (1 - z) * h_candidate``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import numcore as nc
from .dyngraph import gcn_normalize
from .numcore import ShapeError, Tensor

GeneratorParams = dict[str, np.ndarray]
DiscriminatorParams = dict[str, np.ndarray]


@dataclass(frozen=True)
class ModelDims:
    n: int
    d_z: int = 16
    d_1: int = 64
    d_2: int = 32
    d_h: int = 128
    h_1: int = 256
    h_2: int = 64

    @property
    def pairs(self) -> int:
        return self.n * (self.n - 1) // 2


@lru_cache(maxsize=None)
def triu_flat(n: int) -> np.ndarray:
    """Row-major flat indices of the strict upper triangle of an n x n matrix."""
    iu = np.triu_indices(n, k=1)
    return iu[0] * n + iu[1]


def upper_triangle(adj: np.ndarray) -> np.ndarray:
    return adj.reshape(-1)[triu_flat(adj.shape[0])]


def _gru_shapes(prefix: str, d_in: int, d_h: int) -> dict[str, tuple[int, int]]:
    out = {}
    for gate in ("r", "z", "c"):
        out[f"{prefix}W_{gate}"] = (d_in, d_h)
        out[f"{prefix}U_{gate}"] = (d_h, d_h)
        out[f"{prefix}b_{gate}"] = (1, d_h)
    return out


def generator_shapes(dims: ModelDims) -> dict[str, tuple[int, int]]:
    shapes = {
        "gcn1": (dims.d_z, dims.d_1),
        "gcn2": (dims.d_1, dims.d_2),
    }
    shapes.update(_gru_shapes("gru_", dims.n * dims.d_2, dims.d_h))
    shapes["fc_w"] = (dims.d_h, dims.pairs)
    shapes["fc_b"] = (1, dims.pairs)
    return shapes


def discriminator_shapes(dims: ModelDims) -> dict[str, tuple[int, int]]:
    return {
        "w1": (dims.pairs, dims.h_1),
        "b1": (1, dims.h_1),
        "w2": (dims.h_1, dims.h_2),
        "b2": (1, dims.h_2),
        "w3": (dims.h_2, 1),
        "b3": (1, 1),
    }


def parameter_count(shapes: Mapping[str, tuple[int, int]]) -> int:
    return int(sum(a * b for a, b in shapes.values()))


def init_params(shapes: Mapping[str, tuple[int, int]], rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases (any 1-row tensor is a bias)."""
    params = {}
    for name, (fan_in, fan_out) in shapes.items():
        if fan_in == 1:
            params[name] = np.zeros((fan_in, fan_out))
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    return params


def init_generator(dims: ModelDims, rng: np.random.Generator) -> GeneratorParams:
    return init_params(generator_shapes(dims), rng)


def init_discriminator(dims: ModelDims, rng: np.random.Generator) -> DiscriminatorParams:
    return init_params(discriminator_shapes(dims), rng)


def draw_noise(rng: np.random.Generator, L: int, n: int, d_z: int) -> np.ndarray:
    """L independent standard-normal node-attribute matrices, shape (L, n, d_z)."""
    return rng.standard_normal((L, n, d_z))


# --------------------------------------------------------------------------
# Layers
# --------------------------------------------------------------------------

def gcn_layer(a_hat, h, w, activation: str = "linear") -> Tensor:
    """activation(A_hat @ H @ W)."""
    out = nc.matmul(nc.matmul(a_hat, h), w)
    if activation == "relu":
        return nc.relu(out)
    if activation == "linear":
        return out
    raise ValueError(f"unknown activation {activation!r}")


def gru_cell(x, h_prev, p: Mapping[str, Tensor], prefix: str = "gru_") -> Tensor:
    """One GRU step; ``p`` holds W_*, U_*, b_* for gates r, z, c."""
    x, h_prev = nc.as_tensor(x), nc.as_tensor(h_prev)
    W_r = p[prefix + "W_r"]
    if x.shape != (1, W_r.shape[0]) or h_prev.shape != (1, W_r.shape[1]):
        raise ShapeError(f"gru_cell: x {x.shape}, h {h_prev.shape} vs W_r {W_r.shape}")
    xw = {g: nc.matmul(x, p[f"{prefix}W_{g}"]) for g in "rzc"}
    return gru_recur(xw, h_prev, p, prefix)


def gru_recur(xw: Mapping[str, Tensor], h_prev, p: Mapping[str, Tensor], prefix: str = "gru_") -> Tensor:
    """GRU update given the input projections ``x @ W_g`` for g in r, z, c.

    r = sigmoid(xW_r + hU_r + b_r); z = sigmoid(xW_z + hU_z + b_z)
    cand = tanh(xW_c + (r*h)U_c + b_c); h' = z*h + (1-z)*cand
    """
    def gate(g, h):
        return nc.add(nc.add(xw[g], nc.matmul(h, p[f"{prefix}U_{g}"])), p[f"{prefix}b_{g}"])

    r = nc.sigmoid(gate("r", h_prev))
    z = nc.sigmoid(gate("z", h_prev))
    cand = nc.tanh(gate("c", nc.mul(r, h_prev)))
    return nc.add(nc.mul(z, h_prev), nc.mul(nc.one_minus(z), cand))


def gru_sequence(xs: Tensor, p: Mapping[str, Tensor], prefix: str = "gru_") -> Tensor:
    """Run the GRU over the rows of ``xs`` (L x d_in) from a zero state; return the last state.

    Input projections for all steps are computed as one ``xs @ W_g`` product.
    """
    d_h = p[prefix + "U_r"].shape[0]
    proj = {g: nc.matmul(xs, p[f"{prefix}W_{g}"]) for g in "rzc"}
    h = Tensor(np.zeros((1, d_h)))
    for t in range(xs.shape[0]):
        h = gru_recur({g: nc.row(proj[g], t) for g in "rzc"}, h, p, prefix)
    return h


def dense_to_adjacency(h, w, b, n: int) -> Tensor:
    """sigmoid(h @ w + b) mirrored into a symmetric zero-diagonal n x n matrix."""
    return nc.to_symmetric(nc.sigmoid(nc.add(nc.matmul(h, w), b)), n)


def gcn_features(a_hat, noise, p: Mapping[str, Tensor]) -> Tensor:
    """Two-layer GCN over noise attributes: A(relu(A Z W1))W2, shape n x d_2."""
    h1 = gcn_layer(a_hat, noise, p["gcn1"], "relu")
    return gcn_layer(a_hat, h1, p["gcn2"], "linear")


def generator_forward(inputs: Sequence[np.ndarray], noise: np.ndarray, p: Mapping[str, Tensor],
                      normalized: bool = False) -> Tensor:
    """Predict the next scaled adjacency from L scaled snapshots.

    ``noise`` has shape (L, n, d_z). Pass ``normalized=True`` when ``inputs``
    are already GCN-normalised.
    """
    L = len(inputs)
    if noise.shape[0] != L:
        raise ShapeError(f"noise has {noise.shape[0]} steps, window has {L}")
    n = inputs[0].shape[0]
    rows = []
    for t in range(L):
        a_hat = inputs[t] if normalized else gcn_normalize(inputs[t])
        rows.append(nc.reshape(gcn_features(a_hat, noise[t], p), (1, -1)))
    h = gru_sequence(nc.stack_rows(rows), p)
    return dense_to_adjacency(h, p["fc_w"], p["fc_b"], n)


def discriminator_logit(adj, p: Mapping[str, Tensor]) -> Tensor:
    """Pre-sigmoid discriminator score; reads only the upper triangle."""
    adj = nc.as_tensor(adj)
    x = nc.take(adj, triu_flat(adj.shape[0]))
    h = nc.relu(nc.add(nc.matmul(x, p["w1"]), p["b1"]))
    h = nc.relu(nc.add(nc.matmul(h, p["w2"]), p["b2"]))
    return nc.add(nc.matmul(h, p["w3"]), p["b3"])


def discriminator_forward(adj, p: Mapping[str, Tensor]) -> Tensor:
    """Probability that ``adj`` is a real scaled snapshot, in (0, 1)."""
    return nc.sigmoid(discriminator_logit(adj, p))
