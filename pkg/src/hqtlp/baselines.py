"""Comparison methods: collapsed-network SVD/NMF, decay-weighted NMF, LSTM/GRU regressors.

The matrix-factorisation methods are training-free: each prediction uses
only the L snapshots preceding the target. DW-NMF is a generic stand-in
for the graph-regularised NMF family and fits one shared factorisation to
all snapshots with exponentially decaying weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import model as M
from . import numcore as nc
from .dyngraph import ConfigurationError, DynamicNetwork, Window, symmetrize_and_clean
from .numcore import AdamState, ContractError, Tape, Tensor
from .training import PredictionRecord, TrainConfig, loss_g, run_online

NMF_EPS = 1e-12


@dataclass(frozen=True)
class CollapseConfig:
    beta: float = 0.5
    rank: int | None = None  # None -> min(16, n // 2)
    nmf_iters: int = 300
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ConfigurationError(f"beta must lie in (0, 1), got {self.beta}")
        if self.rank is not None and self.rank < 1:
            raise ConfigurationError("rank must be >= 1")
        if self.nmf_iters < 0:
            raise ConfigurationError("nmf_iters must be >= 0")

    def rank_for(self, n: int) -> int:
        r = min(16, max(1, n // 2)) if self.rank is None else self.rank
        if r > n:
            raise ConfigurationError(f"rank {r} exceeds node count {n}")
        return r


def decay_weights(L: int, beta: float) -> np.ndarray:
    """beta**(L-l) for l = 1..L; the newest snapshot gets weight 1."""
    return beta ** np.arange(L - 1, -1, -1, dtype=np.float64)


def collapse(inputs: Sequence[np.ndarray], beta: float) -> np.ndarray:
    """Decay-weighted mean of the window, newest snapshot weighted most."""
    if len(inputs) < 1:
        raise ContractError("collapse needs at least one snapshot")
    w = decay_weights(len(inputs), beta)
    return np.tensordot(w / w.sum(), np.stack(inputs), axes=1)


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # largest-magnitude entry of each left singular vector made positive
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def truncated_svd(a: np.ndarray, r: int) -> np.ndarray:
    n = a.shape[0]
    if r > n or r < 1:
        raise ContractError(f"rank {r} outside 1..{n}")
    u, s, vt = np.linalg.svd(a)
    u, vt = _fix_signs(u[:, :r], vt[:r])
    return (u * s[:r]) @ vt


def cn_svd_predict(cn: np.ndarray, r: int) -> np.ndarray:
    return symmetrize_and_clean(truncated_svd(cn, r))


def _nmf_init(v: np.ndarray, r: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    n, m = v.shape
    avg = np.sqrt(max(v.mean(), NMF_EPS) / r)
    w = avg * rng.uniform(0.1, 1.0, size=(n, r))
    h = avg * rng.uniform(0.1, 1.0, size=(r, m))
    return w, h


def nmf(v: np.ndarray, r: int, iters: int = 300, seed: int = 0,
        trace: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Lee-Seung multiplicative updates for min ||V - WH||_F^2 with W, H >= 0."""
    return weighted_nmf([v], np.ones(1), r, iters, seed, trace)


def weighted_nmf(snaps: Sequence[np.ndarray], weights: np.ndarray, r: int, iters: int = 300,
                 seed: int = 0, trace: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Multiplicative updates for min sum_l w_l ||A_l - WH||_F^2 with W, H >= 0.

    Denominators are floored at 1e-12 so all-zero rows stay finite.
    ``trace`` (if given) receives the objective before the first update and
    after every W/H sweep.
    """
    weights = np.asarray(weights, dtype=np.float64)
    total = weights.sum()
    # sum_l w_l A_l; the multiplicative steps only need this and sum_l w_l
    acc = np.tensordot(weights, np.stack(snaps), axes=1)
    w, h = _nmf_init(acc / total, r, seed)

    def objective():
        wh = w @ h
        return float(sum(wl * np.sum((a - wh) ** 2) for wl, a in zip(weights, snaps)))

    if trace is not None:
        trace.append(objective())
    for _ in range(iters):
        h *= (w.T @ acc) / np.maximum(total * (w.T @ w) @ h, NMF_EPS)
        w *= (acc @ h.T) / np.maximum(total * w @ (h @ h.T), NMF_EPS)
        if trace is not None:
            trace.append(objective())
    return w, h


def cn_nmf_predict(cn: np.ndarray, r: int, iters: int = 300, seed: int = 0,
                   trace: list | None = None) -> np.ndarray:
    w, h = nmf(cn, r, iters, seed, trace)
    return symmetrize_and_clean(w @ h)


def dw_nmf_predict(inputs: Sequence[np.ndarray], beta: float, r: int, iters: int = 300, seed: int = 0,
                   trace: list | None = None) -> np.ndarray:
    w, h = weighted_nmf(inputs, decay_weights(len(inputs), beta), r, iters, seed, trace)
    return symmetrize_and_clean(w @ h)


class MFForecaster:
    """Training-free forecaster over the window's collapsed network."""

    def __init__(self, kind: str, n: int, cfg: CollapseConfig):
        if kind not in ("cn-svd", "cn-nmf", "dw-nmf"):
            raise ValueError(f"unknown factorisation method {kind!r}")
        self.name = kind
        self.cfg = cfg
        self.rank = cfg.rank_for(n)

    def reset(self) -> None:
        pass

    def fit(self, windows, epochs, log_rows=None) -> None:
        pass

    def predict(self, inputs: Sequence[np.ndarray]) -> np.ndarray:
        c = self.cfg
        if self.name == "dw-nmf":
            return dw_nmf_predict(inputs, c.beta, self.rank, c.nmf_iters, c.seed)
        cn = collapse(inputs, c.beta)
        if self.name == "cn-svd":
            return cn_svd_predict(cn, self.rank)
        return cn_nmf_predict(cn, self.rank, c.nmf_iters, c.seed)


# --------------------------------------------------------------------------
# Recurrent regressors trained on reconstruction error only
# --------------------------------------------------------------------------

def lstm_shapes(d_in: int, d_h: int, prefix: str = "lstm_") -> dict[str, tuple[int, int]]:
    out = {}
    for gate in ("i", "f", "o", "g"):
        out[f"{prefix}W_{gate}"] = (d_in, d_h)
        out[f"{prefix}U_{gate}"] = (d_h, d_h)
        out[f"{prefix}b_{gate}"] = (1, d_h)
    return out


def lstm_cell(x, h_prev, c_prev, p, prefix: str = "lstm_") -> tuple[Tensor, Tensor]:
    """Standard LSTM step: c' = f*c + i*g, h' = o*tanh(c')."""

    def pre(g):
        return nc.add(nc.add(nc.matmul(x, p[f"{prefix}W_{g}"]), nc.matmul(h_prev, p[f"{prefix}U_{g}"])),
                      p[f"{prefix}b_{g}"])

    i = nc.sigmoid(pre("i"))
    f = nc.sigmoid(pre("f"))
    o = nc.sigmoid(pre("o"))
    g = nc.tanh(pre("g"))
    c = nc.add(nc.mul(f, c_prev), nc.mul(i, g))
    return nc.mul(o, nc.tanh(c)), c


def rnn_shapes(kind: str, n: int, d_h: int) -> dict[str, tuple[int, int]]:
    pairs = n * (n - 1) // 2
    if kind == "gru":
        shapes = M._gru_shapes("gru_", pairs, d_h)
    elif kind == "lstm":
        shapes = lstm_shapes(pairs, d_h)
    else:
        raise ValueError(f"cell kind must be 'lstm' or 'gru', got {kind!r}")
    shapes["fc_w"] = (d_h, pairs)
    shapes["fc_b"] = (1, pairs)
    return shapes


def lstm_sequence(xs: Tensor, p, prefix: str = "lstm_") -> Tensor:
    d_h = p[prefix + "U_i"].shape[0]
    proj = {g: nc.matmul(xs, p[f"{prefix}W_{g}"]) for g in "ifog"}
    h = Tensor(np.zeros((1, d_h)))
    c = Tensor(np.zeros((1, d_h)))
    for t in range(xs.shape[0]):
        pre = {g: nc.add(nc.add(nc.row(proj[g], t), nc.matmul(h, p[f"{prefix}U_{g}"])), p[f"{prefix}b_{g}"])
               for g in "ifog"}
        c = nc.add(nc.mul(nc.sigmoid(pre["f"]), c), nc.mul(nc.sigmoid(pre["i"]), nc.tanh(pre["g"])))
        h = nc.mul(nc.sigmoid(pre["o"]), nc.tanh(c))
    return h


def rnn_forward(kind: str, inputs: Sequence[np.ndarray], p) -> Tensor:
    """Run the cell over flattened upper triangles; dense sigmoid head."""
    n = inputs[0].shape[0]
    xs = Tensor(np.stack([M.upper_triangle(a) for a in inputs]))
    if kind == "gru":
        h = M.gru_sequence(xs, p)
    else:
        h = lstm_sequence(xs, p)
    return M.dense_to_adjacency(h, p["fc_w"], p["fc_b"], n)


class RNNForecaster:
    """LSTM or GRU over raw scaled snapshots, trained on MSE alone."""

    def __init__(self, kind: str, n: int, config: TrainConfig):
        self.kind = kind
        self.name = kind
        self.n = n
        self.config = config
        self.reset()

    def reset(self) -> None:
        rng = np.random.default_rng(np.random.SeedSequence(self.config.seed).spawn(1)[0])
        self.params = M.init_params(rnn_shapes(self.kind, self.n, self.config.d_h), rng)
        self.opt = AdamState()

    def step(self, window: Window) -> float:
        tape = Tape()
        pred = rnn_forward(self.kind, window.inputs, tape.watch(self.params))
        loss = loss_g(pred, window.target, lambda_rec=self.config.lambda_rec, lambda_adv=0.0)
        nc.adam_step(self.params, nc.backward(tape, loss), self.opt, lr=self.config.lr_g)
        return loss.item()

    def fit(self, windows: Sequence[Window], epochs: int, log_rows: list | None = None) -> None:
        if not windows:
            raise ConfigurationError("no training windows")
        for epoch in range(epochs):
            for w in windows:
                loss = self.step(w)
                if log_rows is not None:
                    log_rows.append((epoch, w.t, loss, float("nan")))

    def predict(self, inputs: Sequence[np.ndarray]) -> np.ndarray:
        return rnn_forward(self.kind, inputs, nc.constants(self.params)).data


def rnn_baseline_predict(net: DynamicNetwork, split_t: int, cell_kind: str,
                         config: TrainConfig) -> list[PredictionRecord]:
    return run_online(net, split_t, RNNForecaster(cell_kind, net.n, config), config)


def mf_baseline_predict(net: DynamicNetwork, split_t: int, kind: str, config: TrainConfig,
                        cfg: CollapseConfig | None = None) -> list[PredictionRecord]:
    return run_online(net, split_t, MFForecaster(kind, net.n, cfg or CollapseConfig()), config)
