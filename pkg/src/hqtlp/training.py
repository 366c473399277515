"""Adversarial training of the generator/discriminator pair and online prediction.

Randomness is split into independent streams (initialisation, generator
noise for G updates, generator noise for D updates, prediction noise) so
that discriminator updates never shift the noise G trains on. With
``lambda_adv == 0`` the generator trajectory therefore equals that of the
discriminator-free :func:`train_reconstruction`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import model as M
from . import numcore as nc
from .dyngraph import (ConfigurationError, DynamicNetwork, Window, gcn_normalize, history_at,
                       make_windows, scale_weights, unscale, window_at)
from .metrics import evaluate
from .model import ModelDims
from .numcore import AdamState, Tape, Tensor

log = logging.getLogger(__name__)

ONLINE_WINDOWS = ("newest", "all")


@dataclass(frozen=True)
class TrainConfig:
    L: int = 10
    lambda_rec: float = 1.0
    lambda_adv: float = 0.01
    epochs_pretrain: int = 200
    epochs_online: int = 20
    d_steps_per_g_step: int = 1
    lr_g: float = 1e-3
    lr_d: float = 1e-3
    seed: int = 0
    tau: float = 0.001
    online_windows: str = "newest"
    online_restart: bool = False
    predict_draws: int = 1
    d_z: int = 16
    d_1: int = 64
    d_2: int = 32
    d_h: int = 128
    h_1: int = 256
    h_2: int = 64

    def __post_init__(self):
        if self.L < 1:
            raise ConfigurationError(f"L must be >= 1, got {self.L}")
        if not self.lambda_rec > 0:
            raise ConfigurationError("lambda_rec must be > 0")
        if self.lambda_adv < 0:
            raise ConfigurationError("lambda_adv must be >= 0")
        if self.epochs_pretrain < 0 or self.epochs_online < 0:
            raise ConfigurationError("epoch counts must be >= 0")
        if self.d_steps_per_g_step < 0:
            raise ConfigurationError("d_steps_per_g_step must be >= 0")
        if self.online_windows not in ONLINE_WINDOWS:
            raise ConfigurationError(f"online_windows must be one of {ONLINE_WINDOWS}")
        if self.predict_draws < 1:
            raise ConfigurationError("predict_draws must be >= 1")
        if self.tau < 0:
            raise ConfigurationError("tau must be >= 0")

    def dims(self, n: int) -> ModelDims:
        return ModelDims(n, self.d_z, self.d_1, self.d_2, self.d_h, self.h_1, self.h_2)

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in fields(cls)}


@dataclass
class PredictionRecord:
    t: int
    pred: np.ndarray
    truth: np.ndarray
    rmse: float
    ew_kl: float
    mr: float


def make_record(t: int, pred: np.ndarray, truth: np.ndarray, tau_abs: float) -> PredictionRecord:
    if pred.shape != truth.shape:
        raise ValueError(f"prediction {pred.shape} and truth {truth.shape} differ")
    rep = evaluate(pred, truth, tau_abs)
    return PredictionRecord(t, pred, truth, rep.rmse, rep.ew_kl, rep.mr)


# --------------------------------------------------------------------------
# Objectives
# --------------------------------------------------------------------------

def reconstruction_error(pred: Tensor, truth: np.ndarray) -> Tensor:
    """Mean squared error over the upper triangle."""
    idx = M.triu_flat(truth.shape[0])
    diff = nc.sub(nc.take(pred, idx), truth.reshape(-1)[idx].reshape(1, -1))
    return nc.mean(nc.mul(diff, diff))


def loss_g(pred, truth: np.ndarray, d_score=None, lambda_rec: float = 1.0, lambda_adv: float = 0.01,
           d_logit=None) -> Tensor:
    """lambda_rec * MSE + lambda_adv * (-log D(pred)).

    Give either the discriminator probability ``d_score`` or its logit
    ``d_logit`` (numerically safer). With ``lambda_adv == 0`` the
    adversarial term is not built at all.
    """
    loss = nc.scale(reconstruction_error(nc.as_tensor(pred), truth), lambda_rec)
    if lambda_adv == 0:
        return loss
    if d_logit is not None:
        fool = nc.softplus(nc.scale(d_logit, -1.0))
    elif d_score is not None:
        fool = nc.scale(nc.log(d_score), -1.0)
    else:
        raise ValueError("loss_g needs d_score or d_logit when lambda_adv > 0")
    return nc.add(loss, nc.reshape(nc.scale(fool, lambda_adv), ()))


def loss_d(d_real, d_fake, from_logits: bool = False) -> Tensor:
    """-log D(real) - log(1 - D(fake))."""
    if from_logits:
        total = nc.add(nc.softplus(nc.scale(d_real, -1.0)), nc.softplus(d_fake))
    else:
        total = nc.scale(nc.add(nc.log(d_real), nc.log(nc.one_minus(d_fake))), -1.0)
    return nc.reshape(total, ())


# --------------------------------------------------------------------------
# State
# --------------------------------------------------------------------------

@dataclass
class Streams:
    init: np.random.Generator
    g_noise: np.random.Generator
    d_noise: np.random.Generator
    predict: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "Streams":
        ss = np.random.SeedSequence(seed)
        return cls(*(np.random.default_rng(s) for s in ss.spawn(4)))


@dataclass
class AdversarialState:
    dims: ModelDims
    g: M.GeneratorParams
    d: M.DiscriminatorParams
    g_opt: AdamState = field(default_factory=AdamState)
    d_opt: AdamState = field(default_factory=AdamState)
    streams: Streams | None = None

    @classmethod
    def fresh(cls, dims: ModelDims, seed: int) -> "AdversarialState":
        streams = Streams.from_seed(seed)
        g = M.init_generator(dims, streams.init)
        d = M.init_discriminator(dims, streams.init)
        return cls(dims, g, d, AdamState(), AdamState(), streams)


LogRow = tuple[int, int, float, float]


def _normalized(window: Window) -> tuple[np.ndarray, ...]:
    return tuple(gcn_normalize(a) for a in window.inputs)


def generator_update(state: AdversarialState, a_hats, truth: np.ndarray, config: TrainConfig,
                     with_discriminator: bool) -> float:
    """One Adam step on G for a single window; returns the loss value."""
    dims = state.dims
    noise = M.draw_noise(state.streams.g_noise, len(a_hats), dims.n, dims.d_z)
    tape = Tape()
    p = tape.watch(state.g)
    pred = M.generator_forward(a_hats, noise, p, normalized=True)
    if with_discriminator and config.lambda_adv > 0:
        logit = M.discriminator_logit(pred, nc.constants(state.d))
        loss = loss_g(pred, truth, lambda_rec=config.lambda_rec, lambda_adv=config.lambda_adv, d_logit=logit)
    else:
        loss = loss_g(pred, truth, lambda_rec=config.lambda_rec, lambda_adv=0.0)
    grads = nc.backward(tape, loss)
    nc.adam_step(state.g, grads, state.g_opt, lr=config.lr_g)
    return loss.item()


def discriminator_update(state: AdversarialState, a_hats, truth: np.ndarray, config: TrainConfig) -> float:
    dims = state.dims
    noise = M.draw_noise(state.streams.d_noise, len(a_hats), dims.n, dims.d_z)
    fake = M.generator_forward(a_hats, noise, nc.constants(state.g), normalized=True).data
    tape = Tape()
    p = tape.watch(state.d)
    loss = loss_d(M.discriminator_logit(truth, p), M.discriminator_logit(fake, p), from_logits=True)
    grads = nc.backward(tape, loss)
    nc.adam_step(state.d, grads, state.d_opt, lr=config.lr_d)
    return loss.item()


def train_adversarial(windows: Sequence[Window], state: AdversarialState, config: TrainConfig,
                      epochs: int | None = None, log_rows: list | None = None) -> AdversarialState:
    """Alternating updates: D steps with G fixed, then one G step with D fixed, per window."""
    if not windows:
        raise ConfigurationError("no training windows")
    epochs = config.epochs_pretrain if epochs is None else epochs
    prepared = [(_normalized(w), w.target) for w in windows]
    for epoch in range(epochs):
        for k, (a_hats, truth) in enumerate(prepared):
            ld = math.nan
            for _ in range(config.d_steps_per_g_step):
                ld = discriminator_update(state, a_hats, truth, config)
            lg = generator_update(state, a_hats, truth, config, with_discriminator=True)
            if log_rows is not None:
                log_rows.append((epoch, windows[k].t, lg, ld))
    return state


def train_reconstruction(windows: Sequence[Window], state: AdversarialState, config: TrainConfig,
                         epochs: int | None = None, log_rows: list | None = None) -> AdversarialState:
    """Generator-only training on the reconstruction term; D is never read."""
    if not windows:
        raise ConfigurationError("no training windows")
    epochs = config.epochs_pretrain if epochs is None else epochs
    prepared = [(_normalized(w), w.target) for w in windows]
    for epoch in range(epochs):
        for k, (a_hats, truth) in enumerate(prepared):
            lg = generator_update(state, a_hats, truth, config, with_discriminator=False)
            if log_rows is not None:
                log_rows.append((epoch, windows[k].t, lg, math.nan))
    return state


def generator_predict(state: AdversarialState, inputs: Sequence[np.ndarray], draws: int = 1) -> np.ndarray:
    """Scaled prediction from L scaled snapshots; averages ``draws`` noise samples."""
    dims = state.dims
    a_hats = tuple(gcn_normalize(a) for a in inputs)
    p = nc.constants(state.g)
    acc = np.zeros((dims.n, dims.n))
    for _ in range(draws):
        noise = M.draw_noise(state.streams.predict, len(a_hats), dims.n, dims.d_z)
        acc += M.generator_forward(a_hats, noise, p, normalized=True).data
    return acc / draws


# --------------------------------------------------------------------------
# Forecasters: a uniform surface over HQ-TLP and the recurrent baselines
# --------------------------------------------------------------------------

class HQTLPForecaster:
    """Generator + discriminator trained adversarially on scaled snapshots."""

    name = "hqtlp"

    def __init__(self, n: int, config: TrainConfig, state: AdversarialState | None = None):
        self.config = config
        self.dims = config.dims(n)
        self.state = state or AdversarialState.fresh(self.dims, config.seed)

    def reset(self) -> None:
        self.state = AdversarialState.fresh(self.dims, self.config.seed)

    def fit(self, windows: Sequence[Window], epochs: int, log_rows: list | None = None) -> None:
        if self.config.lambda_adv == 0 and self.config.d_steps_per_g_step == 0:
            train_reconstruction(windows, self.state, self.config, epochs, log_rows)
        else:
            train_adversarial(windows, self.state, self.config, epochs, log_rows)

    def predict(self, inputs: Sequence[np.ndarray]) -> np.ndarray:
        return generator_predict(self.state, inputs, self.config.predict_draws)


def pretrain(forecaster, scaled: DynamicNetwork, split_t: int, config: TrainConfig,
             log_rows: list | None = None) -> None:
    """Fit on every window whose target precedes ``split_t``."""
    windows = make_windows(scaled, config.L, stop=split_t)
    forecaster.fit(windows, config.epochs_pretrain, log_rows)


def check_split(T: int, split_t: int, L: int) -> None:
    if split_t < L + 1:
        raise ConfigurationError(f"split step {split_t} must be >= L + 1 = {L + 1}")
    if split_t > T:
        raise ConfigurationError(f"split step {split_t} beyond the {T} available snapshots")


def predict_online(net: DynamicNetwork, split_t: int, forecaster, config: TrainConfig,
                   log_rows: list | None = None) -> list[PredictionRecord]:
    """Fine-tune on the newest observed window, then predict the next step.

    ``net`` is in original units; ``forecaster`` must already be pretrained
    on windows with targets before ``split_t``. For each target t in
    ``split_t .. T-1`` the forecaster first trains on the window whose target
    is t-1 (inputs t-1-L .. t-2), then predicts t from inputs t-L .. t-1.
    Step t itself is read only for scoring, after the prediction exists.
    """
    L = config.L
    check_split(net.T, split_t, L)
    raw_w_max = net.with_train_split(split_t).w_max
    scaled = scale_weights(net, split_t)
    tau_abs = config.tau * raw_w_max
    records = []
    for t in range(split_t, net.T):
        if config.online_restart:
            forecaster.reset()
            pretrain(forecaster, scaled, t, config, log_rows)
        elif config.epochs_online > 0:
            if config.online_windows == "newest":
                recent = [window_at(scaled, t - 1, L)]
            else:
                recent = make_windows(scaled, L, stop=t)
            forecaster.fit(recent, config.epochs_online, log_rows)
        pred = unscale(forecaster.predict(history_at(scaled, t, L)), raw_w_max)
        records.append(make_record(t, pred, net[t], tau_abs))
    return records


def run_online(net: DynamicNetwork, split_t: int, forecaster, config: TrainConfig,
               log_rows: list | None = None) -> list[PredictionRecord]:
    """Pretrain on the history before ``split_t`` and roll forward to the end."""
    check_split(net.T, split_t, config.L)
    scaled = scale_weights(net, split_t)
    pretrain(forecaster, scaled, split_t, config, log_rows)
    return predict_online(net, split_t, forecaster, config, log_rows)


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)


def with_overrides(config: TrainConfig, **kw) -> TrainConfig:
    return replace(config, **kw)
