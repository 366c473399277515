"""Weighted dynamic networks: snapshots, windows, scaling and GCN normalisation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    """Inputs cannot support the requested computation."""


@dataclass(frozen=True)
class Snapshot:
    adj: np.ndarray
    t: int

    @property
    def n(self) -> int:
        return self.adj.shape[0]


def validate_adjacency(adj: np.ndarray) -> None:
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError(f"adjacency must be square, got {adj.shape}")
    if not np.all(np.isfinite(adj)):
        raise ValueError("adjacency has non-finite entries")
    if np.any(adj < 0):
        raise ValueError("adjacency has negative entries")
    if np.any(np.diag(adj) != 0):
        raise ValueError("adjacency has a nonzero diagonal")
    if not np.array_equal(adj, adj.T):
        raise ValueError("adjacency is not symmetric")


@dataclass(frozen=True)
class DynamicNetwork:
    """Ordered snapshots over one node set.

    ``w_max`` is the largest weight in the training portion (the first
    ``train_steps`` snapshots, all of them by default).
    """

    snapshots: tuple[Snapshot, ...]
    w_max: float = field(default=0.0)
    scaled: bool = False
    clamped: int = 0

    @classmethod
    def from_arrays(cls, adjs, train_steps: int | None = None, validate: bool = True) -> "DynamicNetwork":
        adjs = [np.asarray(a, dtype=np.float64) for a in adjs]
        if not adjs:
            raise ConfigurationError("a dynamic network needs at least one snapshot")
        n = adjs[0].shape[0]
        for a in adjs:
            if a.shape != (n, n):
                raise ValueError(f"snapshot shape {a.shape} differs from ({n}, {n})")
            if validate:
                validate_adjacency(a)
        snaps = tuple(Snapshot(a, t) for t, a in enumerate(adjs))
        train = adjs if train_steps is None else adjs[:train_steps]
        w_max = max((float(a.max()) for a in train), default=0.0)
        return cls(snaps, w_max)

    @property
    def n(self) -> int:
        return self.snapshots[0].n

    @property
    def T(self) -> int:
        return len(self.snapshots)

    def __len__(self) -> int:
        return self.T

    def __getitem__(self, t: int) -> np.ndarray:
        return self.snapshots[t].adj

    def stack(self) -> np.ndarray:
        return np.stack([s.adj for s in self.snapshots])

    def with_train_split(self, train_steps: int) -> "DynamicNetwork":
        """Same snapshots, ``w_max`` recomputed over the first ``train_steps``."""
        w_max = max((float(s.adj.max()) for s in self.snapshots[:train_steps]), default=0.0)
        return DynamicNetwork(self.snapshots, w_max, self.scaled, self.clamped)


@dataclass(frozen=True)
class Window:
    inputs: tuple[np.ndarray, ...]
    target: np.ndarray
    t: int  # target step

    @property
    def L(self) -> int:
        return len(self.inputs)


def gcn_normalize(adj: np.ndarray) -> np.ndarray:
    """Symmetric normalisation with self-loops, D^-1/2 (A + I) D^-1/2."""
    return _kernels.gcn_normalize(np.ascontiguousarray(adj, dtype=np.float64))


def symmetrize_and_clean(raw: np.ndarray) -> np.ndarray:
    """(raw + raw^T)/2 with zero diagonal and negatives clamped to 0."""
    return _kernels.symmetrize_clean(np.ascontiguousarray(raw, dtype=np.float64))


def scale_weights(net: DynamicNetwork, train_steps: int | None = None) -> DynamicNetwork:
    """Divide every weight by the training maximum.

    Entries above 1 after division (test steps exceeding the historical
    maximum) are clamped to 1; the number of clamped entries is logged and
    kept on the result.
    """
    if train_steps is not None:
        net = net.with_train_split(train_steps)
    if net.w_max <= 0.0:
        raise ConfigurationError("training portion has no edges; cannot scale weights")
    w = net.w_max
    out = []
    clamped = 0
    for s in net.snapshots:
        a = s.adj / w
        over = a > 1.0
        k = int(over.sum())
        if k:
            clamped += k
            a[over] = 1.0
        out.append(Snapshot(a, s.t))
    if clamped:
        log.warning("clamped %d scaled weights above the training maximum", clamped)
    return DynamicNetwork(tuple(out), 1.0, True, clamped)


def unscale(pred: np.ndarray, w_max: float) -> np.ndarray:
    return np.asarray(pred, dtype=np.float64) * w_max


def make_windows(net: DynamicNetwork, L: int, stop: int | None = None) -> list[Window]:
    """All windows of ``L`` inputs whose target step is below ``stop``."""
    if L < 1:
        raise ConfigurationError(f"window length must be >= 1, got {L}")
    T = net.T if stop is None else stop
    if T <= L:
        raise ConfigurationError(f"need more than L={L} snapshots, have {T}")
    return [window_at(net, t, L) for t in range(L, T)]


def window_at(net: DynamicNetwork, t: int, L: int) -> Window:
    """Window whose inputs are steps t-L .. t-1 and whose target is step t."""
    if t < L or t >= net.T:
        raise ConfigurationError(f"no window with L={L} targets step {t} of {net.T}")
    inputs = tuple(net[k] for k in range(t - L, t))
    return Window(inputs, net[t], t)


def history_at(net: DynamicNetwork, t: int, L: int) -> tuple[np.ndarray, ...]:
    """The L snapshots preceding step t (t may equal T, one past the end)."""
    if t < L or t > net.T:
        raise ConfigurationError(f"no history of length {L} before step {t}")
    return tuple(net[k] for k in range(t - L, t))
