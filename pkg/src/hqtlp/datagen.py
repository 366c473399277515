"""Edge-list time-series I/O and synthetic sparse, wide-range dynamic networks.

Edge-list format (UTF-8, LF)::

    # comment lines start with '#'
    n T
    t i j w        one line per edge, 0 <= i < j < n, 0 <= t < T, w > 0

Pairs that are not listed have weight 0. :func:`save_edgelist` writes
records ordered by (t, i, j) with weights at 17 significant digits, so a
load/save round trip is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .dyngraph import ConfigurationError, DynamicNetwork


class EdgeListError(ValueError):
    """Malformed edge-list text; ``lineno`` is 1-based."""

    def __init__(self, msg: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


class EdgeListValidationError(EdgeListError):
    """Well-formed line whose content breaks the format's invariants."""


def _data_lines(text: str):
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def parse_edgelist(text: str) -> DynamicNetwork:
    lines = _data_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise EdgeListError("missing 'n T' header") from None
    parts = header.split()
    if len(parts) != 2:
        raise EdgeListError(f"header must be 'n T', got {header!r}", lineno)
    try:
        n, T = int(parts[0]), int(parts[1])
    except ValueError:
        raise EdgeListError(f"header must hold two integers, got {header!r}", lineno) from None
    if n < 1 or T < 1:
        raise EdgeListValidationError(f"n and T must be positive, got n={n} T={T}", lineno)
    adjs = np.zeros((T, n, n))
    seen = set()
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 4:
            raise EdgeListError(f"expected 't i j w', got {line!r}", lineno)
        try:
            t, i, j = int(parts[0]), int(parts[1]), int(parts[2])
            w = float(parts[3])
        except ValueError:
            raise EdgeListError(f"cannot parse {line!r}", lineno) from None
        if not 0 <= t < T:
            raise EdgeListValidationError(f"time step {t} outside 0..{T - 1}", lineno)
        if not 0 <= i < j < n:
            raise EdgeListValidationError(f"need 0 <= i < j < {n}, got i={i} j={j}", lineno)
        if not (np.isfinite(w) and w > 0):
            raise EdgeListValidationError(f"weight must be finite and > 0, got {parts[3]}", lineno)
        if (t, i, j) in seen:
            raise EdgeListValidationError(f"duplicate record for (t={t}, i={i}, j={j})", lineno)
        seen.add((t, i, j))
        adjs[t, i, j] = w
        adjs[t, j, i] = w
    return DynamicNetwork.from_arrays(list(adjs), validate=False)


def load_edgelist(path) -> DynamicNetwork:
    return parse_edgelist(Path(path).read_text(encoding="utf-8"))


def format_edgelist(net: DynamicNetwork) -> str:
    n, T = net.n, net.T
    out = [f"{n} {T}\n"]
    iu, ju = np.triu_indices(n, k=1)
    for t in range(T):
        w = net[t][iu, ju]
        for k in np.flatnonzero(w > 0):
            out.append(f"{t} {iu[k]} {ju[k]} {w[k]:.17g}\n")
    return "".join(out)


def save_edgelist(net: DynamicNetwork, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edgelist(net))


# --------------------------------------------------------------------------
# Synthetic generator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic process.

    Each of ``round(density * n(n-1)/2)`` edge slots holds one node pair.
    Its log-weight follows a walk that reverts towards a per-slot level
    drawn log-uniformly from ``[w_hi * level_lo, w_hi * level_hi]``::

        x[t] = level + (1 - mean_reversion) * (x[t-1] - level + sigma * eps)

    Each step a slot moves to a currently empty pair with probability
    ``drift`` (fresh level, walk restarted). Emitted weights are ``exp(x)``,
    multiplied by a log-uniform factor in ``[2, burst_scale]`` with
    probability ``burst_prob``, and clamped to ``w_hi``.
    """

    n: int = 38
    T: int = 1000
    density: float = 0.3
    w_hi: float = 2000.0
    burst_prob: float = 0.02
    burst_scale: float = 20.0
    drift: float = 0.01
    mean_reversion: float = 0.3
    sigma: float = 0.35
    level_lo: float = 1e-3
    level_hi: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.T < 1:
            raise ConfigurationError(f"need n >= 2 and T >= 1, got n={self.n} T={self.T}")
        if not 0 < self.density <= 1:
            raise ConfigurationError(f"density must lie in (0, 1], got {self.density}")
        if not self.w_hi > 0:
            raise ConfigurationError("w_hi must be > 0")
        if not 0 <= self.burst_prob <= 1 or not 0 <= self.drift <= 1:
            raise ConfigurationError("burst_prob and drift are probabilities")
        if not 0 <= self.mean_reversion <= 1:
            raise ConfigurationError("mean_reversion must lie in [0, 1]")
        if self.burst_scale < 2 and self.burst_prob > 0:
            raise ConfigurationError("burst_scale must be >= 2")
        if not 0 < self.level_lo <= self.level_hi <= 1:
            raise ConfigurationError("need 0 < level_lo <= level_hi <= 1")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be >= 0")

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in fields(cls)}


PRESETS = {
    "mesh-like": SynthConfig(n=38, T=1000, w_hi=2000.0, density=0.3),
    "adhoc-like": SynthConfig(n=92, T=500, w_hi=250.0, density=0.1, drift=0.03),
    "dcn-like": SynthConfig(n=128, T=350, w_hi=20000.0, density=0.15, burst_prob=0.05),
}


def preset(name: str, **overrides) -> SynthConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides)


def gen_synthetic(cfg: SynthConfig) -> DynamicNetwork:
    rng = np.random.default_rng(cfg.seed)
    n, T = cfg.n, cfg.T
    iu, ju = np.triu_indices(n, k=1)
    pairs = iu.size
    slots = max(1, int(round(cfg.density * pairs)))
    log_lo = np.log(cfg.w_hi * cfg.level_lo)
    log_hi = np.log(cfg.w_hi * cfg.level_hi)

    # slot -> pair assignment over time, with churn
    pair_of = np.empty((T, slots), dtype=np.int64)
    level = np.empty((T, slots))
    reset = np.zeros((T, slots), dtype=np.bool_)
    current = rng.choice(pairs, size=slots, replace=False)
    occupied = np.zeros(pairs, dtype=np.bool_)
    occupied[current] = True
    cur_level = rng.uniform(log_lo, log_hi, size=slots)
    for t in range(T):
        if t > 0 and cfg.drift > 0:
            for e in np.flatnonzero(rng.random(slots) < cfg.drift):
                free = np.flatnonzero(~occupied)
                if free.size == 0:
                    break
                new = free[rng.integers(free.size)]
                occupied[current[e]] = False
                occupied[new] = True
                current[e] = new
                cur_level[e] = rng.uniform(log_lo, log_hi)
                reset[t, e] = True
        pair_of[t] = current
        level[t] = cur_level

    eps = rng.standard_normal((T, slots))
    x = _kernels.log_walk(level, eps, reset, float(cfg.mean_reversion), float(cfg.sigma))
    w = np.exp(x)
    if cfg.burst_prob > 0:
        burst = rng.random((T, slots)) < cfg.burst_prob
        factor = np.exp(rng.uniform(np.log(2.0), np.log(cfg.burst_scale), size=(T, slots)))
        w = np.where(burst, w * factor, w)
    w = np.minimum(w, cfg.w_hi)

    adjs = np.zeros((T, n, n))
    rows = np.repeat(np.arange(T), slots)
    flat_pairs = pair_of.reshape(-1)
    adjs[rows, iu[flat_pairs], ju[flat_pairs]] = w.reshape(-1)
    adjs[rows, ju[flat_pairs], iu[flat_pairs]] = w.reshape(-1)
    return DynamicNetwork.from_arrays(list(adjs), validate=False)


def summarize(net: DynamicNetwork) -> dict:
    stack = net.stack()
    pairs = net.n * (net.n - 1) // 2
    iu = np.triu_indices(net.n, k=1)
    upper = stack[:, iu[0], iu[1]]
    nz = upper[upper > 0]
    return {
        "n": net.n,
        "T": net.T,
        "sparsity": float((upper > 0).sum() / (pairs * net.T)),
        "w_min": float(nz.min()) if nz.size else 0.0,
        "w_max": float(nz.max()) if nz.size else 0.0,
    }
