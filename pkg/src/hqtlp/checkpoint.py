"""Versioned ``.npz`` checkpoints for a trained generator/discriminator pair.

Every tensor is stored as its own ``.npy`` member, which carries dtype and
shape in its header, so a load returns bit-identical arrays. Metadata (format
version, training config, node count, number of training snapshots and
their ``w_max``) lives in a JSON
string member.
"""

from __future__ import annotations

import json
import zipfile

import numpy as np

from .dyngraph import ConfigurationError
from .model import discriminator_shapes, generator_shapes
from .training import AdversarialState, HQTLPForecaster, TrainConfig, config_dict

FORMAT_VERSION = 1


class CheckpointError(ConfigurationError):
    pass


def save_checkpoint(path, forecaster: HQTLPForecaster, w_max: float, train_steps: int) -> None:
    state = forecaster.state
    meta = {
        "format_version": FORMAT_VERSION,
        "n": forecaster.dims.n,
        "w_max": float(w_max),
        "train_steps": int(train_steps),
        "config": config_dict(forecaster.config),
    }
    arrays = {"meta": np.array(json.dumps(meta, sort_keys=True))}
    arrays.update({f"g/{k}": v for k, v in state.g.items()})
    arrays.update({f"d/{k}": v for k, v in state.d.items()})
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> tuple[HQTLPForecaster, dict]:
    """Return ``(forecaster, meta)``; optimiser moments are not restored."""
    try:
        with np.load(path, allow_pickle=False) as z:
            members = {k: z[k] for k in z.files}
    except (OSError, ValueError, zipfile.BadZipFile) as exc:
        raise CheckpointError(f"{path}: not a readable checkpoint ({exc})") from None
    if "meta" not in members:
        raise CheckpointError(f"{path}: missing metadata")
    meta = json.loads(str(members.pop("meta")))
    if meta.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {meta.get('format_version')!r}")
    config = TrainConfig(**meta["config"])
    n = int(meta["n"])
    dims = config.dims(n)
    state = AdversarialState.fresh(dims, config.seed)
    for prefix, target, shapes in (("g/", state.g, generator_shapes(dims)),
                                   ("d/", state.d, discriminator_shapes(dims))):
        for name, shape in shapes.items():
            arr = members.get(prefix + name)
            if arr is None:
                raise CheckpointError(f"{path}: missing tensor {prefix}{name}")
            if arr.shape != tuple(shape) or arr.dtype != np.float64:
                raise CheckpointError(f"{path}: tensor {prefix}{name} has shape {arr.shape}, "
                                      f"expected {tuple(shape)}")
            target[name] = np.ascontiguousarray(arr)
    return HQTLPForecaster(n, config, state), meta
