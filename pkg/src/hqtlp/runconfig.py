"""Run configuration shared by the command-line verbs.

A JSON config file has this shape; every key is optional and unknown keys
are rejected::

    {
      "seed": 0,
      "dataset": null,            # edge-list path; null -> synthesise
      "preset": "dcn-like",       # synthetic preset used when dataset is null
      "methods": ["hqtlp", "lstm", "gru", "cn-svd", "cn-nmf", "dw-nmf"],
      "out": "results",
      "test_steps": 50,
      "train":    {...TrainConfig fields except seed...},
      "collapse": {...CollapseConfig fields except seed...},
      "synth":    {...SynthConfig fields except seed...}
    }

Values are layered: defaults, then the config file, then environment
variables, then command-line flags. Environment overrides use the prefix
``HQTLP_``: ``HQTLP_TEST_STEPS=20`` sets a top-level key and
``HQTLP_TRAIN__LR_G=0.005`` a section key (double underscore between the
section and field). Values are parsed as JSON, falling back to a plain
string. ``HQTLP_DISABLE_NUMBA`` is reserved for backend selection.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields

import numpy as np

from ._kernels import ENV_FLAG
from .baselines import CollapseConfig
from .datagen import PRESETS, SynthConfig, preset
from .dyngraph import ConfigurationError
from .training import TrainConfig

METHODS = ("hqtlp", "lstm", "gru", "cn-svd", "cn-nmf", "dw-nmf")
ENV_PREFIX = "HQTLP_"
SECTIONS = {"train": TrainConfig, "collapse": CollapseConfig, "synth": SynthConfig}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    dataset: str | None = None
    preset: str = "dcn-like"
    methods: tuple[str, ...] = METHODS
    out: str = "results"
    test_steps: int = 50
    train: dict = field(default_factory=dict)
    collapse: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigurationError(f"unknown methods {bad}; choose from {list(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigurationError("duplicate methods")
        if self.test_steps < 1:
            raise ConfigurationError("test_steps must be >= 1")
        for name, cls in SECTIONS.items():
            _check_section(name, getattr(self, name), cls)
        # constructing validates field values early
        self.train_config()
        self.collapse_config()
        self.synth_config()

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(**{**self.train, "seed": self.seed if seed is None else seed})

    def collapse_config(self, seed: int | None = None) -> CollapseConfig:
        return CollapseConfig(**{**self.collapse, "seed": self.seed if seed is None else seed})

    def synth_config(self) -> SynthConfig:
        return preset(self.preset, **{**self.synth, "seed": self.seed})

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["methods"] = list(self.methods)
        return d


def _check_section(name: str, values, cls) -> None:
    if not isinstance(values, dict):
        raise ConfigurationError(f"section {name!r} must be an object")
    allowed = {f.name for f in fields(cls)} - {"seed"}
    unknown = sorted(set(values) - allowed)
    if "seed" in values:
        raise ConfigurationError(f"{name}.seed is not configurable; set the top-level seed")
    if unknown:
        raise ConfigurationError(f"unknown keys in {name!r}: {unknown}")


def method_seed(seed: int, method: str) -> int:
    """Per-method seed derived from the run seed and the method's fixed index."""
    ss = np.random.SeedSequence([seed, METHODS.index(method)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def merge(base: dict, updates: dict, source: str) -> dict:
    top = {f.name for f in fields(RunConfig)}
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for key, value in updates.items():
        if key not in top:
            raise ConfigurationError(f"{source}: unknown key {key!r}")
        if key in SECTIONS:
            if not isinstance(value, dict):
                raise ConfigurationError(f"{source}: section {key!r} must be an object")
            out[key] = {**out.get(key, {}), **value}
        else:
            out[key] = value
    return out


def load_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return data


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out: dict = {}
    for key, raw in sorted(environ.items()):
        if not key.startswith(ENV_PREFIX) or key == ENV_FLAG:
            continue
        name = key[len(ENV_PREFIX):].lower()
        value = _parse_value(raw)
        if "__" in name:
            section, sub = name.split("__", 1)
            # field names such as "L" are case sensitive
            cls = SECTIONS.get(section)
            if cls is not None:
                lookup = {f.name.lower(): f.name for f in fields(cls)}
                sub = lookup.get(sub, sub)
            out.setdefault(section, {})[sub] = value
        else:
            out[name] = value
    return out


def build(path=None, cli: dict | None = None, environ=None) -> RunConfig:
    data: dict = {}
    if path is not None:
        data = merge(data, load_file(path), str(path))
    data = merge(data, env_overrides(environ), "environment")
    data = merge(data, cli or {}, "command line")
    if isinstance(data.get("methods"), str):
        data["methods"] = [m.strip() for m in data["methods"].split(",") if m.strip()]
    if "methods" in data:
        data["methods"] = tuple(data["methods"])
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
