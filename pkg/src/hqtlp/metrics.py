"""RMSE, edge-wise KL divergence and mismatch rate for weighted snapshots.

All three read only the unordered off-diagonal pairs i < j. An edge exists
where its weight exceeds ``tau_abs`` (original units).

EW-KL is KL(truth || pred) with natural log, over pairs where both sides
have an edge, after normalising each side's weights on those pairs to sum
to one. MR counts pairs where exactly one side has an edge, divided by the
pairs where at least one side does (``base="union"``); ``"pairs"`` and
``"truth"`` are available for comparison with other conventions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K

MR_BASES = ("union", "pairs", "truth")


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    ew_kl: float
    mr: float
    matched_edges: int
    mismatched_edges: int
    true_edges: int
    pred_edges: int
    union_edges: int


def _check(pred: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = np.ascontiguousarray(pred, dtype=np.float64)
    truth = np.ascontiguousarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 2 or pred.shape[0] != pred.shape[1]:
        raise ValueError(f"pred {pred.shape} and truth {truth.shape} must be equal square matrices")
    return pred, truth


def _mr(stats: np.ndarray, base: str) -> float:
    if base == "union":
        denom = stats[K.UNION]
    elif base == "pairs":
        denom = stats[K.N_PAIRS]
    elif base == "truth":
        denom = stats[K.TRUE_EDGES]
    else:
        raise ValueError(f"unknown mismatch-rate base {base!r}; choose from {MR_BASES}")
    return float(stats[K.MISMATCHED] / denom) if denom > 0 else 0.0


def evaluate(pred, truth, tau_abs: float = 0.0, mr_base: str = "union") -> MetricReport:
    pred, truth = _check(pred, truth)
    s = K.pair_stats(pred, truth, float(tau_abs))
    rmse = float(np.sqrt(s[K.SSE] / s[K.N_PAIRS])) if s[K.N_PAIRS] > 0 else 0.0
    return MetricReport(
        rmse=rmse,
        ew_kl=max(float(s[K.KL]), 0.0),
        mr=_mr(s, mr_base),
        matched_edges=int(s[K.MATCHED]),
        mismatched_edges=int(s[K.MISMATCHED]),
        true_edges=int(s[K.TRUE_EDGES]),
        pred_edges=int(s[K.PRED_EDGES]),
        union_edges=int(s[K.UNION]),
    )


def rmse(pred, truth) -> float:
    return evaluate(pred, truth).rmse


def ew_kl(pred, truth, tau_abs: float = 0.0) -> float:
    return evaluate(pred, truth, tau_abs).ew_kl


def mismatch_rate(pred, truth, tau_abs: float = 0.0, base: str = "union") -> float:
    return evaluate(pred, truth, tau_abs, base).mr


def aggregate(records: Iterable) -> tuple[float, float, float]:
    """(ARMSE, AEW-KL, AMR): arithmetic means over per-step records."""
    records: Sequence = list(records)
    if not records:
        raise ValueError("aggregate needs at least one record")
    k = len(records)
    return (
        float(np.sum([r.rmse for r in records]) / k),
        float(np.sum([r.ew_kl for r in records]) / k),
        float(np.sum([r.mr for r in records]) / k),
    )
