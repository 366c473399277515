"""Hot inner loops with two interchangeable backends.

Every kernel exists as a numba ``@njit`` loop and as a vectorised numpy
function with identical semantics. The active backend is chosen once at
import time: numba when it imports cleanly and ``HQTLP_DISABLE_NUMBA`` is
unset (or ``0``/``false``), numpy otherwise. Both variants stay importable
under explicit names so tests and ``benchmarks/bench_kernels.py`` can
compare them.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


ENV_FLAG = "HQTLP_DISABLE_NUMBA"


def _numba_requested() -> bool:
    flag = os.environ.get(ENV_FLAG, "").strip().lower()
    return flag in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"

# Slot layout of the pair_stats result vector.
SSE, N_PAIRS, MATCHED, MISMATCHED, UNION, PRED_EDGES, TRUE_EDGES, KL = range(8)
N_STATS = 8


# --------------------------------------------------------------------------
# GCN normalisation:  D^-1/2 (A + I) D^-1/2
# --------------------------------------------------------------------------

@njit(cache=True)
def gcn_normalize_numba(adj):
    n = adj.shape[0]
    inv_sqrt = np.empty(n)
    for i in range(n):
        s = 1.0
        for j in range(n):
            if j != i:
                s += adj[i, j]
        inv_sqrt[i] = 1.0 / np.sqrt(s)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            a = 1.0 if i == j else adj[i, j]
            # product of the two scalings first, so out is exactly symmetric
            out[i, j] = a * (inv_sqrt[i] * inv_sqrt[j])
    return out


def gcn_normalize_numpy(adj):
    n = adj.shape[0]
    a = adj.copy()
    a[np.diag_indices(n)] = 1.0
    inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    return a * np.outer(inv_sqrt, inv_sqrt)


# --------------------------------------------------------------------------
# (raw + raw^T) / 2, zero diagonal, negatives clamped
# --------------------------------------------------------------------------

@njit(cache=True)
def symmetrize_clean_numba(raw):
    n = raw.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = 0.5 * (raw[i, j] + raw[j, i])
            if v > 0.0:
                out[i, j] = v
                out[j, i] = v
    return out


def symmetrize_clean_numpy(raw):
    out = 0.5 * (raw + raw.T)
    np.maximum(out, 0.0, out=out)
    out[np.diag_indices(raw.shape[0])] = 0.0
    return out


# --------------------------------------------------------------------------
# Per-snapshot evaluation statistics over unordered pairs i < j
# --------------------------------------------------------------------------

@njit(cache=True)
def pair_stats_numba(pred, truth, tau):
    n = pred.shape[0]
    out = np.zeros(8)
    sum_p = 0.0
    sum_q = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            y = pred[i, j]
            t = truth[i, j]
            d = y - t
            out[0] += d * d
            out[1] += 1.0
            pe = y > tau
            te = t > tau
            if pe:
                out[5] += 1.0
            if te:
                out[6] += 1.0
            if pe or te:
                out[4] += 1.0
            if pe != te:
                out[3] += 1.0
            if pe and te:
                out[2] += 1.0
                sum_p += t
                sum_q += y
    if out[2] > 0.0:
        kl = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                y = pred[i, j]
                t = truth[i, j]
                if y > tau and t > tau:
                    p = t / sum_p
                    q = y / sum_q
                    kl += p * np.log(p / q)
        out[7] = kl
    return out


def pair_stats_numpy(pred, truth, tau):
    iu = np.triu_indices(pred.shape[0], k=1)
    y = pred[iu]
    t = truth[iu]
    pe = y > tau
    te = t > tau
    both = pe & te
    out = np.zeros(N_STATS)
    d = y - t
    out[SSE] = np.dot(d, d)
    out[N_PAIRS] = y.size
    out[MATCHED] = both.sum()
    out[MISMATCHED] = (pe ^ te).sum()
    out[UNION] = (pe | te).sum()
    out[PRED_EDGES] = pe.sum()
    out[TRUE_EDGES] = te.sum()
    if both.any():
        p = t[both] / t[both].sum()
        q = y[both] / y[both].sum()
        out[KL] = np.sum(p * np.log(p / q))
    return out


# --------------------------------------------------------------------------
# Mean-reverting log-space walk used by the synthetic generator
#
#   x[t] = level[t] + (1 - kappa) * (x[t-1] - level[t] + sigma * eps[t])
#   x[t] = level[t]                         where reset[t] is set
# --------------------------------------------------------------------------

@njit(cache=True)
def log_walk_numba(level, eps, reset, kappa, sigma):
    steps, m = level.shape
    x = np.empty((steps, m))
    keep = 1.0 - kappa
    for e in range(m):
        x[0, e] = level[0, e]
    for t in range(1, steps):
        for e in range(m):
            if reset[t, e]:
                x[t, e] = level[t, e]
            else:
                x[t, e] = level[t, e] + keep * (x[t - 1, e] - level[t, e] + sigma * eps[t, e])
    return x


def log_walk_numpy(level, eps, reset, kappa, sigma):
    steps, _ = level.shape
    x = np.empty_like(level)
    keep = 1.0 - kappa
    x[0] = level[0]
    for t in range(1, steps):
        step = level[t] + keep * (x[t - 1] - level[t] + sigma * eps[t])
        x[t] = np.where(reset[t], level[t], step)
    return x


# --------------------------------------------------------------------------
# Heatmap colouring: 0 -> black; w > 0 -> dark red .. red .. yellow .. white
# on s = log1p(w) / log1p(w_max), clipped to [0, 1].
# --------------------------------------------------------------------------

@njit(cache=True)
def heatmap_rgb_numba(adj, w_max):
    n, m = adj.shape
    img = np.zeros((n, m, 3), dtype=np.uint8)
    denom = np.log1p(w_max)
    for i in range(n):
        for j in range(m):
            w = adj[i, j]
            if w <= 0.0:
                continue
            s = np.log1p(w) / denom
            if s > 1.0:
                s = 1.0
            r = 128.0 + 127.0 * min(3.0 * s, 1.0)
            g = 255.0 * min(max(3.0 * s - 1.0, 0.0), 1.0)
            b = 255.0 * min(max(3.0 * s - 2.0, 0.0), 1.0)
            img[i, j, 0] = np.uint8(np.floor(r + 0.5))
            img[i, j, 1] = np.uint8(np.floor(g + 0.5))
            img[i, j, 2] = np.uint8(np.floor(b + 0.5))
    return img


def heatmap_rgb_numpy(adj, w_max):
    pos = adj > 0.0
    s = np.zeros_like(adj)
    s[pos] = np.minimum(np.log1p(adj[pos]) / np.log1p(w_max), 1.0)
    r = 128.0 + 127.0 * np.minimum(3.0 * s, 1.0)
    g = 255.0 * np.clip(3.0 * s - 1.0, 0.0, 1.0)
    b = 255.0 * np.clip(3.0 * s - 2.0, 0.0, 1.0)
    img = np.floor(np.stack([r, g, b], axis=-1) + 0.5).astype(np.uint8)
    img[~pos] = 0
    return img


# --------------------------------------------------------------------------
# Fused Adam update on flat, contiguous float64 views (all updated in place)
# --------------------------------------------------------------------------

@njit(cache=True)
def adam_update_numba(p, g, m, v, lr, beta1, beta2, eps, c1, c2):
    for k in range(p.size):
        gk = g[k]
        mk = beta1 * m[k] + (1.0 - beta1) * gk
        vk = beta2 * v[k] + (1.0 - beta2) * (gk * gk)
        m[k] = mk
        v[k] = vk
        p[k] -= lr * (mk / c1) / (np.sqrt(vk / c2) + eps)


def adam_update_numpy(p, g, m, v, lr, beta1, beta2, eps, c1, c2):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


if USE_NUMBA:
    gcn_normalize = gcn_normalize_numba
    symmetrize_clean = symmetrize_clean_numba
    pair_stats = pair_stats_numba
    log_walk = log_walk_numba
    heatmap_rgb = heatmap_rgb_numba
    adam_update = adam_update_numba
else:
    gcn_normalize = gcn_normalize_numpy
    symmetrize_clean = symmetrize_clean_numpy
    pair_stats = pair_stats_numpy
    log_walk = log_walk_numpy
    heatmap_rgb = heatmap_rgb_numpy
    adam_update = adam_update_numpy
