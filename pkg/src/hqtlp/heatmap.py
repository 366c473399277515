"""Adjacency heatmaps as binary PPM (P6) images.

Pixel (i, j) shows entry ``adj[i, j]``. Zero and negative entries are black.
A positive weight ``w`` maps to ``s = min(log1p(w) / log1p(w_max), 1)`` and
then to RGB through three linear ramps::

    r = 128 + 127 * min(3s, 1)
    g = 255 * clip(3s - 1, 0, 1)
    b = 255 * clip(3s - 2, 0, 1)

each rounded half-up to an integer. The colour runs from dark red through
red and yellow to white, which is reached exactly at ``w = w_max``.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .dyngraph import ConfigurationError


def heatmap_rgb(adj: np.ndarray, w_max: float | None = None) -> np.ndarray:
    """Return an ``(n, n, 3)`` uint8 image. ``w_max`` defaults to ``adj.max()``."""
    adj = np.ascontiguousarray(adj, dtype=np.float64)
    if adj.ndim != 2:
        raise ConfigurationError(f"heatmap needs a matrix, got shape {adj.shape}")
    if w_max is None:
        w_max = float(adj.max()) if adj.size else 0.0
    if w_max <= 0:
        return np.zeros(adj.shape + (3,), dtype=np.uint8)
    return K.heatmap_rgb(adj, float(w_max))


def encode_ppm(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError("not a binary 8-bit PPM")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def write_heatmap(path, adj: np.ndarray, w_max: float | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_ppm(heatmap_rgb(adj, w_max)))
