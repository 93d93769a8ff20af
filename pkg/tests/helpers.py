"""Shared test utilities: random raster builders and brute-force oracles.

Oracles here are intentionally naive (loops, all-pairs scans) so they form an
independent route to the same answers as the library's optimized paths.
"""

from __future__ import annotations

import numpy as np

from sonoguard.imgcore import BinaryMask, GrayImage


def random_image(g: np.random.Generator, width: int, height: int) -> GrayImage:
    return GrayImage(g.random((height, width)))


def random_mask(g: np.random.Generator, width: int, height: int, p: float = 0.4) -> BinaryMask:
    return BinaryMask((g.random((height, width)) < p).astype(np.uint8))


def edt_brute(mask: np.ndarray) -> np.ndarray:
    """Nearest-feature Euclidean distance by scanning every feature pixel."""
    h, w = mask.shape
    pts = np.argwhere(mask != 0)
    if len(pts) == 0:
        return np.full((h, w), np.inf)
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            d2 = (pts[:, 0] - i) ** 2 + (pts[:, 1] - j) ** 2
            out[i, j] = np.sqrt(d2.min())
    return out


def boundary_brute(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels with a background 4-neighbor (border = background)."""
    h, w = mask.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for i in range(h):
        for j in range(w):
            if mask[i, j] == 0:
                continue
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ni, nj = i + di, j + dj
                if ni < 0 or ni >= h or nj < 0 or nj >= w or mask[ni, nj] == 0:
                    out[i, j] = 1
                    break
    return out


def confusion_brute(pred: np.ndarray, truth: np.ndarray) -> tuple:
    tp = fp = fn = tn = 0
    for pv, tv in zip(pred.ravel().tolist(), truth.ravel().tolist()):
        if pv and tv:
            tp += 1
        elif pv:
            fp += 1
        elif tv:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def hd95_brute(pred: np.ndarray, truth: np.ndarray) -> float:
    """All-pairs boundary-distance oracle with the library's empty conventions."""
    h, w = pred.shape
    if pred.sum() == 0 and truth.sum() == 0:
        return 0.0
    if pred.sum() == 0 or truth.sum() == 0:
        return float(np.hypot(w, h))
    pa = np.argwhere(boundary_brute(pred))
    ta = np.argwhere(boundary_brute(truth))
    d = np.sqrt(((pa[:, None, :] - ta[None, :, :]) ** 2).sum(axis=2).astype(float))
    return float(max(np.percentile(d.min(axis=1), 95.0), np.percentile(d.min(axis=0), 95.0)))


def wilcoxon_enumeration(deltas: np.ndarray) -> float:
    """Exact one-sided (greater) signed-rank p-value by literal 2^n enumeration."""
    d = np.asarray(deltas, dtype=float)
    d = d[d != 0.0]
    n = d.size
    order = np.argsort(np.abs(d), kind="stable")
    ranks = np.empty(n)
    ranks[order] = np.arange(1, n + 1)
    observed = ranks[d > 0].sum()
    signs = (np.arange(2**n)[:, None] >> np.arange(n)) & 1  # every sign assignment
    sums = signs @ ranks
    return float((sums >= observed).sum()) / 2.0**n
