"""NumPy lane of the hot image kernels.

This is the fallback used when the compiled extension ``_fastkernels`` is
missing or disabled. Both lanes are written to produce bit-identical output
(same accumulation order, same index arithmetic); ``benchmarks/kernel_bench.py``
measures the speed difference.
"""

from __future__ import annotations

import numpy as np

# Squared-distance sentinel for rows without any feature pixel. Far above any
# real squared distance, exactly representable, and safe to add small integers
# to without overflow.
EDT_INF = 1.0e9


def reflect101_indices(n: int, r: int) -> np.ndarray:
    """Source indices for a reflect-101 pad of width ``r`` on each side.

    Reflect-101 mirrors around the edge pixel without repeating it:
    ``d c b | a b c d | c b a`` for a row ``a b c d``.
    """
    if n == 1:
        return np.zeros(n + 2 * r, dtype=np.intp)
    idx = np.arange(-r, n + r)
    period = 2 * n - 2
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def _convolve_axis(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    n = a.shape[axis]
    r = (k.size - 1) // 2
    pad = np.take(a, reflect101_indices(n, r), axis=axis)
    out = np.zeros_like(a)
    sl = [slice(None), slice(None)]
    # taps accumulated in ascending order to match the compiled lane exactly
    for t in range(k.size):
        sl[axis] = slice(t, t + n)
        out += k[t] * pad[tuple(sl)]
    return out


def convolve_sep_reflect101(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable 2D convolution with an odd symmetric kernel, reflect-101 borders."""
    return _convolve_axis(_convolve_axis(a, k, axis=1), k, axis=0)


def median_filter_3x3(a: np.ndarray) -> np.ndarray:
    """Median of each 3x3 reflect-101 neighborhood."""
    h, w = a.shape
    pad = a[np.ix_(reflect101_indices(h, 1), reflect101_indices(w, 1))]
    stack = np.stack([pad[dy : dy + h, dx : dx + w] for dy in range(3) for dx in range(3)])
    return np.median(stack, axis=0)


def _row_distance_sq(feature: np.ndarray) -> np.ndarray:
    """Squared distance to the nearest feature pixel within each row."""
    h, w = feature.shape
    on = feature != 0
    cols = np.arange(w, dtype=np.int64)
    far = np.int64(1) << 30

    left = np.where(on, cols, -far)
    left = np.maximum.accumulate(left, axis=1)
    right = np.where(on, cols, 3 * far)
    right = np.minimum.accumulate(right[:, ::-1], axis=1)[:, ::-1]
    d = np.minimum(cols[None, :] - left, right - cols[None, :])

    g = (d * d).astype(np.float64)
    g[~on.any(axis=1)] = EDT_INF
    return g


def distance_transform_edt(feature: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from every pixel to the nearest feature pixel.

    ``feature`` must contain at least one nonzero pixel (callers handle the
    empty case). Feature pixels map to 0.
    """
    g = _row_distance_sq(feature)
    h = g.shape[0]
    ys = np.arange(h, dtype=np.float64)
    d2 = np.empty_like(g)
    for i in range(h):
        off = ys - i
        d2[i] = np.min(g + (off * off)[:, None], axis=0)
    return np.sqrt(d2)


def _shift_windows(m: np.ndarray):
    h, w = m.shape
    pad = np.zeros((h + 2, w + 2), dtype=m.dtype)
    pad[1 : h + 1, 1 : w + 1] = m
    for dy in range(3):
        for dx in range(3):
            yield pad[dy : dy + h, dx : dx + w]


def erode3x3(m: np.ndarray) -> np.ndarray:
    """Binary erosion with a full 3x3 structuring element, zero padding."""
    out = None
    for win in _shift_windows(m):
        out = win.copy() if out is None else (out & win)
    return out


def dilate3x3(m: np.ndarray) -> np.ndarray:
    """Binary dilation with a full 3x3 structuring element, zero padding."""
    out = None
    for win in _shift_windows(m):
        out = win.copy() if out is None else (out | win)
    return out


def largest_component4(m: np.ndarray) -> np.ndarray:
    """Keep only the largest 4-connected component of a binary mask.

    Ties are broken in favor of the component appearing first in raster order,
    matching the compiled lane.
    """
    h, w = m.shape
    on = m != 0
    if not on.any():
        return np.zeros_like(m)

    # Iterative min-label propagation: every pixel converges to the smallest
    # raster index in its component.
    far = np.intp(h * w)
    labels = np.where(on, np.arange(h * w, dtype=np.intp).reshape(h, w), far)
    while True:
        nxt = labels.copy()
        nxt[1:, :] = np.minimum(nxt[1:, :], labels[:-1, :])
        nxt[:-1, :] = np.minimum(nxt[:-1, :], labels[1:, :])
        nxt[:, 1:] = np.minimum(nxt[:, 1:], labels[:, :-1])
        nxt[:, :-1] = np.minimum(nxt[:, :-1], labels[:, 1:])
        nxt[~on] = far
        if np.array_equal(nxt, labels):
            break
        labels = nxt

    sizes = np.bincount(labels[on], minlength=int(far))
    winner = int(np.argmax(sizes))
    return (labels == winner).astype(m.dtype)
