# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled lane of the hot image kernels.

Semantics (and bit patterns) match ``_kernels_numpy``; see that module for
the reference descriptions. Built with -ffp-contract=off so the convolution
accumulators round identically to the NumPy lane.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

DEF EDT_INF = 1.0e9


cdef inline Py_ssize_t _reflect101(Py_ssize_t i, Py_ssize_t n) nogil:
    cdef Py_ssize_t period
    if n == 1:
        return 0
    period = 2 * n - 2
    if i < 0:
        i = -i
    i %= period
    if i >= n:
        i = period - i
    return i


def convolve_sep_reflect101(const double[:, ::1] a, const double[::1] k):
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1]
    cdef Py_ssize_t m = k.shape[0], r = (m - 1) // 2
    cdef Py_ssize_t i, j, t
    cdef double acc
    tmp_arr = np.zeros((h, w), dtype=np.float64)
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] tmp = tmp_arr
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for t in range(m):
                    acc += k[t] * a[i, _reflect101(j + t - r, w)]
                tmp[i, j] = acc
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for t in range(m):
                    acc += k[t] * tmp[_reflect101(i + t - r, h), j]
                out[i, j] = acc
    return out_arr


def median_filter_3x3(const double[:, ::1] a):
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1]
    cdef Py_ssize_t i, j, dy, dx, n, p
    cdef double v
    cdef double win[9]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(h):
            for j in range(w):
                n = 0
                for dy in range(-1, 2):
                    for dx in range(-1, 2):
                        win[n] = a[_reflect101(i + dy, h), _reflect101(j + dx, w)]
                        n += 1
                # insertion sort of 9 values, exact median
                for n in range(1, 9):
                    v = win[n]
                    p = n
                    while p > 0 and win[p - 1] > v:
                        win[p] = win[p - 1]
                        p -= 1
                    win[p] = v
                out[i, j] = win[4]
    return out_arr


def distance_transform_edt(const cnp.uint8_t[:, ::1] feature):
    cdef Py_ssize_t h = feature.shape[0], w = feature.shape[1]
    cdef Py_ssize_t i, j, q, kk
    cdef long long last, dist, best
    g_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    cdef long long far = (<long long>1) << 30
    cdef bint any_on

    # pass 1: squared distance to the nearest feature within each row
    with nogil:
        for i in range(h):
            any_on = False
            last = -far
            for j in range(w):
                if feature[i, j] != 0:
                    last = j
                    any_on = True
                g[i, j] = <double>(j - last)
            last = 3 * far
            for j in range(w - 1, -1, -1):
                if feature[i, j] != 0:
                    last = j
                dist = last - j
                if dist < <long long>g[i, j]:
                    g[i, j] = <double>dist
            if any_on:
                for j in range(w):
                    g[i, j] = g[i, j] * g[i, j]
            else:
                for j in range(w):
                    g[i, j] = EDT_INF

    # pass 2: lower envelope of parabolas down each column
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    f_arr = np.empty(h, dtype=np.float64)
    v_arr = np.empty(h, dtype=np.intp)
    z_arr = np.empty(h + 1, dtype=np.float64)
    cdef double[::1] f = f_arr
    cdef Py_ssize_t[::1] v = v_arr
    cdef double[::1] z = z_arr
    cdef double s, INF = float("inf")
    with nogil:
        for j in range(w):
            for i in range(h):
                f[i] = g[i, j]
            kk = 0
            v[0] = 0
            z[0] = -INF
            z[1] = INF
            for q in range(1, h):
                s = ((f[q] + q * q) - (f[v[kk]] + v[kk] * v[kk])) / (2.0 * (q - v[kk]))
                while s <= z[kk]:
                    kk -= 1
                    s = ((f[q] + q * q) - (f[v[kk]] + v[kk] * v[kk])) / (2.0 * (q - v[kk]))
                kk += 1
                v[kk] = q
                z[kk] = s
                z[kk + 1] = INF
            kk = 0
            for q in range(h):
                while z[kk + 1] < q:
                    kk += 1
                out[q, j] = sqrt((q - v[kk]) * (q - v[kk]) + f[v[kk]])
    return out_arr


def erode3x3(const cnp.uint8_t[:, ::1] m):
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef Py_ssize_t i, j, dy, dx, yy, xx
    cdef cnp.uint8_t keep
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    with nogil:
        for i in range(h):
            for j in range(w):
                keep = 1
                for dy in range(-1, 2):
                    for dx in range(-1, 2):
                        yy = i + dy
                        xx = j + dx
                        if yy < 0 or yy >= h or xx < 0 or xx >= w or m[yy, xx] == 0:
                            keep = 0
                out[i, j] = keep
    return out_arr


def dilate3x3(const cnp.uint8_t[:, ::1] m):
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef Py_ssize_t i, j, dy, dx, yy, xx
    cdef cnp.uint8_t hit
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    with nogil:
        for i in range(h):
            for j in range(w):
                hit = 0
                for dy in range(-1, 2):
                    for dx in range(-1, 2):
                        yy = i + dy
                        xx = j + dx
                        if 0 <= yy < h and 0 <= xx < w and m[yy, xx] != 0:
                            hit = 1
                out[i, j] = hit
    return out_arr


def largest_component4(const cnp.uint8_t[:, ::1] m):
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef Py_ssize_t i, j, top, y, x, size, best_size
    cdef cnp.int32_t label, best_label
    labels_arr = np.full((h, w), -1, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr
    stack_arr = np.empty(h * w, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr

    best_size = 0
    best_label = -1
    label = 0
    with nogil:
        for i in range(h):
            for j in range(w):
                if m[i, j] == 0 or labels[i, j] >= 0:
                    continue
                size = 0
                top = 0
                stack[top] = i * w + j
                top += 1
                labels[i, j] = label
                while top > 0:
                    top -= 1
                    y = stack[top] // w
                    x = stack[top] % w
                    size += 1
                    if y > 0 and m[y - 1, x] != 0 and labels[y - 1, x] < 0:
                        labels[y - 1, x] = label
                        stack[top] = (y - 1) * w + x
                        top += 1
                    if y + 1 < h and m[y + 1, x] != 0 and labels[y + 1, x] < 0:
                        labels[y + 1, x] = label
                        stack[top] = (y + 1) * w + x
                        top += 1
                    if x > 0 and m[y, x - 1] != 0 and labels[y, x - 1] < 0:
                        labels[y, x - 1] = label
                        stack[top] = y * w + x - 1
                        top += 1
                    if x + 1 < w and m[y, x + 1] != 0 and labels[y, x + 1] < 0:
                        labels[y, x + 1] = label
                        stack[top] = y * w + x + 1
                        top += 1
                if size > best_size:
                    best_size = size
                    best_label = label
                label += 1
        if best_label >= 0:
            for i in range(h):
                for j in range(w):
                    if labels[i, j] == best_label:
                        out[i, j] = 1
    return out_arr
