"""Kernel lane selection.

Imports the compiled extension when it is available, falling back to the
NumPy implementations otherwise. ``SONOGUARD_PURE_PYTHON=1`` forces the
fallback, which is how the benchmark and the lane-equivalence tests get at
both implementations side by side.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

if os.environ.get("SONOGUARD_PURE_PYTHON"):
    _impl = _kernels_numpy
    HAVE_NATIVE = False
else:
    try:
        from . import _fastkernels as _impl  # type: ignore[no-redef]

        HAVE_NATIVE = True
    except ImportError:
        _impl = _kernels_numpy
        HAVE_NATIVE = False

convolve_sep_reflect101 = _impl.convolve_sep_reflect101
median_filter_3x3 = _impl.median_filter_3x3
distance_transform_edt = _impl.distance_transform_edt
erode3x3 = _impl.erode3x3
dilate3x3 = _impl.dilate3x3
largest_component4 = _impl.largest_component4

reflect101_indices = _kernels_numpy.reflect101_indices
EDT_INF = _kernels_numpy.EDT_INF
