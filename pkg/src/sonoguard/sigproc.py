"""Signal-processing layer: smoothing and median filters, exact Euclidean
distance transform, centered 2D Fourier transform, Butterworth bandpass gain,
Rayleigh noise fields, binary morphology, and SSIM.

Raster-heavy routines delegate to :mod:`sonoguard.kernels`, which picks the
compiled lane when it is available. Everything here is pure; randomness only
enters through an explicit :class:`RngStream`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .imgcore import BinaryMask, GrayImage

__all__ = [
    "RngStream",
    "ComplexSpectrum",
    "gaussian_kernel1d",
    "gaussian_blur",
    "gaussian_blur_array",
    "median_filter_3x3",
    "euclidean_distance_transform",
    "mask_boundary",
    "fft2_centered",
    "ifft2_real",
    "centered_frequency_distances",
    "butterworth_bandpass_gain",
    "sample_rayleigh_field",
    "normalize_zero_mean_unit_var",
    "ssim",
    "morph_open_3x3",
    "largest_component",
]


def _key_to_u64(key) -> int:
    if isinstance(key, (int, np.integer)):
        k = int(key)
        if 0 <= k < 1 << 64:
            return k
        raw = str(k).encode()
    elif isinstance(key, str):
        raw = key.encode()
    else:
        raise TypeError(f"stream key must be int or str, got {type(key).__name__}")
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "big")


@dataclass(frozen=True)
class RngStream:
    """Named deterministic random stream.

    A stream is identified by a root seed plus a derivation path; the same
    (seed, path) always yields the same draw sequence, and sibling paths are
    statistically independent. Streams are cheap value objects: derive one per
    task (case, iteration, candidate) instead of sharing a generator across
    threads.
    """

    seed: int
    path: tuple = ()

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= int(self.seed) < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, *keys) -> "RngStream":
        """Derive a sub-stream; keys may be ints or short strings."""
        return RngStream(self.seed, self.path + tuple(_key_to_u64(k) for k in keys))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class ComplexSpectrum:
    """Centered 2D frequency spectrum (DC bin at (height//2, width//2))."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2D spectrum, got shape {arr.shape}")
        if not (np.isfinite(arr.real).all() and np.isfinite(arr.imag).all()):
            raise ValueError("spectrum components must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


# --------------------------------------------------------------------------
# smoothing / median


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Sampled Gaussian taps with radius ceil(3*sigma), normalized to sum 1."""
    if not (np.isfinite(sigma) and sigma >= 0.0):
        raise ValueError("sigma must be a finite non-negative number")
    if sigma == 0.0:
        return np.array([1.0])
    r = int(np.ceil(3.0 * sigma))
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur_array(a: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian convolution with reflect-101 borders, no clamping."""
    k = gaussian_kernel1d(sigma)
    if k.shape[0] == 1:
        return np.array(a, dtype=np.float64)
    return kernels.convolve_sep_reflect101(np.ascontiguousarray(a, dtype=np.float64), k)


def gaussian_blur(img: GrayImage, sigma: float) -> GrayImage:
    """Gaussian smoothing; sigma 0 is the identity."""
    if sigma == 0.0:
        return img
    # convolution of [0,1] data is a convex combination; clamp ulp overshoot
    return GrayImage(np.clip(gaussian_blur_array(img.data, sigma), 0.0, 1.0))


def median_filter_3x3(img: GrayImage) -> GrayImage:
    """Median of each 3x3 reflect-101 neighborhood."""
    return GrayImage(kernels.median_filter_3x3(img.data))


# --------------------------------------------------------------------------
# distance transform / boundary


def euclidean_distance_transform(feature: BinaryMask) -> np.ndarray:
    """Exact per-pixel Euclidean distance to the nearest feature pixel.

    Feature pixels map to 0. An empty feature set yields a field of +inf,
    which callers must treat as a degenerate signal.
    """
    if feature.count() == 0:
        return np.full((feature.height, feature.width), np.inf)
    return kernels.distance_transform_edt(feature.data)


def mask_boundary(mask: BinaryMask) -> BinaryMask:
    """Mask pixels with at least one background 4-neighbor.

    Pixels beyond the image border count as background, so foreground touching
    the border is boundary.
    """
    m = mask.data.astype(bool)
    p = np.pad(m, 1, constant_values=False)
    interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return BinaryMask(m & ~interior)


# --------------------------------------------------------------------------
# frequency domain


def fft2_centered(img: GrayImage) -> ComplexSpectrum:
    """Unnormalized forward 2D DFT with the DC bin shifted to the center."""
    return ComplexSpectrum(np.fft.fftshift(np.fft.fft2(img.data)))


def ifft2_real(spec: ComplexSpectrum) -> np.ndarray:
    """Real part of the inverse transform; raw field, not yet clamped to [0, 1]."""
    return np.fft.ifft2(np.fft.ifftshift(spec.data)).real


def centered_frequency_distances(width: int, height: int) -> np.ndarray:
    """Radial distance of every bin from the centered DC bin, in cycles per image."""
    cy, cx = height // 2, width // 2
    v = np.arange(height, dtype=np.float64) - cy
    u = np.arange(width, dtype=np.float64) - cx
    return np.sqrt(v[:, None] ** 2 + u[None, :] ** 2)


def butterworth_bandpass_gain(dist_from_dc, low_cut: float, high_cut: float, order: int):
    """Butterworth bandpass magnitude response.

    gain(D) = [1 / (1 + (low_cut/D)^(2n))] * [1 / (1 + (D/high_cut)^(2n))],
    with gain(0) defined as 0. Accepts a scalar distance or an array of them.
    """
    if not (np.isfinite(low_cut) and np.isfinite(high_cut) and 0.0 < low_cut < high_cut):
        raise ValueError("cutoffs must satisfy 0 < low_cut < high_cut")
    if order < 1 or int(order) != order:
        raise ValueError("order must be a positive integer")
    d = np.asarray(dist_from_dc, dtype=np.float64)
    if (d < 0).any():
        raise ValueError("frequency distance must be non-negative")
    n2 = 2 * int(order)
    out = np.zeros(d.shape)
    nz = d > 0
    with np.errstate(over="ignore"):
        dd = d[nz]
        out[nz] = (1.0 / (1.0 + (low_cut / dd) ** n2)) * (1.0 / (1.0 + (dd / high_cut) ** n2))
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# noise


def sample_rayleigh_field(width: int, height: int, rng: RngStream) -> np.ndarray:
    """I.i.d. Rayleigh(scale=1) field via the inverse CDF r = sqrt(-2 ln u)."""
    if width < 1 or height < 1:
        raise ValueError("field dimensions must be positive")
    u = 1.0 - rng.generator().random((height, width))  # in (0, 1], so log is finite
    return np.sqrt(-2.0 * np.log(u))


def normalize_zero_mean_unit_var(field: np.ndarray) -> np.ndarray:
    """Center to mean 0 and scale to unit population variance."""
    a = np.asarray(field, dtype=np.float64)
    if a.size < 2:
        raise ValueError("need at least two samples to normalize")
    sd = float(a.std())
    if not np.isfinite(sd) or sd <= 0.0:
        raise ValueError("cannot normalize a zero-variance field")
    return (a - a.mean()) / sd


# --------------------------------------------------------------------------
# structural similarity

_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2
_SSIM_SIGMA = 1.5  # 11x11 window


def ssim(x: GrayImage, y: GrayImage) -> float:
    """Mean local structural similarity over Gaussian-weighted windows."""
    if (x.width, x.height) != (y.width, y.height):
        raise ValueError("images must have identical dimensions")
    k = gaussian_kernel1d(_SSIM_SIGMA)
    conv = lambda a: kernels.convolve_sep_reflect101(np.ascontiguousarray(a), k)
    a, b = x.data, y.data
    mu_a = conv(a)
    mu_b = conv(b)
    var_a = conv(a * a) - mu_a * mu_a
    var_b = conv(b * b) - mu_b * mu_b
    cov = conv(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + _SSIM_C1) * (2.0 * cov + _SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + _SSIM_C1) * (var_a + var_b + _SSIM_C2)
    return float(np.mean(num / den))


# --------------------------------------------------------------------------
# binary morphology


def morph_open_3x3(mask: BinaryMask) -> BinaryMask:
    """Erosion then dilation with a full 3x3 structuring element."""
    return BinaryMask(kernels.dilate3x3(kernels.erode3x3(mask.data)))


def largest_component(mask: BinaryMask) -> BinaryMask:
    """Keep only the largest 4-connected foreground component (empty stays empty)."""
    return BinaryMask(kernels.largest_component4(mask.data))
