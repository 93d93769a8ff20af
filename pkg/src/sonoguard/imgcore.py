"""Core raster types and the geometric/intensity primitives shared by every
other module.

Images are single-channel float64 rasters in [0, 1]; masks are strictly
binary uint8 rasters. All types are immutable after construction and every
operation is a pure function, so everything here is safe to call
concurrently.

Conventions used throughout:

* thresholding is strict (``p > t``), so ties map to background;
* reflective padding is reflect-101 (the edge pixel is not repeated);
* bilinear sampling uses half-pixel-centered coordinates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

__all__ = [
    "GrayImage",
    "BinaryMask",
    "ProbMap",
    "clip01",
    "resize_bilinear",
    "center_crop_or_pad",
    "shift_reflect",
    "add_brightness",
    "threshold",
    "rescale_keep_size",
    "rescale_keep_size_inverse",
    "read_png",
    "write_png",
    "read_gf32",
    "write_gf32",
    "image_to_f32_bytes",
    "f32_bytes_to_array",
]


def _as_raster(data, dtype) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=dtype)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D raster, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class GrayImage:
    """Single-channel intensity raster with every value finite and in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_raster(self.data, np.float64)
        if not np.isfinite(arr).all():
            raise ValueError("image values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """Strictly binary raster; 1 marks foreground pixels."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_raster(self.data, np.uint8)
        if arr.max(initial=0) > 1:
            raise ValueError("mask values must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class ProbMap:
    """Per-pixel foreground probabilities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_raster(self.data, np.float64)
        if not np.isfinite(arr).all():
            raise ValueError("probabilities must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


# --------------------------------------------------------------------------
# intensity primitives


def clip01(img: GrayImage | np.ndarray) -> GrayImage:
    """Clamp values into [0, 1]; in-range values pass through unchanged."""
    arr = img.data if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("cannot clip non-finite values")
    return GrayImage(np.clip(arr, 0.0, 1.0))


def add_brightness(img: GrayImage, delta: float) -> GrayImage:
    """Shift all intensities by ``delta`` and clamp back into [0, 1]."""
    if not np.isfinite(delta):
        raise ValueError("brightness delta must be finite")
    return GrayImage(np.clip(img.data + delta, 0.0, 1.0))


def threshold(p: ProbMap, t: float) -> BinaryMask:
    """Binarize with the strict rule ``p > t`` (ties map to background)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    return BinaryMask((p.data > t).astype(np.uint8))


# --------------------------------------------------------------------------
# geometric primitives (array-level helpers are shared with the defenses,
# which apply the same transforms to probability maps)


def _reflect101_map(idx: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def resize_bilinear_array(a: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    if new_w < 1 or new_h < 1:
        raise ValueError("target dimensions must be at least 1x1")
    h, w = a.shape
    sy = (np.arange(new_h) + 0.5) * (h / new_h) - 0.5
    sx = (np.arange(new_w) + 0.5) * (w / new_w) - 0.5
    y0f = np.floor(sy)
    x0f = np.floor(sx)
    ty = (sy - y0f)[:, None]
    tx = (sx - x0f)[None, :]
    y0 = np.clip(y0f.astype(np.intp), 0, h - 1)
    y1 = np.clip(y0f.astype(np.intp) + 1, 0, h - 1)
    x0 = np.clip(x0f.astype(np.intp), 0, w - 1)
    x1 = np.clip(x0f.astype(np.intp) + 1, 0, w - 1)
    tl = a[np.ix_(y0, x0)]
    tr = a[np.ix_(y0, x1)]
    bl = a[np.ix_(y1, x0)]
    br = a[np.ix_(y1, x1)]
    top = tl + tx * (tr - tl)
    bot = bl + tx * (br - bl)
    out = top + ty * (bot - top)
    # interpolation is convex; clamp away any last-ulp overshoot
    return np.clip(out, a.min(), a.max())


def resize_bilinear(img: GrayImage, new_w: int, new_h: int) -> GrayImage:
    """Resample with bilinear interpolation on a half-pixel-centered grid."""
    return GrayImage(resize_bilinear_array(img.data, new_w, new_h))


def crop_or_pad_array(a: np.ndarray, target_w: int, target_h: int, pad_value: float) -> np.ndarray:
    if target_w < 1 or target_h < 1:
        raise ValueError("target dimensions must be at least 1x1")
    h, w = a.shape
    out = np.full((target_h, target_w), pad_value, dtype=a.dtype)
    if h >= target_h:
        sy, dy, ch = (h - target_h) // 2, 0, target_h
    else:
        sy, dy, ch = 0, (target_h - h) // 2, h
    if w >= target_w:
        sx, dx, cw = (w - target_w) // 2, 0, target_w
    else:
        sx, dx, cw = 0, (target_w - w) // 2, w
    out[dy : dy + ch, dx : dx + cw] = a[sy : sy + ch, sx : sx + cw]
    return out


def center_crop_or_pad(img: GrayImage, target_w: int, target_h: int, pad_value: float) -> GrayImage:
    """Center-crop or center-pad to the target size.

    Content stays centered; when the size difference is odd the extra pixel is
    cropped from / padded onto the bottom/right.
    """
    return GrayImage(crop_or_pad_array(img.data, target_w, target_h, pad_value))


def shift_reflect_array(a: np.ndarray, dx: int, dy: int) -> np.ndarray:
    h, w = a.shape
    if abs(dx) >= w or abs(dy) >= h:
        raise ValueError("shift magnitude must be smaller than the image size")
    rows = _reflect101_map(np.arange(h) - dy, h)
    cols = _reflect101_map(np.arange(w) - dx, w)
    return a[np.ix_(rows, cols)]


def shift_reflect(img: GrayImage, dx: int, dy: int) -> GrayImage:
    """Translate by (dx, dy) pixels, filling exposed borders by reflection."""
    return GrayImage(shift_reflect_array(img.data, dx, dy))


def _edge_mean(a: np.ndarray) -> float:
    h, w = a.shape
    if h == 1 or w == 1:
        return float(a.mean())
    ring = np.concatenate([a[0, :], a[-1, :], a[1:-1, 0], a[1:-1, -1]])
    return float(ring.mean())


def _scaled_dims(w: int, h: int, factor: float) -> tuple[int, int]:
    if not (np.isfinite(factor) and factor > 0.0):
        raise ValueError("rescale factor must be positive")
    sw = max(1, int(np.floor(factor * w + 0.5)))
    sh = max(1, int(np.floor(factor * h + 0.5)))
    return sw, sh


def rescale_keep_size(img: GrayImage, factor: float) -> GrayImage:
    """Rescale content by ``factor`` while keeping the raster size fixed.

    Resizes to round(factor * dim) and then center-crops (factor > 1) or pads
    with the resized image's edge mean (factor < 1) back to the original size.
    """
    w, h = img.width, img.height
    sw, sh = _scaled_dims(w, h, factor)
    resized = resize_bilinear_array(img.data, sw, sh)
    return GrayImage(crop_or_pad_array(resized, w, h, _edge_mean(resized)))


def rescale_keep_size_inverse(arr: np.ndarray, factor: float) -> np.ndarray:
    """Map a raster produced under ``rescale_keep_size`` back to the original
    frame (crop the pad / pad the crop with 0, then resize back)."""
    h, w = arr.shape
    sw, sh = _scaled_dims(w, h, factor)
    inner = crop_or_pad_array(arr, sw, sh, 0.0)
    return resize_bilinear_array(inner, w, h)


# --------------------------------------------------------------------------
# file formats

_GF32_HEADER = struct.Struct("<II")


def write_png(img: GrayImage, path) -> None:
    """Write as 8-bit grayscale PNG (intensity i maps to i/255 on read)."""
    quantized = np.floor(img.data * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(quantized, mode="L").save(path, format="PNG")


def read_png(path) -> GrayImage:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return GrayImage(arr / 255.0)


def image_to_f32_bytes(arr: np.ndarray) -> bytes:
    """Row-major little-endian float32 encoding (shared with the wire protocol)."""
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def f32_bytes_to_array(raw: bytes, width: int, height: int) -> np.ndarray:
    if len(raw) != 4 * width * height:
        raise ValueError(f"expected {4 * width * height} bytes for {width}x{height}, got {len(raw)}")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(height, width)


def write_gf32(img: GrayImage, path) -> None:
    """Write the raw float format: u32 width, u32 height, then w*h f32, all little-endian."""
    with open(path, "wb") as fh:
        fh.write(_GF32_HEADER.pack(img.width, img.height))
        fh.write(image_to_f32_bytes(img.data))


def read_gf32(path) -> GrayImage:
    with open(path, "rb") as fh:
        header = fh.read(_GF32_HEADER.size)
        if len(header) != _GF32_HEADER.size:
            raise ValueError("truncated gf32 header")
        width, height = _GF32_HEADER.unpack(header)
        if width < 1 or height < 1:
            raise ValueError("gf32 dimensions must be positive")
        return GrayImage(f32_bytes_to_array(fh.read(), width, height))
