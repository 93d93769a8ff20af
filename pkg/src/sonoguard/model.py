"""Black-box segmenter contract, query accounting, the built-in reference
segmenter, the remote HTTP adapter, and synthetic phantom generation.

The central design split: attackers only ever see binary masks, and only
through a :class:`QueryLedger`; defenses run on the model-owner side and may
read probability maps directly.
"""

from __future__ import annotations

import base64
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
import requests

from .imgcore import (
    BinaryMask,
    GrayImage,
    ProbMap,
    f32_bytes_to_array,
    image_to_f32_bytes,
    threshold,
)
from .sigproc import (
    RngStream,
    gaussian_blur_array,
    largest_component,
    morph_open_3x3,
    sample_rayleigh_field,
)

__all__ = [
    "finalize_mask",
    "Segmenter",
    "ReferenceSegmenter",
    "RemoteSegmenter",
    "RemoteError",
    "RemoteTransportError",
    "RemoteProtocolError",
    "RemoteValidationError",
    "QueryLedger",
    "BudgetExceededError",
    "ledgered_predict",
    "Phantom",
    "PhantomParams",
    "generate_phantom",
    "make_segmenter",
    "DEFAULT_QUERY_BUDGET",
]

DEFAULT_QUERY_BUDGET = 500


def finalize_mask(prob: ProbMap) -> BinaryMask:
    """Shared probability-to-mask pipeline: threshold 0.5, 3x3 opening,
    largest-component cleanup. Every adapter and defense binarizes this way."""
    return largest_component(morph_open_3x3(threshold(prob, 0.5)))


class Segmenter(ABC):
    """Deterministic binary segmenter: identical input, identical output.

    Implementations provide :meth:`predict_prob`; mask prediction is the
    shared :func:`finalize_mask` pipeline so every adapter post-processes
    identically.
    """

    @abstractmethod
    def predict_prob(self, img: GrayImage) -> ProbMap:
        """Per-pixel foreground probability, same dims as the input."""

    def predict_mask(self, img: GrayImage) -> BinaryMask:
        return finalize_mask(self.predict_prob(img))


class ReferenceSegmenter(Segmenter):
    """Built-in intensity-threshold segmenter for dark nodules on bright tissue.

    Smooths with a wide Gaussian, picks an adaptive cut half a standard
    deviation below the mean, and squashes the margin through a sigmoid. It is
    deliberately sensitive to speckle- and frequency-band perturbations so the
    attacks have a measurable surface at desk scale.
    """

    BLUR_SIGMA = 2.0
    STEEPNESS = 25.0

    def predict_prob(self, img: GrayImage) -> ProbMap:
        b = gaussian_blur_array(img.data, self.BLUR_SIGMA)
        tau = b.mean() - 0.5 * b.std()
        return ProbMap(1.0 / (1.0 + np.exp(-self.STEEPNESS * (tau - b))))


# --------------------------------------------------------------------------
# query accounting


class BudgetExceededError(RuntimeError):
    """Raised when a ledgered query would exceed the attack budget."""


@dataclass
class QueryLedger:
    """Counts model queries charged to an attacker, hard-capped at ``budget``.

    Not thread-safe by design: one ledger belongs to one attack run.
    """

    budget: int = DEFAULT_QUERY_BUDGET
    used: int = field(default=0, init=False)

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("query budget must be positive")

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def charge(self) -> None:
        if self.used >= self.budget:
            raise BudgetExceededError(f"query budget of {self.budget} exhausted")
        self.used += 1


def ledgered_predict(ledger: QueryLedger, model: Segmenter, img: GrayImage) -> BinaryMask:
    """One charged black-box query. Returns the mask only; probabilities stay hidden."""
    ledger.charge()
    return model.predict_mask(img)


# --------------------------------------------------------------------------
# remote adapter


class RemoteError(RuntimeError):
    """Base class for remote-adapter failures."""


class RemoteTransportError(RemoteError):
    """Endpoint unreachable or persistently failing (after bounded retries)."""


class RemoteProtocolError(RemoteError):
    """Response does not follow the wire protocol."""


class RemoteValidationError(RemoteError):
    """Well-formed response carrying invalid probabilities."""


class RemoteSegmenter(Segmenter):
    """Adapter for a segmentation service speaking the f32 wire protocol.

    Request: POST ``<endpoint>/predict`` with JSON
    ``{"width", "height", "pixels": base64(little-endian f32, row-major)}``;
    response carries ``probs`` in the same encoding. Transient transport
    failures and 5xx responses are retried with exponential backoff.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 3, backoff: float = 0.5):
        if retries < 1:
            raise ValueError("retries must be at least 1")
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def predict_prob(self, img: GrayImage) -> ProbMap:
        payload = {
            "width": img.width,
            "height": img.height,
            "pixels": base64.b64encode(image_to_f32_bytes(img.data)).decode("ascii"),
        }
        resp = self._post_with_retries(payload)
        return self._decode_response(resp, img.width, img.height)

    def _post_with_retries(self, payload: dict):
        url = self.endpoint + "/predict"
        last = None
        for attempt in range(self.retries):
            try:
                resp = requests.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last = exc
            else:
                if resp.status_code == 200:
                    return resp
                if resp.status_code < 500:
                    raise RemoteProtocolError(f"server rejected request: HTTP {resp.status_code}")
                last = RemoteError(f"HTTP {resp.status_code}")
            if attempt + 1 < self.retries:
                time.sleep(self.backoff * 2**attempt)
        raise RemoteTransportError(f"{url} failed after {self.retries} attempts: {last}")

    @staticmethod
    def _decode_response(resp, width: int, height: int) -> ProbMap:
        try:
            body = resp.json()
        except ValueError as exc:
            raise RemoteProtocolError(f"response is not JSON: {exc}") from exc
        try:
            rw, rh = int(body["width"]), int(body["height"])
            raw = base64.b64decode(body["probs"], validate=True)
        except (KeyError, TypeError, ValueError) as exc:
            raise RemoteProtocolError(f"malformed response payload: {exc}") from exc
        if (rw, rh) != (width, height):
            raise RemoteProtocolError(f"response dims {rw}x{rh} do not match request {width}x{height}")
        try:
            arr = f32_bytes_to_array(raw, rw, rh)
        except ValueError as exc:
            raise RemoteProtocolError(str(exc)) from exc
        try:
            return ProbMap(arr)
        except ValueError as exc:
            raise RemoteValidationError(f"invalid probabilities: {exc}") from exc


def make_segmenter(selector: str) -> Segmenter:
    """Build a segmenter from a config string: "builtin" or a service URL."""
    if selector == "builtin":
        return ReferenceSegmenter()
    if selector.startswith(("http://", "https://")):
        return RemoteSegmenter(selector)
    raise ValueError(f"unknown model selector {selector!r}; expected 'builtin' or an http(s) URL")


# --------------------------------------------------------------------------
# synthetic phantoms

BACKGROUND_INTENSITY = 0.55
NODULE_INTENSITY = 0.25
SPECKLE_SMOOTH_SIGMA = 1.5
AXIS_FRACTION_RANGE = (0.08, 0.25)


@dataclass(frozen=True)
class PhantomParams:
    center_x: float
    center_y: float
    radius_x: float
    radius_y: float
    rotation: float
    background: float
    nodule: float
    speckle_sigma: float


@dataclass(frozen=True)
class Phantom:
    """Synthetic speckled image of one dark elliptical nodule, with exact truth."""

    image: GrayImage
    truth: BinaryMask
    params: PhantomParams


def generate_phantom(rng: RngStream, width: int, height: int) -> Phantom:
    """Sample a speckled elliptical-nodule phantom.

    The ellipse (axes 8-25% of each dimension, any rotation, fully inside the
    frame) is rasterized at pixel centers for the ground truth. The image is
    the two-level nodule/background field multiplied by a smoothed
    Rayleigh speckle field rescaled to mean 1, then clamped to [0, 1].
    """
    if width < 64 or height < 64:
        raise ValueError("phantom dimensions must be at least 64x64")
    g = rng.child("geometry").generator()
    rx = g.uniform(*AXIS_FRACTION_RANGE) * width
    ry = g.uniform(*AXIS_FRACTION_RANGE) * height
    theta = g.uniform(0.0, np.pi)
    margin = max(rx, ry)
    cx = g.uniform(margin, width - margin)
    cy = g.uniform(margin, height - margin)

    yy, xx = np.mgrid[0:height, 0:width]
    dx = xx - cx
    dy = yy - cy
    u = dx * np.cos(theta) + dy * np.sin(theta)
    v = -dx * np.sin(theta) + dy * np.cos(theta)
    inside = (u / rx) ** 2 + (v / ry) ** 2 <= 1.0
    truth = BinaryMask(inside.astype(np.uint8))

    base = np.where(inside, NODULE_INTENSITY, BACKGROUND_INTENSITY)
    speckle = gaussian_blur_array(
        sample_rayleigh_field(width, height, rng.child("speckle")), SPECKLE_SMOOTH_SIGMA
    )
    speckle /= speckle.mean()
    image = GrayImage(np.clip(base * speckle, 0.0, 1.0))

    params = PhantomParams(
        center_x=float(cx),
        center_y=float(cy),
        radius_x=float(rx),
        radius_y=float(ry),
        rotation=float(theta),
        background=BACKGROUND_INTENSITY,
        nodule=NODULE_INTENSITY,
        speckle_sigma=SPECKLE_SMOOTH_SIGMA,
    )
    return Phantom(image=image, truth=truth, params=params)
