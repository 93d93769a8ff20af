"""Two black-box perturbation generators and the query-budgeted random-search
driver that minimizes Dice against a segmenter.

Both attacks see only binary masks through a :class:`QueryLedger`; the
driver is plain elitist random search over each attack's parameter ranges
(fresh parameters and fresh noise for every candidate), keeping the clean
image as the initial incumbent so the result is never worse than no attack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .imgcore import BinaryMask, GrayImage, clip01
from .metrics import dice
from .model import BudgetExceededError, QueryLedger, Segmenter, ledgered_predict
from .sigproc import (
    ComplexSpectrum,
    RngStream,
    butterworth_bandpass_gain,
    centered_frequency_distances,
    euclidean_distance_transform,
    fft2_centered,
    gaussian_blur_array,
    ifft2_real,
    mask_boundary,
    normalize_zero_mean_unit_var,
    sample_rayleigh_field,
)

__all__ = [
    "SsaaParams",
    "FduaParams",
    "AttackResult",
    "DegenerateBoundaryError",
    "apply_ssaa",
    "apply_ssaa_uniform",
    "apply_fdua",
    "run_black_box_attack",
    "ATTACK_KINDS",
    "SSAA_OFFSET_RANGE",
    "SSAA_SIGMA_RANGE",
    "SSAA_AMPLITUDE_RANGE",
    "FDUA_LOW_CUT_RANGE",
    "FDUA_HIGH_CUT_RANGE",
    "FDUA_ORDER_CHOICES",
    "FDUA_EPSILON_RANGE",
    "NOISE_SMOOTH_SIGMA",
]

ATTACK_KINDS = ("ssaa", "fdua")

# search ranges for the speckle attack
SSAA_OFFSET_RANGE = (0.0, 15.0)
SSAA_SIGMA_RANGE = (3.0, 30.0)
SSAA_AMPLITUDE_RANGE = (0.03, 0.20)

# search ranges for the frequency-domain attack (cycles per image)
FDUA_LOW_CUT_RANGE = (5.0, 38.0)
FDUA_HIGH_CUT_RANGE = (38.0, 102.0)
FDUA_ORDER_CHOICES = (1, 2, 3, 4)
FDUA_EPSILON_RANGE = (0.05, 0.50)

NOISE_SMOOTH_SIGMA = 1.5


@dataclass(frozen=True)
class SsaaParams:
    """Speckle-attack parameters.

    The search samples center_offset from [0, 15], sigma from [3, 30], and
    amplitude from [0.03, 0.20]; the type itself only requires geometric
    sanity so zero-strength limits remain expressible.
    """

    center_offset: float
    sigma: float
    amplitude: float

    def __post_init__(self):
        if not (np.isfinite(self.center_offset) and self.center_offset >= 0.0):
            raise ValueError("center_offset must be finite and non-negative")
        if not (np.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError("sigma must be finite and positive")
        if not (np.isfinite(self.amplitude) and self.amplitude >= 0.0):
            raise ValueError("amplitude must be finite and non-negative")


@dataclass(frozen=True)
class FduaParams:
    """Frequency-attack parameters.

    The search samples low_cut from [5, 38], high_cut from [38, 102], order
    from {1..4}, and epsilon from [0.05, 0.50]. ``phase_seed`` records which
    derived stream supplied the phase field, so a stored parameter set names
    its noise draw.
    """

    low_cut: float
    high_cut: float
    order: int
    epsilon: float
    phase_seed: int

    def __post_init__(self):
        if not (np.isfinite(self.low_cut) and np.isfinite(self.high_cut) and 0.0 < self.low_cut < self.high_cut):
            raise ValueError("cutoffs must satisfy 0 < low_cut < high_cut")
        if self.order not in FDUA_ORDER_CHOICES:
            raise ValueError(f"order must be one of {FDUA_ORDER_CHOICES}")
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError("epsilon must be finite and non-negative")
        if not (isinstance(self.phase_seed, (int, np.integer)) and self.phase_seed >= 0):
            raise ValueError("phase_seed must be a non-negative integer")
        object.__setattr__(self, "phase_seed", int(self.phase_seed))


@dataclass(frozen=True)
class AttackResult:
    """Outcome of one budgeted attack run.

    ``best_params`` is None when no candidate beat the clean image. ``trace``
    holds the running best Dice after each completed iteration and is
    non-increasing. ``truncated`` marks a run cut short by budget exhaustion.
    """

    best_image: GrayImage
    best_dice: float
    best_params: Optional[Union[SsaaParams, FduaParams]]
    trace: tuple
    queries_used: int
    truncated: bool
    clean_dice: float


class DegenerateBoundaryError(ValueError):
    """The mask has no usable boundary geometry (empty or full)."""


def _smoothed_unit_noise(width: int, height: int, rng: RngStream) -> np.ndarray:
    field = gaussian_blur_array(sample_rayleigh_field(width, height, rng), NOISE_SMOOTH_SIGMA)
    return normalize_zero_mean_unit_var(field)


def apply_ssaa(
    img: GrayImage, boundary_source_mask: BinaryMask, params: SsaaParams, rng: RngStream
) -> GrayImage:
    """Multiplicative speckle perturbation concentrated near a mask boundary.

    Weights follow a Gaussian annulus in unsigned distance-to-boundary, so the
    perturbation straddles both sides of the contour:
    out = clip01(img * (1 + amplitude * w * n)) with
    w(p) = exp(-(d(p) - center_offset)^2 / (2 sigma^2)) and n a smoothed,
    zero-mean unit-variance Rayleigh field.
    """
    if (img.width, img.height) != (boundary_source_mask.width, boundary_source_mask.height):
        raise ValueError("image and mask dimensions must match")
    count = boundary_source_mask.count()
    if count == 0 or count == img.width * img.height:
        raise DegenerateBoundaryError("mask is empty or full; no boundary to target")
    d = euclidean_distance_transform(mask_boundary(boundary_source_mask))
    w = np.exp(-((d - params.center_offset) ** 2) / (2.0 * params.sigma**2))
    n = _smoothed_unit_noise(img.width, img.height, rng)
    return clip01(img.data * (1.0 + params.amplitude * w * n))


def apply_ssaa_uniform(img: GrayImage, params: SsaaParams, rng: RngStream) -> GrayImage:
    """Degenerate-boundary fallback: the same speckle field with weight 1 everywhere."""
    n = _smoothed_unit_noise(img.width, img.height, rng)
    return clip01(img.data * (1.0 + params.amplitude * n))


def apply_fdua(img: GrayImage, params: FduaParams, rng: RngStream) -> GrayImage:
    """Complex multiplicative perturbation of a Butterworth passband.

    F' = F * (1 + epsilon * B * e^(i*phi)) with phi ~ Uniform[-pi, pi] per bin;
    the output is the real part of the inverse transform, clamped to [0, 1].
    The DC bin is untouched (B(0) = 0), so the pre-clip mean is preserved.
    """
    spectrum = fft2_centered(img)
    gain = butterworth_bandpass_gain(
        centered_frequency_distances(img.width, img.height),
        params.low_cut,
        params.high_cut,
        params.order,
    )
    phase = rng.generator().uniform(-np.pi, np.pi, size=(img.height, img.width))
    perturbed = spectrum.data * (1.0 + params.epsilon * gain * np.exp(1j * phase))
    return clip01(ifft2_real(ComplexSpectrum(perturbed)))


def _sample_ssaa(g: np.random.Generator) -> SsaaParams:
    return SsaaParams(
        center_offset=g.uniform(*SSAA_OFFSET_RANGE),
        sigma=g.uniform(*SSAA_SIGMA_RANGE),
        amplitude=g.uniform(*SSAA_AMPLITUDE_RANGE),
    )


def _sample_fdua(g: np.random.Generator, phase_seed: int) -> FduaParams:
    return FduaParams(
        low_cut=g.uniform(*FDUA_LOW_CUT_RANGE),
        high_cut=g.uniform(*FDUA_HIGH_CUT_RANGE),
        order=int(g.choice(FDUA_ORDER_CHOICES)),
        epsilon=g.uniform(*FDUA_EPSILON_RANGE),
        phase_seed=phase_seed,
    )


def run_black_box_attack(
    model: Segmenter,
    img: GrayImage,
    truth: BinaryMask,
    kind: str,
    rng: Union[RngStream, int],
    iterations: int = 50,
    population: int = 10,
    budget: int = 500,
) -> AttackResult:
    """Elitist random search for the perturbation minimizing Dice.

    Every candidate perturbs the original image with freshly sampled
    parameters and noise, and costs exactly one ledgered query; the clean
    prediction that seeds the speckle attack's boundary is the deployed
    model's routine output and is not charged. The boundary source is
    refreshed at the start of each iteration from the stored prediction on
    the incumbent best image, costing no extra query. If the ledger runs out
    mid-search the best-so-far is returned with ``truncated`` set.
    """
    if kind not in ATTACK_KINDS:
        raise ValueError(f"unknown attack kind {kind!r}; expected one of {ATTACK_KINDS}")
    if iterations < 1 or population < 1:
        raise ValueError("iterations and population must be positive")
    if isinstance(rng, (int, np.integer)):
        rng = RngStream(int(rng))

    ledger = QueryLedger(budget)
    clean_mask = model.predict_mask(img)
    clean_dice = dice(clean_mask, truth)

    best_image = img
    best_mask = clean_mask
    best_dice = clean_dice
    best_params: Optional[Union[SsaaParams, FduaParams]] = None
    trace = []
    truncated = False

    try:
        for it in range(iterations):
            boundary_source = best_mask
            for c in range(population):
                ordinal = it * population + c
                g = rng.child(ordinal, "params").generator()
                if kind == "ssaa":
                    params = _sample_ssaa(g)
                    noise_rng = rng.child(ordinal, "noise")
                    try:
                        candidate = apply_ssaa(img, boundary_source, params, noise_rng)
                    except DegenerateBoundaryError:
                        candidate = apply_ssaa_uniform(img, params, noise_rng)
                else:
                    params = _sample_fdua(g, phase_seed=ordinal)
                    candidate = apply_fdua(img, params, rng.child(ordinal, "phase"))
                mask = ledgered_predict(ledger, model, candidate)
                score = dice(mask, truth)
                if score < best_dice:
                    best_dice = score
                    best_image = candidate
                    best_mask = mask
                    best_params = params
            trace.append(best_dice)
    except BudgetExceededError:
        truncated = True
        trace.append(best_dice)

    return AttackResult(
        best_image=best_image,
        best_dice=best_dice,
        best_params=best_params,
        trace=tuple(trace),
        queries_used=ledger.used,
        truncated=truncated,
        clean_dice=clean_dice,
    )
