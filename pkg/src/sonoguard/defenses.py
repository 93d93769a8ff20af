"""Three inference-time defenses, each mapping an input image and a segmenter
to an aligned probability map plus the final mask.

Defenses run on the model-owner side, so unlike the attacker they read
probability maps directly. Maps predicted on geometrically transformed inputs
are inverse-transformed back to the original frame before any aggregation;
final masks go through the same :func:`~sonoguard.model.finalize_mask`
pipeline as plain predictions, so a degenerate configuration reduces exactly
to the undefended model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import (
    BinaryMask,
    GrayImage,
    ProbMap,
    add_brightness,
    rescale_keep_size,
    rescale_keep_size_inverse,
    shift_reflect,
    shift_reflect_array,
)
from .model import Segmenter, finalize_mask
from .sigproc import RngStream, gaussian_blur, median_filter_3x3

__all__ = [
    "TtaConfig",
    "EnsembleConfig",
    "defend_randomized_preproc",
    "defend_denoise",
    "defend_stochastic_ensemble",
    "DENOISE_BLUR_SIGMA",
]

DENOISE_BLUR_SIGMA = 1.0


def _check_range(name: str, rng_pair) -> tuple:
    lo, hi = (float(rng_pair[0]), float(rng_pair[1]))
    if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
        raise ValueError(f"{name} range must be ordered and finite, got {rng_pair}")
    return lo, hi


@dataclass(frozen=True)
class TtaConfig:
    """Randomized-preprocessing ensemble: k draws of rescale + blur."""

    k: int = 5
    rescale_range: tuple = (0.9, 1.1)
    blur_sigma_range: tuple = (0.3, 1.5)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("ensemble size k must be at least 1")
        object.__setattr__(self, "rescale_range", _check_range("rescale", self.rescale_range))
        object.__setattr__(self, "blur_sigma_range", _check_range("blur sigma", self.blur_sigma_range))
        if self.blur_sigma_range[0] < 0.0 or self.rescale_range[0] <= 0.0:
            raise ValueError("blur sigmas must be non-negative and rescale factors positive")


@dataclass(frozen=True)
class EnsembleConfig:
    """Stochastic ensemble: k draws of shift, rescale, blur, noise, brightness."""

    k: int = 5
    shift_range: tuple = (-4, 4)
    rescale_range: tuple = (0.93, 1.07)
    blur_sigma_range: tuple = (0.2, 1.2)
    noise_sd_range: tuple = (0.005, 0.02)
    brightness_range: tuple = (-0.03, 0.03)

    def __post_init__(self):
        if self.k < 3:
            raise ValueError("ensemble size k must be at least 3 for a majority vote")
        lo, hi = int(self.shift_range[0]), int(self.shift_range[1])
        if lo > hi:
            raise ValueError("shift range must be ordered")
        object.__setattr__(self, "shift_range", (lo, hi))
        object.__setattr__(self, "rescale_range", _check_range("rescale", self.rescale_range))
        object.__setattr__(self, "blur_sigma_range", _check_range("blur sigma", self.blur_sigma_range))
        object.__setattr__(self, "noise_sd_range", _check_range("noise sd", self.noise_sd_range))
        object.__setattr__(self, "brightness_range", _check_range("brightness", self.brightness_range))
        if self.blur_sigma_range[0] < 0.0 or self.noise_sd_range[0] < 0.0 or self.rescale_range[0] <= 0.0:
            raise ValueError("sigmas and noise sds must be non-negative and rescale factors positive")


def defend_randomized_preproc(
    model: Segmenter, img: GrayImage, cfg: TtaConfig, rng: RngStream
) -> tuple[ProbMap, BinaryMask]:
    """Average probability maps over k randomized rescale+blur views.

    Each view is rescaled (content scaled, frame kept) and blurred before
    prediction; its probability map is inverse-rescaled back to the original
    frame, and the k aligned maps are averaged and thresholded at 0.5.
    """
    g = rng.generator()
    draws = [(g.uniform(*cfg.rescale_range), g.uniform(*cfg.blur_sigma_range)) for _ in range(cfg.k)]
    acc = np.zeros((img.height, img.width))
    for factor, sigma in draws:
        view = gaussian_blur(rescale_keep_size(img, factor), sigma)
        prob = model.predict_prob(view)
        acc += rescale_keep_size_inverse(prob.data, factor)
    avg = acc / cfg.k
    final = ProbMap(np.clip(avg, 0.0, 1.0))
    return final, finalize_mask(final)


def defend_denoise(model: Segmenter, img: GrayImage) -> tuple[ProbMap, BinaryMask]:
    """Deterministic despeckling front end: Gaussian blur then 3x3 median."""
    view = median_filter_3x3(gaussian_blur(img, DENOISE_BLUR_SIGMA))
    prob = model.predict_prob(view)
    return prob, finalize_mask(prob)


def defend_stochastic_ensemble(
    model: Segmenter, img: GrayImage, cfg: EnsembleConfig, rng: RngStream
) -> tuple[ProbMap, BinaryMask]:
    """Agreement-weighted ensemble over k randomized views.

    Views apply shift, rescale, blur, additive Gaussian noise, and brightness;
    predicted maps are realigned (inverse rescale, inverse shift), binarized
    at 0.5 for a majority-vote consensus, and aggregated with per-pixel
    weights: a prediction agreeing with the consensus at a pixel weighs the
    pixel's agreement fraction a(p) = max(votes_1, votes_0)/k, a dissenting
    one weighs 1 - a(p). The final map is the weighted average (the consensus
    majority guarantees a positive weight sum everywhere).
    """
    if cfg.k % 2 == 0:
        raise ValueError("majority vote needs an odd ensemble size")
    g = rng.generator()
    # all randomness drawn sequentially up front, so member passes could fan out
    draws = [
        (
            int(g.integers(cfg.shift_range[0], cfg.shift_range[1] + 1)),
            int(g.integers(cfg.shift_range[0], cfg.shift_range[1] + 1)),
            g.uniform(*cfg.rescale_range),
            g.uniform(*cfg.blur_sigma_range),
            g.uniform(*cfg.noise_sd_range),
            g.uniform(*cfg.brightness_range),
        )
        for _ in range(cfg.k)
    ]
    noise_fields = [g.standard_normal((img.height, img.width)) for _ in range(cfg.k)]

    aligned = np.empty((cfg.k, img.height, img.width))
    for m, (dx, dy, factor, sigma, noise_sd, brightness) in enumerate(draws):
        view = shift_reflect(img, dx, dy)
        view = rescale_keep_size(view, factor)
        view = gaussian_blur(view, sigma)
        view = GrayImage(np.clip(view.data + noise_sd * noise_fields[m], 0.0, 1.0))
        view = add_brightness(view, brightness)
        prob = model.predict_prob(view)
        realigned = rescale_keep_size_inverse(prob.data, factor)
        aligned[m] = shift_reflect_array(realigned, -dx, -dy)

    votes = aligned > 0.5
    ones = votes.sum(axis=0)
    consensus = ones * 2 > cfg.k
    agreement = np.maximum(ones, cfg.k - ones) / cfg.k
    weights = np.where(votes == consensus[None, :, :], agreement[None, :, :], 1.0 - agreement[None, :, :])
    final = (weights * aligned).sum(axis=0) / weights.sum(axis=0)
    prob_map = ProbMap(np.clip(final, 0.0, 1.0))
    return prob_map, finalize_mask(prob_map)
