"""Segmentation-quality metrics, perturbation imperceptibility metrics, and
the defense recovery rate.

Empty-mask conventions (documented in report metadata): Dice and IoU of two
empty masks are 1.0; precision with no predicted positives is 1.0 when the
truth is also empty, else 0.0 (recall symmetrically); HD95 uses the image
diagonal as a sentinel when exactly one mask is empty and 0 when both are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import BinaryMask, GrayImage
from .sigproc import euclidean_distance_transform, mask_boundary, ssim

__all__ = [
    "SegMetrics",
    "PerturbMetrics",
    "dice",
    "iou",
    "precision",
    "recall",
    "pixel_accuracy",
    "hd95",
    "seg_metrics",
    "perturb_metrics",
    "recovery_rate",
    "UndefinedRecoveryError",
]


@dataclass(frozen=True)
class SegMetrics:
    dice: float
    iou: float
    precision: float
    recall: float
    pixel_accuracy: float
    hd95: float


@dataclass(frozen=True)
class PerturbMetrics:
    ssim: float
    l2: float
    linf: float


def _check_dims(a, b) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")


def _confusion(pred: BinaryMask, truth: BinaryMask) -> tuple[int, int, int, int]:
    _check_dims(pred, truth)
    p = pred.data.astype(bool)
    t = truth.data.astype(bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = p.size - tp - fp - fn
    return tp, fp, fn, tn


def dice(pred: BinaryMask, truth: BinaryMask) -> float:
    tp, fp, fn, _ = _confusion(pred, truth)
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def iou(pred: BinaryMask, truth: BinaryMask) -> float:
    tp, fp, fn, _ = _confusion(pred, truth)
    if tp + fp + fn == 0:
        return 1.0
    return tp / float(tp + fp + fn)


def precision(pred: BinaryMask, truth: BinaryMask) -> float:
    tp, fp, fn, _ = _confusion(pred, truth)
    if tp + fp == 0:
        return 1.0 if fn == 0 else 0.0
    return tp / float(tp + fp)


def recall(pred: BinaryMask, truth: BinaryMask) -> float:
    tp, fp, fn, _ = _confusion(pred, truth)
    if tp + fn == 0:
        return 1.0 if fp == 0 else 0.0
    return tp / float(tp + fn)


def pixel_accuracy(pred: BinaryMask, truth: BinaryMask) -> float:
    tp, fp, fn, tn = _confusion(pred, truth)
    return (tp + tn) / float(tp + fp + fn + tn)


def _directed_p95(src_boundary: np.ndarray, dist_to_other: np.ndarray) -> float:
    return float(np.percentile(dist_to_other[src_boundary], 95.0))


def hd95(pred: BinaryMask, truth: BinaryMask) -> float:
    """95th-percentile symmetric boundary distance.

    Distances run between boundary pixels (surface-distance convention);
    the percentile uses linear interpolation. One empty mask yields the image
    diagonal as a sentinel; two empty masks yield 0.
    """
    _check_dims(pred, truth)
    a_empty = pred.count() == 0
    b_empty = truth.count() == 0
    if a_empty and b_empty:
        return 0.0
    if a_empty or b_empty:
        return float(np.hypot(pred.width, pred.height))
    pb = mask_boundary(pred)
    tb = mask_boundary(truth)
    dist_to_pred = euclidean_distance_transform(pb)
    dist_to_truth = euclidean_distance_transform(tb)
    pa = pb.data.astype(bool)
    ta = tb.data.astype(bool)
    return max(_directed_p95(pa, dist_to_truth), _directed_p95(ta, dist_to_pred))


def seg_metrics(pred: BinaryMask, truth: BinaryMask) -> SegMetrics:
    """All segmentation metrics from one confusion-matrix pass."""
    tp, fp, fn, tn = _confusion(pred, truth)
    union = tp + fp + fn
    return SegMetrics(
        dice=1.0 if union == 0 else 2.0 * tp / (2.0 * tp + fp + fn),
        iou=1.0 if union == 0 else tp / float(union),
        precision=(1.0 if fn == 0 else 0.0) if tp + fp == 0 else tp / float(tp + fp),
        recall=(1.0 if fp == 0 else 0.0) if tp + fn == 0 else tp / float(tp + fn),
        pixel_accuracy=(tp + tn) / float(tp + fp + fn + tn),
        hd95=hd95(pred, truth),
    )


def perturb_metrics(original: GrayImage, adversarial: GrayImage) -> PerturbMetrics:
    """Imperceptibility of a perturbation: SSIM, Frobenius L2, and L-infinity."""
    _check_dims(original, adversarial)
    delta = adversarial.data - original.data
    return PerturbMetrics(
        ssim=ssim(original, adversarial),
        l2=float(np.sqrt(np.sum(delta * delta))),
        linf=float(np.max(np.abs(delta))),
    )


class UndefinedRecoveryError(ArithmeticError):
    """The attack caused no damage, so the recovery ratio has no meaning."""


def recovery_rate(mitigated: float, undefended: float, unperturbed: float) -> float:
    """Fraction of attack-induced Dice damage undone by a defense.

    (mitigated - undefended) / (unperturbed - undefended); 1.0 is full
    recovery, 0.0 none. May exceed 1 or go negative.
    """
    for v in (mitigated, undefended, unperturbed):
        if not np.isfinite(v):
            raise ValueError("recovery inputs must be finite")
    denom = unperturbed - undefended
    if denom == 0.0:
        raise UndefinedRecoveryError("unperturbed and undefended Dice are equal")
    return (mitigated - undefended) / denom
