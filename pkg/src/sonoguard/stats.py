"""Paired nonparametric statistics for defense evaluations: one-sided
Wilcoxon signed-rank, Bonferroni correction, paired Cohen's d, and percentile
bootstrap confidence intervals.

The Wilcoxon test drops zero differences, uses average ranks for tied
magnitudes, and is exact (dynamic program over the W+ distribution) up to
n = 25 when tie-free; beyond that it falls back to the normal approximation
with tie-corrected variance and a 0.5 continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sigproc import RngStream

__all__ = [
    "WilcoxonResult",
    "EffectSize",
    "PairedStat",
    "wilcoxon_one_sided",
    "bonferroni",
    "cohens_d_paired",
    "bootstrap_ci_mean",
    "compute_paired_stat",
    "ZeroVarianceError",
    "EXACT_WILCOXON_MAX_N",
]

EXACT_WILCOXON_MAX_N = 25


class ZeroVarianceError(ArithmeticError):
    """Effect size is undefined: all paired differences are identical."""


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    n_effective: int  # pairs remaining after zero differences are dropped
    used_exact: bool
    degenerate: bool  # all differences were zero


@dataclass(frozen=True)
class EffectSize:
    d: float
    label: str


@dataclass(frozen=True)
class PairedStat:
    """Summary of one defended-vs-undefended comparison."""

    mean_delta: float
    ci_low: float
    ci_high: float
    p_raw: float
    p_corrected: float
    cohens_d: Optional[float]
    effect_label: Optional[str]
    n_effective: int
    dropped_zeros: int
    degenerate: bool


def _validate_deltas(deltas) -> np.ndarray:
    d = np.asarray(deltas, dtype=np.float64)
    if d.ndim != 1 or d.size < 1:
        raise ValueError("deltas must be a non-empty 1D sequence")
    if not np.isfinite(d).all():
        raise ValueError("deltas must be finite")
    return d


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with tied values sharing the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0  # mean of 1-based positions
        i = j + 1
    return ranks


def _exact_tail_p(ranks_sum: int, n: int, w_plus: int) -> float:
    """P(W+ >= w_plus) under the null, by subset-sum counting over ranks 1..n."""
    ways = np.zeros(ranks_sum + 1, dtype=np.float64)
    ways[0] = 1.0
    for r in range(1, n + 1):
        ways[r:] += ways[: ranks_sum + 1 - r]
    return float(ways[w_plus:].sum() / 2.0**n)


def wilcoxon_one_sided(deltas, direction: str = "greater") -> WilcoxonResult:
    """One-sided Wilcoxon signed-rank test on paired differences.

    direction="greater" tests whether differences are systematically positive
    ("less" mirrors it). All-zero input is degenerate and reports p = 1.0.
    """
    if direction not in ("greater", "less"):
        raise ValueError("direction must be 'greater' or 'less'")
    d = _validate_deltas(deltas)
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return WilcoxonResult(p_value=1.0, n_effective=0, used_exact=True, degenerate=True)
    if direction == "less":
        d = -d

    magnitudes = np.abs(d)
    ranks = _average_ranks(magnitudes)
    w_plus = float(ranks[d > 0].sum())
    has_ties = np.unique(magnitudes).size < n

    if n <= EXACT_WILCOXON_MAX_N and not has_ties:
        ranks_sum = n * (n + 1) // 2
        p = _exact_tail_p(ranks_sum, n, int(round(w_plus)))
        return WilcoxonResult(p_value=p, n_effective=n, used_exact=True, degenerate=False)

    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(magnitudes, return_counts=True)
    var -= float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts)) / 48.0
    if var <= 0.0:
        p = 1.0 if w_plus <= mu else 0.0
        return WilcoxonResult(p_value=p, n_effective=n, used_exact=False, degenerate=False)
    z = (w_plus - mu - 0.5) / math.sqrt(var)
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return WilcoxonResult(p_value=min(1.0, max(0.0, p)), n_effective=n, used_exact=False, degenerate=False)


def bonferroni(p_raw: float, m: int) -> float:
    """Family-wise correction for m comparisons: min(1, m * p)."""
    if not (np.isfinite(p_raw) and 0.0 <= p_raw <= 1.0):
        raise ValueError("p_raw must be a probability")
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    return min(1.0, m * p_raw)


_EFFECT_BANDS = ((0.2, "negligible"), (0.5, "small"), (0.8, "medium"))


def cohens_d_paired(deltas) -> EffectSize:
    """Paired Cohen's d: mean of differences over their sample SD (n-1)."""
    d = _validate_deltas(deltas)
    if d.size < 2:
        raise ValueError("need at least two paired differences")
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise ZeroVarianceError("paired differences have zero variance")
    value = float(d.mean()) / sd
    for cutoff, label in _EFFECT_BANDS:
        if abs(value) < cutoff:
            return EffectSize(d=value, label=label)
    return EffectSize(d=value, label="large")


def bootstrap_ci_mean(
    deltas, rng: RngStream, resamples: int = 1000, level: float = 0.95
) -> tuple[float, float]:
    """Percentile bootstrap CI for the mean (resample n with replacement)."""
    d = _validate_deltas(deltas)
    if d.size < 2:
        raise ValueError("need at least two samples to bootstrap")
    if not (0.0 < level < 1.0):
        raise ValueError("level must be in (0, 1)")
    if resamples < 1:
        raise ValueError("resamples must be positive")
    g = rng.generator()
    idx = g.integers(0, d.size, size=(resamples, d.size))
    means = d[idx].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return float(lo), float(hi)


def compute_paired_stat(deltas, comparisons: int, rng: RngStream) -> PairedStat:
    """Full paired summary for one comparison within a Bonferroni family."""
    d = _validate_deltas(deltas)
    wil = wilcoxon_one_sided(d, "greater")
    ci_low, ci_high = bootstrap_ci_mean(d, rng) if d.size >= 2 else (float(d[0]), float(d[0]))
    try:
        effect = cohens_d_paired(d) if d.size >= 2 else None
    except ZeroVarianceError:
        effect = None
    return PairedStat(
        mean_delta=float(d.mean()),
        ci_low=ci_low,
        ci_high=ci_high,
        p_raw=wil.p_value,
        p_corrected=bonferroni(wil.p_value, comparisons),
        cohens_d=None if effect is None else effect.d,
        effect_label=None if effect is None else effect.label,
        n_effective=wil.n_effective,
        dropped_zeros=int(d.size - wil.n_effective),
        degenerate=wil.degenerate,
    )
