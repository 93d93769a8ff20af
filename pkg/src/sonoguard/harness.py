"""Batch experiment harness: phantom generation, attack runs, defense
evaluation, metric aggregation, paired statistics, and report emission.

The whole experiment is a pure function of :class:`ExperimentConfig`: every
random draw comes from a stream derived as (seed, case, phase), cases never
share state, and reports are serialized canonically, so identical configs
produce byte-identical ``results.json`` files.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .attacks import run_black_box_attack
from .defenses import (
    EnsembleConfig,
    TtaConfig,
    defend_denoise,
    defend_randomized_preproc,
    defend_stochastic_ensemble,
)
from .metrics import PerturbMetrics, SegMetrics, perturb_metrics, seg_metrics
from .model import RemoteError, Segmenter, generate_phantom, make_segmenter
from .sigproc import RngStream
from .stats import PairedStat, compute_paired_stat

__all__ = [
    "ExperimentConfig",
    "EvaluationRecord",
    "RunResult",
    "ATTACK_CHOICES",
    "DEFENSE_CHOICES",
    "condition_label",
    "run_experiment",
    "write_reports",
    "load_results",
]

log = logging.getLogger("sonoguard")

ATTACK_CHOICES = ("ssaa", "fdua")
DEFENSE_CHOICES = ("randomized_preproc", "denoise", "stochastic_ensemble")

_ATTACK_NAMES = {"none": "Unperturbed", "ssaa": "SSAA", "fdua": "FDUA"}
_DEFENSE_NAMES = {
    "randomized_preproc": "Randomized Preprocessing",
    "denoise": "Denoising",
    "stochastic_ensemble": "Stochastic Ensemble",
}


def condition_label(attack: str, defense: str) -> str:
    base = _ATTACK_NAMES[attack]
    return base if defense == "none" else f"{base} + {_DEFENSE_NAMES[defense]}"


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one batch experiment."""

    seed: int = 42
    cases: int = 31
    width: int = 128
    height: int = 128
    attacks: tuple = ATTACK_CHOICES
    defenses: tuple = DEFENSE_CHOICES
    iterations: int = 50
    population: int = 10
    budget: int = 500
    model: str = "builtin"
    workers: int = 1
    out: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "attacks", tuple(self.attacks))
        object.__setattr__(self, "defenses", tuple(self.defenses))
        if not 0 <= int(self.seed) < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.cases < 1:
            raise ValueError("case count must be positive")
        if self.width < 64 or self.height < 64:
            raise ValueError("image dimensions must be at least 64x64")
        for a in self.attacks:
            if a not in ATTACK_CHOICES:
                raise ValueError(f"unknown attack {a!r}; choices: {ATTACK_CHOICES}")
        for d in self.defenses:
            if d not in DEFENSE_CHOICES:
                raise ValueError(f"unknown defense {d!r}; choices: {DEFENSE_CHOICES}")
        if self.iterations < 1 or self.population < 1:
            raise ValueError("iterations and population must be positive")
        if self.budget < self.iterations * self.population:
            raise ValueError(
                f"budget {self.budget} cannot cover {self.iterations} x {self.population} queries"
            )
        if self.workers < 1:
            raise ValueError("workers must be positive")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["attacks"] = list(self.attacks)
        d["defenses"] = list(self.defenses)
        return d


@dataclass(frozen=True)
class EvaluationRecord:
    """Metrics for one (case, condition) cell."""

    case_id: int
    attack: str  # "none" or an attack kind
    defense: str  # "none" or a defense kind
    condition: str
    metrics: SegMetrics
    perturb: Optional[PerturbMetrics]  # only when an attack was applied
    queries_used: int


@dataclass(frozen=True)
class CleanCostRow:
    """Unperturbed-accuracy cost of running one defense."""

    defense: str
    undefended_mean_dice: float
    defended_mean_dice: float
    delta: float


@dataclass(frozen=True)
class AttackTrace:
    case_id: int
    attack: str
    trace: tuple


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list
    paired_stats: list  # of (attack, defense, PairedStat)
    clean_cost: list  # of CleanCostRow
    traces: list  # of AttackTrace
    failed_cases: list  # of (case_id, message)
    elapsed_seconds: float = field(default=0.0, compare=False)


# --------------------------------------------------------------------------
# per-case evaluation


def _apply_defense(kind: str, model: Segmenter, img, rng: RngStream):
    if kind == "randomized_preproc":
        return defend_randomized_preproc(model, img, TtaConfig(), rng)
    if kind == "denoise":
        return defend_denoise(model, img)
    if kind == "stochastic_ensemble":
        return defend_stochastic_ensemble(model, img, EnsembleConfig(), rng)
    raise ValueError(f"unknown defense {kind!r}")


def _evaluate_case(cfg: ExperimentConfig, case_id: int):
    """All condition rows for one phantom. Runs in a worker when parallel."""
    model = make_segmenter(cfg.model)
    case_rng = RngStream(cfg.seed).child("case", case_id)
    phantom = generate_phantom(case_rng.child("phantom"), cfg.width, cfg.height)
    records = []
    traces = []

    def add(attack, defense, mask, perturb, queries):
        records.append(
            EvaluationRecord(
                case_id=case_id,
                attack=attack,
                defense=defense,
                condition=condition_label(attack, defense),
                metrics=seg_metrics(mask, phantom.truth),
                perturb=perturb,
                queries_used=queries,
            )
        )

    add("none", "none", model.predict_mask(phantom.image), None, 0)
    for dkind in cfg.defenses:
        _, mask = _apply_defense(dkind, model, phantom.image, case_rng.child("defense", dkind, "none"))
        add("none", dkind, mask, None, 0)

    for akind in cfg.attacks:
        result = run_black_box_attack(
            model,
            phantom.image,
            phantom.truth,
            akind,
            case_rng.child("attack", akind),
            iterations=cfg.iterations,
            population=cfg.population,
            budget=cfg.budget,
        )
        adversarial = result.best_image
        traces.append(AttackTrace(case_id=case_id, attack=akind, trace=result.trace))
        imperceptibility = perturb_metrics(phantom.image, adversarial)
        add(akind, "none", model.predict_mask(adversarial), imperceptibility, result.queries_used)
        for dkind in cfg.defenses:
            _, mask = _apply_defense(dkind, model, adversarial, case_rng.child("defense", dkind, akind))
            add(akind, dkind, mask, imperceptibility, result.queries_used)

    return case_id, records, traces


def _dice_by_case(records, attack: str, defense: str) -> dict:
    return {r.case_id: r.metrics.dice for r in records if r.attack == attack and r.defense == defense}


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Evaluate every (case, condition) cell and the paired statistics tables.

    Adversarial images are generated once per (case, attack) against the
    undefended model and shared across the defense conditions. Cases whose
    model adapter fails are excluded from pairing with a warning.
    """
    start = time.perf_counter()
    records = []
    traces = []
    failed = []

    case_ids = range(cfg.cases)
    if cfg.workers == 1:
        outcomes = (_case_outcome(cfg, cid) for cid in case_ids)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_case_outcome, cfg, cid) for cid in case_ids]
            outcomes = [f.result() for f in futures]
    for case_id, case_records, case_traces, error in outcomes:
        if error is not None:
            log.warning("case %d failed and is excluded from pairing: %s", case_id, error)
            failed.append((case_id, error))
            continue
        records.extend(case_records)
        traces.extend(case_traces)

    comparisons = max(1, len(cfg.attacks) * len(cfg.defenses))
    stats_root = RngStream(cfg.seed).child("stats")
    paired = []
    for akind in cfg.attacks:
        undefended = _dice_by_case(records, akind, "none")
        for dkind in cfg.defenses:
            defended = _dice_by_case(records, akind, dkind)
            case_order = sorted(set(undefended) & set(defended))
            if not case_order:
                log.warning("no paired cases for %s; row omitted", condition_label(akind, dkind))
                continue
            deltas = [defended[c] - undefended[c] for c in case_order]
            paired.append(
                (akind, dkind, compute_paired_stat(deltas, comparisons, stats_root.child(akind, dkind)))
            )

    clean_cost = []
    baseline = _dice_by_case(records, "none", "none")
    for dkind in cfg.defenses:
        defended = _dice_by_case(records, "none", dkind)
        shared = sorted(set(baseline) & set(defended))
        if not shared:
            continue
        base_mean = float(np.mean([baseline[c] for c in shared]))
        def_mean = float(np.mean([defended[c] for c in shared]))
        clean_cost.append(
            CleanCostRow(
                defense=dkind,
                undefended_mean_dice=base_mean,
                defended_mean_dice=def_mean,
                delta=def_mean - base_mean,
            )
        )

    return RunResult(
        config=cfg,
        records=records,
        paired_stats=paired,
        clean_cost=clean_cost,
        traces=traces,
        failed_cases=failed,
        elapsed_seconds=time.perf_counter() - start,
    )


def _case_outcome(cfg: ExperimentConfig, case_id: int):
    try:
        cid, recs, trs = _evaluate_case(cfg, case_id)
        return cid, recs, trs, None
    except RemoteError as exc:
        return case_id, [], [], str(exc)


# --------------------------------------------------------------------------
# serialization

_CONVENTIONS = {
    "aggregation": "one image per case; condition means are taken over cases; SD is sample SD (n-1)",
    "dice_iou_both_empty": 1.0,
    "precision_no_predicted_positives": "1.0 if truth empty else 0.0 (recall symmetric)",
    "hd95_one_mask_empty": "image diagonal sentinel",
    "hd95_both_masks_empty": 0.0,
    "hd95_point_sets": "boundary pixels (4-neighbor boundary)",
    "wilcoxon": "one-sided greater, zeros dropped, exact when n <= 25 and tie-free",
    "bootstrap": "percentile method, 1000 resamples",
}


def _record_to_dict(r: EvaluationRecord) -> dict:
    return {
        "case_id": r.case_id,
        "attack": r.attack,
        "defense": r.defense,
        "condition": r.condition,
        "metrics": asdict(r.metrics),
        "perturb": None if r.perturb is None else asdict(r.perturb),
        "queries_used": r.queries_used,
    }


def _record_from_dict(d: dict) -> EvaluationRecord:
    return EvaluationRecord(
        case_id=d["case_id"],
        attack=d["attack"],
        defense=d["defense"],
        condition=d["condition"],
        metrics=SegMetrics(**d["metrics"]),
        perturb=None if d["perturb"] is None else PerturbMetrics(**d["perturb"]),
        queries_used=d["queries_used"],
    )


def _result_to_payload(result: RunResult) -> dict:
    return {
        "schema": 1,
        "config": result.config.to_dict(),
        "conventions": _CONVENTIONS,
        "records": [_record_to_dict(r) for r in result.records],
        "paired_stats": [
            {"attack": a, "defense": d, **asdict(st)} for a, d, st in result.paired_stats
        ],
        "clean_cost": [asdict(row) for row in result.clean_cost],
        "traces": [
            {"case_id": t.case_id, "attack": t.attack, "trace": list(t.trace)} for t in result.traces
        ],
        "failed_cases": [{"case_id": c, "error": e} for c, e in result.failed_cases],
    }


def _result_from_payload(payload: dict) -> RunResult:
    stats = [
        (
            row["attack"],
            row["defense"],
            PairedStat(**{k: v for k, v in row.items() if k not in ("attack", "defense")}),
        )
        for row in payload["paired_stats"]
    ]
    return RunResult(
        config=ExperimentConfig.from_dict(payload["config"]),
        records=[_record_from_dict(d) for d in payload["records"]],
        paired_stats=stats,
        clean_cost=[CleanCostRow(**row) for row in payload["clean_cost"]],
        traces=[
            AttackTrace(case_id=t["case_id"], attack=t["attack"], trace=tuple(t["trace"]))
            for t in payload["traces"]
        ],
        failed_cases=[(row["case_id"], row["error"]) for row in payload["failed_cases"]],
    )


def _canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def load_results(path) -> RunResult:
    """Read a results.json written by :func:`write_reports`."""
    with open(path, "r", encoding="utf-8") as fh:
        return _result_from_payload(json.load(fh))


# --------------------------------------------------------------------------
# report files


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _condition_order(records) -> list:
    seen = []
    for r in records:
        key = (r.attack, r.defense)
        if key not in seen:
            seen.append(key)
    return seen


_SEG_FIELDS = ("dice", "iou", "precision", "recall", "pixel_accuracy", "hd95")
_PERTURB_FIELDS = ("ssim", "l2", "linf")


def _mean_sd(values) -> tuple:
    arr = np.asarray(values, dtype=np.float64)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), sd


def _table1_rows(records) -> list:
    rows = []
    for attack, defense in _condition_order(records):
        group = [r for r in records if (r.attack, r.defense) == (attack, defense)]
        if not group:
            log.warning("condition %s has no records; row omitted", condition_label(attack, defense))
            continue
        row = [condition_label(attack, defense), len(group)]
        for metric in _SEG_FIELDS:
            mean, sd = _mean_sd([getattr(r.metrics, metric) for r in group])
            row.extend([mean, sd])
        perturbed = [r for r in group if r.perturb is not None]
        for metric in _PERTURB_FIELDS:
            row.append(_mean_sd([getattr(r.perturb, metric) for r in perturbed])[0] if perturbed else None)
        row.append(_mean_sd([r.queries_used for r in group])[0])
        rows.append(row)
    return rows


def write_reports(result: RunResult, outdir) -> list:
    """Emit the three CSV tables and the canonical results.json; returns paths."""
    if not result.records:
        raise ValueError("cannot write reports for an empty record set")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    table1 = out / "table1_conditions.csv"
    header = ["condition", "n"]
    for metric in _SEG_FIELDS:
        header.extend([f"{metric}_mean", f"{metric}_sd"])
    header.extend([f"{m}_mean" for m in _PERTURB_FIELDS])
    header.append("queries_mean")
    _write_csv(table1, header, _table1_rows(result.records))

    table2 = out / "table2_clean_cost.csv"
    _write_csv(
        table2,
        ["defense", "undefended_mean_dice", "defended_mean_dice", "delta"],
        [
            [_DEFENSE_NAMES[row.defense], row.undefended_mean_dice, row.defended_mean_dice, row.delta]
            for row in result.clean_cost
        ],
    )

    table3 = out / "table3_stats.csv"
    _write_csv(
        table3,
        [
            "attack",
            "defense",
            "mean_delta",
            "ci_low",
            "ci_high",
            "p_raw",
            "p_corrected",
            "cohens_d",
            "effect_label",
            "n_effective",
            "dropped_zeros",
        ],
        [
            [
                _ATTACK_NAMES[a],
                _DEFENSE_NAMES[d],
                st.mean_delta,
                st.ci_low,
                st.ci_high,
                st.p_raw,
                st.p_corrected,
                st.cohens_d,
                st.effect_label,
                st.n_effective,
                st.dropped_zeros,
            ]
            for a, d, st in result.paired_stats
        ],
    )

    results_json = out / "results.json"
    with open(results_json, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_canonical_json(_result_to_payload(result)))

    return [table1, table2, table3, results_json]
