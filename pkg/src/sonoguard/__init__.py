"""Robustness toolkit for black-box ultrasound segmentation models:
speckle-space and frequency-space attacks, inference-time defenses,
segmentation/imperceptibility metrics, paired statistics, and a batch
evaluation harness.
"""

from .attacks import (
    AttackResult,
    DegenerateBoundaryError,
    FduaParams,
    SsaaParams,
    apply_fdua,
    apply_ssaa,
    apply_ssaa_uniform,
    run_black_box_attack,
)
from .defenses import (
    EnsembleConfig,
    TtaConfig,
    defend_denoise,
    defend_randomized_preproc,
    defend_stochastic_ensemble,
)
from .harness import (
    EvaluationRecord,
    ExperimentConfig,
    RunResult,
    load_results,
    run_experiment,
    write_reports,
)
from .imgcore import BinaryMask, GrayImage, ProbMap
from .kernels import HAVE_NATIVE
from .metrics import (
    PerturbMetrics,
    SegMetrics,
    UndefinedRecoveryError,
    dice,
    hd95,
    iou,
    perturb_metrics,
    pixel_accuracy,
    precision,
    recall,
    recovery_rate,
    seg_metrics,
)
from .model import (
    BudgetExceededError,
    Phantom,
    QueryLedger,
    ReferenceSegmenter,
    RemoteProtocolError,
    RemoteSegmenter,
    RemoteTransportError,
    RemoteValidationError,
    Segmenter,
    generate_phantom,
    ledgered_predict,
    make_segmenter,
)
from .plots import render_plots
from .sigproc import RngStream, ssim
from .stats import (
    PairedStat,
    bonferroni,
    bootstrap_ci_mean,
    cohens_d_paired,
    wilcoxon_one_sided,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "HAVE_NATIVE",
    "GrayImage",
    "BinaryMask",
    "ProbMap",
    "RngStream",
    "ssim",
    "Segmenter",
    "ReferenceSegmenter",
    "RemoteSegmenter",
    "RemoteTransportError",
    "RemoteProtocolError",
    "RemoteValidationError",
    "QueryLedger",
    "BudgetExceededError",
    "ledgered_predict",
    "make_segmenter",
    "Phantom",
    "generate_phantom",
    "SsaaParams",
    "FduaParams",
    "AttackResult",
    "DegenerateBoundaryError",
    "apply_ssaa",
    "apply_ssaa_uniform",
    "apply_fdua",
    "run_black_box_attack",
    "TtaConfig",
    "EnsembleConfig",
    "defend_randomized_preproc",
    "defend_denoise",
    "defend_stochastic_ensemble",
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
    "wilcoxon_one_sided",
    "bonferroni",
    "cohens_d_paired",
    "bootstrap_ci_mean",
    "PairedStat",
    "ExperimentConfig",
    "EvaluationRecord",
    "RunResult",
    "run_experiment",
    "write_reports",
    "load_results",
    "render_plots",
]
