"""Evaluation, threshold calibration and subject-level screening for
multi-image-per-subject binary classifiers."""

__version__ = "0.1.0"

from .errors import ConfigError, DatasetError, ScreenEvalError, UndefinedMetricError  # noqa: E402
from .dataset import (  # noqa: E402
    Dataset,
    PredictionRecord,
    SubjectGroup,
    load_dataset,
    parse_records,
    partition_and_group,
    validate,
)
from .voting import SubjectScore, VoteStrategy, aggregate_dataset, vote  # noqa: E402
from .metrics import (  # noqa: E402
    ConfusionMatrix,
    MetricSet,
    RocCurve,
    auc,
    confusion_at,
    metrics_from_confusion,
    roc_points,
)
from .calibration import CalibrationArtifact, best_f1_threshold, calibrate, calibrate_all  # noqa: E402
from .bootstrap import BootstrapConfig, IntervalEstimate, bootstrap_ci, bootstrap_metrics  # noqa: E402
from .simulate import SimConfig, simulate_cohort, theoretical_auc  # noqa: E402
from .report import build_confusion_report, build_performance_report, export_roc  # noqa: E402

__all__ = [
    "ConfigError", "DatasetError", "ScreenEvalError", "UndefinedMetricError",
    "Dataset", "PredictionRecord", "SubjectGroup", "load_dataset", "parse_records",
    "partition_and_group", "validate",
    "SubjectScore", "VoteStrategy", "aggregate_dataset", "vote",
    "ConfusionMatrix", "MetricSet", "RocCurve", "auc", "confusion_at", "metrics_from_confusion",
    "roc_points",
    "CalibrationArtifact", "best_f1_threshold", "calibrate", "calibrate_all",
    "BootstrapConfig", "IntervalEstimate", "bootstrap_ci", "bootstrap_metrics",
    "SimConfig", "simulate_cohort", "theoretical_auc",
    "build_confusion_report", "build_performance_report", "export_roc",
]
