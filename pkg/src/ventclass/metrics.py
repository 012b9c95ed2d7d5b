"""Confusion-matrix metrics, patient-grouped splits, cross-validation, and
the end-to-end evaluation pipeline.

Per-class accuracy/precision/recall/specificity are one-vs-rest. Values are
kept at full precision internally; round only at presentation (3 d.p. in
reports).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .core import CLASS_INDEX, CLASS_ORDER, N_CLASSES, VentMode, \
    modes_to_indices
from .errors import ConfigError, DataError
from .features import FeatureConfig, feature_matrix
from .forest import ForestConfig, RandomForestModel, predict_batch, \
    train_forest
from .io import DatasetEntry, LabeledDataset
from .smoothing import SmoothingConfig, SmoothingVariant, smooth


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass
class ConfusionMatrix:
    """counts[i, j] = breaths of true class i predicted as class j."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (N_CLASSES, N_CLASSES):
            raise ConfigError(f"confusion must be {N_CLASSES}x{N_CLASSES}")
        if (self.counts < 0).any():
            raise ConfigError("negative confusion counts")

    @classmethod
    def from_labels(cls, true: Sequence, pred: Sequence) -> "ConfusionMatrix":
        t = true if isinstance(true, np.ndarray) else modes_to_indices(true)
        p = pred if isinstance(pred, np.ndarray) else modes_to_indices(pred)
        counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        np.add.at(counts, (t, p), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class ClassMetrics:
    f1: float
    accuracy: float
    precision: float
    recall: float
    specificity: float


@dataclass
class MetricsReport:
    per_class: dict[VentMode, ClassMetrics]
    macro_f1: float
    macro_accuracy: float
    overall_accuracy: float
    total: int
    confusion: ConfusionMatrix

    def as_dict(self, decimals: int = 3) -> dict:
        def r(v: float) -> float:
            return round(v, decimals)

        return {
            "per_class": {m.value: {
                "f1": r(c.f1), "accuracy": r(c.accuracy),
                "precision": r(c.precision), "recall": r(c.recall),
                "specificity": r(c.specificity),
            } for m, c in self.per_class.items()},
            "macro_f1": r(self.macro_f1),
            "macro_accuracy": r(self.macro_accuracy),
            "overall_accuracy": r(self.overall_accuracy),
            "total": self.total,
            "confusion": self.confusion.counts.tolist(),
        }


def per_class_metrics(confusion: ConfusionMatrix) -> MetricsReport:
    """One-vs-rest metrics per class plus unweighted macro averages.

    Zero-denominator ratios are defined as 0.
    """
    counts = confusion.counts
    total = confusion.total
    if total == 0:
        raise DataError("empty confusion matrix")

    def ratio(num: int, den: int) -> float:
        return num / den if den > 0 else 0.0

    per_class: dict[VentMode, ClassMetrics] = {}
    for i, mode in enumerate(CLASS_ORDER):
        tp = int(counts[i, i])
        fn = int(counts[i].sum()) - tp
        fp = int(counts[:, i].sum()) - tp
        tn = total - tp - fn - fp
        precision = ratio(tp, tp + fp)
        recall = ratio(tp, tp + fn)
        per_class[mode] = ClassMetrics(
            f1=f1_score(precision, recall),
            accuracy=ratio(tp + tn, total),
            precision=precision,
            recall=recall,
            specificity=ratio(tn, tn + fp))
    macro_f1 = sum(c.f1 for c in per_class.values()) / N_CLASSES
    macro_acc = sum(c.accuracy for c in per_class.values()) / N_CLASSES
    overall = float(np.trace(counts)) / total
    return MetricsReport(per_class=per_class, macro_f1=macro_f1,
                         macro_accuracy=macro_acc, overall_accuracy=overall,
                         total=total, confusion=confusion)


def split_by_patient(dataset: LabeledDataset,
                     test_patient_ids: Sequence[str],
                     ) -> tuple[LabeledDataset, LabeledDataset]:
    """Whole-patient split: every breath of a patient lands on one side."""
    test_ids = set(test_patient_ids)
    unknown = test_ids - set(dataset.patients())
    if unknown:
        raise DataError(f"unknown patient ids: {sorted(unknown)}")
    train = [e for e in dataset.entries if e.patient_id not in test_ids]
    test = [e for e in dataset.entries if e.patient_id in test_ids]
    return LabeledDataset(entries=train), LabeledDataset(entries=test)


# --- pipeline ---

@dataclass(frozen=True)
class PipelineConfig:
    features: FeatureConfig = field(default_factory=FeatureConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    threads: int = 1


def dataset_features(dataset: LabeledDataset, config: FeatureConfig,
                     ) -> tuple[np.ndarray, np.ndarray, list[DatasetEntry]]:
    """Per-file feature extraction over the whole dataset.

    Returns (X, y, entries) aligned row-for-row; windows never span files.
    """
    mats = []
    entries: list[DatasetEntry] = []
    for _, file_entries in dataset.by_file().items():
        mats.append(feature_matrix([e.breath for e in file_entries], config))
        entries.extend(file_entries)
    if not mats:
        raise DataError("empty dataset")
    X = np.vstack(mats)
    y = modes_to_indices([e.mode for e in entries])
    return X, y, entries


def train_on_dataset(dataset: LabeledDataset,
                     config: PipelineConfig) -> RandomForestModel:
    if any(e.mode is VentMode.OTHER for e in dataset.entries):
        raise DataError("dataset contains OTHER labels; filter upstream")
    X, y, _ = dataset_features(dataset, config.features)
    return train_forest(X, y, config.forest, threads=config.threads)


@dataclass
class EvaluationResult:
    raw: MetricsReport
    smoothed: MetricsReport
    prediction_rows: list[tuple]  # write_predictions row tuples


def evaluate_model(model: RandomForestModel, dataset: LabeledDataset,
                   feature_config: FeatureConfig | None = None,
                   smoothing_config: SmoothingConfig | None = None,
                   ) -> EvaluationResult:
    """Features -> per-breath prediction -> per-file smoothing -> reports."""
    feature_config = feature_config or FeatureConfig()
    smoothing_config = smoothing_config or SmoothingConfig()
    if any(e.mode is VentMode.OTHER for e in dataset.entries):
        raise DataError("dataset contains OTHER labels; filter upstream")
    true_all: list[int] = []
    raw_all: list[int] = []
    smoothed_all: list[int] = []
    rows: list[tuple] = []
    for (_, file_id), file_entries in dataset.by_file().items():
        X = feature_matrix([e.breath for e in file_entries], feature_config)
        pred, fractions = predict_batch(model, X)
        raw_modes = [CLASS_ORDER[i] for i in pred]
        smoothed_modes = smooth(raw_modes, smoothing_config)
        true_all.extend(CLASS_INDEX[e.mode] for e in file_entries)
        raw_all.extend(int(i) for i in pred)
        smoothed_all.extend(CLASS_INDEX[m] for m in smoothed_modes)
        rows.extend((e.file_id, e.breath_ordinal, rm, sm, fr)
                    for e, rm, sm, fr in
                    zip(file_entries, raw_modes, smoothed_modes, fractions))
    true_arr = np.array(true_all, dtype=np.int64)
    raw_rep = per_class_metrics(ConfusionMatrix.from_labels(
        true_arr, np.array(raw_all, dtype=np.int64)))
    smooth_rep = per_class_metrics(ConfusionMatrix.from_labels(
        true_arr, np.array(smoothed_all, dtype=np.int64)))
    return EvaluationResult(raw=raw_rep, smoothed=smooth_rep,
                            prediction_rows=rows)


class CVGrouping(Enum):
    PATIENT = "patient"
    BREATH = "breath"


def kfold_cv(dataset: LabeledDataset, k: int = 10,
             grouping: CVGrouping = CVGrouping.PATIENT, seed: int = 0,
             config: PipelineConfig | None = None,
             ) -> tuple[list[MetricsReport], MetricsReport]:
    """Deterministic k-fold cross-validation; grouping by patient prevents
    within-patient leakage. Features are extracted per file before splitting,
    so windows never cross folds.

    Returns (per-fold smoothed reports, pooled report over all folds).
    """
    config = config or PipelineConfig()
    X, y, entries = dataset_features(dataset, config.features)
    if grouping is CVGrouping.PATIENT:
        keys = np.array([e.patient_id for e in entries])
    else:
        keys = np.arange(len(entries)).astype(str)
    groups = np.unique(keys)
    if groups.size < k:
        raise ConfigError(f"{groups.size} groups < k={k}")
    rng = np.random.default_rng(seed)
    folds = np.array_split(rng.permutation(groups), k)

    file_of = np.array([f"{e.patient_id}\x00{e.file_id}" for e in entries])
    reports: list[MetricsReport] = []
    pooled = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for fold_groups in folds:
        test_mask = np.isin(keys, fold_groups)
        model = train_forest(X[~test_mask], y[~test_mask], config.forest,
                             threads=config.threads)
        pred, _ = predict_batch(model, X[test_mask])
        # smooth per file within the fold, preserving temporal order
        smoothed = pred.copy()
        test_files = file_of[test_mask]
        for f in np.unique(test_files):
            sel = test_files == f
            seq = [CLASS_ORDER[i] for i in pred[sel]]
            smoothed[sel] = modes_to_indices(smooth(seq, config.smoothing))
        cm = ConfusionMatrix.from_labels(y[test_mask], smoothed)
        pooled += cm.counts
        reports.append(per_class_metrics(cm))
    return reports, mean_report(reports, ConfusionMatrix(pooled))


def mean_report(reports: Sequence[MetricsReport],
                confusion: ConfusionMatrix) -> MetricsReport:
    """Unweighted mean of per-fold metrics, carrying the pooled confusion."""
    def avg(get) -> float:
        return sum(get(r) for r in reports) / len(reports)

    per_class = {
        m: ClassMetrics(
            f1=avg(lambda r: r.per_class[m].f1),
            accuracy=avg(lambda r: r.per_class[m].accuracy),
            precision=avg(lambda r: r.per_class[m].precision),
            recall=avg(lambda r: r.per_class[m].recall),
            specificity=avg(lambda r: r.per_class[m].specificity))
        for m in CLASS_ORDER}
    return MetricsReport(per_class=per_class,
                         macro_f1=avg(lambda r: r.macro_f1),
                         macro_accuracy=avg(lambda r: r.macro_accuracy),
                         overall_accuracy=avg(lambda r: r.overall_accuracy),
                         total=sum(r.total for r in reports),
                         confusion=confusion)
