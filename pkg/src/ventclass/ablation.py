"""Training-set ablation experiments.

Two reductions: random per-class removal (missing-data simulation) and
keep-first-m breaths of a mode per file (annotation-budget reduction). Both
operate on the labeled breath sequence; windowed features are recomputed
over the survivors downstream, so removed breaths leak nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import CLASS_ORDER, VentMode
from .errors import ConfigError
from .io import LabeledDataset
from .metrics import EvaluationResult, PipelineConfig, evaluate_model, \
    train_on_dataset


@dataclass(frozen=True)
class RandomAblationConfig:
    fraction_removed: float
    seed: int = 0
    per_class_equal: bool = True  # removal fraction applied per class

    def __post_init__(self):
        if not (0.0 <= self.fraction_removed < 1.0):
            raise ConfigError("fraction_removed must be in [0, 1)")
        if not self.per_class_equal:
            raise ConfigError("only per-class-equal ablation is supported")


@dataclass(frozen=True)
class FirstMConfig:
    """Breaths to keep per mode per file (defaults from the final reduced
    training set: VC 450, PC 120, PS 1200, CPAP 160, PAV 80)."""

    m_per_mode: dict[VentMode, int] = field(default_factory=lambda: {
        VentMode.VC: 450, VentMode.PC: 120, VentMode.PS: 1200,
        VentMode.CPAP: 160, VentMode.PAV: 80})

    def __post_init__(self):
        if any(m < 1 for m in self.m_per_mode.values()):
            raise ConfigError("all m values must be >= 1")


def random_ablate(train: LabeledDataset,
                  config: RandomAblationConfig) -> LabeledDataset:
    """Remove floor(fraction * class_count) breaths per class, uniformly
    without replacement, preserving the temporal order of survivors."""
    if not train.entries:
        raise ConfigError("empty training set")
    rng = np.random.default_rng(config.seed)
    drop: set[int] = set()
    for mode in CLASS_ORDER:
        idxs = np.array([i for i, e in enumerate(train.entries)
                         if e.mode is mode], dtype=np.int64)
        n_remove = int(np.floor(config.fraction_removed * idxs.size))
        if n_remove > 0:
            drop.update(rng.choice(idxs, size=n_remove, replace=False).tolist())
    return LabeledDataset(entries=[e for i, e in enumerate(train.entries)
                                   if i not in drop])


def first_m_ablate(train: LabeledDataset, mode: VentMode, m: int,
                   contiguous_only: bool = False) -> LabeledDataset:
    """Within each file, keep only the first m breaths labeled `mode`.

    By default "first m" counts occurrences in temporal order; with
    contiguous_only, keeping stops at the end of the first contiguous run of
    the mode (capped at m). Other modes are untouched.
    """
    if m < 1:
        raise ConfigError("m must be >= 1")
    kept: list = []
    per_file_count: dict[str, int] = {}
    per_file_run_done: dict[str, bool] = {}
    for e in train.entries:
        if e.mode is not mode:
            if contiguous_only and per_file_count.get(e.file_id, 0) > 0:
                per_file_run_done[e.file_id] = True
            kept.append(e)
            continue
        if contiguous_only and per_file_run_done.get(e.file_id, False):
            continue
        count = per_file_count.get(e.file_id, 0)
        if count < m:
            per_file_count[e.file_id] = count + 1
            kept.append(e)
    return LabeledDataset(entries=kept)


def apply_first_m(train: LabeledDataset, config: FirstMConfig,
                  contiguous_only: bool = False) -> LabeledDataset:
    out = train
    for mode, m in config.m_per_mode.items():
        out = first_m_ablate(out, mode, m, contiguous_only=contiguous_only)
    return out


def reduction_summary(kept_counts: Sequence[int], original_total: int) -> dict:
    """Kept totals and percent reduction for an ablation report."""
    total = int(sum(kept_counts))
    return {
        "kept_per_mode": {m.value: int(c)
                          for m, c in zip(CLASS_ORDER, kept_counts)},
        "kept_total": total,
        "original_total": int(original_total),
        "reduction_pct": 100.0 * (1.0 - total / original_total),
    }


def missing_data_curve(train: LabeledDataset, test: LabeledDataset,
                       fractions: Sequence[float], config: PipelineConfig,
                       seed: int = 0) -> list[dict]:
    """Per-class F1 vs fraction of training data randomly removed.

    The test set is never ablated. A fraction that empties a class is
    recorded as a degenerate point rather than raised.
    """
    if sorted(fractions) != list(fractions):
        raise ConfigError("fractions must be sorted ascending")
    rows: list[dict] = []
    for frac in fractions:
        ablated = random_ablate(train, RandomAblationConfig(
            fraction_removed=frac, seed=seed))
        counts = ablated.mode_counts()
        degenerate = any(counts.get(m, 0) == 0 for m in CLASS_ORDER)
        row: dict = {"fraction": frac, "degenerate": degenerate}
        if degenerate:
            for m in CLASS_ORDER:
                row[f"f1_{m.value}"] = float("nan")
        else:
            result = evaluate_model(train_on_dataset(ablated, config), test,
                                    config.features, config.smoothing)
            for m in CLASS_ORDER:
                row[f"f1_{m.value}"] = result.smoothed.per_class[m].f1
                row[f"raw_f1_{m.value}"] = result.raw.per_class[m].f1
        rows.append(row)
    return rows


def sweep_first_m(train: LabeledDataset, test: LabeledDataset, mode: VentMode,
                  m_grid: Sequence[int],
                  config: PipelineConfig) -> list[dict]:
    """F1 of `mode` as its per-file keep-count varies, other modes constant."""
    if not m_grid:
        raise ConfigError("m_grid must be nonempty")
    rows = []
    for m in m_grid:
        ablated = first_m_ablate(train, mode, m)
        result = evaluate_model(train_on_dataset(ablated, config), test,
                                config.features, config.smoothing)
        rows.append({"m": int(m),
                     f"f1_{mode.value}": result.smoothed.per_class[mode].f1,
                     "kept_total": len(ablated.entries)})
    return rows
