"""Command-line entry point.

Subcommands: train, predict, evaluate, cv, ablate-random, ablate-first-m,
sweep-first-m, synth, summarize. Every command writes a run manifest next
to its outputs so results can be reproduced bit-for-bit.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 model/config
error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ablation import (FirstMConfig, RandomAblationConfig, apply_first_m,
                       first_m_ablate, missing_data_curve, random_ablate,
                       reduction_summary, sweep_first_m)
from .core import CLASS_ORDER, VentMode
from .errors import DataError, ModelError, VentclassError
from .features import FeatureConfig, feature_matrix
from .forest import ForestConfig, deserialize_model, predict_batch, \
    serialize_model, train_forest
from .io import (WAVEFORM_SUFFIX, load_dataset, serialize_waveform_file,
                 write_annotations, write_feature_dump, write_predictions)
from .metrics import (CVGrouping, PipelineConfig, evaluate_model, kfold_cv,
                      split_by_patient, train_on_dataset)
from .smoothing import SmoothingConfig, SmoothingVariant, smooth
from .synth import SynthConfig, generate_patient

def _add_shared(p: argparse.ArgumentParser, model: bool = False) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=30)
    p.add_argument("--smooth", choices=[v.value for v in SmoothingVariant],
                   default="lookahead")
    p.add_argument("--n", type=int, default=50, help="smoothing window")
    p.add_argument("--x", type=float, default=0.6,
                   help="smoothing majority fraction")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--rate", type=float, default=50.0, help="sampling Hz")
    if model:
        p.add_argument("--model", type=Path, required=True)


def _add_data(p: argparse.ArgumentParser, annotations: bool = True) -> None:
    p.add_argument("--data", type=Path, required=True,
                   help="directory of *.vwd waveform files")
    if annotations:
        p.add_argument("--annotations", type=Path, required=True,
                       help="directory of annotation *.csv files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ventclass",
        description="Per-breath ventilator mode classification from "
                    "flow/pressure waveforms.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a forest on labeled waveforms")
    _add_data(p)
    _add_shared(p, model=True)
    p.add_argument("--out", type=Path, help="manifest/report directory")

    p = sub.add_parser("predict", help="per-breath predictions to CSV")
    _add_data(p, annotations=False)
    _add_shared(p, model=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("evaluate", help="metrics report on labeled data")
    _add_data(p)
    _add_shared(p, model=True)
    p.add_argument("--out", type=Path, required=True,
                   help="report JSON path; predictions CSV written beside it")
    p.add_argument("--test-patients", type=str, default=None,
                   help="comma-separated patient ids to evaluate on")

    p = sub.add_parser("cv", help="k-fold cross-validation")
    _add_data(p)
    _add_shared(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--grouping", choices=[g.value for g in CVGrouping],
                   default="patient")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("ablate-random",
                       help="random-removal robustness curve")
    _add_data(p)
    _add_shared(p)
    p.add_argument("--test-data", type=Path, required=True)
    p.add_argument("--test-annotations", type=Path, required=True)
    p.add_argument("--fractions", type=str, default="0.0,0.5,0.9,0.99",
                   help="comma-separated ascending removal fractions")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("ablate-first-m",
                       help="keep first m breaths per mode per file, retrain")
    _add_data(p)
    _add_shared(p)
    p.add_argument("--test-data", type=Path, required=True)
    p.add_argument("--test-annotations", type=Path, required=True)
    p.add_argument("--m", type=str,
                   default="vc=450,pc=120,ps=1200,cpap=160,pav=80",
                   help="mode=count pairs, comma-separated")
    p.add_argument("--contiguous-only", action="store_true")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("sweep-first-m",
                       help="F1 of one mode across a grid of keep-counts")
    _add_data(p)
    _add_shared(p)
    p.add_argument("--test-data", type=Path, required=True)
    p.add_argument("--test-annotations", type=Path, required=True)
    p.add_argument("--sweep-mode", required=True,
                   choices=[m.value for m in CLASS_ORDER])
    p.add_argument("--grid", type=str, required=True,
                   help="comma-separated m values")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("synth", help="generate synthetic waveform files")
    _add_shared(p)
    p.add_argument("--mode", required=True,
                   choices=[m.value for m in CLASS_ORDER])
    p.add_argument("--patients", type=int, default=1)
    p.add_argument("--breaths", type=int, default=2000)
    p.add_argument("--rr", type=float, default=18.0)
    p.add_argument("--peep", type=float, default=5.0)
    p.add_argument("--jitter", type=float, default=0.05)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--artifact-rate", type=float, default=0.0)
    p.add_argument("--prefix", type=str, default="synth")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("summarize",
                       help="dataset mode/flag counts or ablation arithmetic")
    _add_shared(p)
    p.add_argument("--data", type=Path)
    p.add_argument("--annotations", type=Path)
    p.add_argument("--kept", type=str,
                   help="comma-separated kept counts (vc,pc,ps,cpap,pav)")
    p.add_argument("--original", type=int,
                   help="original training-set size for --kept")
    p.add_argument("--features-csv", type=Path,
                   help="also dump per-breath features to this CSV")
    p.add_argument("--out", type=Path)
    return parser


def _load_dataset(data_dir: Path, ann_dir: Path | None, rate: float):
    return load_dataset(data_dir, ann_dir, rate_hz=rate)


def _load_model(path: Path):
    try:
        with open(path) as fh:
            return deserialize_model(fh)
    except OSError as e:
        raise ModelError(f"cannot read model file {path}: {e}") from e


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        features=FeatureConfig(),
        forest=ForestConfig(n_trees=args.trees, seed=args.seed),
        smoothing=SmoothingConfig(n=args.n, x=args.x,
                                  variant=SmoothingVariant(args.smooth)),
        threads=args.threads)


def _manifest(args, outputs: list[str]) -> dict:
    echo = {k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(args).items() if k != "command"}
    return {"command": args.command, "config": echo, "outputs": outputs,
            "artifact_version": __version__,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(args, out_path: Path, outputs: list[str]) -> None:
    _write_json(out_path.parent / f"{out_path.stem}.manifest.json",
                _manifest(args, outputs))


def _parse_fractions(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_train(args) -> None:
    dataset = _load_dataset(args.data, args.annotations, args.rate)
    model = train_on_dataset(dataset, _pipeline_config(args))
    args.model.parent.mkdir(parents=True, exist_ok=True)
    with open(args.model, "w") as fh:
        serialize_model(model, fh)
    _write_manifest(args, args.model, [str(args.model)])


def _cmd_predict(args) -> None:
    files = _load_dataset(args.data, None, args.rate)
    model = _load_model(args.model)
    fc = FeatureConfig()
    sc = SmoothingConfig(n=args.n, x=args.x,
                         variant=SmoothingVariant(args.smooth))
    rows = []
    from .breath import make_breath
    for wf in files:
        breaths = [make_breath(r, wf.spec) for r in wf.breaths]
        pred, fractions = predict_batch(model, feature_matrix(breaths, fc))
        raw = [CLASS_ORDER[i] for i in pred]
        smoothed = smooth(raw, sc)
        rows.extend((wf.file_id, r.breath_ordinal, rm, sm, fr)
                    for r, rm, sm, fr in
                    zip(wf.breaths, raw, smoothed, fractions))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as fh:
        write_predictions(rows, fh)
    _write_manifest(args, args.out, [str(args.out)])


def _cmd_evaluate(args) -> None:
    dataset = _load_dataset(args.data, args.annotations, args.rate)
    if args.test_patients:
        _, dataset = split_by_patient(dataset,
                                      args.test_patients.split(","))
    model = _load_model(args.model)
    cfg = _pipeline_config(args)
    result = evaluate_model(model, dataset, cfg.features, cfg.smoothing)
    pred_path = args.out.parent / f"{args.out.stem}.predictions.csv"
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(pred_path, "w") as fh:
        write_predictions(result.prediction_rows, fh)
    report = {"raw": result.raw.as_dict(), "smoothed": result.smoothed.as_dict(),
              "manifest": _manifest(args, [str(args.out), str(pred_path)])}
    _write_json(args.out, report)
    print(f"macro-F1 raw={result.raw.macro_f1:.3f} "
          f"smoothed={result.smoothed.macro_f1:.3f}")


def _cmd_cv(args) -> None:
    dataset = _load_dataset(args.data, args.annotations, args.rate)
    reports, mean = kfold_cv(dataset, k=args.k,
                             grouping=CVGrouping(args.grouping),
                             seed=args.seed, config=_pipeline_config(args))
    payload = {"folds": [r.as_dict() for r in reports],
               "mean": mean.as_dict(),
               "manifest": _manifest(args, [str(args.out)])}
    _write_json(args.out, payload)
    print(f"cv mean macro-F1={mean.macro_f1:.3f}")


def _cmd_ablate_random(args) -> None:
    train = _load_dataset(args.data, args.annotations, args.rate)
    test = _load_dataset(args.test_data, args.test_annotations, args.rate)
    rows = missing_data_curve(train, test, _parse_fractions(args.fractions),
                              _pipeline_config(args), seed=args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as fh:
        fh.write("fraction," + ",".join(f"f1_{m.value}" for m in CLASS_ORDER)
                 + "\n")
        for row in rows:
            fh.write(f"{row['fraction']}," + ",".join(
                f"{row[f'f1_{m.value}']:.6f}" for m in CLASS_ORDER) + "\n")
    _write_manifest(args, args.out, [str(args.out)])


def _parse_m_map(text: str) -> dict[VentMode, int]:
    out = {}
    for pair in text.split(","):
        mode, _, count = pair.partition("=")
        out[VentMode(mode.strip())] = int(count)
    return out


def _cmd_ablate_first_m(args) -> None:
    train = _load_dataset(args.data, args.annotations, args.rate)
    test = _load_dataset(args.test_data, args.test_annotations, args.rate)
    config = FirstMConfig(m_per_mode=_parse_m_map(args.m))
    ablated = apply_first_m(train, config,
                            contiguous_only=args.contiguous_only)
    counts = ablated.mode_counts()
    summary = reduction_summary([counts.get(m, 0) for m in CLASS_ORDER],
                                len(train.entries))
    result = evaluate_model(train_on_dataset(ablated, _pipeline_config(args)),
                            test, FeatureConfig(),
                            _pipeline_config(args).smoothing)
    _write_json(args.out, {
        "reduction": summary,
        "raw": result.raw.as_dict(), "smoothed": result.smoothed.as_dict(),
        "manifest": _manifest(args, [str(args.out)])})
    print(f"kept {summary['kept_total']} of {summary['original_total']} "
          f"({summary['reduction_pct']:.2f}% reduction), "
          f"macro-F1={result.smoothed.macro_f1:.3f}")


def _cmd_sweep_first_m(args) -> None:
    train = _load_dataset(args.data, args.annotations, args.rate)
    test = _load_dataset(args.test_data, args.test_annotations, args.rate)
    mode = VentMode(args.sweep_mode)
    grid = [int(v) for v in args.grid.split(",")]
    rows = sweep_first_m(train, test, mode, grid, _pipeline_config(args))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as fh:
        fh.write(f"m,f1_{mode.value}\n")
        for row in rows:
            fh.write(f"{row['m']},{row[f'f1_{mode.value}']:.6f}\n")
    _write_manifest(args, args.out, [str(args.out)])


def _cmd_synth(args) -> None:
    args.out.mkdir(parents=True, exist_ok=True)
    annotations = []
    for p in range(args.patients):
        cfg = SynthConfig(mode=VentMode(args.mode), n_breaths=args.breaths,
                          respiratory_rate=args.rr, peep=args.peep,
                          timing_jitter=args.jitter,
                          amplitude_noise=args.noise,
                          artifact_rate=args.artifact_rate,
                          seed=args.seed + p, rate_hz=args.rate)
        patient_id = f"{args.prefix}-{args.mode}-p{p:03d}"
        wf, anns = generate_patient(cfg, patient_id=patient_id,
                                    file_id=f"{patient_id}-f0")
        with open(args.out / f"{patient_id}__{wf.file_id}{WAVEFORM_SUFFIX}",
                  "w") as fh:
            serialize_waveform_file(wf, fh)
        annotations.extend(anns)
    ann_path = args.out / f"{args.prefix}-{args.mode}-annotations.csv"
    with open(ann_path, "w") as fh:
        write_annotations(annotations, fh)
    _write_manifest(args, ann_path, [str(args.out)])


def _cmd_summarize(args) -> None:
    payload: dict = {}
    if args.kept:
        if args.original is None:
            raise DataError("--kept requires --original")
        kept = [int(v) for v in args.kept.split(",")]
        payload["reduction"] = reduction_summary(kept, args.original)
    if args.data is not None and args.annotations is not None:
        dataset = _load_dataset(args.data, args.annotations, args.rate)
        payload["dataset"] = dataset.summary()
        if args.features_csv:
            from .metrics import dataset_features
            X, _, entries = dataset_features(dataset, FeatureConfig())
            with open(args.features_csv, "w") as fh:
                write_feature_dump(
                    ((e.file_id, e.breath_ordinal, X[i], e.mode)
                     for i, e in enumerate(entries)), fh)
    if not payload:
        raise DataError("nothing to summarize: pass --kept or --data")
    if args.out:
        payload["manifest"] = _manifest(args, [str(args.out)])
        _write_json(args.out, payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "cv": _cmd_cv,
    "ablate-random": _cmd_ablate_random,
    "ablate-first-m": _cmd_ablate_first_m,
    "sweep-first-m": _cmd_sweep_first_m,
    "synth": _cmd_synth,
    "summarize": _cmd_summarize,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        _COMMANDS[args.command](args)
    except (DataError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ModelError, VentclassError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())
