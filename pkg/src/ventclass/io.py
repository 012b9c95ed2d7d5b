"""Parsing and serialization of waveform files, annotations, and predictions.

Waveform text format: UTF-8, one block per breath:

    BS, S:<ordinal>
    <flow>, <pressure>     (one line per sample, decimals)
    BE

Annotation CSV: header ``file_id,breath_ordinal,mode,flags`` with mode in
{vc,pc,ps,cpap,pav,other} and flags a ``|``-joined subset of
{pva,suction,cough}. Predictions CSV: header ``file_id,breath_ordinal,
raw_mode,smoothed_mode,p_vc,p_pc,p_ps,p_cpap,p_pav``.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .breath import Breath, make_breath
from .core import (ALLOWED_FLAGS, CLASS_ORDER, BreathAnnotation,
                   RawBreathRecord, SamplingSpec, VentMode, WaveformFile)
from .errors import (DataError, DuplicateAnnotationError, JoinError,
                     ParseError, SchemaError, StructureError)

WAVEFORM_SUFFIX = ".vwd"
PREDICTIONS_HEADER = ("file_id", "breath_ordinal", "raw_mode", "smoothed_mode",
                      "p_vc", "p_pc", "p_ps", "p_cpap", "p_pav")
ANNOTATION_COLUMNS = ("file_id", "breath_ordinal", "mode", "flags")


def parse_waveform_file(stream: Iterable[str], patient_id: str, file_id: str,
                        spec: SamplingSpec | None = None) -> WaveformFile:
    """Parse a marker-delimited waveform text stream.

    A truncated final breath (EOF before BE) is dropped and counted in
    dropped_breaths rather than raised.
    """
    spec = spec or SamplingSpec()
    breaths: list[RawBreathRecord] = []
    dropped = 0
    in_breath = False
    ordinal = -1
    last_ordinal = None
    flow: list[float] = []
    pressure: list[float] = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("BS"):
            if in_breath:
                raise StructureError(f"line {lineno}: BS inside open breath")
            try:
                ordinal = int(line.split("S:", 1)[1])
            except (IndexError, ValueError):
                raise ParseError("malformed BS marker", lineno) from None
            if last_ordinal is not None and ordinal <= last_ordinal:
                raise StructureError(
                    f"line {lineno}: breath ordinal {ordinal} not increasing")
            in_breath = True
            flow, pressure = [], []
        elif line == "BE":
            if not in_breath:
                raise StructureError(f"line {lineno}: BE without BS")
            if not flow:
                raise StructureError(f"line {lineno}: empty breath block")
            breaths.append(RawBreathRecord(
                breath_ordinal=ordinal,
                flow=np.array(flow), pressure=np.array(pressure)))
            last_ordinal = ordinal
            in_breath = False
        else:
            if not in_breath:
                raise StructureError(f"line {lineno}: samples outside BS/BE")
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected 'flow, pressure', got {line!r}",
                                 lineno)
            try:
                flow.append(float(parts[0]))
                pressure.append(float(parts[1]))
            except ValueError:
                raise ParseError(f"non-numeric sample {line!r}", lineno) \
                    from None
    if in_breath:
        dropped += 1
    if not breaths:
        raise StructureError("no breaths")
    return WaveformFile(patient_id=patient_id, file_id=file_id, spec=spec,
                        breaths=breaths, dropped_breaths=dropped)


def serialize_waveform_file(wf: WaveformFile, sink: TextIO,
                            decimals: int = 6) -> None:
    for rec in wf.breaths:
        sink.write(f"BS, S:{rec.breath_ordinal}\n")
        for f, p in zip(rec.flow, rec.pressure):
            sink.write(f"{f:.{decimals}f}, {p:.{decimals}f}\n")
        sink.write("BE\n")


def parse_annotations(stream: Iterable[str]) -> list[BreathAnnotation]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise SchemaError("empty annotation file")
    missing = set(ANNOTATION_COLUMNS) - set(reader.fieldnames)
    if missing:
        raise SchemaError(f"missing columns: {sorted(missing)}")
    seen: set[tuple[str, int]] = set()
    out: list[BreathAnnotation] = []
    for row in reader:
        try:
            ordinal = int(row["breath_ordinal"])
        except ValueError:
            raise ParseError(
                f"non-integer breath_ordinal {row['breath_ordinal']!r}",
                reader.line_num) from None
        key = (row["file_id"], ordinal)
        if key in seen:
            raise DuplicateAnnotationError(f"duplicate annotation for {key}")
        seen.add(key)
        flags_field = (row["flags"] or "").strip()
        flags = frozenset(f for f in flags_field.split("|") if f)
        if flags - ALLOWED_FLAGS:
            raise ParseError(f"unknown flags {flags_field!r}", reader.line_num)
        out.append(BreathAnnotation(file_id=row["file_id"],
                                    breath_ordinal=ordinal,
                                    mode=VentMode.from_string(row["mode"]),
                                    flags=flags))
    return out


def write_annotations(annotations: Sequence[BreathAnnotation],
                      sink: TextIO) -> None:
    sink.write(",".join(ANNOTATION_COLUMNS) + "\n")
    for a in annotations:
        sink.write(f"{a.file_id},{a.breath_ordinal},{a.mode.value},"
                   f"{'|'.join(sorted(a.flags))}\n")


@dataclass
class DatasetEntry:
    patient_id: str
    file_id: str
    breath_ordinal: int
    breath: Breath
    mode: VentMode
    flags: frozenset[str] = frozenset()


@dataclass
class LabeledDataset:
    """Breaths joined with their annotations, in per-file temporal order."""

    entries: list[DatasetEntry]
    unannotated: int = 0
    filtered_other: int = 0

    def by_file(self) -> dict[tuple[str, str], list[DatasetEntry]]:
        out: dict[tuple[str, str], list[DatasetEntry]] = {}
        for e in self.entries:
            out.setdefault((e.patient_id, e.file_id), []).append(e)
        return out

    def patients(self) -> list[str]:
        return sorted({e.patient_id for e in self.entries})

    def mode_counts(self) -> Counter:
        return Counter(e.mode for e in self.entries)

    def flag_counts(self) -> Counter:
        c: Counter = Counter()
        for e in self.entries:
            c.update(e.flags)
        return c

    def summary(self) -> dict:
        """Table-style per-mode breath/patient/flag counts."""
        per_mode: dict[str, dict] = {}
        for mode in CLASS_ORDER:
            sub = [e for e in self.entries if e.mode is mode]
            flags: Counter = Counter()
            for e in sub:
                flags.update(e.flags)
            per_mode[mode.value] = {
                "patients": len({e.patient_id for e in sub}),
                "breaths": len(sub),
                "pva": flags.get("pva", 0),
                "suction": flags.get("suction", 0),
                "cough": flags.get("cough", 0),
            }
        return {"modes": per_mode, "total_breaths": len(self.entries),
                "patients": len(self.patients()),
                "unannotated": self.unannotated,
                "filtered_other": self.filtered_other}


def join_dataset(waveform_files: Sequence[WaveformFile],
                 annotations: Sequence[BreathAnnotation],
                 filter_other: bool = True) -> LabeledDataset:
    """Match breaths to annotations by (file_id, breath_ordinal).

    Unannotated breaths are dropped with a counter; annotations referencing
    missing breaths are an error.
    """
    ann_by_key: dict[tuple[str, int], BreathAnnotation] = {}
    for a in annotations:
        key = (a.file_id, a.breath_ordinal)
        if key in ann_by_key:
            raise DuplicateAnnotationError(f"duplicate annotation for {key}")
        ann_by_key[key] = a
    file_ids = {wf.file_id for wf in waveform_files}
    orphans = sorted({a.file_id for a in annotations} - file_ids)
    if orphans:
        raise JoinError(f"annotations reference unknown files: {orphans}")

    entries: list[DatasetEntry] = []
    unannotated = 0
    filtered = 0
    matched: set[tuple[str, int]] = set()
    for wf in waveform_files:
        for rec in wf.breaths:
            key = (wf.file_id, rec.breath_ordinal)
            ann = ann_by_key.get(key)
            if ann is None:
                unannotated += 1
                continue
            matched.add(key)
            if filter_other and ann.mode is VentMode.OTHER:
                filtered += 1
                continue
            entries.append(DatasetEntry(
                patient_id=wf.patient_id, file_id=wf.file_id,
                breath_ordinal=rec.breath_ordinal,
                breath=make_breath(rec, wf.spec),
                mode=ann.mode, flags=ann.flags))
    missing = sorted(set(ann_by_key) - matched)
    if missing:
        raise JoinError(f"annotations reference missing breaths: "
                        f"{missing[:10]}{'...' if len(missing) > 10 else ''}")
    return LabeledDataset(entries=entries, unannotated=unannotated,
                          filtered_other=filtered)


def load_dataset(data_dir, annotations_dir=None, rate_hz: float = 50.0):
    """Load a directory of ``*.vwd`` waveform files, optionally joined with a
    directory of annotation ``*.csv`` files.

    Waveform file names are ``<patient_id>__<file_id>.vwd`` (a name without
    the double-underscore separator is used as both ids). Returns a
    LabeledDataset when ``annotations_dir`` is given, else the list of
    parsed WaveformFiles.
    """
    from pathlib import Path
    data_dir = Path(data_dir)
    spec = SamplingSpec(rate_hz=rate_hz)
    files = []
    for path in sorted(data_dir.glob(f"*{WAVEFORM_SUFFIX}")):
        stem = path.name[:-len(WAVEFORM_SUFFIX)]
        patient_id, _, file_id = stem.partition("__")
        if not file_id:
            patient_id = file_id = stem
        with open(path) as fh:
            files.append(parse_waveform_file(fh, patient_id, file_id, spec))
    if not files:
        raise DataError(f"no *{WAVEFORM_SUFFIX} files in {data_dir}")
    if annotations_dir is None:
        return files
    annotations: list[BreathAnnotation] = []
    for path in sorted(Path(annotations_dir).glob("*.csv")):
        with open(path) as fh:
            annotations.extend(parse_annotations(fh))
    if not annotations:
        raise DataError(f"no *.csv files in {annotations_dir}")
    return join_dataset(files, annotations)


def write_predictions(rows: Iterable[tuple], sink: TextIO) -> None:
    """Rows: (file_id, breath_ordinal, raw_mode, smoothed_mode, vote_fractions).

    Vote fractions are written with 6 fractional digits and must sum to
    1 +- 1e-9.
    """
    sink.write(",".join(PREDICTIONS_HEADER) + "\n")
    for file_id, ordinal, raw_mode, smoothed_mode, fractions in rows:
        fractions = np.asarray(fractions, dtype=np.float64)
        if abs(float(fractions.sum()) - 1.0) > 1e-9:
            raise ValueError(
                f"vote fractions for ({file_id}, {ordinal}) do not sum to 1")
        frac_txt = ",".join(f"{v:.6f}" for v in fractions)
        sink.write(f"{file_id},{ordinal},{raw_mode.value},"
                   f"{smoothed_mode.value},{frac_txt}\n")


def read_predictions(stream: Iterable[str]) -> list[tuple]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or \
            set(PREDICTIONS_HEADER) - set(reader.fieldnames):
        raise SchemaError("malformed predictions header")
    out = []
    for row in reader:
        fractions = np.array([float(row[f"p_{m.value}"]) for m in CLASS_ORDER])
        out.append((row["file_id"], int(row["breath_ordinal"]),
                    VentMode(row["raw_mode"]), VentMode(row["smoothed_mode"]),
                    fractions))
    return out


def write_feature_dump(rows: Iterable[tuple], sink: TextIO) -> None:
    """Rows: (file_id, breath_ordinal, feature_array(7), mode)."""
    sink.write("file_id,breath_ordinal,f1,f2,f3,f4,f5,f6,f7,label\n")
    for file_id, ordinal, feats, mode in rows:
        txt = ",".join(repr(float(v)) for v in feats)
        sink.write(f"{file_id},{ordinal},{txt},{mode.value}\n")
