"""Shared fixtures: hand-built breaths and synthetic cohorts."""
from __future__ import annotations

import numpy as np
import pytest

from ventclass.core import CLASS_ORDER, RawBreathRecord, SamplingSpec
from ventclass.breath import make_breath
from ventclass.io import LabeledDataset, join_dataset
from ventclass.synth import SynthConfig, generate_patient


def breath_from(flow, pressure, rate_hz: float = 50.0):
    """Build a Breath (x0 + metadata) from raw sample arrays."""
    rec = RawBreathRecord(breath_ordinal=0,
                          flow=np.asarray(flow, dtype=np.float64),
                          pressure=np.asarray(pressure, dtype=np.float64))
    return make_breath(rec, SamplingSpec(rate_hz=rate_hz))


def synth_cohort(n_patients: int, n_breaths: int, seed0: int,
                 artifact_rate: float = 0.02,
                 heterogeneous: bool = True) -> LabeledDataset:
    """One single-mode file per (mode, patient), joined with annotations."""
    files, anns = [], []
    for mi, mode in enumerate(CLASS_ORDER):
        for p in range(n_patients):
            cfg = SynthConfig(mode=mode, n_breaths=n_breaths,
                              artifact_rate=artifact_rate,
                              seed=seed0 + 1000 * mi + p)
            wf, a = generate_patient(
                cfg, patient_id=f"{mode.value}-p{p}",
                file_id=f"{mode.value}-p{p}-f0",
                heterogeneous=heterogeneous)
            files.append(wf)
            anns.extend(a)
    return join_dataset(files, anns)


@pytest.fixture(scope="session")
def small_cohort() -> LabeledDataset:
    """Five modes x 3 patients x 120 breaths; reused by pipeline tests."""
    return synth_cohort(3, 120, seed0=7)
