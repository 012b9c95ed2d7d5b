"""Core domain types shared across the package."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np


class VentMode(str, Enum):
    """Ventilation mode label for a single breath."""

    VC = "vc"
    PC = "pc"
    PS = "ps"
    CPAP = "cpap"
    PAV = "pav"
    OTHER = "other"

    @classmethod
    def from_string(cls, s: str) -> "VentMode":
        """Map a mode string to a VentMode; unknown strings become OTHER."""
        try:
            return cls(s.strip().lower())
        except ValueError:
            return cls.OTHER


# Fixed class order used by the classifier and every report.
CLASS_ORDER = (VentMode.VC, VentMode.PC, VentMode.PS, VentMode.CPAP, VentMode.PAV)
N_CLASSES = len(CLASS_ORDER)
CLASS_INDEX = {m: i for i, m in enumerate(CLASS_ORDER)}

ALLOWED_FLAGS = frozenset({"pva", "suction", "cough"})


@dataclass(frozen=True)
class SamplingSpec:
    """Sampling rate of a waveform file (50 Hz in the reference dataset)."""

    rate_hz: float = 50.0

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")

    @property
    def dt_s(self) -> float:
        return 1.0 / self.rate_hz


@dataclass
class RawBreathRecord:
    """One breath's raw samples as stored in a waveform file."""

    breath_ordinal: int
    flow: np.ndarray      # liters/minute
    pressure: np.ndarray  # cmH2O

    def __post_init__(self):
        self.flow = np.asarray(self.flow, dtype=np.float64)
        self.pressure = np.asarray(self.pressure, dtype=np.float64)
        if self.flow.shape != self.pressure.shape or self.flow.size == 0:
            raise ValueError("flow and pressure must have equal, nonzero length")


@dataclass
class WaveformFile:
    patient_id: str
    file_id: str
    spec: SamplingSpec
    breaths: list[RawBreathRecord]
    dropped_breaths: int = 0


@dataclass(frozen=True)
class BreathAnnotation:
    file_id: str
    breath_ordinal: int
    mode: VentMode
    flags: frozenset[str] = frozenset()

    def __post_init__(self):
        bad = self.flags - ALLOWED_FLAGS
        if bad:
            raise ValueError(f"unknown flags: {sorted(bad)}")


def modes_to_indices(modes: Sequence[VentMode]) -> np.ndarray:
    """Encode modes as int64 indices into CLASS_ORDER."""
    return np.array([CLASS_INDEX[m] for m in modes], dtype=np.int64)


def indices_to_modes(idx: Sequence[int]) -> list[VentMode]:
    return [CLASS_ORDER[i] for i in idx]
