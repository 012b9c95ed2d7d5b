"""Per-breath physiologic metadata: PEEP, PIP, I-time, E-time, tidal volumes.

These are the readable reference implementations. The fused fast path used
by bulk feature extraction lives in the kernels module and is tested for
equivalence against these functions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RawBreathRecord, SamplingSpec
from .errors import DegenerateBreathError


@dataclass(frozen=True)
class BreathMetadata:
    peep: float      # cmH2O, minimum pressure over the breath
    pip: float       # cmH2O, maximum pressure during inspiration
    itime_s: float
    etime_s: float
    tvi_ml: float
    tve_ml: float


@dataclass
class Breath:
    """A breath with its inspiration/expiration split point and metadata."""

    flow: np.ndarray
    pressure: np.ndarray
    spec: SamplingSpec
    x0_index: int
    meta: BreathMetadata


def find_x0(flow: np.ndarray) -> int:
    """Index of the inspiration->expiration transition.

    First index strictly after the peak inspiratory flow where flow <= 0;
    falls back to the sequence length when flow never crosses. Anchoring at
    the peak makes the rule robust to a negative trigger dip at onset.
    """
    flow = np.asarray(flow, dtype=np.float64)
    if flow.size == 0:
        raise ValueError("flow must be nonempty")
    peak = int(np.argmax(flow))
    after = np.nonzero(flow[peak + 1:] <= 0.0)[0]
    if after.size == 0:
        return int(flow.size)
    return peak + 1 + int(after[0])


def compute_metadata(flow: np.ndarray, pressure: np.ndarray,
                     spec: SamplingSpec) -> BreathMetadata:
    """Derive PEEP/PIP/times/volumes from one breath's samples.

    Volumes are trapezoidal integrals of the positive (inspiratory) and
    negative (expiratory) flow, converted from L/min to mL.
    """
    flow = np.asarray(flow, dtype=np.float64)
    pressure = np.asarray(pressure, dtype=np.float64)
    n = flow.size
    if n < 2 or pressure.size != n:
        raise DegenerateBreathError(f"breath with {n} samples")
    dt = spec.dt_s
    x0 = find_x0(flow)
    peep = float(np.min(pressure))
    pip = float(np.max(pressure[:x0]))
    insp = np.maximum(flow[:x0], 0.0)
    exp = np.maximum(-flow[x0:], 0.0)
    # L/min * s -> mL: /60 to L/s, *1000 to mL
    tvi = float(np.trapezoid(insp, dx=dt)) / 60.0 * 1000.0
    tve = float(np.trapezoid(exp, dx=dt)) / 60.0 * 1000.0
    return BreathMetadata(peep=peep, pip=pip,
                          itime_s=x0 * dt, etime_s=(n - x0) * dt,
                          tvi_ml=tvi, tve_ml=tve)


def make_breath(record: RawBreathRecord, spec: SamplingSpec) -> Breath:
    """Build a Breath (x0 + metadata) from a raw record."""
    from . import kernels

    x0, peep, pip, itime, etime, tvi, tve = kernels.breath_meta(
        record.flow, record.pressure, spec.dt_s)
    meta = BreathMetadata(peep=peep, pip=pip, itime_s=itime, etime_s=etime,
                          tvi_ml=tvi, tve_ml=tve)
    return Breath(flow=record.flow, pressure=record.pressure, spec=spec,
                  x0_index=x0, meta=meta)
