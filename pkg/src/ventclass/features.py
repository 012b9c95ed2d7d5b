"""The 7-feature vector computed for every breath.

Per-breath features: inspiratory flow slope variance (f1) and pressure
variance (f2). Windowed features use trailing windows over the breaths of
one file: variance of f1 and of the flow/pressure-based inspiratory times
over 10 breaths (f3, f4, f5), plateau-maneuver count over 20 breaths (f6),
and pressure-based I-time variance over 100 breaths (f7). Windows include
the current breath and never span files.

All variances are population variances (divide by n), defined as 0 for
windows shorter than two breaths.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .breath import Breath, BreathMetadata
from .core import SamplingSpec
from .errors import ConfigError

FEATURE_NAMES = ("f1", "f2", "f3", "f4", "f5", "f6", "f7")


@dataclass(frozen=True)
class FeatureConfig:
    slope_window_s: float = 0.08
    pressure_itime_fraction: float = 0.4
    short_window: int = 10
    med_window: int = 20
    long_window: int = 100
    plateau_min_duration_s: float = 0.3
    plateau_flow_eps: float = 1.0        # L/min
    plateau_pressure_margin: float = 1.0  # cmH2O

    def slope_block(self, spec: SamplingSpec) -> int:
        block = round(self.slope_window_s * spec.rate_hz)
        if block < 2 or abs(block - self.slope_window_s * spec.rate_hz) > 1e-9:
            raise ConfigError(
                f"slope_window_s * rate_hz must be an integer >= 2, "
                f"got {self.slope_window_s * spec.rate_hz}")
        return block

    def plateau_min_samples(self, spec: SamplingSpec) -> int:
        return int(np.ceil(self.plateau_min_duration_s * spec.rate_hz))


@dataclass(frozen=True)
class FeatureVector:
    f1_insp_flow_slope_var: float
    f2_pressure_var: float
    f3_var_of_slope_var_w10: float
    f4_itime_var_w10: float
    f5_pressure_itime_var_w10: float
    f6_n_plateaus_w20: float
    f7_pressure_itime_var_w100: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f1_insp_flow_slope_var, self.f2_pressure_var,
                         self.f3_var_of_slope_var_w10, self.f4_itime_var_w10,
                         self.f5_pressure_itime_var_w10, self.f6_n_plateaus_w20,
                         self.f7_pressure_itime_var_w100], dtype=np.float64)


# --- array-level helpers shared with the fallback kernels ---

def slopes_of_blocks(insp_flow: np.ndarray, dt: float, block: int) -> np.ndarray:
    """OLS slope of each consecutive non-overlapping block of samples.

    A short tail block is discarded. Slopes are exact for linear data
    regardless of block size.
    """
    insp_flow = np.asarray(insp_flow, dtype=np.float64)
    nb = insp_flow.size // block
    if nb == 0:
        return np.empty(0, dtype=np.float64)
    y = insp_flow[:nb * block].reshape(nb, block)
    x = np.arange(block, dtype=np.float64) * dt
    xc = x - x.mean()
    return y @ (xc / np.dot(xc, xc))


def pressure_itime_from_arrays(pressure: np.ndarray, peep: float, pip: float,
                               fraction: float, dt: float) -> float:
    """Seconds pressure spends above peep + fraction*(pip - peep).

    Samples need not be contiguous. 0 when pip does not exceed peep.
    """
    if pip <= peep:
        return 0.0
    theta = peep + fraction * (pip - peep)
    return float(np.count_nonzero(np.asarray(pressure) > theta)) * dt


def plateau_from_arrays(flow: np.ndarray, pressure: np.ndarray, x0: int,
                        peep: float, flow_eps: float, pressure_margin: float,
                        min_samples: int) -> bool:
    """Inspiratory-hold detector.

    True iff a contiguous run of at least min_samples, starting at or after
    peak inspiratory flow and ending within min_samples past x0, has
    |flow| < flow_eps while pressure stays at least pressure_margin above
    PEEP.
    """
    flow = np.asarray(flow, dtype=np.float64)
    pressure = np.asarray(pressure, dtype=np.float64)
    peak = int(np.argmax(flow))
    end = min(flow.size, x0 + min_samples)
    if end - peak < min_samples:
        return False
    ok = (np.abs(flow[peak:end]) < flow_eps) & \
         (pressure[peak:end] >= peep + pressure_margin)
    if not ok.any():
        return False
    padded = np.concatenate(([False], ok, [False]))
    edges = np.flatnonzero(np.diff(padded.view(np.int8)))
    run_lengths = edges[1::2] - edges[0::2]
    return bool(run_lengths.max() >= min_samples)


# --- public per-breath operations ---

def block_slopes(insp_flow: np.ndarray, spec: SamplingSpec,
                 config: FeatureConfig) -> np.ndarray:
    return slopes_of_blocks(insp_flow, spec.dt_s, config.slope_block(spec))


def insp_flow_slope_variance(breath: Breath, config: FeatureConfig) -> float:
    slopes = block_slopes(breath.flow[:breath.x0_index], breath.spec, config)
    if slopes.size < 2:
        return 0.0
    return float(np.var(slopes))


def pressure_variance(breath: Breath) -> float:
    return float(np.var(np.asarray(breath.pressure, dtype=np.float64)))


def pressure_itime(breath: Breath, meta: BreathMetadata,
                   config: FeatureConfig) -> float:
    return pressure_itime_from_arrays(breath.pressure, meta.peep, meta.pip,
                                      config.pressure_itime_fraction,
                                      breath.spec.dt_s)


def detect_plateau(breath: Breath, meta: BreathMetadata,
                   config: FeatureConfig) -> bool:
    return plateau_from_arrays(breath.flow, breath.pressure, breath.x0_index,
                               meta.peep, config.plateau_flow_eps,
                               config.plateau_pressure_margin,
                               config.plateau_min_samples(breath.spec))


# --- batch and streaming extraction ---

def _per_breath_arrays(breaths: Sequence[Breath], config: FeatureConfig):
    from . import kernels

    n = len(breaths)
    f1 = np.empty(n)
    f2 = np.empty(n)
    itime = np.empty(n)
    pitime = np.empty(n)
    plateau = np.zeros(n, dtype=np.int64)
    for i, b in enumerate(breaths):
        block = config.slope_block(b.spec)
        mins = config.plateau_min_samples(b.spec)
        v1, v2, pit, plat = kernels.breath_features(
            b.flow, b.pressure, b.x0_index, b.meta.peep, b.meta.pip,
            b.spec.dt_s, block, config.pressure_itime_fraction,
            config.plateau_flow_eps, config.plateau_pressure_margin, mins)
        f1[i] = v1
        f2[i] = v2
        itime[i] = b.meta.itime_s
        pitime[i] = pit
        plateau[i] = int(plat)
    return f1, f2, itime, pitime, plateau


def feature_matrix(breaths: Sequence[Breath], config: FeatureConfig) -> np.ndarray:
    """(n_breaths, 7) float64 feature matrix for one file's breath sequence."""
    from . import kernels

    n = len(breaths)
    out = np.zeros((n, 7), dtype=np.float64)
    if n == 0:
        return out
    f1, f2, itime, pitime, plateau = _per_breath_arrays(breaths, config)
    out[:, 0] = f1
    out[:, 1] = f2
    out[:, 2] = kernels.trailing_var(f1, config.short_window)
    out[:, 3] = kernels.trailing_var(itime, config.short_window)
    out[:, 4] = kernels.trailing_var(pitime, config.short_window)
    cum = np.cumsum(plateau)
    w = config.med_window
    out[:, 5] = cum - np.concatenate((np.zeros(min(w, n), dtype=np.int64),
                                      cum[:-w] if n > w else []))
    out[:, 6] = kernels.trailing_var(pitime, config.long_window)
    return out


def extract_features(breaths: Sequence[Breath],
                     config: FeatureConfig) -> list[FeatureVector]:
    mat = feature_matrix(breaths, config)
    return [FeatureVector(*row) for row in mat]


class FeatureStream:
    """Streaming variant: push one breath, get its feature vector.

    Produces outputs identical to the batch path; buffers at most
    long_window per-breath scalars.
    """

    def __init__(self, config: FeatureConfig | None = None):
        self.config = config or FeatureConfig()
        w = self.config.long_window
        self._f1: deque[float] = deque(maxlen=w)
        self._itime: deque[float] = deque(maxlen=w)
        self._pitime: deque[float] = deque(maxlen=w)
        self._plateau: deque[int] = deque(maxlen=self.config.med_window)

    def push(self, breath: Breath) -> FeatureVector:
        from . import kernels

        cfg = self.config
        block = cfg.slope_block(breath.spec)
        mins = cfg.plateau_min_samples(breath.spec)
        f1, f2, pit, plat = kernels.breath_features(
            breath.flow, breath.pressure, breath.x0_index, breath.meta.peep,
            breath.meta.pip, breath.spec.dt_s, block,
            cfg.pressure_itime_fraction, cfg.plateau_flow_eps,
            cfg.plateau_pressure_margin, mins)
        self._f1.append(f1)
        self._itime.append(breath.meta.itime_s)
        self._pitime.append(pit)
        self._plateau.append(int(plat))

        def wvar(dq: deque, w: int) -> float:
            vals = list(dq)[-w:]
            return kernels.pop_var(np.array(vals, dtype=np.float64))

        return FeatureVector(
            f1_insp_flow_slope_var=f1,
            f2_pressure_var=f2,
            f3_var_of_slope_var_w10=wvar(self._f1, cfg.short_window),
            f4_itime_var_w10=wvar(self._itime, cfg.short_window),
            f5_pressure_itime_var_w10=wvar(self._pitime, cfg.short_window),
            f6_n_plateaus_w20=float(sum(self._plateau)),
            f7_pressure_itime_var_w100=wvar(self._pitime, cfg.long_window),
        )
