"""Deterministic synthetic waveform generator for the five modes.

Templates are engineered so each feature does its discriminative job:
VC has constant-slope inspiratory flow (low f1), CPAP has near-flat pressure
(low f2), PC is machine-timed (low f4/f5/f7) while PS carries intrinsic
patient jitter, and PAV performs periodic inspiratory holds (f6 > 0).

Each patient additionally draws its own physiology (PEEP, rate, support
level, machine-set I-time) from the seed stream, so class boundaries must
be learned from data coverage rather than memorized from a single template.
Artifact injection (cough/suction/noise) mimics routine clinical events;
artifact breaths keep their mode label and carry a flag.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import BreathAnnotation, RawBreathRecord, SamplingSpec, VentMode, \
    WaveformFile
from .errors import ConfigError


class ArtifactKind(Enum):
    COUGH = "cough"
    SUCTION = "suction"
    NOISE = "noise"


@dataclass(frozen=True)
class SynthConfig:
    mode: VentMode
    n_breaths: int = 100
    respiratory_rate: float = 18.0  # breaths/min, patient-cohort center
    peep: float = 5.0               # cmH2O, cohort center
    pip_or_flow_target: float | None = None  # cmH2O above peep, or L/min (VC)
    timing_jitter: float = 0.05
    amplitude_noise: float = 0.05
    artifact_rate: float = 0.0
    plateau_every: int = 5          # PAV: hold on every K-th breath
    seed: int = 0
    rate_hz: float = 50.0

    def __post_init__(self):
        if self.respiratory_rate <= 0 or self.n_breaths < 1:
            raise ConfigError("rates and counts must be positive")
        for frac in (self.timing_jitter, self.amplitude_noise,
                     self.artifact_rate):
            if not (0.0 <= frac < 1.0):
                raise ConfigError("fractions must be in [0, 1)")

    @property
    def spec(self) -> SamplingSpec:
        return SamplingSpec(rate_hz=self.rate_hz)


@dataclass(frozen=True)
class PatientParams:
    """Per-patient physiology and ventilator settings."""

    peep: float
    respiratory_rate: float
    itime_s: float       # machine-set (VC/PC) or patient mean (PS/CPAP/PAV)
    amplitude: float     # peak flow (VC, L/min) or support pressure (cmH2O)
    flow_peak: float     # peak inspiratory flow for pressure modes
    flow_tau: float      # decay constant of pressure-mode flow


def draw_patient_params(config: SynthConfig,
                        rng: np.random.Generator) -> PatientParams:
    mode = config.mode
    peep = config.peep + float(rng.uniform(-1.0, 5.0))
    rr = config.respiratory_rate * float(rng.uniform(0.8, 1.25))
    if mode is VentMode.VC:
        amp = (config.pip_or_flow_target or 60.0) * float(rng.uniform(0.75, 1.3))
        itime = float(rng.uniform(0.7, 1.0))
    elif mode is VentMode.PC:
        amp = (config.pip_or_flow_target or 12.0) * float(rng.uniform(0.8, 1.5))
        itime = float(rng.uniform(0.8, 1.4))
    elif mode is VentMode.PS:
        amp = config.pip_or_flow_target or float(rng.uniform(4.0, 14.0))
        itime = float(rng.uniform(0.9, 1.4))
    elif mode is VentMode.PAV:
        amp = config.pip_or_flow_target or float(rng.uniform(6.0, 14.0))
        itime = float(rng.uniform(0.9, 1.4))
    elif mode is VentMode.CPAP:
        # residual support well below the PS range
        amp = config.pip_or_flow_target if config.pip_or_flow_target is not None \
            else float(rng.uniform(0.3, 2.5))
        itime = float(rng.uniform(0.7, 1.2))
    else:
        raise ConfigError(f"cannot synthesize mode {mode}")
    return PatientParams(peep=peep, respiratory_rate=rr, itime_s=itime,
                         amplitude=amp,
                         flow_peak=float(rng.uniform(40.0, 60.0)),
                         flow_tau=float(rng.uniform(0.22, 0.35)))


def default_patient_params(config: SynthConfig) -> PatientParams:
    """Cohort-center parameters (no per-patient draw)."""
    defaults = {VentMode.VC: (60.0, 0.8), VentMode.PC: (12.0, 1.0),
                VentMode.PS: (10.0, 1.1), VentMode.PAV: (10.0, 1.1),
                VentMode.CPAP: (1.5, 0.9)}
    if config.mode not in defaults:
        raise ConfigError(f"cannot synthesize mode {config.mode}")
    amp, itime = defaults[config.mode]
    if config.pip_or_flow_target is not None:
        amp = config.pip_or_flow_target
    return PatientParams(peep=config.peep,
                         respiratory_rate=config.respiratory_rate,
                         itime_s=itime, amplitude=amp, flow_peak=50.0,
                         flow_tau=0.28)


# white sensor noise, always present and small enough not to blur templates
_FLOW_NOISE = 0.15   # L/min
_PRESS_NOISE = 0.04  # cmH2O

# intrinsic I-time jitter (s) of patient-cycled modes, independent of config
_PATIENT_ITIME_JITTER = {VentMode.PS: 0.15, VentMode.CPAP: 0.20,
                         VentMode.PAV: 0.12}


def generate_breath(config: SynthConfig, rng: np.random.Generator,
                    breath_index: int = 0, ordinal: int = 0,
                    params: PatientParams | None = None) -> RawBreathRecord:
    """One template breath, advanced through the given RNG stream."""
    if params is None:
        params = default_patient_params(config)
    rate = config.rate_hz
    peep = params.peep
    mode = config.mode
    period = 60.0 / params.respiratory_rate
    itime = params.itime_s
    if mode in _PATIENT_ITIME_JITTER:
        period *= 1.0 + max(config.timing_jitter, 0.05) * \
            float(rng.uniform(-1.0, 1.0))
        itime = float(np.clip(
            itime + _PATIENT_ITIME_JITTER[mode] * float(rng.normal()),
            0.4, 1.8))
    n = round(period * rate)
    amp_scale = 1.0 + 0.2 * config.amplitude_noise * float(rng.normal())
    i_n = max(round(itime * rate), 5)

    if mode is VentMode.VC:
        flow_target = params.amplitude * amp_scale
        insp_flow = np.linspace(flow_target, 0.4 * flow_target, i_n)
        insp_press = peep + 12.0 * (np.arange(i_n) / i_n) ** 0.8
    elif mode is VentMode.PC:
        dp = params.amplitude * amp_scale
        insp_flow = _exp_flow(i_n, rate, params.flow_peak * amp_scale,
                              params.flow_tau)
        insp_press = np.full(i_n, peep + dp)
        insp_press[0] = peep + 0.5 * dp  # finite rise
    elif mode in (VentMode.PS, VentMode.PAV):
        dp = params.amplitude * amp_scale
        insp_flow = _exp_flow(i_n, rate, params.flow_peak * amp_scale,
                              params.flow_tau)
        if mode is VentMode.PS:
            insp_press = np.full(i_n, peep + dp)
            insp_press[0] = peep + 0.5 * dp
        else:
            # support proportional to instantaneous patient flow
            insp_press = peep + dp * insp_flow / insp_flow[0]
    else:  # CPAP: patient-driven sinusoidal flow, near-flat pressure
        t = np.arange(i_n) / rate
        insp_flow = 30.0 * amp_scale * np.sin(np.pi * t / itime)
        insp_flow[0] = 1.0  # positive onset so the peak search is stable
        insp_press = peep + params.amplitude * np.sin(np.pi * t / itime) ** 2

    hold_flow = np.empty(0)
    hold_press = np.empty(0)
    if mode is VentMode.PAV and breath_index % config.plateau_every == 0:
        hold_n = round(0.5 * rate)
        hold_flow = np.full(hold_n, 0.3)  # low but positive: x0 stays past it
        hold_press = np.full(hold_n, peep + 8.0)

    e_n = max(n - insp_flow.size - hold_flow.size, round(0.6 * rate))
    te = np.arange(e_n) / rate
    exp_peak = 0.8 * float(np.max(insp_flow))
    exp_flow = -exp_peak * np.exp(-te / 0.3)
    exp_press = np.full(e_n, peep)

    flow = np.concatenate((insp_flow, hold_flow, exp_flow))
    pressure = np.concatenate((insp_press, hold_press, exp_press))
    flow = flow + _FLOW_NOISE * rng.normal(size=flow.size)
    pressure = pressure + _PRESS_NOISE * rng.normal(size=pressure.size)
    return RawBreathRecord(breath_ordinal=ordinal, flow=flow,
                           pressure=pressure)


def _exp_flow(n_samples: int, rate: float, peak: float,
              tau: float) -> np.ndarray:
    # flow decays toward ~12% of peak rather than zero: pressure-supported
    # breaths cycle into exhalation well before inspiratory flow vanishes
    t = np.arange(n_samples) / rate
    return peak * (0.12 + 0.88 * np.exp(-t / tau))


def inject_artifact(breath: RawBreathRecord, kind: ArtifactKind,
                    rng: np.random.Generator,
                    amplitude: float = 1.0) -> RawBreathRecord:
    """Cough: biphasic flow spike. Suction: truncated breath with negative
    flow bias. Noise: additive perturbation on both channels."""
    flow = breath.flow.copy()
    pressure = breath.pressure.copy()
    if kind is ArtifactKind.COUGH:
        peak = amplitude * (2.5 * float(np.max(np.abs(flow))) + 30.0)
        at = int(rng.integers(flow.size // 2, max(flow.size - 8,
                                                  flow.size // 2 + 1)))
        width = min(4, flow.size - at - 4)
        if width > 0:
            flow[at:at + width] += peak
            flow[at + width:at + 2 * width] -= peak
            pressure[at:at + 2 * width] += 5.0 * amplitude
    elif kind is ArtifactKind.SUCTION:
        keep = max(10, int(0.6 * flow.size))
        flow = flow[:keep] - 15.0 * amplitude
        pressure = pressure[:keep]
    elif kind is ArtifactKind.NOISE:
        flow = flow + 4.0 * amplitude * rng.normal(size=flow.size)
        pressure = pressure + 1.5 * amplitude * rng.normal(size=pressure.size)
    return RawBreathRecord(breath_ordinal=breath.breath_ordinal, flow=flow,
                           pressure=pressure)


_ARTIFACT_FLAGS = {ArtifactKind.COUGH: frozenset({"cough"}),
                   ArtifactKind.SUCTION: frozenset({"suction"}),
                   ArtifactKind.NOISE: frozenset()}


def generate_patient(config: SynthConfig, patient_id: str | None = None,
                     file_id: str | None = None,
                     heterogeneous: bool = True,
                     ) -> tuple[WaveformFile, list[BreathAnnotation]]:
    """A single-mode file of n_breaths plus matching annotations."""
    patient_id = patient_id or f"synth-{config.mode.value}-{config.seed}"
    file_id = file_id or f"{patient_id}-f0"
    rng = np.random.default_rng(config.seed)
    params = draw_patient_params(config, rng) if heterogeneous \
        else default_patient_params(config)
    breaths: list[RawBreathRecord] = []
    annotations: list[BreathAnnotation] = []
    for i in range(config.n_breaths):
        rec = generate_breath(config, rng, breath_index=i, ordinal=i,
                              params=params)
        flags: frozenset[str] = frozenset()
        if config.artifact_rate > 0 and rng.random() < config.artifact_rate:
            kind = list(ArtifactKind)[int(rng.integers(len(ArtifactKind)))]
            rec = inject_artifact(rec, kind, rng)
            flags = _ARTIFACT_FLAGS[kind]
        breaths.append(rec)
        annotations.append(BreathAnnotation(file_id=file_id, breath_ordinal=i,
                                            mode=config.mode, flags=flags))
    wf = WaveformFile(patient_id=patient_id, file_id=file_id,
                      spec=config.spec, breaths=breaths)
    return wf, annotations


def generate_session(configs: list[SynthConfig], patient_id: str,
                     file_id: str, heterogeneous: bool = True,
                     ) -> tuple[WaveformFile, list[BreathAnnotation]]:
    """Concatenate several mode segments into one file (mode switches)."""
    breaths: list[RawBreathRecord] = []
    annotations: list[BreathAnnotation] = []
    ordinal = 0
    for cfg in configs:
        wf, anns = generate_patient(cfg, patient_id=patient_id,
                                    file_id=file_id,
                                    heterogeneous=heterogeneous)
        for rec, ann in zip(wf.breaths, anns):
            rec.breath_ordinal = ordinal
            annotations.append(BreathAnnotation(
                file_id=ann.file_id, breath_ordinal=ordinal, mode=ann.mode,
                flags=ann.flags))
            breaths.append(rec)
            ordinal += 1
    spec = configs[0].spec
    return WaveformFile(patient_id=patient_id, file_id=file_id, spec=spec,
                        breaths=breaths), annotations
