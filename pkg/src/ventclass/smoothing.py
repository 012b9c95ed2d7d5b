"""Second-pass smoothing of per-breath mode predictions.

Ventilator mode is piecewise-constant in time, so isolated disagreements
with the surrounding context are almost always classifier errors. The
look-ahead pass re-labels a breath that disagrees with its trailing context
using the majority (>= x fraction) of the next n raw predictions; the
look-behind variant is a plain trailing modal filter with zero look-ahead
latency.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .core import CLASS_INDEX, CLASS_ORDER, N_CLASSES, VentMode
from .errors import ConfigError


class SmoothingVariant(Enum):
    LOOK_AHEAD = "lookahead"
    LOOK_BEHIND = "lookbehind"
    NONE = "none"


@dataclass(frozen=True)
class SmoothingConfig:
    n: int = 50
    x: float = 0.60
    variant: SmoothingVariant = SmoothingVariant.LOOK_AHEAD

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not (0.0 < self.x <= 1.0):
            raise ConfigError("x must be in (0, 1]")


def _modal_or_default(counts: list[int], default: int) -> int:
    """Argmax of counts; ties (several classes at the max) give `default`."""
    best = max(counts)
    winners = [c for c in range(N_CLASSES) if counts[c] == best]
    return winners[0] if len(winners) == 1 else default


def look_ahead_smooth(raw: Sequence[VentMode],
                      config: SmoothingConfig | None = None) -> list[VentMode]:
    """Smooth left to right; the trailing context is the already-smoothed
    modal label of the previous min(i, n) breaths (ties keep the previous
    smoothed label). A disagreeing breath is re-labeled to any class holding
    >= x of the next n raw labels (ties to lowest class index), else kept.
    """
    config = config or SmoothingConfig()
    if not raw:
        raise ConfigError("raw sequence must be nonempty")
    n, x = config.n, config.x
    labels = [CLASS_INDEX[m] for m in raw]
    L = len(labels)
    out = [labels[0]]
    window_counts = [0] * N_CLASSES  # counts over out[max(0, i-n) .. i)
    window_counts[out[0]] += 1
    for i in range(1, L):
        ref = _modal_or_default(window_counts, out[i - 1])
        cur = labels[i]
        if cur != ref:
            ahead = labels[i + 1:i + 1 + n]
            if ahead:
                counts = [0] * N_CLASSES
                for a in ahead:
                    counts[a] += 1
                best = max(counts)
                if best / len(ahead) >= x:
                    cur = counts.index(best)  # first (lowest) class at max
        out.append(cur)
        window_counts[cur] += 1
        if i - n >= 0:
            window_counts[out[i - n]] -= 1
    return [CLASS_ORDER[c] for c in out]


def look_behind_smooth(raw: Sequence[VentMode],
                       config: SmoothingConfig | None = None) -> list[VentMode]:
    """s[i] = modal raw label over [max(0, i-n), i], ties to lowest index."""
    config = config or SmoothingConfig()
    if not raw:
        raise ConfigError("raw sequence must be nonempty")
    n = config.n
    labels = [CLASS_INDEX[m] for m in raw]
    counts = [0] * N_CLASSES
    out = []
    for i, cur in enumerate(labels):
        counts[cur] += 1
        if i - n - 1 >= 0:
            counts[labels[i - n - 1]] -= 1
        out.append(counts.index(max(counts)))
    return [CLASS_ORDER[c] for c in out]


def smooth(raw: Sequence[VentMode],
           config: SmoothingConfig | None = None) -> list[VentMode]:
    config = config or SmoothingConfig()
    if config.variant is SmoothingVariant.NONE:
        return list(raw)
    if config.variant is SmoothingVariant.LOOK_BEHIND:
        return look_behind_smooth(raw, config)
    return look_ahead_smooth(raw, config)


def latency_bound(config: SmoothingConfig, respiratory_rate: float) -> float:
    """Worst-case seconds between a breath and its final label: the n-breath
    look-ahead buffer at the given breaths/minute."""
    if respiratory_rate <= 0:
        raise ConfigError("respiratory_rate must be positive")
    return config.n / (respiratory_rate / 60.0)
