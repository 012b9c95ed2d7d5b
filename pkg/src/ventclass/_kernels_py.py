"""Pure-numpy fallback kernels.

Each function mirrors one hot kernel in the compiled extension. The
fallbacks delegate to (or share arithmetic with) the readable reference
implementations, so a build without the extension stays correct, just
slower. See benchmarks/bench_kernels.py for the measured gap.
"""
from __future__ import annotations

import numpy as np

IMPL_NAME = "python"


def best_split(values: np.ndarray, labels: np.ndarray, n_classes: int,
               min_leaf: int) -> tuple[float, int]:
    """Best binary split of a sorted feature column.

    values: float64 ascending; labels: int64 aligned with values.
    Returns (score, pos) where the split separates positions [0..pos] from
    [pos+1..n-1], and score = sum_side (sum_c count_c^2) / n_side, the
    quantity whose maximization minimizes weighted Gini impurity.
    pos = -1 when no valid split exists.

    Arithmetic is arranged to be bit-identical to the compiled kernel:
    integer count sums of squares, then one int->double divide per side.
    """
    n = values.shape[0]
    if n < 2:
        return -1.0, -1
    onehot = labels[:, None] == np.arange(n_classes, dtype=np.int64)
    cum = np.cumsum(onehot, axis=0, dtype=np.int64)
    left = cum[:-1]
    right = cum[-1] - left
    nl = np.arange(1, n, dtype=np.int64)
    nr = n - nl
    ssl = np.einsum("ij,ij->i", left, left)
    ssr = np.einsum("ij,ij->i", right, right)
    score = ssl.astype(np.float64) / nl + ssr.astype(np.float64) / nr
    valid = (values[:-1] != values[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return -1.0, -1
    score[~valid] = -1.0
    pos = int(np.argmax(score))
    return float(score[pos]), pos


def breath_meta(flow: np.ndarray, pressure: np.ndarray,
                dt: float) -> tuple[int, float, float, float, float, float, float]:
    """(x0, peep, pip, itime_s, etime_s, tvi_ml, tve_ml) for one breath."""
    from .breath import compute_metadata, find_x0
    from .core import SamplingSpec

    x0 = find_x0(flow)
    m = compute_metadata(flow, pressure, SamplingSpec(rate_hz=1.0 / dt))
    return x0, m.peep, m.pip, m.itime_s, m.etime_s, m.tvi_ml, m.tve_ml


def breath_features(flow: np.ndarray, pressure: np.ndarray, x0: int,
                    peep: float, pip: float, dt: float, slope_block: int,
                    itime_frac: float, plateau_eps: float,
                    plateau_margin: float, plateau_min_samples: int,
                    ) -> tuple[float, float, float, bool]:
    """(slope_variance, pressure_variance, pressure_itime_s, plateau)."""
    from . import features as ft

    slopes = ft.slopes_of_blocks(np.asarray(flow[:x0], dtype=np.float64),
                                 dt, slope_block)
    f1 = pop_var(slopes) if slopes.size >= 2 else 0.0
    f2 = pop_var(np.asarray(pressure, dtype=np.float64))
    pit = ft.pressure_itime_from_arrays(pressure, peep, pip, itime_frac, dt)
    plat = ft.plateau_from_arrays(flow, pressure, x0, peep, plateau_eps,
                                  plateau_margin, plateau_min_samples)
    return f1, f2, pit, plat


def pop_var(x: np.ndarray) -> float:
    """Population variance; 0 for windows shorter than 2."""
    if x.size < 2:
        return 0.0
    return float(np.var(x))


def trailing_var(x: np.ndarray, w: int) -> np.ndarray:
    """Population variance over the trailing window [max(0, i-w+1), i]."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(x.size, dtype=np.float64)
    for i in range(x.size):
        lo = i - w + 1
        if lo < 0:
            lo = 0
        out[i] = pop_var(x[lo:i + 1])
    return out
