# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: CART split search, per-breath summaries, rolling
variance. Must stay behaviorally equivalent to _kernels_py (the split
search bit-identically so; the rest within floating-point noise).
"""
import numpy as np

cimport numpy as cnp

IMPL_NAME = "cython"


def best_split(double[::1] values, cnp.int64_t[::1] labels, int n_classes,
               int min_leaf):
    cdef Py_ssize_t n = values.shape[0]
    if n < 2:
        return -1.0, -1
    cdef cnp.int64_t[::1] left = np.zeros(n_classes, dtype=np.int64)
    cdef cnp.int64_t[::1] right = np.zeros(n_classes, dtype=np.int64)
    cdef Py_ssize_t i, best_pos = -1
    cdef int c
    cdef cnp.int64_t k, nl = 0, nr = n, ssl = 0, ssr = 0
    cdef double score, best = -1.0
    for i in range(n):
        right[labels[i]] += 1
    for c in range(n_classes):
        ssr += right[c] * right[c]
    for i in range(n - 1):
        c = <int>labels[i]
        k = left[c]
        ssl += 2 * k + 1
        left[c] = k + 1
        k = right[c]
        ssr -= 2 * k - 1
        right[c] = k - 1
        nl += 1
        nr -= 1
        if values[i] == values[i + 1]:
            continue
        if nl < min_leaf or nr < min_leaf:
            continue
        score = (<double>ssl) / (<double>nl) + (<double>ssr) / (<double>nr)
        if score > best:
            best = score
            best_pos = i
    return best, best_pos


cdef double _seq_var(double[::1] x, Py_ssize_t lo, Py_ssize_t hi):
    """Two-pass population variance over x[lo:hi]; 0 when fewer than 2."""
    cdef Py_ssize_t n = hi - lo
    if n < 2:
        return 0.0
    cdef Py_ssize_t i
    cdef double mean = 0.0, acc = 0.0, d
    for i in range(lo, hi):
        mean += x[i]
    mean /= n
    for i in range(lo, hi):
        d = x[i] - mean
        acc += d * d
    return acc / n


def pop_var(cnp.ndarray x):
    cdef double[::1] v = np.ascontiguousarray(x, dtype=np.float64)
    return _seq_var(v, 0, v.shape[0])


def trailing_var(cnp.ndarray x, int w):
    cdef double[::1] v = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], i, lo
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        lo = i - w + 1
        if lo < 0:
            lo = 0
        out[i] = _seq_var(v, lo, i + 1)
    return out_arr


def breath_meta(cnp.ndarray flow, cnp.ndarray pressure, double dt):
    """(x0, peep, pip, itime_s, etime_s, tvi_ml, tve_ml) for one breath."""
    cdef double[::1] f = np.ascontiguousarray(flow, dtype=np.float64)
    cdef double[::1] p = np.ascontiguousarray(pressure, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    if n < 2 or p.shape[0] != n:
        from .errors import DegenerateBreathError
        raise DegenerateBreathError(f"breath with {n} samples")
    cdef Py_ssize_t i, peak = 0, x0 = n
    cdef double fmax = f[0]
    for i in range(1, n):
        if f[i] > fmax:
            fmax = f[i]
            peak = i
    for i in range(peak + 1, n):
        if f[i] <= 0.0:
            x0 = i
            break
    cdef double peep = p[0], pip = p[0]
    for i in range(1, n):
        if p[i] < peep:
            peep = p[i]
    for i in range(1, x0):
        if p[i] > pip:
            pip = p[i]
    # trapezoid over clipped flow: inspiration [0, x0), expiration [x0, n)
    cdef double tvi = 0.0, tve = 0.0, a, b
    for i in range(x0 - 1):
        a = f[i] if f[i] > 0.0 else 0.0
        b = f[i + 1] if f[i + 1] > 0.0 else 0.0
        tvi += 0.5 * (a + b)
    for i in range(x0, n - 1):
        a = -f[i] if f[i] < 0.0 else 0.0
        b = -f[i + 1] if f[i + 1] < 0.0 else 0.0
        tve += 0.5 * (a + b)
    tvi = tvi * dt / 60.0 * 1000.0
    tve = tve * dt / 60.0 * 1000.0
    return <int>x0, peep, pip, x0 * dt, (n - x0) * dt, tvi, tve


def breath_features(cnp.ndarray flow, cnp.ndarray pressure, int x0,
                    double peep, double pip, double dt, int slope_block,
                    double itime_frac, double plateau_eps,
                    double plateau_margin, int plateau_min_samples):
    """(slope_variance, pressure_variance, pressure_itime_s, plateau)."""
    cdef double[::1] f = np.ascontiguousarray(flow, dtype=np.float64)
    cdef double[::1] p = np.ascontiguousarray(pressure, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t nb = x0 // slope_block
    cdef Py_ssize_t i, j
    # OLS slope per block against time
    cdef double xbar = 0.5 * (slope_block - 1) * dt
    cdef double denom = 0.0, xc, acc, mean, d
    for j in range(slope_block):
        denom += (j * dt - xbar) * (j * dt - xbar)
    slopes_arr = np.empty(nb, dtype=np.float64)
    cdef double[::1] slopes = slopes_arr
    for i in range(nb):
        acc = 0.0
        for j in range(slope_block):
            acc += (j * dt - xbar) * f[i * slope_block + j]
        slopes[i] = acc / denom
    cdef double f1 = _seq_var(slopes, 0, nb)
    cdef double f2 = _seq_var(p, 0, n)
    # pressure-based I-time: time above peep + frac*(pip-peep)
    cdef double pit = 0.0, theta
    cdef Py_ssize_t count = 0
    if pip > peep:
        theta = peep + itime_frac * (pip - peep)
        for i in range(n):
            if p[i] > theta:
                count += 1
        pit = count * dt
    # plateau: contiguous low-flow, elevated-pressure run after peak flow
    cdef Py_ssize_t peak = 0
    cdef double fmax = f[0]
    for i in range(1, n):
        if f[i] > fmax:
            fmax = f[i]
            peak = i
    cdef Py_ssize_t end = x0 + plateau_min_samples
    if end > n:
        end = n
    cdef Py_ssize_t run = 0
    cdef bint plat = False
    for i in range(peak, end):
        if (f[i] < plateau_eps and f[i] > -plateau_eps
                and p[i] >= peep + plateau_margin):
            run += 1
            if run >= plateau_min_samples:
                plat = True
                break
        else:
            run = 0
    return f1, f2, pit, plat
