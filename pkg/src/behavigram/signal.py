"""Smoothing and hand-movement velocity from 3-axis acceleration.

Acceleration files are in g.  :func:`remove_gravity` converts to m/s^2 and
:func:`velocity_magnitude` integrates to a speed in m/s.  The integration is
leaky, so the result is a drift-free burst-magnitude proxy rather than
calibrated kinematics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidSpec
from .streams import DEFAULT_MAX_GAP_S, TimeSeries, resample_uniform

STANDARD_GRAVITY = 9.81
DEFAULT_BASELINE_S = 1.0
DEFAULT_HALF_LIFE_S = 0.5


@dataclass(frozen=True)
class SavGolSpec:
    window_len: int = 11
    poly_order: int = 3

    def __post_init__(self):
        w, p = self.window_len, self.poly_order
        if int(w) != w or int(p) != p:
            raise InvalidSpec("window_len and poly_order must be integers")
        if w < 3 or w % 2 == 0:
            raise InvalidSpec(f"window_len must be odd and >= 3, got {w}")
        if p < 0 or p >= w:
            raise InvalidSpec(f"poly_order must be in [0, window_len), got {p}")


def savgol_coefficients(spec):
    """Centre-point weights of the least-squares polynomial fit over the window.

    Offsets are scaled to [-1, 1] before the fit; the weights do not depend on
    the abscissa scale, and the scaling keeps the Vandermonde matrix well
    conditioned for long windows.
    """
    if not isinstance(spec, SavGolSpec):
        spec = SavGolSpec(*spec)
    m = spec.window_len // 2
    x = np.arange(-m, m + 1, dtype=np.float64) / m
    A = np.vander(x, spec.poly_order + 1, increasing=True)
    # value of the fitted polynomial at 0 is its constant term: row 0 of pinv(A)
    q, r = np.linalg.qr(A)
    e0 = np.zeros(spec.poly_order + 1)
    e0[0] = 1.0
    coeffs = q @ np.linalg.solve(r.T, e0)
    return coeffs


def _mirror_filter(x, kernel):
    m = kernel.size // 2
    padded = np.pad(x, m, mode="reflect")
    return np.convolve(padded, kernel[::-1], mode="valid")


def savgol_filter(series, spec=SavGolSpec()):
    """Savitzky-Golay smoothing of every channel, with mirror padding at the edges.

    Missing samples propagate: an output sample is missing whenever any input
    in its window is missing.  The number of edge-affected samples at each end
    is recorded in ``attrs["edge_samples"]``.
    """
    series.sample_interval()
    kernel = savgol_coefficients(spec)
    if len(series) < spec.window_len:
        raise InvalidSpec(
            f"{series.stream_id}: {len(series)} samples is shorter than the window")
    out = np.column_stack([_mirror_filter(series.values[:, c], kernel)
                           for c in range(len(series.channels))])
    attrs = dict(series.attrs, savgol=f"{spec.window_len},{spec.poly_order}",
                 edge_samples=str(spec.window_len // 2))
    return series.with_values(out, attrs=attrs)


def moving_average_window(dt, baseline_s=DEFAULT_BASELINE_S):
    """Odd sample count closest to ``baseline_s`` seconds."""
    n = max(1, int(round(baseline_s / dt)))
    return n if n % 2 else n + 1


def remove_gravity(accel, baseline_s=DEFAULT_BASELINE_S):
    """Subtract a centred moving-average baseline per channel; g -> m/s^2."""
    dt = accel.sample_interval()
    n = moving_average_window(dt, baseline_s)
    if len(accel) <= n // 2:
        raise InvalidSpec(f"{accel.stream_id}: series shorter than the baseline window")
    kernel = np.full(n, 1.0 / n)
    out = np.column_stack([
        accel.values[:, c] - _mirror_filter(accel.values[:, c], kernel)
        for c in range(len(accel.channels))
    ]) * STANDARD_GRAVITY
    attrs = dict(accel.attrs, units="m/s^2", baseline_samples=str(n))
    return accel.with_values(out, attrs=attrs)


def leak_for_half_life(dt, half_life_s=DEFAULT_HALF_LIFE_S):
    return 0.5 ** (dt / half_life_s)


def _runs(mask):
    """(start, stop) index pairs of True runs."""
    d = np.diff(np.r_[0, mask.astype(np.int8), 0])
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def velocity_magnitude(linear_accel, leak=None):
    """Speed (m/s) from gravity-free acceleration by leaky trapezoidal integration.

    Per axis ``v[k] = leak * v[k-1] + dt * (a[k] + a[k-1]) / 2`` with
    ``v[0] = 0``; the output channel ``speed`` is the Euclidean norm of the
    three axis velocities.  Integration restarts from zero after every run of
    missing samples, which stay missing in the output.
    """
    dt = linear_accel.sample_interval()
    if leak is None:
        leak = leak_for_half_life(dt)
    if not 0.0 < leak <= 1.0:
        raise ValueError("leak must be in (0, 1]")
    a = linear_accel.values
    v = np.full(a.shape, np.nan)
    b_coef = [dt / 2.0, dt / 2.0]
    a_coef = [1.0, -leak]
    for i0, i1 in _runs(~np.isnan(a).any(axis=1)):
        seg = a[i0:i1]
        for c in range(seg.shape[1]):
            # initial state chosen so that v[0] = 0
            v[i0:i1, c], _ = lfilter(b_coef, a_coef, seg[:, c], zi=[-dt / 2.0 * seg[0, c]])
    speed = np.sqrt(np.sum(v * v, axis=1))
    attrs = dict(linear_accel.attrs, units="m/s", leak=repr(float(leak)),
                 velocity="leaky-trapezoid,norm")
    return TimeSeries(linear_accel.stream_id + "_speed", linear_accel.timestamps,
                      ("speed",), speed[:, None], linear_accel.nominal_rate, attrs)


def fill_short_gaps(series, max_gap_s=DEFAULT_MAX_GAP_S):
    """Linearly fill interior missing runs whose bracketing samples are <= max_gap_s apart."""
    t = series.timestamps
    out = series.values.copy()
    for c in range(out.shape[1]):
        col = out[:, c]
        for i0, i1 in _runs(np.isnan(col)):
            if i0 == 0 or i1 == col.size:
                continue
            if t[i1] - t[i0 - 1] <= max_gap_s + 1e-9:
                col[i0:i1] = np.interp(t[i0:i1], [t[i0 - 1], t[i1]], [col[i0 - 1], col[i1]])
    return series.with_values(out)


def velocity_from_accel(accel, savgol=SavGolSpec(), baseline_s=DEFAULT_BASELINE_S,
                        half_life_s=DEFAULT_HALF_LIFE_S, max_gap_s=DEFAULT_MAX_GAP_S,
                        rate=None):
    """Raw accelerometer stream (g) -> speed series on a uniform grid.

    Steps: resample to ``rate`` (default: the stream's nominal rate) when the
    input is not already uniform, fill short gaps, Savitzky-Golay smoothing,
    gravity removal, leaky integration.
    """
    if rate is not None or not accel.is_uniform():
        rate = rate or accel.nominal_rate
        if rate is None:
            raise ValueError(f"{accel.stream_id}: no rate to resample to")
        accel = resample_uniform(accel, rate, max_gap_s)
    accel = fill_short_gaps(accel, max_gap_s)
    smoothed = savgol_filter(accel, savgol)
    linear = remove_gravity(smoothed, baseline_s)
    dt = accel.sample_interval()
    return velocity_magnitude(linear, leak_for_half_life(dt, half_life_s))


def bounded_velocity(dt, a_max, leak):
    """Per-axis speed bound ``dt * a_max / (1 - leak)`` for a leaky integrator."""
    if leak >= 1.0:
        return math.inf
    return dt * a_max / (1.0 - leak)
