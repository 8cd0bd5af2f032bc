"""Blink imputation, gaze-plane binning and sliding-window joint entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AllMissing, EmptyWindow, InvalidSpec, OutOfRange
from .streams import GAZE_CHANNELS, TimeSeries

DEFAULT_BLINK_MAX_S = 0.5
DEFAULT_SPLINE_SUPPORT = 4
DEFAULT_MIN_VALID = 0.5

SWEEP_BINS = (10, 25, 50, 75, 100)
SWEEP_WINDOWS = (2.0, 3.0, 4.0, 5.0, 6.0)


@dataclass(frozen=True)
class GazeGridSpec:
    bins: int = 100
    window_s: float = 5.0
    hop_s: float = 0.2

    def __post_init__(self):
        if int(self.bins) != self.bins or self.bins < 1:
            raise InvalidSpec("bins must be a positive integer")
        if not self.window_s > 0 or not self.hop_s > 0:
            raise InvalidSpec("window_s and hop_s must be positive")
        if self.hop_s > self.window_s:
            raise InvalidSpec("hop_s must not exceed window_s")


@dataclass(frozen=True)
class LowEntropyMask:
    intervals: tuple
    threshold: float

    def contains(self, t):
        """Boolean mask for times inside any interval (half-open ``[start, end)``)."""
        t = np.asarray(t, dtype=np.float64)
        inside = np.zeros(t.shape, dtype=bool)
        for a, b in self.intervals:
            inside |= (t >= a) & (t < b)
        return inside

    @property
    def total_duration(self):
        return sum(b - a for a, b in self.intervals)


def _runs(mask):
    d = np.diff(np.r_[0, mask.astype(np.int8), 0])
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def impute_blinks(gaze, blink_max_s=DEFAULT_BLINK_MAX_S, spline_support=DEFAULT_SPLINE_SUPPORT):
    """Fill short interior gaps of each gaze channel with a cubic spline.

    A run of ``n`` missing samples is filled when ``n * dt <= blink_max_s``
    and present samples exist on both sides.  The spline passes through the
    nearest ``spline_support`` present samples on each side and uses
    not-a-knot end conditions, so cubic trajectories are reproduced exactly.
    Filled values are clamped to [0, 1].  Longer runs and runs touching the
    series ends stay missing.  An ``imputed`` channel (1.0 where any channel
    was filled) is appended.
    """
    dt = gaze.sample_interval()
    t = gaze.timestamps
    names = [c for c in gaze.channels if c != "imputed"]
    values = gaze.select(*names).values.copy()
    imputed = np.zeros(len(gaze), dtype=bool)
    for c in range(values.shape[1]):
        col = values[:, c]
        present = ~np.isnan(col)
        idx = np.flatnonzero(present)
        for i0, i1 in _runs(~present):
            if i0 == 0 or i1 == col.size or (i1 - i0) * dt > blink_max_s + 1e-9:
                continue
            left = idx[idx < i0][-spline_support:]
            right = idx[idx >= i1][:spline_support]
            support = np.r_[left, right]
            if support.size >= 4:
                fill = CubicSpline(t[support], col[support], bc_type="not-a-knot")(t[i0:i1])
            else:
                fill = np.interp(t[i0:i1], t[support], col[support])
            col[i0:i1] = np.clip(fill, 0.0, 1.0)
            imputed[i0:i1] = True
    out = np.column_stack([values, imputed.astype(np.float64)])
    attrs = dict(gaze.attrs, blink_max_s=repr(blink_max_s), spline_support=str(spline_support))
    return gaze.with_values(out, channels=(*names, "imputed"), attrs=attrs)


def bin_gaze(x, y, bins):
    """Cell indices ``(i, j)`` of a gaze point on a ``bins x bins`` grid.

    Works elementwise on arrays.  The value 1.0 falls in the last cell.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    bad = ~((x >= 0) & (x <= 1) & (y >= 0) & (y <= 1))
    if np.any(bad):
        raise OutOfRange("gaze coordinates must be present and within [0, 1]")
    i = np.minimum(np.floor(x * bins), bins - 1).astype(np.int64)
    j = np.minimum(np.floor(y * bins), bins - 1).astype(np.int64)
    if i.ndim == 0:
        return int(i), int(j)
    return i, j


def entropy_from_counts(counts):
    """Shannon entropy in bits of a histogram given by positive counts."""
    c = np.asarray(counts, dtype=np.float64)
    c = c[c > 0]
    n = c.sum()
    if n == 0:
        raise EmptyWindow("empty window")
    if c.size == 1:
        return 0.0
    # H = log2 n - sum(c log2 c) / n; exact for uniform histograms
    return float(math.log2(n) - np.sum(c * np.log2(c)) / n)


def joint_entropy(window_samples):
    """Joint entropy in bits of a window of ``(i, j)`` cell indices."""
    cells = np.asarray(window_samples, dtype=np.int64).reshape(-1, 2)
    if cells.shape[0] == 0:
        raise EmptyWindow("empty window")
    _, counts = np.unique(cells, axis=0, return_counts=True)
    return entropy_from_counts(counts)


def _window_entropies(cell, valid, n_win, n_hop):
    """Entropy and valid fraction of every full window; ``cell`` is a flat cell id."""
    starts = np.arange(0, cell.size - n_win + 1, n_hop)
    H = np.full(starts.size, np.nan)
    frac = np.zeros(starts.size)
    for w, s in enumerate(starts):
        ok = valid[s:s + n_win]
        frac[w] = ok.mean()
        if ok.any():
            _, counts = np.unique(cell[s:s + n_win][ok], return_counts=True)
            H[w] = entropy_from_counts(counts)
    return starts, H, frac


def sliding_entropy(gaze, spec=GazeGridSpec(), min_valid=DEFAULT_MIN_VALID):
    """Windowed joint gaze entropy on a uniformly sampled gaze series.

    Windows hold ``round(window_s / dt)`` samples and advance by
    ``round(hop_s / dt)``; timestamps are window centres.  Entropy uses the
    present samples only and is missing when their fraction is below
    ``min_valid``.  Channels: ``H`` (bits), ``valid_fraction``.
    """
    dt = gaze.sample_interval()
    n_win = max(1, int(round(spec.window_s / dt)))
    n_hop = max(1, int(round(spec.hop_s / dt)))
    x, y = gaze.channel(GAZE_CHANNELS[0]), gaze.channel(GAZE_CHANNELS[1])
    valid = ~(np.isnan(x) | np.isnan(y))
    cell = np.zeros(len(gaze), dtype=np.int64)
    if valid.any():
        i, j = bin_gaze(x[valid], y[valid], spec.bins)
        cell[valid] = i * spec.bins + j
    starts, H, frac = _window_entropies(cell, valid, n_win, n_hop)
    H[frac < min_valid] = np.nan
    t = gaze.timestamps
    centers = (t[starts] + t[starts + n_win - 1]) / 2.0 if starts.size else np.empty(0)
    attrs = {"units": "bits", "bins": str(spec.bins), "window_s": repr(spec.window_s),
             "hop_s": repr(spec.hop_s), "min_valid": repr(min_valid)}
    return TimeSeries("entropy", centers, ("H", "valid_fraction"),
                      np.column_stack([H, frac]) if starts.size else np.empty((0, 2)),
                      1.0 / (n_hop * dt), attrs)


def low_entropy_mask(entropy, hop_s=None):
    """Intervals where windowed entropy is strictly below its mean.

    Each run of consecutive windows under the threshold becomes
    ``[first centre - hop/2, last centre + hop/2]``.  Missing windows break
    runs.
    """
    H = entropy.channel("H") if "H" in entropy.channels else entropy.values[:, 0]
    present = ~np.isnan(H)
    if not present.any():
        raise AllMissing("entropy series has no present values")
    threshold = float(np.mean(H[present]))
    if hop_s is None:
        hop_s = float(entropy.attrs.get("hop_s", 0.0)) or (
            float(np.median(np.diff(entropy.timestamps))) if len(entropy) > 1 else 0.0)
    t = entropy.timestamps
    with np.errstate(invalid="ignore"):
        low = present & (H < threshold)
    intervals = tuple((float(t[a] - hop_s / 2), float(t[b - 1] + hop_s / 2))
                      for a, b in _runs(low))
    return LowEntropyMask(intervals, threshold)


def robustness_sweep(gaze, bins=SWEEP_BINS, windows=SWEEP_WINDOWS, hop_s=0.2,
                     min_valid=DEFAULT_MIN_VALID):
    """Entropy series for every (bins, window) setting on a common time base.

    Returns ``(settings, times, matrix)``: ``matrix[k]`` is the entropy of
    ``settings[k]`` linearly interpolated onto ``times``, the window centres
    common to every setting.
    """
    series = {}
    for b in bins:
        for w in windows:
            series[(b, w)] = sliding_entropy(gaze, GazeGridSpec(b, w, hop_s), min_valid)
    lo = max(s.timestamps[0] for s in series.values())
    hi = min(s.timestamps[-1] for s in series.values())
    ref = series[(bins[0], max(windows))].timestamps
    times = ref[(ref >= lo - 1e-9) & (ref <= hi + 1e-9)]
    settings = list(series)
    matrix = np.vstack([
        np.interp(times, s.timestamps, s.channel("H"), left=np.nan, right=np.nan)
        for s in series.values()
    ])
    return settings, times, matrix


def rank_correlation_matrix(matrix):
    """Spearman correlation between rows, using columns where every row is present."""
    from scipy.stats import spearmanr

    ok = ~np.isnan(matrix).any(axis=0)
    rho = spearmanr(matrix[:, ok], axis=1).statistic
    return np.atleast_2d(rho)
