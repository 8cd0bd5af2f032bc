"""Time-series data model, session ingestion and cross-stream alignment.

A session is a directory of CSV files, one per stream::

    accel_rh.csv  accel_lh.csv   t,acc_x,acc_y,acc_z   (s, g)
    rssi_rh.csv   rssi_lh.csv    t,rssi                (s, dBm)
    gaze.csv                     t,gaze_x,gaze_y       (s, [0, 1])
    markers.csv                  t,label
    meta.json                    flat key/value object (optional)

An empty field is a missing value.  Missing values are carried as NaN inside
:class:`TimeSeries`; NaN never appears in files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    EmptySeries,
    GazeOutOfRange,
    InsufficientOverlap,
    MalformedFile,
    MissingFile,
    NonMonotoneTimestamps,
    NonUniformSeries,
    ZeroVariance,
)

ACCEL_CHANNELS = ("acc_x", "acc_y", "acc_z")
RSSI_CHANNELS = ("rssi",)
GAZE_CHANNELS = ("gaze_x", "gaze_y")

#: stream name -> (file name, channels, nominal rate)
STREAM_LAYOUT = {
    "accel_rh": ("accel_rh.csv", ACCEL_CHANNELS, 40.0),
    "accel_lh": ("accel_lh.csv", ACCEL_CHANNELS, 40.0),
    "rssi_rh": ("rssi_rh.csv", RSSI_CHANNELS, 10.0),
    "rssi_lh": ("rssi_lh.csv", RSSI_CHANNELS, 10.0),
    "gaze": ("gaze.csv", GAZE_CHANNELS, 50.0),
}
MARKERS_FILE = "markers.csv"
META_FILE = "meta.json"

DEFAULT_MAX_GAP_S = 0.2
_UNIFORM_RTOL = 1e-6


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled multichannel signal with explicit timestamps.

    ``values`` has shape ``(len(timestamps), len(channels))``; NaN marks a
    missing entry.  Timestamps are seconds from session start and strictly
    increasing.  ``attrs`` carries free-form string metadata downstream
    operations attach (edge flags, parameters used).
    """

    stream_id: str
    timestamps: np.ndarray
    channels: tuple
    values: np.ndarray
    nominal_rate: float | None = None
    attrs: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        t = _frozen(self.timestamps).reshape(-1)
        v = np.array(self.values, dtype=np.float64)
        channels = tuple(self.channels)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.shape != (t.size, len(channels)):
            raise ValueError(
                f"{self.stream_id}: values shape {v.shape} does not match "
                f"{t.size} timestamps x {len(channels)} channels"
            )
        if t.size and not np.all(np.isfinite(t)):
            raise ValueError(f"{self.stream_id}: non-finite timestamp")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise NonMonotoneTimestamps(f"{self.stream_id}: timestamps must be strictly increasing")
        v.setflags(write=False)
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "attrs", dict(self.attrs))

    def __len__(self):
        return self.timestamps.size

    def channel(self, name):
        """1-D view of one channel by name."""
        return self.values[:, self.channels.index(name)]

    def select(self, *names, stream_id=None):
        idx = [self.channels.index(n) for n in names]
        return replace(self, stream_id=stream_id or self.stream_id,
                       channels=tuple(names), values=self.values[:, idx])

    def with_values(self, values, channels=None, **changes):
        return replace(self, values=values,
                       channels=self.channels if channels is None else channels, **changes)

    @property
    def span(self):
        return float(self.timestamps[0]), float(self.timestamps[-1])

    @property
    def present(self):
        """Boolean mask of non-missing entries, shape like ``values``."""
        return ~np.isnan(self.values)

    def sample_interval(self):
        """Grid step of a uniform series; raises NonUniformSeries otherwise."""
        if len(self) < 2:
            raise NonUniformSeries(f"{self.stream_id}: fewer than two samples")
        d = np.diff(self.timestamps)
        dt = float(np.median(d))
        if np.max(np.abs(d - dt)) > _UNIFORM_RTOL * max(dt, 1e-12) + 1e-9:
            raise NonUniformSeries(f"{self.stream_id}: series is not on a uniform grid")
        return dt

    def is_uniform(self):
        try:
            self.sample_interval()
        except NonUniformSeries:
            return False
        return True

    def between(self, t0, t1):
        """Samples with ``t0 <= t < t1``."""
        keep = (self.timestamps >= t0) & (self.timestamps < t1)
        return replace(self, timestamps=self.timestamps[keep], values=self.values[keep])

    def shifted(self, dt):
        return replace(self, timestamps=self.timestamps + dt)


@dataclass(frozen=True)
class MarkerStream:
    """Discrete annotation events ``(t, label)`` with non-decreasing times."""

    events: tuple = ()

    def __post_init__(self):
        ev = tuple((float(t), str(label)) for t, label in self.events)
        for i, (t, label) in enumerate(ev):
            if not label:
                raise ValueError(f"marker {i}: empty label")
            if not math.isfinite(t):
                raise ValueError(f"marker {i}: non-finite time")
            if i and t < ev[i - 1][0]:
                raise NonMonotoneTimestamps(f"marker {i}: time decreases")
        object.__setattr__(self, "events", ev)

    def __len__(self):
        return len(self.events)

    @property
    def times(self):
        return np.array([t for t, _ in self.events], dtype=np.float64)

    def labelled(self, label):
        return [t for t, lab in self.events if lab == label]

    def segments(self, label, t_end):
        """Intervals opened by ``label`` and closed by the next marker of any kind.

        The last one is closed by ``t_end``.
        """
        out = []
        for i, (t, lab) in enumerate(self.events):
            if lab != label:
                continue
            later = [u for u, _ in self.events[i + 1:] if u > t]
            end = later[0] if later else t_end
            if end > t:
                out.append((t, end))
        return out

    def shifted(self, dt):
        return MarkerStream(tuple((t + dt, lab) for t, lab in self.events))


@dataclass(frozen=True)
class Recording:
    accel_rh: TimeSeries
    accel_lh: TimeSeries
    rssi_rh: TimeSeries
    rssi_lh: TimeSeries
    gaze: TimeSeries
    markers: MarkerStream = MarkerStream()
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        g = self.gaze.values
        bad = ~np.isnan(g) & ((g < 0.0) | (g > 1.0))
        if bad.any():
            row = int(np.argwhere(bad)[0][0])
            raise GazeOutOfRange(f"gaze sample {row} outside [0, 1]")
        object.__setattr__(self, "meta", {str(k): str(v) for k, v in self.meta.items()})

    def streams(self):
        return {name: getattr(self, name) for name in STREAM_LAYOUT}

    @property
    def span(self):
        starts = [s.timestamps[0] for s in self.streams().values() if len(s)]
        ends = [s.timestamps[-1] for s in self.streams().values() if len(s)]
        if len(self.markers):
            starts.append(self.markers.times.min())
            ends.append(self.markers.times.max())
        return float(min(starts)), float(max(ends))


# ---------------------------------------------------------------- file I/O


def _parse_float(text, path, line, what):
    try:
        x = float(text)
    except ValueError:
        raise MalformedFile(f"cannot parse {what} {text!r}", path, line) from None
    if not math.isfinite(x):
        raise MalformedFile(f"non-finite {what} {text!r}", path, line)
    return x


def read_series_csv(path, stream_id, channels, nominal_rate=None):
    """Parse one stream file; header must be ``t`` followed by ``channels``."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile("missing required file", path)
    times, rows = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["t", *channels]
        if header is None or [h.strip() for h in header] != expected:
            raise MalformedFile(f"expected header {','.join(expected)}", path, 1)
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(expected):
                raise MalformedFile(
                    f"expected {len(expected)} columns, found {len(rec)}", path, line)
            t = _parse_float(rec[0].strip(), path, line, "timestamp")
            if times and t <= times[-1]:
                kind = "duplicate" if t == times[-1] else "decreasing"
                raise NonMonotoneTimestamps(f"{kind} timestamp {rec[0]}", path, line)
            row = []
            for text in rec[1:]:
                text = text.strip()
                row.append(np.nan if text == "" else _parse_float(text, path, line, "value"))
            if stream_id == "gaze":
                for x in row:
                    if not math.isnan(x) and not 0.0 <= x <= 1.0:
                        raise GazeOutOfRange(f"gaze value {x!r} outside [0, 1]", path, line)
            times.append(t)
            rows.append(row)
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(channels))
    return TimeSeries(stream_id, np.array(times), channels, values, nominal_rate)


def read_markers_csv(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile("missing required file", path)
    events = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "label"]:
            raise MalformedFile("expected header t,label", path, 1)
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 2:
                raise MalformedFile(f"expected 2 columns, found {len(rec)}", path, line)
            t = _parse_float(rec[0].strip(), path, line, "timestamp")
            label = rec[1].strip()
            if not label:
                raise MalformedFile("empty marker label", path, line)
            if events and t < events[-1][0]:
                raise NonMonotoneTimestamps("decreasing marker time", path, line)
            events.append((t, label))
    return MarkerStream(tuple(events))


def load_recording(path):
    """Load and validate a session directory into a :class:`Recording`."""
    root = Path(path)
    if not root.is_dir():
        raise MissingFile("session directory not found", root)
    streams = {
        name: read_series_csv(root / fname, name, channels, rate)
        for name, (fname, channels, rate) in STREAM_LAYOUT.items()
    }
    markers = read_markers_csv(root / MARKERS_FILE)
    meta = {}
    meta_path = root / META_FILE
    if meta_path.is_file():
        try:
            raw = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"invalid JSON: {exc.msg}", meta_path, exc.lineno) from None
        if not isinstance(raw, dict):
            raise MalformedFile("meta must be a JSON object", meta_path)
        meta = {str(k): str(v) for k, v in raw.items()}
    return Recording(markers=markers, meta=meta, **streams)


def format_float(x):
    """Shortest text that round-trips the float; empty for missing."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def write_series_csv(series, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *series.channels])
        for t, row in zip(series.timestamps.tolist(), series.values.tolist()):
            w.writerow([format_float(t), *(format_float(x) for x in row)])


def save_recording(recording, path):
    """Write ``recording`` as a session directory (created if needed)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for name, (fname, channels, _) in STREAM_LAYOUT.items():
        series = getattr(recording, name)
        if tuple(series.channels) != tuple(channels):
            series = series.select(*channels)
        write_series_csv(series, root / fname)
    with (root / MARKERS_FILE).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "label"])
        for t, label in recording.markers.events:
            w.writerow([format_float(t), label])
    (root / META_FILE).write_text(
        json.dumps(dict(recording.meta), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return root


# ------------------------------------------------------------- resampling


def resample_uniform(series, rate, max_gap_s=DEFAULT_MAX_GAP_S):
    """Linearly interpolate ``series`` onto the grid ``t_k = k / rate``.

    The grid spans the input time range.  Interpolation never bridges a run
    of missing input rows whose bracketing present samples are more than
    ``max_gap_s`` apart; when the series declares a nominal rate, a bare
    timestamp jump longer than ``max_gap_s`` is treated the same way.  Grid
    points outside the first/last present sample of a channel are missing.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    if len(series) < 2:
        raise EmptySeries(f"{series.stream_id}: need at least two samples")
    t = series.timestamps
    k0 = math.ceil(t[0] * rate - 1e-9)
    k1 = math.floor(t[-1] * rate + 1e-9)
    grid = np.arange(k0, k1 + 1, dtype=np.float64) / rate
    out = np.full((grid.size, len(series.channels)), np.nan)
    rows = np.arange(len(series))
    for c in range(len(series.channels)):
        v = series.values[:, c]
        ok = ~np.isnan(v)
        if ok.sum() < 2:
            raise EmptySeries(
                f"{series.stream_id}.{series.channels[c]}: fewer than two present samples")
        tp, vp, rp = t[ok], v[ok], rows[ok]
        col = np.interp(grid, tp, vp)
        r = np.searchsorted(tp, grid, side="left")
        rr = np.clip(r, 1, tp.size - 1)
        exact = (np.abs(tp[rr] - grid) <= 1e-9) | (np.abs(tp[rr - 1] - grid) <= 1e-9)
        inside = (r > 0) & (r < tp.size)
        span = tp[rr] - tp[rr - 1]
        holes = rp[rr] - rp[rr - 1] > 1
        if series.nominal_rate:
            holes |= span > max_gap_s + 1e-9
        bridged = inside & ~(holes & (span > max_gap_s + 1e-9))
        col[~(exact | bridged)] = np.nan
        out[:, c] = col
    return replace(series, timestamps=grid, values=out, nominal_rate=float(rate))


# ---------------------------------------------------------- lag estimation


def estimate_lag(a, b, max_lag):
    """Lag of ``b`` relative to ``a`` in seconds (positive: ``b`` trails ``a``).

    Both series must be single-channel and sampled on the same uniform grid
    ``k / rate``.  The lag maximises the Pearson correlation of the
    overlapping present samples over integer grid lags within
    ``[-max_lag, max_lag]``; ties go to the smaller absolute lag.
    """
    if len(a.channels) != 1 or len(b.channels) != 1:
        raise ValueError("estimate_lag needs single-channel series")
    dt_a, dt_b = a.sample_interval(), b.sample_interval()
    if abs(dt_a - dt_b) > 1e-9 * max(dt_a, dt_b):
        raise NonUniformSeries("series are sampled at different rates")
    rate = 1.0 / dt_a
    overlap = min(a.span[1], b.span[1]) - max(a.span[0], b.span[0])
    if overlap < 4 * max_lag:
        raise InsufficientOverlap(
            f"overlap {overlap:.3f} s is shorter than 4 x max_lag = {4 * max_lag:.3f} s")
    va, vb = a.values[:, 0], b.values[:, 0]
    for s, v in ((a, va), (b, vb)):
        p = v[~np.isnan(v)]
        if p.size < 2 or np.ptp(p) == 0.0:
            raise ZeroVariance(f"{s.stream_id}: no variance")

    ka = np.rint(a.timestamps * rate).astype(np.int64)
    kb = np.rint(b.timestamps * rate).astype(np.int64)
    k0 = min(ka[0], kb[0])
    n = max(ka[-1], kb[-1]) - k0 + 1
    xa = np.full(n, np.nan)
    xb = np.full(n, np.nan)
    xa[ka - k0] = va
    xb[kb - k0] = vb

    m = int(round(max_lag * rate))
    best_lag, best_r = 0, -np.inf
    # search order 0, +1, -1, +2, -2 ... so strict improvement breaks ties
    for lag in sorted(range(-m, m + 1), key=lambda L: (abs(L), -L)):
        if lag >= 0:
            x, y = xa[: n - lag], xb[lag:]
        else:
            x, y = xa[-lag:], xb[: n + lag]
        ok = ~(np.isnan(x) | np.isnan(y))
        if ok.sum() < 3:
            continue
        x = x[ok] - x[ok].mean()
        y = y[ok] - y[ok].mean()
        denom = math.sqrt(float(x @ x) * float(y @ y))
        if denom == 0.0:
            continue
        r = float(x @ y) / denom
        if r > best_r + 1e-12:
            best_lag, best_r = lag, r
    return best_lag / rate


# ---------------------------------------------------------------- alignment


def align(recording, lags):
    """Shift each stream's clock by its lag and renormalise the origin.

    ``lags`` maps stream names (and optionally ``"markers"``) to seconds;
    each timestamp ``t`` of that stream becomes ``t - lag``.  Afterwards all
    streams are translated together so the earliest timestamp is zero.  The
    cumulative lags and origin shift are recorded in ``meta``.
    """
    names = set(STREAM_LAYOUT) | {"markers"}
    unknown = set(lags) - names
    if unknown:
        raise KeyError(f"unknown stream(s) {sorted(unknown)}")
    for v in lags.values():
        if not math.isfinite(v):
            raise ValueError("lags must be finite")

    shifted = {n: s.shifted(-float(lags.get(n, 0.0))) for n, s in recording.streams().items()}
    markers = recording.markers.shifted(-float(lags.get("markers", 0.0)))
    starts = [s.timestamps[0] for s in shifted.values() if len(s)]
    if len(markers):
        starts.append(markers.times.min())
    origin = float(min(starts)) if starts else 0.0
    if origin != 0.0:
        shifted = {n: s.shifted(-origin) for n, s in shifted.items()}
        markers = markers.shifted(-origin)

    meta = dict(recording.meta)
    for n in sorted(names):
        total = float(meta.get(f"lag_{n}", "0")) + float(lags.get(n, 0.0))
        meta[f"lag_{n}"] = repr(total)
    meta["origin_shift"] = repr(float(meta.get("origin_shift", "0")) + origin)
    return Recording(markers=markers, meta=meta, **shifted)
