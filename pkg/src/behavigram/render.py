"""Behaviorgram rendering to SVG.

Output is a pure function of the input data: no timestamps, ids or
locale-dependent formatting, and every coordinate is written with three
decimals, so identical inputs give byte-identical documents.

Extended layout, top to bottom::

    position track      patient lane / table lane, Intermediate left blank
    accelerograph       left hand above the axis, right hand below;
                        bar colour = fused RSSI (brighter = stronger)
    entropy track       low-entropy intervals
    phase lines         vertical boundaries with labels across all tracks

The simplified variant has one activity track: bar height is the faster
hand's speed, bar colour is the proximity state, and low-entropy intervals
are hatched over the bars.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import EmptyRange, GridMismatch
from .proximity import ProximityState

COLORMAPS = {
    "amber": (255, 176, 0),
    "blue": (90, 170, 255),
    "green": (80, 220, 120),
    "gray": (255, 255, 255),
}
MID_GRAY = "#808080"
DEFAULT_RSSI_RANGE = (-90.0, -40.0)


@dataclass(frozen=True)
class BehaviorgramSpec:
    width: int = 1200
    height: int = 360
    t_range: tuple | None = None
    variant: str = "extended"
    colormap: str = "amber"
    entropy_height: int = 30
    labels: bool = True

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("width and height must be positive")
        if self.variant not in ("extended", "simplified"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.colormap not in COLORMAPS:
            raise ValueError(f"unknown colormap {self.colormap!r}")


def num(x):
    """Fixed three-decimal text; never ``-0.000``."""
    s = f"{float(x):.3f}"
    return "0.000" if s == "-0.000" else s


def brightness(rssi, lo, hi):
    """Map dBm to [0.15, 1]; higher RSSI is never darker."""
    v = np.clip((np.asarray(rssi, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)
    return 0.15 + 0.85 * v


def rssi_color(rssi, colormap="amber", rssi_range=DEFAULT_RSSI_RANGE):
    if rssi is None or np.isnan(rssi):
        return MID_GRAY
    level = float(brightness(rssi, *rssi_range))
    r, g, b = (int(round(c * level)) for c in COLORMAPS[colormap])
    return f"#{r:02x}{g:02x}{b:02x}"


def state_color(state, colormap="amber"):
    state = ProximityState(int(state))
    if state is ProximityState.INTERMEDIATE:
        return MID_GRAY
    level = 1.0 if state is ProximityState.NEAR_PATIENT else 0.3
    r, g, b = (int(round(c * level)) for c in COLORMAPS[colormap])
    return f"#{r:02x}{g:02x}{b:02x}"


class _Doc:
    def __init__(self, width, height):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
        ]

    def add(self, text):
        self.parts.append(text)

    def rect(self, x, y, w, h, fill, cls, extra=""):
        self.add(f'<rect class="{cls}" x="{num(x)}" y="{num(y)}" width="{num(w)}" '
                 f'height="{num(h)}" fill="{fill}"{extra}/>')

    def line(self, x1, y1, x2, y2, cls, stroke="#ffffff", width=1.0):
        self.add(f'<line class="{cls}" x1="{num(x1)}" y1="{num(y1)}" x2="{num(x2)}" '
                 f'y2="{num(y2)}" stroke="{stroke}" stroke-width="{num(width)}"/>')

    def text(self, x, y, s, cls):
        self.add(f'<text class="{cls}" x="{num(x)}" y="{num(y)}" fill="#ffffff" '
                 f'font-family="sans-serif" font-size="11">{escape(s)}</text>')

    def close(self):
        self.add("</svg>")
        return "\n".join(self.parts) + "\n"


class _Frame:
    """Affine time axis ``x = x0 + (t - t_min) * scale``."""

    def __init__(self, spec, t_min, t_max, left=40.0, right=10.0):
        self.x0 = left
        self.t_min = t_min
        self.t_max = t_max
        self.scale = (spec.width - left - right) / (t_max - t_min)

    def x(self, t):
        return self.x0 + (t - self.t_min) * self.scale


def _time_range(result, spec):
    t = result.velocity_rh.timestamps
    if t.size == 0:
        raise EmptyRange("no samples")
    lo, hi = (float(t[0]), float(t[-1])) if spec.t_range is None else spec.t_range
    if not hi > lo:
        raise EmptyRange(f"empty time range ({lo}, {hi})")
    sel = (t >= lo) & (t <= hi)
    if not sel.any():
        raise EmptyRange(f"no samples in ({lo}, {hi})")
    return lo, hi, sel


def _check_grid(result):
    ref = result.velocity_rh.timestamps
    for s in (result.velocity_lh, result.fused_rssi, result.proximity):
        if len(s) != ref.size or not np.allclose(s.timestamps, ref, rtol=0, atol=1e-9):
            raise GridMismatch(f"{s.stream_id} is not on the velocity grid")


def speed_scale(result):
    """99th percentile of present speeds over both hands (bar-height normaliser)."""
    v = np.r_[result.velocity_rh.values[:, 0], result.velocity_lh.values[:, 0]]
    v = v[~np.isnan(v)]
    p99 = float(np.percentile(v, 99)) if v.size else 0.0
    return p99 if p99 > 0 else 1.0


def _runs(codes):
    cut = np.flatnonzero(codes[1:] != codes[:-1]) + 1
    return list(zip(np.r_[0, cut], np.r_[cut, codes.size]))


def _metadata(doc, variant, p99, colormap, rssi_range, t_min, t_max):
    doc.add(f'<metadata>variant={variant}; speed_p99={num(p99)} m/s; colormap={colormap}; '
            f'rssi_range={num(rssi_range[0])},{num(rssi_range[1])} dBm; '
            f't_range={num(t_min)},{num(t_max)} s</metadata>')


def _phase_lines(doc, frame, annotations, top, bottom, labels):
    doc.add('<g id="phases">')
    for a in annotations:
        if a.t_end <= frame.t_min or a.t_start >= frame.t_max:
            continue
        x = frame.x(max(a.t_start, frame.t_min))
        doc.line(x, top, x, bottom, "phase-line", "#dddddd", 1.0)
        if labels:
            doc.text(x + 3, top + 11, a.label, "phase-label")
    ends = [a.t_end for a in annotations if frame.t_min < a.t_end <= frame.t_max]
    if ends:
        x = frame.x(max(ends))
        doc.line(x, top, x, bottom, "phase-line", "#dddddd", 1.0)
    doc.add("</g>")


def _rssi_range(result):
    c = getattr(result, "calibration", None)
    if c is None:
        return DEFAULT_RSSI_RANGE
    return (c.rssi_far, c.rssi_near)


def render_extended(result, spec=None, annotations=None):
    """Extended behaviorgram of an analysis result as SVG text."""
    spec = spec or BehaviorgramSpec()
    annotations = result.phases if annotations is None else annotations
    _check_grid(result)
    t_min, t_max, sel = _time_range(result, spec)
    frame = _Frame(spec, t_min, t_max)
    t = result.velocity_rh.timestamps
    dt = float(np.median(np.diff(t))) if t.size > 1 else 1.0
    bar_w = dt * frame.scale
    p99 = speed_scale(result)
    rssi_range = _rssi_range(result)

    top = 6.0
    lane_h = 12.0
    ent_h = float(spec.entropy_height)
    acc_top = top + 2 * lane_h + 8.0
    acc_bottom = spec.height - ent_h - 14.0
    axis = (acc_top + acc_bottom) / 2.0
    amp = (acc_bottom - acc_top) / 2.0
    ent_top = acc_bottom + 8.0

    doc = _Doc(spec.width, spec.height)
    _metadata(doc, "extended", p99, spec.colormap, rssi_range, t_min, t_max)
    doc.rect(0, 0, spec.width, spec.height, "#101010", "background")

    doc.add('<g id="position">')
    codes = result.proximity.values[sel, 0].astype(np.int8)
    ts = t[sel]
    for a, b in _runs(codes):
        state = ProximityState(int(codes[a]))
        if state is ProximityState.INTERMEDIATE:
            continue
        y = top if state is ProximityState.NEAR_PATIENT else top + lane_h
        cls = "pos-patient" if state is ProximityState.NEAR_PATIENT else "pos-table"
        x = frame.x(ts[a])
        doc.rect(x, y, (b - a) * bar_w, lane_h - 1, state_color(state, spec.colormap), cls)
    if spec.labels:
        doc.text(2, top + 10, "P", "lane-label")
        doc.text(2, top + lane_h + 10, "T", "lane-label")
    doc.add("</g>")

    doc.add('<g id="accelerograph">')
    doc.line(frame.x0, axis, frame.x(t_max), axis, "axis", "#606060", 1.0)
    rssi = result.fused_rssi.values[sel, 0]
    for hand, series, sign in (("lh", result.velocity_lh, -1), ("rh", result.velocity_rh, 1)):
        v = series.values[sel, 0]
        for k in np.flatnonzero(~np.isnan(v)):
            h = min(v[k] / p99, 1.0) * amp
            y = axis - h if sign < 0 else axis
            doc.rect(frame.x(ts[k]), y, bar_w, h,
                     rssi_color(rssi[k], spec.colormap, rssi_range), f"bar-{hand}")
    if spec.labels:
        doc.text(2, axis - 4, "LH", "lane-label")
        doc.text(2, axis + 12, "RH", "lane-label")
    doc.add("</g>")

    doc.add('<g id="entropy">')
    for a, b in result.mask.intervals:
        a, b = max(a, t_min), min(b, t_max)
        if b > a:
            doc.rect(frame.x(a), ent_top, (b - a) * frame.scale, ent_h, "#d0d0ff", "low-entropy")
    if spec.labels:
        doc.text(2, ent_top + ent_h / 2 + 4, "H", "lane-label")
    doc.add("</g>")

    _phase_lines(doc, frame, annotations, top, spec.height - 4.0, spec.labels)
    return doc.close()


def render_simplified(result, spec=None, annotations=None):
    """Simplified behaviorgram: one activity track coloured by proximity."""
    spec = spec or BehaviorgramSpec(variant="simplified")
    annotations = result.phases if annotations is None else annotations
    _check_grid(result)
    t_min, t_max, sel = _time_range(result, spec)
    frame = _Frame(spec, t_min, t_max)
    t = result.velocity_rh.timestamps
    dt = float(np.median(np.diff(t))) if t.size > 1 else 1.0
    bar_w = dt * frame.scale
    p99 = speed_scale(result)

    top = 20.0
    base = spec.height - 10.0
    amp = base - top

    doc = _Doc(spec.width, spec.height)
    _metadata(doc, "simplified", p99, spec.colormap, _rssi_range(result), t_min, t_max)
    doc.add('<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6">'
            '<path d="M0,6 L6,0" stroke="#ffffff" stroke-width="1"/></pattern></defs>')
    doc.rect(0, 0, spec.width, spec.height, "#101010", "background")

    doc.add('<g id="activity">')
    doc.line(frame.x0, base, frame.x(t_max), base, "axis", "#606060", 1.0)
    ts = t[sel]
    speed = np.fmax(result.velocity_rh.values[sel, 0], result.velocity_lh.values[sel, 0])
    codes = result.proximity.values[sel, 0]
    for k in np.flatnonzero(~np.isnan(speed)):
        h = min(speed[k] / p99, 1.0) * amp
        doc.rect(frame.x(ts[k]), base - h, bar_w, h, state_color(codes[k], spec.colormap), "bar")
    doc.add("</g>")

    doc.add('<g id="entropy">')
    for a, b in result.mask.intervals:
        a, b = max(a, t_min), min(b, t_max)
        if b > a:
            doc.rect(frame.x(a), top, (b - a) * frame.scale, amp, "url(#hatch)", "low-entropy",
                     ' fill-opacity="0.35"')
    doc.add("</g>")

    _phase_lines(doc, frame, annotations, 4.0, spec.height - 4.0, spec.labels)
    return doc.close()


def render(result, spec=None, annotations=None):
    spec = spec or BehaviorgramSpec()
    if spec.variant == "simplified":
        return render_simplified(result, spec, annotations)
    return render_extended(result, spec, annotations)
