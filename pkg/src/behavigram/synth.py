"""Deterministic synthetic sessions with known ground truth.

A scenario is a sequence of phases, each made of episodes with a fixed
proximity state, gaze regime and per-hand target speed.  The generated
session starts with near/far calibration segments and a short lead-in, and
ends with a lead-out after an ``end`` marker, so every phase is fully covered
by the sliding entropy windows.

Random numbers come from numpy's counter-based Philox generator seeded with
``ScenarioSpec.seed``, which gives identical streams on every platform.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .proximity import ProximityState
from .signal import velocity_from_accel
from .streams import (
    ACCEL_CHANNELS,
    GAZE_CHANNELS,
    MarkerStream,
    Recording,
    TimeSeries,
    format_float,
    save_recording,
)

ACCEL_RATE = 40.0
GAZE_RATE = 50.0
RSSI_RATE = 10.0

PROXIMITY_NAMES = {s.slug: s for s in ProximityState}


@dataclass(frozen=True)
class Episode:
    """A stretch of constant behaviour.

    ``gaze_std`` is the fixation spread in gaze units; ``None`` means gaze
    scattered uniformly over the plane.  ``duty`` is the fraction of time the
    hands move (bursts); target speeds are means over the whole episode.
    """

    duration: float
    proximity: str = "near_patient"
    gaze_std: float | None = 0.005
    speed_rh: float = 0.0
    speed_lh: float = 0.0
    duty: float = 1.0
    blink_rate: float = 0.25
    blink_duration: float = 0.15

    def validate(self):
        if not self.duration > 0:
            raise InvalidSpec("episode duration must be positive")
        if self.proximity not in PROXIMITY_NAMES:
            raise InvalidSpec(f"unknown proximity state {self.proximity!r}")
        if self.gaze_std is not None and self.gaze_std < 0:
            raise InvalidSpec("fixation std must be >= 0")
        if self.speed_rh < 0 or self.speed_lh < 0:
            raise InvalidSpec("target speeds must be >= 0")
        if not 0 < self.duty <= 1:
            raise InvalidSpec("duty must be in (0, 1]")
        if self.blink_rate < 0 or self.blink_duration < 0:
            raise InvalidSpec("blink parameters must be >= 0")
        if self.blink_rate > 0 and not self.blink_duration < 1.0 / self.blink_rate:
            raise InvalidSpec("blink duration must be shorter than 1 / blink rate")

    @property
    def fixation(self):
        return self.gaze_std is not None


@dataclass(frozen=True)
class PhasePlan:
    label: str
    episodes: tuple

    @classmethod
    def simple(cls, label, duration, **profile):
        return cls(label, (Episode(duration, **profile),))

    @property
    def duration(self):
        return sum(e.duration for e in self.episodes)


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 0
    phases: tuple = ()
    calibration_s: float = 20.0
    lead_s: float = 5.0
    lags: dict = field(default_factory=dict)
    rssi_noise_db: float = 2.0
    rssi_near: float = -50.0
    rssi_intermediate: float = -68.0
    rssi_far: float = -85.0
    rssi_dropout: float = 0.01
    accel_noise_g: float = 0.004
    accel_dropout: float = 0.002
    session: str = "synthetic"
    subject: str = "S0"

    def validate(self):
        if self.calibration_s <= 0 or self.lead_s < 0:
            raise InvalidSpec("calibration_s must be positive and lead_s non-negative")
        if self.rssi_noise_db < 0 or self.accel_noise_g < 0:
            raise InvalidSpec("noise levels must be >= 0")
        for p in self.phases:
            if not p.label or not p.episodes:
                raise InvalidSpec("each phase needs a label and at least one episode")
            for e in p.episodes:
                e.validate()
        unknown = set(self.lags) - {"accel_rh", "accel_lh", "rssi_rh", "rssi_lh", "gaze"}
        if unknown:
            raise InvalidSpec(f"unknown lag stream(s) {sorted(unknown)}")

    def to_dict(self):
        d = asdict(self)
        d["phases"] = [{"label": p.label, "episodes": [asdict(e) for e in p.episodes]}
                       for p in self.phases]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        try:
            d["phases"] = tuple(
                PhasePlan(p["label"], tuple(Episode(**e) for e in p["episodes"]))
                for p in d.get("phases", ()))
            spec = cls(**d)
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"bad scenario description: {exc}") from None
        return spec

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class PhaseTarget:
    label: str
    t_start: float
    t_end: float
    speed_rh: float
    speed_lh: float
    near_patient: float
    intermediate: float
    near_table: float
    low_entropy: float


@dataclass(frozen=True)
class GroundTruth:
    phases: tuple
    lags: dict


def abcde_plan(variant="initial"):
    """Phase plan shaped after the four-phase structure of an ABCDE examination.

    ``initial`` splits phase II into IIa (observation only) and IIb
    (stethoscope); ``repeated`` keeps a single phase II and adds a hand
    disinfection at the instrument table in phase III.
    """
    scatter = None
    phase_1 = PhasePlan("I", (
        Episode(25, "near_patient", 0.005, 0.5, 0.5),
        Episode(8, "intermediate", scatter, 0.3, 0.3),
        Episode(27, "near_patient", 0.005, 0.5, 0.5),
    ))
    phase_3 = PhasePlan("III", (
        Episode(20, "near_table", 0.005, 0.3, 0.0, duty=0.5),
        Episode(6, "intermediate", scatter, 0.2, 0.2),
        Episode(25, "near_patient", 0.005, 0.0, 0.3, duty=0.5),
        Episode(6, "intermediate", scatter, 0.2, 0.2),
        Episode(43, "near_patient", 0.005, 0.3, 0.1, duty=0.4),
    ))
    phase_4 = PhasePlan("IV", (
        Episode(20, "near_table", 0.005, 0.15, 0.1, duty=0.3),
        Episode(5, "intermediate", scatter, 0.1, 0.1),
        Episode(35, "near_patient", 0.005, 0.15, 0.1, duty=0.3),
    ))
    if variant == "initial":
        middle = (
            PhasePlan.simple("IIa", 40, proximity="near_patient"),
            PhasePlan.simple("IIb", 30, proximity="near_patient",
                             speed_rh=0.12, speed_lh=0.1, duty=0.5),
        )
        return (phase_1, *middle, phase_3, phase_4)
    if variant == "repeated":
        phase_2 = PhasePlan("II", (
            Episode(25, "near_patient", 0.005),
            Episode(20, "intermediate", 0.005, 0.1, 0.1, duty=0.5),
        ))
        phase_3r = PhasePlan("III", (
            Episode(20, "near_table", 0.005, 0.3, 0.0, duty=0.5),
            Episode(6, "intermediate", scatter, 0.2, 0.2),
            Episode(20, "near_patient", 0.005, 0.0, 0.3, duty=0.5),
            Episode(10, "near_table", 0.005, 0.6, 0.6),
            Episode(6, "intermediate", scatter, 0.2, 0.2),
            Episode(30, "near_patient", 0.005, 0.3, 0.1, duty=0.4),
        ))
        return (phase_1, phase_2, phase_3r, phase_4)
    raise InvalidSpec(f"unknown variant {variant!r}")


def abcde_scenario(seed=0, variant="initial", **kw):
    return ScenarioSpec(seed=seed, phases=abcde_plan(variant), session=f"abcde-{variant}", **kw)


# ------------------------------------------------------------- timeline


@dataclass(frozen=True)
class _Segment:
    t0: float
    t1: float
    episode: Episode


def _timeline(spec):
    """Episode segments and markers covering the whole session."""
    calib = spec.calibration_s
    segs = [
        _Segment(0.0, calib, Episode(calib, "near_patient", None, blink_rate=0.0)),
        _Segment(calib, 2 * calib, Episode(calib, "near_table", None, blink_rate=0.0)),
    ]
    markers = [(0.0, "calib_near"), (calib, "calib_far")]
    t = 2 * calib
    if not spec.phases:
        return segs, markers, t
    if spec.lead_s > 0:
        segs.append(_Segment(t, t + spec.lead_s, Episode(spec.lead_s, "intermediate", 0.005)))
        markers.append((t, "lead_in"))
        t += spec.lead_s
    for p in spec.phases:
        markers.append((t, f"phase:{p.label}"))
        for e in p.episodes:
            segs.append(_Segment(t, t + e.duration, e))
            t += e.duration
    markers.append((t, "end"))
    if spec.lead_s > 0:
        segs.append(_Segment(t, t + spec.lead_s, Episode(spec.lead_s, "intermediate", 0.005)))
        t += spec.lead_s
    return segs, markers, t


def _segment_index(segs, t):
    starts = np.array([s.t0 for s in segs])
    return np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(segs) - 1)


def _grid(rate, total):
    n = int(math.floor(total * rate + 1e-9)) + 1
    return np.arange(n, dtype=np.float64) / rate


# ---------------------------------------------------------------- streams


def _bursts(rng, seg, duty, t):
    """Unit-scale 3-axis acceleration bursts inside ``seg`` evaluated at ``t``."""
    out = np.zeros((t.size, 3))
    s = seg.t0
    while s < seg.t1:
        length = min(rng.uniform(0.8, 1.6), seg.t1 - s)
        freq = rng.uniform(1.5, 3.0)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        if length > 0.3:
            u = (t - s) / length
            inside = (u >= 0) & (u < 1)
            env = 0.5 * (1 - np.cos(2 * np.pi * u[inside]))
            carrier = np.sin(2 * np.pi * freq * (t[inside] - s))
            out[inside] += (env * carrier)[:, None] * d[None, :]
        gap = 0.0 if duty >= 1 else length * (1 - duty) / duty * rng.uniform(0.5, 1.5)
        s += length + gap
    return out


def _hand_accel(rng, segs, hand, spec, total):
    """Accelerometer stream (g) whose speed under the velocity chain meets the targets."""
    t = _grid(ACCEL_RATE, total)
    tb = t - spec.lags.get(f"accel_{hand}", 0.0)
    key = f"speed_{hand}"
    parts = []
    for seg in segs:
        target = getattr(seg.episode, key)
        if target > 0:
            parts.append((seg, target, _bursts(rng, seg, seg.episode.duty, tb)))
    g = rng.normal(size=3) * 0.2 + np.array([0.0, 0.0, 1.0])
    g /= np.linalg.norm(g)
    noise = rng.normal(scale=spec.accel_noise_g, size=(t.size, 3))
    dropout = rng.random(t.size) < spec.accel_dropout
    dropout[[0, -1]] = False

    scale = np.ones(len(parts))
    seg_masks = [(t >= seg.t0) & (t < seg.t1) for seg, _, _ in parts]

    def linear(scale):
        lin = np.zeros((t.size, 3))
        for k, (_, _, b) in enumerate(parts):
            lin += scale[k] * b
        return lin

    # fixed-point iteration: leaky carry-over couples neighbouring episodes
    for _ in range(4):
        if not parts:
            break
        clean = TimeSeries(f"accel_{hand}", t, ACCEL_CHANNELS,
                           g[None, :] + linear(scale) / 9.81, ACCEL_RATE)
        speed = velocity_from_accel(clean).values[:, 0]
        for k, (_, target, _) in enumerate(parts):
            realised = float(np.mean(speed[seg_masks[k]]))
            if realised > 0:
                scale[k] *= target / realised
    values = g[None, :] + linear(scale) / 9.81 + noise
    values[dropout] = np.nan
    return TimeSeries(f"accel_{hand}", t, ACCEL_CHANNELS, values, ACCEL_RATE)


def _hand_rssi(rng, segs, hand, spec, total):
    t = _grid(RSSI_RATE, total)
    tb = t - spec.lags.get(f"rssi_{hand}", 0.0)
    level = {"near_patient": spec.rssi_near, "intermediate": spec.rssi_intermediate,
             "near_table": spec.rssi_far}
    idx = _segment_index(segs, tb)
    base = np.array([level[segs[i].episode.proximity] for i in idx])
    values = np.round(base + rng.normal(scale=spec.rssi_noise_db, size=t.size))
    values[rng.random(t.size) < spec.rssi_dropout] = np.nan
    values[[0, -1]] = np.round(base[[0, -1]])
    return TimeSeries(f"rssi_{hand}", t, ("rssi",), values[:, None], RSSI_RATE)


def _gaze(rng, segs, spec, total):
    t = _grid(GAZE_RATE, total)
    tb = t - spec.lags.get("gaze", 0.0)
    idx = _segment_index(segs, tb)
    xy = np.empty((t.size, 2))
    missing = np.zeros(t.size, dtype=bool)
    for k, seg in enumerate(segs):
        sel = idx == k
        n = int(sel.sum())
        e = seg.episode
        centre = rng.uniform(0.25, 0.75, size=2)
        if e.fixation:
            pts = centre + rng.normal(scale=e.gaze_std, size=(n, 2)) if n else np.empty((0, 2))
        else:
            pts = rng.random((n, 2))
        xy[sel] = np.clip(pts, 0.0, 1.0)
        if e.blink_rate > 0:
            s = seg.t0 + rng.exponential(1.0 / e.blink_rate)
            while s < seg.t1:
                missing |= (tb >= s) & (tb < min(s + e.blink_duration, seg.t1))
                s += e.blink_duration + rng.exponential(1.0 / e.blink_rate)
    missing[[0, -1]] = False
    xy[missing] = np.nan
    return TimeSeries("gaze", t, GAZE_CHANNELS, xy, GAZE_RATE)


def _targets(spec, segs, markers):
    out = []
    phase_marks = [(t, lab[6:]) for t, lab in markers if lab.startswith("phase:")]
    ends = [t for t, lab in markers if lab.startswith("phase:") or lab == "end"]
    for (t0, label), t1 in zip(phase_marks, ends[1:]):
        inside = [s for s in segs if s.t0 >= t0 - 1e-9 and s.t1 <= t1 + 1e-9]
        dur = t1 - t0

        def wmean(f):
            return sum(f(s) * (s.t1 - s.t0) for s in inside) / dur

        out.append(PhaseTarget(
            label, t0, t1,
            speed_rh=wmean(lambda s: s.episode.speed_rh),
            speed_lh=wmean(lambda s: s.episode.speed_lh),
            near_patient=wmean(lambda s: s.episode.proximity == "near_patient"),
            intermediate=wmean(lambda s: s.episode.proximity == "intermediate"),
            near_table=wmean(lambda s: s.episode.proximity == "near_table"),
            low_entropy=wmean(lambda s: s.episode.fixation),
        ))
    return tuple(out)


def generate(spec):
    """Build a :class:`Recording` and its :class:`GroundTruth` from ``spec``."""
    spec.validate()
    segs, markers, total = _timeline(spec)
    rng = np.random.Generator(np.random.Philox(spec.seed))
    streams = {
        "accel_rh": _hand_accel(rng, segs, "rh", spec, total),
        "accel_lh": _hand_accel(rng, segs, "lh", spec, total),
        "rssi_rh": _hand_rssi(rng, segs, "rh", spec, total),
        "rssi_lh": _hand_rssi(rng, segs, "lh", spec, total),
        "gaze": _gaze(rng, segs, spec, total),
    }
    meta = {"subject": spec.subject, "session": spec.session, "seed": str(spec.seed),
            "generator": "behavigram.synth"}
    for name, lag in sorted(spec.lags.items()):
        meta[f"injected_lag_{name}"] = repr(float(lag))
    rec = Recording(markers=MarkerStream(tuple(markers)), meta=meta, **streams)
    return rec, GroundTruth(_targets(spec, segs, markers), dict(spec.lags))


def make_sync_scenario(offset, seed=0, duration=30.0, noise_g=0.01, gaze_noise=0.004):
    """Head-movement synchronisation check: slow vertical head sweeps.

    The head accelerometer (``accel_rh``) sees the sweep on ``acc_x``; the
    eye tracker sees the same sweep on ``gaze_y``, recorded ``offset``
    seconds later.  A ``sync`` marker at t=0 opens the segment.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    freqs = rng.uniform(0.15, 0.5, size=3)
    phases = rng.uniform(0, 2 * np.pi, size=3)
    amps = rng.uniform(0.5, 1.0, size=3)

    def sweep(x):
        s = sum(a * np.sin(2 * np.pi * f * x + p) for a, f, p in zip(amps, freqs, phases))
        return s / amps.sum()

    ta = _grid(ACCEL_RATE, duration)
    acc = np.column_stack([
        0.4 * sweep(ta), np.zeros(ta.size), np.full(ta.size, 0.9)
    ]) + rng.normal(scale=noise_g, size=(ta.size, 3))
    tg = _grid(GAZE_RATE, duration)
    gz = np.column_stack([
        0.5 + rng.normal(scale=gaze_noise, size=tg.size),
        0.5 + 0.3 * sweep(tg - offset) + rng.normal(scale=gaze_noise, size=tg.size),
    ])
    gz = np.clip(gz, 0.0, 1.0)
    still = np.column_stack([np.zeros(ta.size), np.zeros(ta.size), np.ones(ta.size)])
    tr = _grid(RSSI_RATE, duration)
    rssi = np.round(-60.0 + rng.normal(scale=1.0, size=tr.size))[:, None]
    return Recording(
        accel_rh=TimeSeries("accel_rh", ta, ACCEL_CHANNELS, acc, ACCEL_RATE),
        accel_lh=TimeSeries("accel_lh", ta, ACCEL_CHANNELS, still, ACCEL_RATE),
        rssi_rh=TimeSeries("rssi_rh", tr, ("rssi",), rssi, RSSI_RATE),
        rssi_lh=TimeSeries("rssi_lh", tr, ("rssi",), rssi.copy(), RSSI_RATE),
        gaze=TimeSeries("gaze", tg, GAZE_CHANNELS, gz, GAZE_RATE),
        markers=MarkerStream(((0.0, "sync"),)),
        meta={"session": "sync", "seed": str(seed), "injected_lag_gaze": repr(float(offset))},
    )


def two_regime_gaze(seed=0, duration=120.0, cycle_s=30.0, blink_rate=0.0):
    """Gaze alternating between a fixation regime and a uniform-scatter regime.

    Each cycle spends its first half fixating and its second half scattering.
    The fixation spread and the size of the scatter region drift from cycle
    to cycle, so entropy varies inside each regime as well as between them.
    Returns ``(series, fixation_intervals)``.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    t = _grid(GAZE_RATE, duration)
    xy = np.empty((t.size, 2))
    fixations = []
    n_cycles = int(math.ceil(duration / cycle_s))
    for c in range(n_cycles):
        c0 = c * cycle_s
        mid, c1 = c0 + cycle_s / 2, c0 + cycle_s
        fix = (t >= c0) & (t < mid)
        sc = (t >= mid) & (t < c1)
        std = 0.005 + 0.015 * c / max(n_cycles - 1, 1)
        centre = rng.uniform(0.3, 0.7, size=2)
        xy[fix] = centre + rng.normal(scale=std, size=(int(fix.sum()), 2))
        width = 0.3 + 0.7 * c / max(n_cycles - 1, 1)
        lo = rng.uniform(0, 1 - width, size=2)
        xy[sc] = lo + width * rng.random((int(sc.sum()), 2))
        fixations.append((c0, min(mid, duration)))
    xy = np.clip(xy, 0.0, 1.0)
    if blink_rate > 0:
        s = rng.exponential(1.0 / blink_rate)
        while s < duration:
            xy[(t >= s) & (t < s + 0.15)] = np.nan
            s += 0.15 + rng.exponential(1.0 / blink_rate)
        xy[[0, -1]] = xy[[1, -2]] if not np.isnan(xy[[1, -2]]).any() else 0.5
    return TimeSeries("gaze", t, GAZE_CHANNELS, xy, GAZE_RATE), fixations


# ------------------------------------------------------------------ output

GROUND_TRUTH_FIELDS = ["label", "t_start", "t_end", "speed_rh", "speed_lh",
                       "near_patient", "intermediate", "near_table", "low_entropy"]


def write_ground_truth(truth, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GROUND_TRUTH_FIELDS)
        for p in truth.phases:
            row = asdict(p)
            w.writerow([row["label"], *(format_float(row[k]) for k in GROUND_TRUTH_FIELDS[1:])])


def read_ground_truth(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return tuple(PhaseTarget(r["label"], *(float(r[k]) for k in GROUND_TRUTH_FIELDS[1:]))
                 for r in rows)


def write_session(recording, truth, out_dir):
    """Session directory plus ``ground_truth.csv``."""
    root = save_recording(recording, out_dir)
    write_ground_truth(truth, root / "ground_truth.csv")
    return root
