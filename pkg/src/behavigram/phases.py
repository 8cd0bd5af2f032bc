"""Marker-driven phase sequencing, per-phase summaries and signature checks.

Phases are opened by markers labelled ``phase:<label>`` and closed by the
next phase marker, by an ``end`` (or ``phase:end``) marker, or by the end of
the recording.  Summaries are validated against a rule table describing the
behaviour expected in each phase of the ABCDE examination; this is a
consistency report, not a classifier.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import EmptyInterval, NoPhaseMarkers
from .proximity import ProximityState

PHASE_PREFIX = "phase:"
END_LABELS = ("end", "phase:end")


@dataclass(frozen=True)
class PhaseAnnotation:
    label: str
    t_start: float
    t_end: float

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError(f"phase {self.label}: t_start must precede t_end")

    @property
    def duration(self):
        return self.t_end - self.t_start


def phases_from_markers(markers, recording_span):
    """Partition ``[first phase marker, end]`` into labelled phases."""
    t1 = float(recording_span[1])
    events = [(t, lab) for t, lab in markers.events
              if lab.startswith(PHASE_PREFIX) or lab in END_LABELS]
    if not any(lab.startswith(PHASE_PREFIX) and lab not in END_LABELS for _, lab in events):
        raise NoPhaseMarkers("no 'phase:<label>' markers found")
    out = []
    for k, (t, lab) in enumerate(events):
        if lab in END_LABELS or t >= t1:
            continue
        end = events[k + 1][0] if k + 1 < len(events) else t1
        end = min(end, t1)
        if end > t:
            out.append(PhaseAnnotation(lab[len(PHASE_PREFIX):], t, end))
    if not out:
        raise NoPhaseMarkers("phase markers do not open any non-empty interval")
    return out


@dataclass(frozen=True)
class PhaseSummary:
    label: str
    t_start: float
    t_end: float
    duration: float
    mean_speed_rh: float
    mean_speed_lh: float
    p95_speed_rh: float
    p95_speed_lh: float
    frac_near_patient: float
    frac_intermediate: float
    frac_near_table: float
    low_entropy_fraction: float
    marker_count: int
    transitions: int
    active_fraction: float
    coverage: float

    @property
    def mean_speed(self):
        """Mean of the two hands' mean speeds."""
        return float(np.nanmean([self.mean_speed_rh, self.mean_speed_lh]))


def _in_interval(t, a):
    return (t >= a.t_start) & (t < a.t_end)


def count_transitions(states, t, min_dwell_s=1.0):
    """State changes after discarding dwell runs shorter than ``min_dwell_s``.

    Short runs are RSSI chatter around a band edge; they are absorbed into
    the preceding run.
    """
    states = np.asarray(states)
    if states.size < 2:
        return 0
    cut = np.flatnonzero(states[1:] != states[:-1]) + 1
    starts = np.r_[0, cut]
    stops = np.r_[cut, states.size]
    dt = float(np.median(np.diff(t))) if t.size > 1 else 0.0
    kept = [states[a] for a, b in zip(starts, stops) if (b - a) * dt >= min_dwell_s]
    return int(sum(1 for u, v in zip(kept, kept[1:]) if u != v))


def summarize_phase(annotation, velocity_rh, velocity_lh, proximity, mask, markers=None,
                    active_speed=0.1, min_dwell_s=1.0):
    """Feature summary of one annotated interval ``[t_start, t_end)``.

    Speeds are averaged over present samples.  Proximity and low-entropy
    fractions are taken over all proximity-grid samples in the interval, so
    missing data counts towards coverage (missing RSSI is Intermediate;
    time outside valid entropy windows is not low-entropy).
    ``active_fraction`` is the share of samples where the faster hand
    exceeds ``active_speed`` m/s; ``transitions`` counts proximity changes
    between dwell runs of at least ``min_dwell_s``.
    """
    sel_r = _in_interval(velocity_rh.timestamps, annotation)
    sel_l = _in_interval(velocity_lh.timestamps, annotation)
    sel_p = _in_interval(proximity.timestamps, annotation)
    if not (sel_r.any() or sel_l.any() or sel_p.any()):
        raise EmptyInterval(f"phase {annotation.label}: no samples in interval")

    def stats(v):
        v = v[~np.isnan(v)]
        if v.size == 0:
            return np.nan, np.nan
        return float(np.mean(v)), float(np.percentile(v, 95))

    vr = velocity_rh.values[sel_r, 0]
    vl = velocity_lh.values[sel_l, 0]
    mean_r, p95_r = stats(vr)
    mean_l, p95_l = stats(vl)

    states = proximity.values[sel_p, 0]
    n = max(states.size, 1)
    frac = {s: float(np.sum(states == s)) / n for s in ProximityState}
    transitions = count_transitions(states, proximity.timestamps[sel_p], min_dwell_s)
    low = float(np.mean(mask.contains(proximity.timestamps[sel_p]))) if states.size else 0.0

    if vr.size == vl.size and vr.size:
        both = np.fmax(vr, vl)
        present = ~np.isnan(both)
        active = float(np.mean(both[present] > active_speed)) if present.any() else 0.0
        coverage = float(np.mean(~(np.isnan(vr) | np.isnan(vl))))
    else:
        active = 0.0
        coverage = 0.0

    n_markers = 0
    if markers is not None:
        n_markers = int(np.sum(_in_interval(markers.times, annotation))) if len(markers) else 0

    return PhaseSummary(
        label=annotation.label, t_start=annotation.t_start, t_end=annotation.t_end,
        duration=annotation.duration,
        mean_speed_rh=mean_r, mean_speed_lh=mean_l, p95_speed_rh=p95_r, p95_speed_lh=p95_l,
        frac_near_patient=frac[ProximityState.NEAR_PATIENT],
        frac_intermediate=frac[ProximityState.INTERMEDIATE],
        frac_near_table=frac[ProximityState.NEAR_TABLE],
        low_entropy_fraction=low, marker_count=n_markers, transitions=transitions,
        active_fraction=active, coverage=coverage,
    )


# ------------------------------------------------------------- signatures


@dataclass(frozen=True)
class SignatureRules:
    """Thresholds of the phase-signature table.

    Hand activity is judged relative to the duration-weighted mean speed of
    all phases in the session.  Below ``rest_speed`` (m/s) the hands count as
    still whatever the session mean, so a session of quiet phases does not
    grade itself against its own noise floor.
    """

    low_activity_ratio: float = 0.25
    rest_speed: float = 0.05
    high_activity_ratio: float = 1.0
    focus_min: float = 0.5
    near_patient_min: float = 0.6
    min_transitions: int = 2
    alternating_min: float = 0.15
    alternating_max: float = 0.85
    few_movements_max: float = 0.5


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    passed: bool


@dataclass(frozen=True)
class SignatureVerdict:
    label: str
    consistent: bool | None
    checks: tuple

    @property
    def text(self):
        if self.consistent is None:
            return "no signature"
        return "consistent" if self.consistent else "inconsistent"


def global_mean_speed(summaries):
    w = np.array([s.duration for s in summaries])
    v = np.array([s.mean_speed for s in summaries])
    ok = ~np.isnan(v)
    if not ok.any() or w[ok].sum() == 0:
        return float("nan")
    return float(np.sum(w[ok] * v[ok]) / np.sum(w[ok]))


def _checks_for(label, s, g, r):
    speed = s.mean_speed
    still = speed < max(r.low_activity_ratio * g, r.rest_speed)
    low = ("low hand activity", speed, still)
    not_high = ("hand activity below session mean", speed, speed < r.high_activity_ratio * g)
    high = ("high hand activity", speed, speed >= r.high_activity_ratio * g)
    some = ("some hand activity", speed, not still)
    focus = ("high visual focus", s.low_entropy_fraction,
             s.low_entropy_fraction >= r.focus_min)
    near = ("close to patient", s.frac_near_patient, s.frac_near_patient >= r.near_patient_min)
    moves = ("changes in proximity", s.transitions, s.transitions >= r.min_transitions)
    alternating = ("alternating hand activity", s.active_fraction,
                   r.alternating_min <= s.active_fraction <= r.alternating_max)
    few = ("few short movement periods", s.active_fraction,
           s.active_fraction <= r.few_movements_max)
    table = {
        "I": (high, near, focus),
        "II": (not_high, focus),
        "IIa": (low, focus),
        "IIb": (some, not_high, focus),
        "III": (moves, alternating, focus),
        "IV": (moves, not_high, few, focus),
    }
    return table.get(label)


def match_signatures(summaries, rules=SignatureRules()):
    """Check each phase summary against the signature expected for its label.

    Returns ``[(label, SignatureVerdict), ...]`` in input order.  Labels
    without a signature get ``consistent=None``.
    """
    g = global_mean_speed(summaries)
    out = []
    for s in summaries:
        spec = _checks_for(s.label, s, g, rules)
        if spec is None:
            out.append((s.label, SignatureVerdict(s.label, None, ())))
            continue
        checks = tuple(Check(name, float(value), bool(ok)) for name, value, ok in spec)
        out.append((s.label, SignatureVerdict(s.label, all(c.passed for c in checks), checks)))
    return out


# ---------------------------------------------------------------- reports


SUMMARY_FIELDS = [f.name for f in fields(PhaseSummary)]


def _fmt(x):
    if isinstance(x, float):
        return "" if np.isnan(x) else repr(x)
    return str(x)


def report_csv(summaries, verdicts):
    """One row per phase: every summary field plus the verdict."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*SUMMARY_FIELDS, "verdict", "failed_checks"])
    for s, (_, v) in zip(summaries, verdicts):
        row = asdict(s)
        failed = ";".join(c.name for c in v.checks if not c.passed)
        w.writerow([*(_fmt(row[k]) for k in SUMMARY_FIELDS), v.text, failed])
    return buf.getvalue()


def report_table(summaries, verdicts, rules=SignatureRules()):
    """Fixed-width text table of the main features and verdicts."""
    head = (f"{'phase':<6}{'start':>8}{'end':>8}{'v_rh':>7}{'v_lh':>7}"
            f"{'near_p':>8}{'inter':>7}{'near_t':>8}{'lowH':>6}{'trans':>6}  verdict")
    lines = [head, "-" * len(head)]
    for s, (_, v) in zip(summaries, verdicts):
        lines.append(
            f"{s.label:<6}{s.t_start:8.1f}{s.t_end:8.1f}{s.mean_speed_rh:7.3f}"
            f"{s.mean_speed_lh:7.3f}{s.frac_near_patient:8.2f}{s.frac_intermediate:7.2f}"
            f"{s.frac_near_table:8.2f}{s.low_entropy_fraction:6.2f}{s.transitions:6d}  {v.text}")
        for c in v.checks:
            if not c.passed:
                lines.append(f"{'':6}  failed: {c.name} ({c.value:.3f})")
    lines.append(
        f"rules: low activity < {rules.low_activity_ratio:g} x session mean speed; "
        f"focus >= {rules.focus_min:g}; near patient >= {rules.near_patient_min:g}; "
        f"transitions >= {rules.min_transitions}")
    lines.append("note: IIa and IIb differ only in hand-activity level.")
    return "\n".join(lines) + "\n"
