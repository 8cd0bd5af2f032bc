"""End-to-end analysis of one session and its derived-file outputs."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gaze as gz
from .config import PipelineConfig
from .errors import NoCalibrationSource, NoPhaseMarkers, NoSyncSegment
from .phases import (
    match_signatures,
    phases_from_markers,
    report_csv,
    summarize_phase,
)
from .proximity import ProximityState, calibrate, discretize, fuse_rssi
from .signal import velocity_from_accel
from .streams import TimeSeries, estimate_lag, format_float, resample_uniform


@dataclass(frozen=True)
class AnalysisResult:
    session: str
    velocity_rh: TimeSeries
    velocity_lh: TimeSeries
    fused_rssi: TimeSeries
    proximity: TimeSeries
    calibration: object
    gaze: TimeSeries
    entropy: TimeSeries
    mask: object
    phases: tuple
    summaries: tuple
    verdicts: tuple
    config: PipelineConfig

    @property
    def timestamps(self):
        return self.velocity_rh.timestamps


def on_grid(series, grid, rate):
    """Values of a ``k / rate`` gridded series at ``grid`` (same spacing); NaN where absent."""
    k_src = np.rint(series.timestamps * rate).astype(np.int64)
    k_dst = np.rint(grid * rate).astype(np.int64)
    pos = np.searchsorted(k_src, k_dst)
    pos_c = np.clip(pos, 0, max(k_src.size - 1, 0))
    hit = (pos < k_src.size) & (k_src[pos_c] == k_dst)
    out = np.full((grid.size, len(series.channels)), np.nan)
    out[hit] = series.values[pos_c[hit]]
    return TimeSeries(series.stream_id, grid, series.channels, out, rate, series.attrs)


def _uniform(series, rate, max_gap_s):
    if series.is_uniform() and math.isclose(series.sample_interval(), 1.0 / rate, rel_tol=1e-6):
        if np.allclose(series.timestamps * rate, np.rint(series.timestamps * rate), atol=1e-6):
            return series
    return resample_uniform(series, rate, max_gap_s)


def _calibration_segments(recording, fused, cfg):
    t_end = float(fused.timestamps[-1]) + 1e-9
    near = cfg.proximity.near or next(iter(recording.markers.segments("calib_near", t_end)), None)
    far = cfg.proximity.far or next(iter(recording.markers.segments("calib_far", t_end)), None)
    if near is None or far is None:
        raise NoCalibrationSource(
            "no calibration source: need calib_near/calib_far markers or configured ranges")
    return fused.between(*near), fused.between(*far)


def analyze(recording, config=None):
    """Run the full analysis chain on a recording.

    Hand speed, fused RSSI and proximity share the accelerometer grid
    (``[signal] accel_rate``); gaze entropy is computed on its own grid.
    """
    cfg = config or PipelineConfig()
    s = cfg.signal
    rate = s.accel_rate
    v_rh = velocity_from_accel(recording.accel_rh, s.savgol, s.baseline_s, s.half_life_s,
                               s.max_gap_s, rate)
    v_lh = velocity_from_accel(recording.accel_lh, s.savgol, s.baseline_s, s.half_life_s,
                               s.max_gap_s, rate)
    k0 = max(np.rint(v_rh.timestamps[0] * rate), np.rint(v_lh.timestamps[0] * rate))
    k1 = min(np.rint(v_rh.timestamps[-1] * rate), np.rint(v_lh.timestamps[-1] * rate))
    grid = np.arange(k0, k1 + 1) / rate
    v_rh = on_grid(v_rh, grid, rate)
    v_lh = on_grid(v_lh, grid, rate)

    rssi_rh = on_grid(resample_uniform(recording.rssi_rh, rate, s.max_gap_s), grid, rate)
    rssi_lh = on_grid(resample_uniform(recording.rssi_lh, rate, s.max_gap_s), grid, rate)
    fused = fuse_rssi(rssi_rh, rssi_lh)
    near, far = _calibration_segments(recording, fused, cfg)
    model = calibrate(near, far, cfg.proximity.margin)
    prox = discretize(fused, model, cfg.proximity.hysteresis, cfg.proximity.hysteresis_samples)

    g = cfg.gaze
    gaze = _uniform(recording.gaze, g.gaze_rate, s.max_gap_s)
    gaze = gz.impute_blinks(gaze, g.blink_max_s, g.spline_support)
    entropy = gz.sliding_entropy(gaze, g.grid, g.min_valid)
    mask = gz.low_entropy_mask(entropy, g.hop_s)

    span = (float(grid[0]), float(grid[-1]) + 1.0 / rate)
    try:
        phases = tuple(phases_from_markers(recording.markers, span))
    except NoPhaseMarkers:
        phases = ()
    summaries = tuple(
        summarize_phase(a, v_rh, v_lh, prox, mask, recording.markers,
                        cfg.phases.active_speed, cfg.phases.min_dwell_s)
        for a in phases)
    verdicts = tuple(match_signatures(list(summaries), cfg.phases.rules)) if summaries else ()
    session = recording.meta.get("session", "session")
    return AnalysisResult(session, v_rh, v_lh, fused, prox, model, gaze, entropy, mask,
                          phases, summaries, verdicts, cfg)


def estimate_sync_lag(recording, rate=100.0, max_lag=0.5, accel="accel_rh"):
    """Gaze-vs-accelerometer lag from the ``sync`` marked segment.

    Correlates ``acc_x`` of the head-worn accelerometer with ``gaze_y``;
    positive values mean gaze is recorded later than the accelerometer.
    """
    t_end = recording.span[1] + 1e-9
    segs = recording.markers.segments("sync", t_end)
    if not segs:
        raise NoSyncSegment("no 'sync' marker in session")
    t0, t1 = segs[0]
    a = getattr(recording, accel).select("acc_x").between(t0, t1)
    b = recording.gaze.select("gaze_y").between(t0, t1)
    a = resample_uniform(a, rate, max_gap_s=0.2)
    b = resample_uniform(b, rate, max_gap_s=0.2)
    return estimate_lag(a, b, max_lag)


# ----------------------------------------------------------------- outputs


def _write_csv(path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_outputs(result, out_dir):
    """Derived series and the phase report as CSV, plus ``analysis.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = result.timestamps.tolist()
    f = format_float
    _write_csv(out / "velocity.csv", ["t", "speed_rh", "speed_lh"],
               ([f(a), f(b), f(c)] for a, b, c in zip(
                   t, result.velocity_rh.values[:, 0].tolist(),
                   result.velocity_lh.values[:, 0].tolist())))
    _write_csv(out / "rssi_fused.csv", ["t", "rssi"],
               ([f(a), f(b)] for a, b in zip(t, result.fused_rssi.values[:, 0].tolist())))
    _write_csv(out / "proximity.csv", ["t", "state"],
               ([f(a), ProximityState(int(s)).slug] for a, s in zip(
                   t, result.proximity.values[:, 0].tolist())))
    e = result.entropy
    _write_csv(out / "entropy.csv", ["t", "H", "valid_fraction"],
               ([f(a), f(b), f(c)] for a, b, c in zip(
                   e.timestamps.tolist(), e.values[:, 0].tolist(), e.values[:, 1].tolist())))
    _write_csv(out / "low_entropy.csv", ["t_start", "t_end"],
               ([f(a), f(b)] for a, b in result.mask.intervals))
    if result.summaries:
        (out / "phases.csv").write_text(report_csv(result.summaries, result.verdicts),
                                        encoding="utf-8")
    c = result.calibration
    info = {
        "session": result.session,
        "calibration": {"rssi_near": c.rssi_near, "rssi_far": c.rssi_far, "margin": c.margin},
        "entropy_threshold_bits": result.mask.threshold,
        "velocity": {"leak": result.velocity_rh.attrs.get("leak"),
                     "method": result.velocity_rh.attrs.get("velocity"),
                     "edge_samples": result.velocity_rh.attrs.get("edge_samples")},
        "entropy": {k: result.entropy.attrs[k] for k in ("bins", "window_s", "hop_s", "min_valid")},
        "config": result.config.to_text(),
    }
    (out / "analysis.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return out


def sweep_matrix(gaze, hop_s=0.2, min_valid=0.5):
    """Labels and Spearman matrix of the bins x window robustness sweep."""
    settings, _, matrix = gz.robustness_sweep(gaze, hop_s=hop_s, min_valid=min_valid)
    rho = gz.rank_correlation_matrix(matrix)
    labels = [f"B{b}_w{w:g}" for b, w in settings]
    return labels, rho


def write_sweep(labels, rho, path):
    _write_csv(path, ["setting", *labels],
               ([lab, *(format_float(float(x)) for x in row)] for lab, row in zip(labels, rho)))
