"""RSSI fusion, near/far calibration and three-state proximity."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import GridMismatch, InsufficientCalibration, InvertedCalibration
from .streams import TimeSeries

MIN_CALIBRATION_SAMPLES = 20


class ProximityState(IntEnum):
    """Ordered so that a larger value means closer to the patient."""

    NEAR_TABLE = 0
    INTERMEDIATE = 1
    NEAR_PATIENT = 2

    @property
    def slug(self):
        return self.name.lower()


@dataclass(frozen=True)
class CalibrationModel:
    rssi_near: float
    rssi_far: float
    margin: float = 3.0

    def __post_init__(self):
        if not self.margin > 0:
            raise ValueError("margin must be positive")
        if not self.rssi_near - self.rssi_far > 2 * self.margin:
            raise InvertedCalibration(
                f"near level {self.rssi_near} dBm must exceed far level {self.rssi_far} dBm "
                f"by more than 2 x margin ({2 * self.margin} dB)")

    @property
    def near_threshold(self):
        return self.rssi_near - self.margin

    @property
    def far_threshold(self):
        return self.rssi_far + self.margin


def _check_same_grid(a, b):
    if len(a) != len(b) or not np.allclose(a.timestamps, b.timestamps, rtol=0, atol=1e-9):
        raise GridMismatch(f"{a.stream_id} and {b.stream_id} are not on the same grid")


def fuse_rssi(rh, lh):
    """Per-sample maximum of the two hands; a single present value passes through."""
    _check_same_grid(rh, lh)
    fused = np.fmax(rh.values[:, 0], lh.values[:, 0])
    return TimeSeries("rssi_fused", rh.timestamps, ("rssi",), fused[:, None],
                      rh.nominal_rate, {"units": "dBm", "fusion": "max"})


def calibrate(near_segment, far_segment, margin=3.0):
    """Median near/far levels from two calibration segments."""
    levels = []
    for name, seg in (("near", near_segment), ("far", far_segment)):
        v = np.asarray(getattr(seg, "values", seg), dtype=np.float64).reshape(-1)
        v = v[~np.isnan(v)]
        if v.size < MIN_CALIBRATION_SAMPLES:
            raise InsufficientCalibration(
                f"{name} segment has {v.size} present samples, need {MIN_CALIBRATION_SAMPLES}")
        levels.append(float(np.median(v)))
    return CalibrationModel(levels[0], levels[1], margin)


def classify(rssi, model):
    """Vectorised state codes (``ProximityState`` values) for dBm readings."""
    rssi = np.asarray(rssi, dtype=np.float64)
    state = np.full(rssi.shape, int(ProximityState.INTERMEDIATE), dtype=np.int8)
    with np.errstate(invalid="ignore"):
        state[rssi >= model.near_threshold] = ProximityState.NEAR_PATIENT
        state[rssi <= model.far_threshold] = ProximityState.NEAR_TABLE
    return state


def apply_hysteresis(states, n_confirm=3):
    """Only switch state after ``n_confirm`` consecutive samples agree on the new one."""
    states = np.asarray(states)
    out = states.copy()
    if states.size == 0:
        return out
    current = states[0]
    run_state, run_len = current, 0
    for k, s in enumerate(states):
        if s == run_state:
            run_len += 1
        else:
            run_state, run_len = s, 1
        if s != current and run_len >= n_confirm:
            current = s
        out[k] = current
    return out


def discretize(fused, model, hysteresis=False, n_confirm=3):
    """Map fused RSSI onto proximity states.

    NearPatient when ``rssi >= rssi_near - margin``, NearTable when
    ``rssi <= rssi_far + margin``, Intermediate otherwise and wherever the
    reading is missing.  Returns a single-channel series of state codes.
    """
    state = classify(fused.values[:, 0], model)
    if hysteresis:
        state = apply_hysteresis(state, n_confirm)
    return TimeSeries("proximity", fused.timestamps, ("state",),
                      state.astype(np.float64)[:, None], fused.nominal_rate,
                      {"encoding": "0=near_table,1=intermediate,2=near_patient"})


def state_codes(proximity):
    return proximity.values[:, 0].astype(np.int8)
