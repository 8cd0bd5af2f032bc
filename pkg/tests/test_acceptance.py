"""Acceptance criteria 1-10.

Each test records one ``ACCEPTANCE <n> PASS|FAIL`` line, printed in the
pytest terminal summary, and fails if the criterion does not hold.  Run
directly with ``python3 tests/test_acceptance.py`` for a plain summary.
"""

from __future__ import annotations

import itertools
import math
import sys
import tempfile
import time
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from behavigram import pipeline, synth
from behavigram.errors import InvertedCalibration
from behavigram.gaze import GazeGridSpec, joint_entropy, sliding_entropy
from behavigram.proximity import (
    CalibrationModel, ProximityState, calibrate, classify, discretize, fuse_rssi,
)
from behavigram.render import render_extended, render_simplified
from behavigram.signal import (
    SavGolSpec, bounded_velocity, savgol_coefficients, savgol_filter, velocity_magnitude,
)
from behavigram.streams import TimeSeries, load_recording, save_recording

RESULTS: dict[int, tuple[bool, str]] = {}


def report(n, ok, detail):
    RESULTS[n] = (ok, detail)
    return ok


def series(values, rate, channels, sid="s"):
    v = np.asarray(values, dtype=np.float64)
    v = v[:, None] if v.ndim == 1 else v
    return TimeSeries(sid, np.arange(v.shape[0]) / rate, channels, v, rate)


def dense_entropy(x, y, B):
    """Oracle: explicit B x B histogram of independently binned points."""
    hist = np.zeros((B, B))
    i = np.minimum((x * B).astype(int), B - 1)
    j = np.minimum((y * B).astype(int), B - 1)
    np.add.at(hist, (i, j), 1)
    p = hist[hist > 0] / hist.sum()
    return float(np.sum(p * np.log2(1.0 / p)))


# ---------------------------------------------------------------- criteria

def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst, n_windows = 0.0, 0
    # sliding windows over random traces, each window checked against the oracle
    while n_windows < 1000:
        B = int(rng.integers(1, 26))
        spec = GazeGridSpec(B, float(rng.choice([0.2, 0.5, 1.0, 2.0])), 0.2)
        n = int(rng.integers(200, 600))
        xy = rng.uniform(0, 1, size=(n, 2))
        # clustered traces exercise repeated cells
        if rng.random() < 0.5:
            xy = np.clip(rng.uniform(0.2, 0.8, 2) + rng.normal(0, 0.05, (n, 2)), 0, 1)
        g = series(xy, 50.0, ("gaze_x", "gaze_y"), "gaze")
        e = sliding_entropy(g, spec, min_valid=0.0)
        n_win = int(round(spec.window_s * 50))
        n_hop = int(round(spec.hop_s * 50))
        for k, H in enumerate(e.channel("H")):
            w = xy[k * n_hop:k * n_hop + n_win]
            worst = max(worst, abs(H - dense_entropy(w[:, 0], w[:, 1], B)))
            n_windows += 1
    # plus direct calls on random cell windows
    for _ in range(1000):
        B = int(rng.integers(1, 26))
        cells = rng.integers(0, B, size=(int(rng.integers(1, 400)), 2))
        worst = max(worst, abs(joint_entropy(cells) - dense_entropy(
            (cells[:, 0] + 0.5) / B, (cells[:, 1] + 0.5) / B, B)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 5.0
    return ok, f"entropy vs dense oracle: max err {worst:.1e} bits over {n_windows}+1000 windows, {dt:.2f} s"


def criterion_2():
    single = joint_entropy([(7, 7)] * 50)
    errs = {}
    for B in (10, 100):
        cells = list(itertools.product(range(B), range(B)))
        errs[B] = abs(joint_entropy(cells) - 2 * math.log2(B))
        # the same through the sliding window on a grid sweep
        pts = (np.array(cells, dtype=float) + 0.5) / B
        g = series(pts, 50.0, ("gaze_x", "gaze_y"), "gaze")
        e = sliding_entropy(g, GazeGridSpec(B, B * B / 50.0, B * B / 50.0))
        errs[B] = max(errs[B], float(np.max(np.abs(e.channel("H") - 2 * math.log2(B)))))
    fixed = sliding_entropy(series(np.full((500, 2), 0.5), 50.0, ("gaze_x", "gaze_y"))).channel("H")
    ok = single == 0.0 and np.all(fixed == 0.0) and all(v <= 1e-12 for v in errs.values())
    return ok, (f"single cell {single} bits; uniform B=10 err {errs[10]:.1e}, "
                f"B=100 err {errs[100]:.1e}")


def criterion_3():
    t0 = time.perf_counter()
    mins = []
    for seed in range(3):
        g, _ = synth.two_regime_gaze(seed=seed)
        _, rho = pipeline.sweep_matrix(g)
        mins.append(float(rho.min()))
    dt = time.perf_counter() - t0
    ok = min(mins) >= 0.8 and dt < 30.0
    return ok, (f"min pairwise Spearman over 25 settings = {min(mins):.3f} "
                f"(seeds 0-2: {', '.join(f'{m:.3f}' for m in mins)}), {dt:.2f} s")


def criterion_4():
    t0 = time.perf_counter()
    worst = 0.0
    for offset in (-0.1, 0.0, 0.05, 0.1):
        for seed in range(20):
            rec = synth.make_sync_scenario(offset, seed=seed)
            worst = max(worst, abs(pipeline.estimate_sync_lag(rec) - offset))
    dt = time.perf_counter() - t0
    ok = worst <= 0.02 + 1e-12 and dt < 10.0
    return ok, f"lag recovery max error {worst * 1000:.1f} ms over 80 runs, {dt:.2f} s"


def criterion_5():
    worst_poly = 0.0
    rng = np.random.default_rng(5)
    for w, p in ((5, 2), (7, 3), (11, 3), (11, 4), (15, 5), (21, 6)):
        x = np.linspace(-2, 2, 400)
        for deg in range(p + 1):
            y = np.polyval(rng.normal(size=deg + 1), x)
            out = savgol_filter(series(y, 40.0, ("v",)), SavGolSpec(w, p)).values[:, 0]
            m = w // 2
            worst_poly = max(worst_poly, float(np.max(np.abs(out[m:-m] - y[m:-m]))))
    k = savgol_coefficients(SavGolSpec(5, 2))
    ref = np.array([-3, 12, 17, 12, -3]) / 35
    kerr = float(np.max(np.abs(k - ref)))
    ok = worst_poly <= 1e-9 and kerr <= 1e-12
    return ok, f"polynomial reproduction err {worst_poly:.1e}; 5/2 kernel err {kerr:.1e}"


def criterion_6():
    rate, w = 40.0, 2 * np.pi
    t = np.arange(int(10 * rate)) / rate
    a = np.zeros((t.size, 3))
    a[:, 0] = w * np.cos(w * t)
    xyz = ("acc_x", "acc_y", "acc_z")
    v = velocity_magnitude(series(a, rate, xyz), leak=1.0).channel("speed")
    err = float(np.max(np.abs(v - np.abs(np.sin(w * t)))))
    rng = np.random.default_rng(6)
    bounded = 0
    for _ in range(100):
        a_max = float(rng.uniform(0.1, 30))
        leak = float(rng.uniform(0.5, 0.999))
        acc = rng.uniform(-a_max, a_max, size=(400, 3))
        vel = velocity_magnitude(series(acc, rate, xyz), leak=leak).channel("speed")
        # bound is per axis; the norm of three axes is within sqrt(3) of it
        bound = bounded_velocity(1 / rate, a_max, leak)
        bounded += bool(np.all(vel >= 0) and vel.max() <= math.sqrt(3) * bound * (1 + 1e-12))
    ok = err <= 0.01 and bounded == 100
    return ok, f"sine oracle max err {err:.4f} m/s; bounded on {bounded}/100 random inputs"


def criterion_7():
    r = lambda v: series(np.asarray(v, dtype=float), 10.0, ("rssi",))
    f = fuse_rssi(r([-60, np.nan, np.nan]), r([-70, -72, np.nan])).channel("rssi")
    fuse_ok = f[0] == -60 and f[1] == -72 and np.isnan(f[2])
    m = CalibrationModel(-50, -85, 3)
    states = discretize(r([-51, -84, -70, np.nan]), m).channel("state")
    band_ok = list(states) == [ProximityState.NEAR_PATIENT, ProximityState.NEAR_TABLE,
                               ProximityState.INTERMEDIATE, ProximityState.INTERMEDIATE]
    sweep = np.arange(-100.0, -29.999, 0.001)
    mono = all(np.all(np.diff(classify(sweep, mm).astype(int)) >= 0)
               for mm in (m, CalibrationModel(-45, -95, 1), CalibrationModel(-60, -72, 4)))
    try:
        calibrate(np.full(30, -80.0), np.full(30, -78.0))
        inverted = False
    except InvertedCalibration:
        inverted = True
    ok = fuse_ok and band_ok and mono and inverted
    return ok, (f"fuse cases {fuse_ok}; bands {band_ok}; monotone over -100..-30 dBm {mono}; "
                f"inversion rejected {inverted}")


def criterion_8():
    t0 = time.perf_counter()
    worst_rel, worst_zero, worst_frac, verdicts, n = 0.0, 0.0, 0.0, True, 0
    for variant in ("initial", "repeated"):
        for seed in range(3):
            rec, truth = synth.generate(synth.abcde_scenario(seed=seed, variant=variant))
            res = pipeline.analyze(rec)
            if [s.label for s in res.summaries] != [p.label for p in truth.phases]:
                return False, f"phase labels differ ({variant}, seed {seed})"
            for s, p in zip(res.summaries, truth.phases):
                for got, want in ((s.mean_speed_rh, p.speed_rh), (s.mean_speed_lh, p.speed_lh)):
                    if want == 0:
                        worst_zero = max(worst_zero, got)
                    else:
                        worst_rel = max(worst_rel, abs(got - want) / want)
                for got, want in ((s.frac_near_patient, p.near_patient),
                                  (s.frac_intermediate, p.intermediate),
                                  (s.frac_near_table, p.near_table),
                                  (s.low_entropy_fraction, p.low_entropy)):
                    worst_frac = max(worst_frac, abs(got - want))
                n += 1
            verdicts &= all(v.consistent for _, v in res.verdicts)
    dt = time.perf_counter() - t0
    ok = worst_rel <= 0.2 and worst_zero < 0.05 and worst_frac <= 0.1 and verdicts and dt < 20
    return ok, (f"{n} phases: speed rel err {worst_rel:.3f} (zero-target max {worst_zero:.3f} m/s), "
                f"fraction err {worst_frac:.3f}, all verdicts consistent {verdicts}, {dt:.2f} s")


def criterion_9():
    rec, _ = synth.generate(synth.abcde_scenario(seed=11))
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            res = pipeline.analyze(rec)
            out = pipeline.write_outputs(res, Path(tmp) / str(k))
            (out / "e.svg").write_text(render_extended(res))
            (out / "s.svg").write_text(render_simplified(res))
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    identical = outputs[0] == outputs[1]
    svg = outputs[0]["e.svg"].decode()
    root = ET.fromstring(svg)
    cls = lambda c: [e for e in root.iter() if e.get("class") == c]
    count_ok = (len(cls("bar-rh")) == int(np.sum(~np.isnan(res.velocity_rh.channel("speed"))))
                and len(cls("bar-lh")) == int(np.sum(~np.isnan(res.velocity_lh.channel("speed")))))
    # right-hand-only burst scene
    n = 400
    v = np.zeros(n)
    v[150:190] = np.hanning(40) * 2
    mk = lambda x, ch: series(x, 40.0, (ch,))
    scene = pipeline.AnalysisResult(
        "burst", mk(v, "speed"), mk(np.zeros(n), "speed"), mk(np.full(n, -55.0), "rssi"),
        mk(np.full(n, 2.0), "state"), CalibrationModel(-50, -85), None, None,
        type(res.mask)((), 0.0), (), (), (), res.config)
    broot = ET.fromstring(render_extended(scene))
    axis = float(next(e for e in broot.iter() if e.get("class") == "axis").get("y1"))
    rh = [e for e in broot.iter() if e.get("class") == "bar-rh" and float(e.get("height")) > 0]
    lh = [e for e in broot.iter() if e.get("class") == "bar-lh" and float(e.get("height")) > 0]
    below = bool(rh) and not lh and all(abs(float(e.get("y")) - axis) < 1e-9 for e in rh)
    ok = identical and count_ok and below
    return ok, (f"byte-identical CSV+SVG {identical} ({len(outputs[0])} files); "
                f"bar count = present samples {count_ok}; rh burst below axis only {below}")


def criterion_10():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        rec, truth = synth.generate(synth.abcde_scenario(seed=10, variant="repeated"))
        synth.write_session(rec, truth, tmp / "a")
        rec2, truth2 = synth.generate(synth.abcde_scenario(seed=10, variant="repeated"))
        synth.write_session(rec2, truth2, tmp / "b")
        files = sorted(p.name for p in (tmp / "a").iterdir())
        gen_exact = all((tmp / "a" / f).read_bytes() == (tmp / "b" / f).read_bytes()
                        for f in files)
        back = load_recording(tmp / "a")
        identity = back.markers == rec.markers and back.meta == rec.meta and all(
            np.array_equal(getattr(back, s).timestamps, getattr(rec, s).timestamps)
            and np.array_equal(getattr(back, s).values, getattr(rec, s).values, equal_nan=True)
            for s in rec.streams())
        save_recording(back, tmp / "c")
        resave = all((tmp / "a" / f).read_bytes() == (tmp / "c" / f).read_bytes()
                     for f in files if f != "ground_truth.csv")
    ok = gen_exact and identity and resave
    return ok, (f"load(save(r)) == r {identity}; re-save byte-exact {resave}; "
                f"generator byte-exact across runs {gen_exact}")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 11)}


@pytest.mark.parametrize("n", list(CRITERIA))
def test_acceptance(n):
    ok, detail = CRITERIA[n]()
    report(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, fn in CRITERIA.items():
        ok, detail = fn()
        failed += not report(n, ok, detail)
        print(f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
