"""``behavigram`` command line.

Exit codes: 0 success, 1 data or validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pipeline
from .config import PipelineConfig
from .errors import BehavigramError
from .phases import report_table
from .render import BehaviorgramSpec, render_extended, render_simplified
from .streams import align, load_recording, save_recording
from .synth import ScenarioSpec, abcde_scenario, generate, write_session


def _config(args):
    return PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()


def cmd_validate(args, out):
    rec = load_recording(args.session)
    print(f"session {args.session}: OK", file=out)
    print(f"{'stream':<10}{'samples':>9}{'rate_hz':>9}{'missing':>9}", file=out)
    for name, s in rec.streams().items():
        rate = 1.0 / float(np.median(np.diff(s.timestamps))) if len(s) > 1 else float("nan")
        missing = float(np.mean(np.isnan(s.values))) if len(s) else 0.0
        print(f"{name:<10}{len(s):>9d}{rate:>9.2f}{missing:>9.3f}", file=out)
    print(f"{'markers':<10}{len(rec.markers):>9d}{'':>9}{'':>9}", file=out)
    return 0


def cmd_sync(args, out):
    cfg = _config(args)
    rec = load_recording(args.session)
    max_lag = args.max_lag if args.max_lag is not None else cfg.sync.max_lag
    rate = args.rate if args.rate is not None else cfg.sync.rate
    lag = pipeline.estimate_sync_lag(rec, rate, max_lag, args.accel or cfg.sync.accel)
    aligned = align(rec, {"gaze": lag})
    out_dir = Path(args.out)
    save_recording(aligned, out_dir / "aligned")
    (out_dir / "lag.csv").write_text(f"stream,lag_s\ngaze,{lag!r}\n", encoding="utf-8")
    print(f"gaze lag: {lag:+.3f} s (positive: gaze recorded after accelerometer)", file=out)
    return 0


def cmd_analyze(args, out):
    cfg = _config(args)
    rec = load_recording(args.session)
    result = pipeline.analyze(rec, cfg)
    out_dir = pipeline.write_outputs(result, args.out)
    if result.summaries:
        print(report_table(result.summaries, result.verdicts, cfg.phases.rules), file=out, end="")
    else:
        print("no phase markers: phase report skipped", file=out)
    if args.sweep:
        labels, rho = pipeline.sweep_matrix(result.gaze, cfg.gaze.hop_s, cfg.gaze.min_valid)
        pipeline.write_sweep(labels, rho, out_dir / "robustness.csv")
        print(f"robustness sweep: min Spearman rho = {np.min(rho):.3f}", file=out)
    return 0


def cmd_render(args, out):
    cfg = _config(args)
    rec = load_recording(args.session)
    result = pipeline.analyze(rec, cfg)
    r = cfg.render
    t_range = None
    if args.t_start is not None or args.t_end is not None:
        t = result.timestamps
        t_range = (args.t_start if args.t_start is not None else float(t[0]),
                   args.t_end if args.t_end is not None else float(t[-1]))
    spec = BehaviorgramSpec(
        width=args.width or r.width, height=args.height or r.height, t_range=t_range,
        colormap=args.colormap or r.colormap, entropy_height=r.entropy_height,
        labels=r.labels and not args.no_labels)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = result.session
    variants = ("extended", "simplified") if args.variant == "both" else (args.variant,)
    for v in variants:
        fn = render_extended if v == "extended" else render_simplified
        path = out_dir / f"{name}_{v}.svg"
        path.write_text(fn(result, replace(spec, variant=v)), encoding="utf-8")
        print(f"wrote {path}", file=out)
    return 0


def cmd_simulate(args, out):
    if args.spec:
        spec = ScenarioSpec.load(args.spec)
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
    else:
        spec = abcde_scenario(args.seed or 0, args.variant)
    rec, truth = generate(spec)
    root = write_session(rec, truth, args.out)
    print(f"wrote session {root} ({len(truth.phases)} phases)", file=out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="behavigram", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a session directory")
    v.add_argument("session")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("sync", help="estimate gaze/accelerometer lag from a sync segment")
    s.add_argument("session")
    s.add_argument("--out", required=True)
    s.add_argument("--config")
    s.add_argument("--max-lag", type=float)
    s.add_argument("--rate", type=float)
    s.add_argument("--accel", choices=["accel_rh", "accel_lh"])
    s.set_defaults(func=cmd_sync)

    a = sub.add_parser("analyze", help="derived series and phase report")
    a.add_argument("session")
    a.add_argument("--out", required=True)
    a.add_argument("--config")
    a.add_argument("--sweep", action="store_true",
                   help="also write the bins x window robustness correlation matrix")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("render", help="write behaviorgram SVGs")
    r.add_argument("session")
    r.add_argument("--out", required=True)
    r.add_argument("--config")
    r.add_argument("--variant", choices=["extended", "simplified", "both"], default="both")
    r.add_argument("--width", type=int)
    r.add_argument("--height", type=int)
    r.add_argument("--t-start", type=float)
    r.add_argument("--t-end", type=float)
    r.add_argument("--colormap", choices=["amber", "blue", "green", "gray"])
    r.add_argument("--no-labels", action="store_true")
    r.set_defaults(func=cmd_render)

    m = sub.add_parser("simulate", help="generate a synthetic session")
    m.add_argument("--out", required=True)
    m.add_argument("--spec", help="scenario JSON; default is the built-in ABCDE plan")
    m.add_argument("--seed", type=int)
    m.add_argument("--variant", choices=["initial", "repeated"], default="initial")
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("config", help="print the default configuration file")
    c.set_defaults(func=lambda args, out: print(PipelineConfig().to_text(), file=out, end="") or 0)
    return p


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except BehavigramError as exc:
        print(f"error: {exc}", file=err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
