"""
Phase report for a simulated ABCDE examination
==============================================

The generator writes a session with the five phases of an initial ABCDE
assessment, each with its own hand activity, proximity and gaze behaviour.
The full pipeline then recovers per-phase features from the raw streams and
checks each phase against its expected signature.
"""

import tempfile
from pathlib import Path

from behavigram import pipeline, synth
from behavigram.phases import report_table
from behavigram.streams import load_recording

out = Path(tempfile.mkdtemp(prefix="abcde-"))

spec = synth.abcde_scenario(seed=0, variant="initial")
for plan in spec.phases:
    print(f"phase {plan.label:<4} {plan.duration:5.0f} s, {len(plan.episodes)} episode(s)")

rec, truth = synth.generate(spec)
synth.write_session(rec, truth, out / "session")

# Everything downstream works from the files, as the CLI would.
rec = load_recording(out / "session")
res = pipeline.analyze(rec)

cal = res.calibration
print(f"\ncalibration: near {cal.rssi_near:.0f} dBm, far {cal.rssi_far:.0f} dBm, "
      f"margin {cal.margin:g} dB")
print()
print(report_table(res.summaries, res.verdicts, res.config.phases.rules))

# Compare with what the generator intended.
print("phase   speed rh (got/want)   near patient (got/want)   low entropy (got/want)")
for s, p in zip(res.summaries, truth.phases):
    print(f"{s.label:<6} {s.mean_speed_rh:7.3f} / {p.speed_rh:5.3f}"
          f"      {s.frac_near_patient:5.2f} / {p.near_patient:4.2f}"
          f"            {s.low_entropy_fraction:5.2f} / {p.low_entropy:4.2f}")

pipeline.write_outputs(res, out / "analysis")
print(f"\nderived series written to {out / 'analysis'}")
