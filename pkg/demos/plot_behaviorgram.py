"""
Drawing behaviorgrams
=====================

A behaviorgram stacks the session on one time axis: position lanes on top,
the two hands' speeds mirrored around a central axis (left hand up, right
hand down, colour = RSSI strength), low-entropy gaze below, and phase
boundaries across everything.  The simplified variant folds this into one
track.  Here we draw both for an initial and a repeated assessment.
"""

import tempfile
import xml.etree.ElementTree as ET
from pathlib import Path

from behavigram import pipeline, synth
from behavigram.render import BehaviorgramSpec, render_extended, render_simplified

out = Path(tempfile.mkdtemp(prefix="behaviorgram-"))

for variant in ("initial", "repeated"):
    rec, truth = synth.generate(synth.abcde_scenario(seed=0, variant=variant))
    res = pipeline.analyze(rec)

    ext = render_extended(res, BehaviorgramSpec(width=1600, colormap="amber"))
    simple = render_simplified(res, BehaviorgramSpec(width=1600, variant="simplified"))
    (out / f"{variant}_extended.svg").write_text(ext)
    (out / f"{variant}_simplified.svg").write_text(simple)

    root = ET.fromstring(ext)
    counts = {}
    for e in root.iter():
        c = e.get("class")
        if c:
            counts[c] = counts.get(c, 0) + 1
    print(f"{variant}: {len(truth.phases)} phases, "
          f"{counts.get('bar-rh', 0)} right-hand bars, {counts.get('bar-lh', 0)} left-hand bars, "
          f"{counts.get('pos-patient', 0)} patient runs, {counts.get('low-entropy', 0)} low-entropy marks")

# A two-minute window of the repeated session.
zoom = render_extended(res, BehaviorgramSpec(t_range=(40.0, 160.0)))
(out / "repeated_zoom.svg").write_text(zoom)

# Rendering is a pure function of the data, so the bytes never change.
assert render_extended(res) == render_extended(res)
print(f"\nSVG files in {out}:")
for p in sorted(out.iterdir()):
    print(f"  {p.name}  {p.stat().st_size // 1024} KiB")
