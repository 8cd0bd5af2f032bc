import numpy as np
import pytest

from behavigram import pipeline, synth
from behavigram.streams import TimeSeries


def uniform(values, rate, t0=0.0, channels=None, stream_id="s"):
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    t = t0 + np.arange(v.shape[0]) / rate
    channels = channels or tuple(f"c{i}" for i in range(v.shape[1]))
    return TimeSeries(stream_id, t, channels, v, rate)


@pytest.fixture(scope="session")
def abcde():
    """Generated four-phase session, its ground truth and the analysis."""
    rec, truth = synth.generate(synth.abcde_scenario(seed=0))
    return rec, truth, pipeline.analyze(rec)


@pytest.fixture(scope="session")
def abcde_session_dir(tmp_path_factory):
    rec, truth = synth.generate(synth.abcde_scenario(seed=0))
    return synth.write_session(rec, truth, tmp_path_factory.mktemp("abcde") / "session")


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion that ran in this session."""
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {detail}")
