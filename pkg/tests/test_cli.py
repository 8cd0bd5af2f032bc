import io
import shutil

import pytest

from behavigram import synth
from behavigram.cli import main
from behavigram.streams import save_recording


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(map(str, argv)), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture()
def session(tmp_path, abcde_session_dir):
    dst = tmp_path / "s"
    shutil.copytree(abcde_session_dir, dst)
    return dst


def test_validate_ok(session):
    code, out, _ = run("validate", session)
    assert code == 0
    rows = [l.split()[0] for l in out.splitlines()[2:]]
    assert rows[:5] == ["accel_rh", "accel_lh", "rssi_rh", "rssi_lh", "gaze"]
    assert rows[5] == "markers"


def test_validate_gaze_out_of_range(session):
    path = session / "gaze.csv"
    lines = path.read_text().split("\n")
    t = lines[7].split(",")[0]
    lines[7] = f"{t},1.3,0.2"
    path.write_text("\n".join(lines))
    code, _, err = run("validate", session)
    assert code == 1 and "gaze.csv:8" in err


def test_validate_missing_markers(session):
    (session / "markers.csv").unlink()
    code, _, err = run("validate", session)
    assert code == 1 and "missing required file" in err and "markers.csv" in err


def test_usage_errors():
    assert run()[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("analyze")[0] == 2
    assert run("render", "x", "--out", "y", "--variant", "3d")[0] == 2


def test_analyze_and_sweep(session, tmp_path):
    code, out, _ = run("analyze", session, "--out", tmp_path / "o", "--sweep")
    assert code == 0
    verdict_rows = [l for l in out.splitlines() if l.rstrip().endswith("consistent")]
    assert len(verdict_rows) == 5 and not any("inconsistent" in l for l in verdict_rows)
    matrix = (tmp_path / "o" / "robustness.csv").read_text().strip().split("\n")
    assert len(matrix) == 26


def test_analyze_without_calibration(session, tmp_path):
    path = session / "markers.csv"
    path.write_text("\n".join(l for l in path.read_text().split("\n") if "calib" not in l))
    code, _, err = run("analyze", session, "--out", tmp_path / "o")
    assert code == 1 and "no calibration source" in err


def test_analyze_config(session, tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[gaze]\nbinz = 3\n")
    assert run("analyze", session, "--out", tmp_path / "o", "--config", cfg)[0] == 1
    cfg.write_text("[phases]\nfocus_min = 0.99\n")
    code, out, _ = run("analyze", session, "--out", tmp_path / "o", "--config", cfg)
    assert code == 0 and "inconsistent" in out


def test_render_variants(session, tmp_path):
    code, out, _ = run("render", session, "--out", tmp_path / "r", "--variant", "both",
                       "--width", 800, "--t-start", 40, "--t-end", 200, "--no-labels")
    assert code == 0
    files = sorted(p.name for p in (tmp_path / "r").iterdir())
    assert files == ["abcde-initial_extended.svg", "abcde-initial_simplified.svg"]
    svg = (tmp_path / "r" / files[0]).read_text()
    assert 'width="800"' in svg and "phase-label" not in svg
    code, _, err = run("render", session, "--out", tmp_path / "r", "--t-start", 1e6)
    assert code == 1


def test_simulate_and_determinism(tmp_path):
    assert run("simulate", "--out", tmp_path / "a", "--seed", 3, "--variant", "repeated")[0] == 0
    assert run("simulate", "--out", tmp_path / "b", "--seed", 3, "--variant", "repeated")[0] == 0
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()
    assert (tmp_path / "a" / "ground_truth.csv").is_file()


def test_simulate_from_spec(tmp_path):
    import json
    spec = synth.abcde_scenario(seed=1).to_dict()
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    code, out, _ = run("simulate", "--spec", tmp_path / "spec.json", "--seed", 4,
                       "--out", tmp_path / "s")
    assert code == 0 and "5 phases" in out
    (tmp_path / "bad.json").write_text(json.dumps({"seed": 1, "phases": [{"label": "X"}]}))
    assert run("simulate", "--spec", tmp_path / "bad.json", "--out", tmp_path / "t")[0] == 1


def test_sync_command(tmp_path):
    save_recording(synth.make_sync_scenario(0.05, seed=2), tmp_path / "sync")
    code, out, _ = run("sync", tmp_path / "sync", "--out", tmp_path / "o", "--max-lag", 0.3)
    assert code == 0 and out.startswith("gaze lag: +0.0")
    lag = float((tmp_path / "o" / "lag.csv").read_text().split("\n")[1].split(",")[1])
    assert abs(lag - 0.05) <= 0.02
    assert (tmp_path / "o" / "aligned" / "gaze.csv").is_file()


def test_sync_without_marker(session, tmp_path):
    code, _, err = run("sync", session, "--out", tmp_path / "o")
    assert code == 1 and "sync" in err


def test_config_prints_defaults():
    code, out, _ = run("config")
    assert code == 0 and "[render]" in out
