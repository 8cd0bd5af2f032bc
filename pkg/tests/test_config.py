import pytest

from behavigram import config as config_module
from behavigram.config import PipelineConfig
from behavigram.errors import ConfigError
from behavigram.phases import SignatureRules


def test_defaults_round_trip():
    cfg = PipelineConfig()
    assert PipelineConfig.from_text(cfg.to_text()) == cfg


def test_every_default_documented():
    doc = config_module.__doc__
    cfg = PipelineConfig()
    for section in ("signal", "proximity", "gaze", "phases", "sync", "render"):
        assert f"[{section}]" in doc
        for key in vars(getattr(cfg, section)):
            assert f"{key} =" in doc, key


def test_overrides_and_types():
    cfg = PipelineConfig.from_text(
        "[gaze]\nbins = 50\nwindow_s = 3\n[proximity]\nhysteresis = yes\n"
        "near_range = 0, 20  # seconds\n[phases]\nfocus_min = 0.7\n")
    assert cfg.gaze.grid.bins == 50 and cfg.gaze.window_s == 3.0
    assert cfg.proximity.hysteresis is True and cfg.proximity.near == (0.0, 20.0)
    assert cfg.proximity.far is None
    assert cfg.phases.rules == SignatureRules(focus_min=0.7)
    assert cfg.signal.savgol.window_len == 11


@pytest.mark.parametrize("text,match", [
    ("[gaze]\nbinz = 5\n", "unknown key"),
    ("[plot]\nx = 1\n", "unknown section"),
    ("[gaze]\nbins = many\n", "cannot parse"),
    ("[proximity]\nhysteresis = maybe\n", "cannot parse"),
    ("no section\n", "section"),
])
def test_bad_config(text, match):
    with pytest.raises(ConfigError, match=match):
        PipelineConfig.from_text(text)


def test_bad_range():
    cfg = PipelineConfig.from_text("[proximity]\nnear_range = 20,10\n")
    with pytest.raises(ConfigError):
        cfg.proximity.near


def test_load_missing(tmp_path):
    with pytest.raises(ConfigError):
        PipelineConfig.load(tmp_path / "nope.ini")
