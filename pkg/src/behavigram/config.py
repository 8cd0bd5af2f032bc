"""Pipeline configuration file.

An INI-style file with one section per stage.  Every key has a default;
unknown sections or keys are errors so typos never pass silently::

    [signal]
    savgol_window = 11
    savgol_order = 3
    baseline_s = 1.0
    half_life_s = 0.5
    max_gap_s = 0.2
    accel_rate = 40.0

    [proximity]
    margin = 3.0
    hysteresis = false
    hysteresis_samples = 3
    near_range =            # "t0,t1" seconds; overrides calib_near markers
    far_range =

    [gaze]
    bins = 100
    window_s = 5.0
    hop_s = 0.2
    min_valid = 0.5
    blink_max_s = 0.5
    spline_support = 4
    gaze_rate = 50.0

    [phases]
    low_activity_ratio = 0.25
    rest_speed = 0.05
    high_activity_ratio = 1.0
    focus_min = 0.5
    near_patient_min = 0.6
    min_transitions = 2
    alternating_min = 0.15
    alternating_max = 0.85
    few_movements_max = 0.5
    active_speed = 0.1
    min_dwell_s = 1.0

    [sync]
    rate = 100.0
    max_lag = 0.5
    accel = accel_rh

    [render]
    width = 1200
    height = 360
    colormap = amber
    entropy_height = 30
    labels = true
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .gaze import GazeGridSpec
from .phases import SignatureRules
from .signal import SavGolSpec


@dataclass(frozen=True)
class SignalConfig:
    savgol_window: int = 11
    savgol_order: int = 3
    baseline_s: float = 1.0
    half_life_s: float = 0.5
    max_gap_s: float = 0.2
    accel_rate: float = 40.0

    @property
    def savgol(self):
        return SavGolSpec(self.savgol_window, self.savgol_order)


@dataclass(frozen=True)
class ProximityConfig:
    margin: float = 3.0
    hysteresis: bool = False
    hysteresis_samples: int = 3
    near_range: str = ""
    far_range: str = ""

    @staticmethod
    def _range(text, name):
        if not text.strip():
            return None
        try:
            a, b = (float(x) for x in text.split(","))
        except ValueError:
            raise ConfigError(f"[proximity] {name}: expected 't0,t1'") from None
        if not a < b:
            raise ConfigError(f"[proximity] {name}: t0 must be < t1")
        return a, b

    @property
    def near(self):
        return self._range(self.near_range, "near_range")

    @property
    def far(self):
        return self._range(self.far_range, "far_range")


@dataclass(frozen=True)
class GazeConfig:
    bins: int = 100
    window_s: float = 5.0
    hop_s: float = 0.2
    min_valid: float = 0.5
    blink_max_s: float = 0.5
    spline_support: int = 4
    gaze_rate: float = 50.0

    @property
    def grid(self):
        return GazeGridSpec(self.bins, self.window_s, self.hop_s)


@dataclass(frozen=True)
class PhaseConfig:
    low_activity_ratio: float = 0.25
    rest_speed: float = 0.05
    high_activity_ratio: float = 1.0
    focus_min: float = 0.5
    near_patient_min: float = 0.6
    min_transitions: int = 2
    alternating_min: float = 0.15
    alternating_max: float = 0.85
    few_movements_max: float = 0.5
    active_speed: float = 0.1
    min_dwell_s: float = 1.0

    @property
    def rules(self):
        names = {f.name for f in fields(SignatureRules)}
        return SignatureRules(**{k: v for k, v in vars(self).items() if k in names})


@dataclass(frozen=True)
class SyncConfig:
    rate: float = 100.0
    max_lag: float = 0.5
    accel: str = "accel_rh"


@dataclass(frozen=True)
class RenderConfig:
    width: int = 1200
    height: int = 360
    colormap: str = "amber"
    entropy_height: int = 30
    labels: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    signal: SignalConfig = field(default_factory=SignalConfig)
    proximity: ProximityConfig = field(default_factory=ProximityConfig)
    gaze: GazeConfig = field(default_factory=GazeConfig)
    phases: PhaseConfig = field(default_factory=PhaseConfig)
    sync: SyncConfig = field(default_factory=SyncConfig)
    render: RenderConfig = field(default_factory=RenderConfig)

    @classmethod
    def from_text(cls, text, source="<config>"):
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                           interpolation=None)
        try:
            parser.read_string(text, source=str(source))
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        sections = {f.name: f for f in fields(cls)}
        cfg = cls()
        for name in parser.sections():
            if name not in sections:
                raise ConfigError(f"{source}: unknown section [{name}]")
            current = getattr(cfg, name)
            types = {f.name: type(getattr(current, f.name)) for f in fields(current)}
            updates = {}
            for key, raw in parser.items(name):
                if key not in types:
                    raise ConfigError(f"{source}: unknown key '{key}' in [{name}]")
                updates[key] = _convert(raw, types[key], f"{source}: [{name}] {key}")
            cfg = replace(cfg, **{name: replace(current, **updates)})
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_text(path.read_text(encoding="utf-8"), path)

    def to_text(self):
        lines = []
        for f in fields(self):
            lines.append(f"[{f.name}]")
            section = getattr(self, f.name)
            for g in fields(section):
                value = getattr(section, g.name)
                if isinstance(value, bool):
                    value = str(value).lower()
                lines.append(f"{g.name} = {value}")
            lines.append("")
        return "\n".join(lines)


def _convert(raw, typ, where):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {typ.__name__}") from None
    return raw
