"""Multimodal behavioural analytics: accelerometer, RSSI and gaze streams to
phase reports and behaviorgrams."""

from .config import PipelineConfig
from .errors import BehavigramError
from .pipeline import AnalysisResult, analyze, estimate_sync_lag, write_outputs
from .render import BehaviorgramSpec, render, render_extended, render_simplified
from .streams import MarkerStream, Recording, TimeSeries, load_recording, save_recording
from .synth import ScenarioSpec, abcde_scenario, generate

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult", "BehavigramError", "BehaviorgramSpec", "MarkerStream",
    "PipelineConfig", "Recording", "ScenarioSpec", "TimeSeries", "abcde_scenario",
    "analyze", "estimate_sync_lag", "generate", "load_recording", "render",
    "render_extended", "render_simplified", "save_recording", "write_outputs",
]
