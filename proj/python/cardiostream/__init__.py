"""Streaming heart-rate estimation over synchronized audio and video."""

import json

from . import _core
from ._core import __version__, band_peak, capture_info, metrics, pos_pulse

__all__ = [
    "__version__",
    "band_peak",
    "bench",
    "capture_info",
    "metrics",
    "pos_pulse",
    "run",
    "synth_capture",
]


def _stringify(options):
    """Flat config keys are parsed from text; coerce python values."""
    out = {}
    for key, value in (options or {}).items():
        if isinstance(value, bool):
            out[key] = "true" if value else "false"
        else:
            out[key] = str(value)
    return out


def synth_capture(path, options=None):
    """Write a synthetic capture file (keys like "duration_s", "video.fps")."""
    _core.synth_capture(str(path), _stringify(options))


def run(options=None):
    """Process a capture or live synthesis; returns the report with parsed stats."""
    report = _core.run(_stringify(options))
    report["stats"] = json.loads(report.pop("stats_json"))
    return report


def bench(options=None):
    """run() with pacing forced off, for throughput measurement."""
    report = _core.bench(_stringify(options))
    report["stats"] = json.loads(report.pop("stats_json"))
    return report
