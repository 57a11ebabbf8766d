"""Run configuration: one JSON file describes a whole deployment.

Validation errors always name the offending key so a bad config fails
with something actionable instead of a stack trace from deep inside the
pipeline.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

SYNTHETIC_RIG = "synthetic-default"


class ConfigError(ValueError):
    """Bad or missing configuration; message names the field or path."""


@dataclass(frozen=True)
class RunConfig:
    scene: str = None                 # path to a scene JSON, None = built-in
    rig: str = SYNTHETIC_RIG          # calibration JSON path or the default tag
    detector: str = "oracle"          # "oracle" | "blob"
    detector_cfg: dict = field(default_factory=dict)
    kp: float = 0.5
    deadband_deg: float = 1.0
    loss_timeout_frames: int = 30
    port: int = 8080
    command_port: int = 8600          # 0 disables the serial TCP mirror
    fps: float = 15.0
    jpeg_quality: int = 80
    zoom: float = 1.0
    seed: int = 1
    depth_enabled: bool = True

    def __post_init__(self):
        if self.detector not in ("oracle", "blob"):
            raise ConfigError(f"detector: unknown choice {self.detector!r}")
        if not 0.0 < self.kp <= 1.0:
            raise ConfigError("kp: must lie in (0, 1]")
        if self.deadband_deg < 0:
            raise ConfigError("deadband_deg: must be non-negative")
        if self.loss_timeout_frames < 1:
            raise ConfigError("loss_timeout_frames: must be >= 1")
        if not 0 <= self.port <= 65535:
            raise ConfigError("port: out of range")
        if not 0 <= self.command_port <= 65535:
            raise ConfigError("command_port: out of range")
        if not (math.isfinite(self.fps) and 0.5 <= self.fps <= 60):
            raise ConfigError("fps: must lie in [0.5, 60]")
        if not 1 <= self.jpeg_quality <= 100:
            raise ConfigError("jpeg_quality: must lie in [1, 100]")
        if not (math.isfinite(self.zoom) and self.zoom >= 1.0):
            raise ConfigError("zoom: must be >= 1.0")


_FIELD_TYPES = {
    "scene": str,
    "rig": str,
    "detector": str,
    "detector_cfg": dict,
    "kp": (int, float),
    "deadband_deg": (int, float),
    "loss_timeout_frames": int,
    "port": int,
    "command_port": int,
    "fps": (int, float),
    "jpeg_quality": int,
    "zoom": (int, float),
    "seed": int,
    "depth_enabled": bool,
}


def load_config(path) -> RunConfig:
    """Read a config JSON, checking types, key names, and referenced files."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    for key, value in raw.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{key}: unknown configuration key")
        expected = _FIELD_TYPES[key]
        if not isinstance(value, expected) or isinstance(value, bool) != (
                expected is bool):
            raise ConfigError(f"{key}: expected {expected}, got {value!r}")

    cfg = RunConfig(**raw)

    # referenced files must exist, resolved against the config's directory
    base = path.parent
    if cfg.scene is not None and not (base / cfg.scene).is_file() \
            and not Path(cfg.scene).is_file():
        raise ConfigError(f"scene: file not found: {cfg.scene}")
    if cfg.rig != SYNTHETIC_RIG and not (base / cfg.rig).is_file() \
            and not Path(cfg.rig).is_file():
        raise ConfigError(f"rig: file not found: {cfg.rig}")
    return cfg


def resolve_path(cfg_path, value):
    """A path inside a config resolves against the config file first."""
    candidate = Path(cfg_path).parent / value
    return candidate if candidate.is_file() else Path(value)
