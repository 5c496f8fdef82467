"""Pipeline configuration: defaults, file loading, validation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from . import fga, fps, losses
from .errors import ConfigError

# Reference settings for 512x512 inputs.
REFERENCE_DEFAULTS = {
    "input_size": 512,
    "window_size": fps.DEFAULT_WINDOW,
    "top_k": fps.DEFAULT_TOP_K,
    "points_per_window": fps.DEFAULT_POINTS_PER_EXTREMUM,  # t; 2t points per window
    "tau": fps.DEFAULT_TAU,
    "gate": fps.DEFAULT_GAMMA,
    "lambda": losses.DEFAULT_LAMBDA,
    "reduction": fga.DEFAULT_REDUCTION,
    "resolution_windows": dict(fps.RESOLUTION_WINDOWS),
}


@dataclass
class PipelineConfig:
    images: list = field(default_factory=list)
    coarse: list = field(default_factory=list)
    gt: list = field(default_factory=list)
    out: str = "freqprompt_out"
    window_size: int = fps.DEFAULT_WINDOW
    stride: int | None = None
    top_k: int = fps.DEFAULT_TOP_K
    points_per_window: int = fps.DEFAULT_POINTS_PER_EXTREMUM
    tau: float = fps.DEFAULT_TAU
    gate: float = fps.DEFAULT_GAMMA
    lam: float = losses.DEFAULT_LAMBDA
    soft_threshold: float = 0.0
    signed: bool = False
    noise: str | None = None
    sigma: float = 0.05
    seed: int = 0
    auto_window: bool = False
    demo: bool = False

    def validate(self) -> "PipelineConfig":
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau", f"must lie in (0, 1), got {self.tau}")
        if not 0.0 <= self.gate <= 1.0:
            raise ConfigError("gate", f"must lie in [0, 1], got {self.gate}")
        for key in ("top_k", "points_per_window", "window_size"):
            if getattr(self, key) < 1:
                raise ConfigError(key, f"must be >= 1, got {getattr(self, key)}")
        if self.stride is not None and self.stride < 1:
            raise ConfigError("stride", f"must be >= 1, got {self.stride}")
        if self.lam < 0:
            raise ConfigError("lambda", f"must be non-negative, got {self.lam}")
        if self.soft_threshold < 0:
            raise ConfigError("soft_threshold", f"must be non-negative, got {self.soft_threshold}")
        if self.sigma < 0:
            raise ConfigError("sigma", f"must be non-negative, got {self.sigma}")
        if self.noise not in (None, "gaussian", "speckle"):
            raise ConfigError("noise", f"must be gaussian or speckle, got {self.noise!r}")
        if 2 * self.points_per_window > self.window_size ** 2:
            raise ConfigError("points_per_window", "2t exceeds the window area")
        for key in ("coarse", "gt"):
            paths = getattr(self, key)
            if paths and len(paths) != len(self.images):
                raise ConfigError(key, f"expected {len(self.images)} paths, got {len(paths)}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


# config-file / flag spelling -> dataclass attribute
_KEYS = {f.name: f.name for f in fields(PipelineConfig)}
_KEYS["lambda"] = "lam"
_KEYS.pop("lam")


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then ``file_values``, then ``overrides`` (entries set to None are skipped)."""
    cfg = PipelineConfig()
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in _KEYS:
                raise ConfigError(key, "unknown setting")
            if value is None:
                continue
            setattr(cfg, _KEYS[key], value)
    return cfg.validate()


def load_config_file(path) -> dict:
    with open(path) as fh:
        values = json.load(fh)
    if not isinstance(values, dict):
        raise ConfigError("config", "file must hold a JSON object")
    return values
