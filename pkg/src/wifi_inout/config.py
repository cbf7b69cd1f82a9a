"""Pipeline configuration and the flat key = value config file format.

Defaults reproduce the reference setup: eps 0.22, min_pts 1, the
standard feature hop ranges, classification threshold 0.5, and
indoor-favoring tie breaks.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Dict, Optional, Tuple

from .errors import ConfigError, FormatError
from .features import BASELINE_RANGES, FeatureRanges
from .learner import GBM, RANDOM_FOREST

VARIANTS = ("graph", "clusters", "fingerprints")


def parse_kv_file(path) -> Dict[str, str]:
    """Read `key = value` lines; '#' starts a comment; blanks ignored."""
    out: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _convert(raw: str, typ: str):
    if typ == "str":
        return raw
    if raw.lower() in ("none", "null", ""):
        return None
    try:
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
    except ValueError as e:
        raise ConfigError(f"bad {typ} value {raw!r}") from e
    raise ConfigError(f"unknown config type {typ}")


@dataclass(frozen=True)
class PipelineConfig:
    eps: float = 0.22
    min_pts: int = 1
    max_gap_ms: Optional[int] = None
    learner: str = "rf"            # rf | gbm
    seed: int = 0
    threshold: float = 0.5
    tie_rule: str = "indoor"       # indoor | drop
    variant: str = "graph"         # graph | clusters | fingerprints
    # feature hop ranges (graph variant)
    neighbors_d_min: int = 2
    neighbors_d_max: int = 6
    power_d_min: int = 0
    power_d_max: int = 4
    aps_d_min: int = 0
    aps_d_max: int = 4
    fps_d_min: int = 0
    fps_d_max: int = 4
    # learner hyperparameters
    n_trees: int = 100
    rf_max_features: Optional[int] = None
    rf_max_depth: Optional[int] = None
    min_leaf: int = 1
    gbm_rounds: int = 100
    gbm_depth: int = 3
    learning_rate: float = 0.1

    def validate(self) -> "PipelineConfig":
        if not 0.0 <= self.eps < 2.0:
            raise ConfigError(f"eps must be in [0, 2), got {self.eps}")
        if self.min_pts < 1:
            raise ConfigError(f"min_pts must be >= 1, got {self.min_pts}")
        if self.learner not in ("rf", "gbm"):
            raise ConfigError(f"learner must be rf or gbm, got {self.learner!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.tie_rule not in ("indoor", "drop"):
            raise ConfigError(f"tie_rule must be indoor or drop, got {self.tie_rule!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        for lo, hi, name in (
            (self.neighbors_d_min, self.neighbors_d_max, "neighbors_d"),
            (self.power_d_min, self.power_d_max, "power_d"),
            (self.aps_d_min, self.aps_d_max, "aps_d"),
            (self.fps_d_min, self.fps_d_max, "fps_d"),
        ):
            if lo < 0 or hi < lo:
                raise ConfigError(f"bad {name} range [{lo}, {hi}]")
        return self

    def learner_kind(self) -> str:
        return RANDOM_FOREST if self.learner == "rf" else GBM

    def hyperparameters(self) -> Dict:
        if self.learner == "rf":
            return {
                "n_trees": self.n_trees,
                "max_features": self.rf_max_features,
                "min_leaf": self.min_leaf,
                "max_depth": self.rf_max_depth,
            }
        return {
            "n_rounds": self.gbm_rounds,
            "depth": self.gbm_depth,
            "learning_rate": self.learning_rate,
            "min_leaf": self.min_leaf,
        }

    def feature_ranges(self) -> FeatureRanges:
        if self.variant in ("clusters", "fingerprints"):
            return BASELINE_RANGES
        return FeatureRanges(
            neighbors=(self.neighbors_d_min, self.neighbors_d_max),
            power=(self.power_d_min, self.power_d_max),
            aps=(self.aps_d_min, self.aps_d_max),
            fps=(self.fps_d_min, self.fps_d_max),
        )


_FIELD_TYPES = {
    "eps": "float", "min_pts": "int", "max_gap_ms": "int",
    "learner": "str", "seed": "int", "threshold": "float",
    "tie_rule": "str", "variant": "str",
    "neighbors_d_min": "int", "neighbors_d_max": "int",
    "power_d_min": "int", "power_d_max": "int",
    "aps_d_min": "int", "aps_d_max": "int",
    "fps_d_min": "int", "fps_d_max": "int",
    "n_trees": "int", "rf_max_features": "int", "rf_max_depth": "int",
    "min_leaf": "int", "gbm_rounds": "int", "gbm_depth": "int",
    "learning_rate": "float",
}


def config_from_file(path) -> PipelineConfig:
    return config_with_overrides(PipelineConfig(), parse_kv_file(path))


def config_with_overrides(base: PipelineConfig, overrides: Dict[str, str]) -> PipelineConfig:
    known = {f.name for f in fields(PipelineConfig)}
    updates = {}
    for key, raw in overrides.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _convert(raw, _FIELD_TYPES[key])
    return replace(base, **updates).validate()
