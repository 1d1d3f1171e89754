"""Experiment configuration: INI files with strict key checking.

Sections: [data], [predictor], [training], [bench]. CLI flags override
file values; unknown sections or keys are rejected so a typo cannot
silently fall back to a default.
"""
from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field

from .data import GeneratorConfig
from .predictor import PredictorConfig, SEPlacement
from .training import TrainPlan


class ConfigError(ValueError):
    pass


def _float_pair(s: str):
    parts = [float(v) for v in s.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"expected two comma-separated numbers, got {s!r}")
    return tuple(parts)


_DATA_KEYS = {
    "room": _float_pair,
    "n_ap": int,
    "n_trajectories": int,
    "steps": int,
    "speed_range": _float_pair,
    "step_seconds": float,
    "path_loss_exponent": float,
    "ref_gain_db": float,
    "shadowing_sigma_db": float,
    "decorrelation_distance": float,
    "diversity": float,
    "n_anchors": int,
    "master_seed": int,
    "window": int,
}

_PREDICTOR_KEYS = {
    "forward_hidden": int,
    "backward_hidden": int,
    "placement": str,
}

_TRAINING_KEYS = {
    "strategy": str,
    "lr": float,
    "batch": int,
    "min_iterations": int,
    "max_iterations": int,
    "eval_interval": int,
    "patience": int,
    "alpha": float,
    "val_cap": int,
}

_BENCH_KEYS = {
    "batch": int,
    "repetitions": int,
    "warmup": int,
}


@dataclass
class ExperimentConfig:
    data: dict = field(default_factory=dict)
    predictor: dict = field(default_factory=dict)
    training: dict = field(default_factory=dict)
    bench: dict = field(default_factory=dict)
    window: int = 19
    seed: int = 0

    def generator_config(self) -> GeneratorConfig:
        kwargs = {k: v for k, v in self.data.items() if k != "window"}
        kwargs.setdefault("master_seed", self.seed)
        return GeneratorConfig(**kwargs)

    def predictor_config(self) -> PredictorConfig:
        f = self.predictor.get("forward_hidden", 64)
        b = self.predictor.get("backward_hidden", 128)
        placement = SEPlacement.parse(self.predictor.get("placement", "before"))
        return PredictorConfig(f, b, placement)

    def train_plan(self, strategy: str | None = None) -> TrainPlan:
        kwargs = dict(self.training)
        if strategy is not None:
            kwargs["strategy"] = strategy
        kwargs.setdefault("seed", self.seed)
        return TrainPlan(**kwargs)

    def digest(self) -> str:
        blob = io.StringIO()
        for section in ("data", "predictor", "training", "bench"):
            for k in sorted(getattr(self, section)):
                blob.write(f"{section}.{k}={getattr(self, section)[k]!r}\n")
        blob.write(f"window={self.window}\nseed={self.seed}\n")
        return hashlib.sha256(blob.getvalue().encode()).hexdigest()[:16]


_SECTION_SCHEMAS = {
    "data": _DATA_KEYS,
    "predictor": _PREDICTOR_KEYS,
    "training": _TRAINING_KEYS,
    "bench": _BENCH_KEYS,
}


def load_config(path=None, overrides: dict | None = None,
                seed: int | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is not None:
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in cp.sections():
            if section not in _SECTION_SCHEMAS:
                raise ConfigError(f"unknown config section [{section}]")
            schema = _SECTION_SCHEMAS[section]
            for key, raw in cp[section].items():
                if key not in schema:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                try:
                    value = schema[key](raw)
                except (ValueError, TypeError) as e:
                    raise ConfigError(f"[{section}] {key}: {e}") from None
                if section == "data" and key == "window":
                    cfg.window = value
                else:
                    getattr(cfg, section)[key] = value
    if overrides:
        for dotted, value in overrides.items():
            section, key = dotted.split(".", 1)
            if section not in _SECTION_SCHEMAS or key not in _SECTION_SCHEMAS[section]:
                raise ConfigError(f"unknown override {dotted!r}")
            getattr(cfg, section)[key] = value
    if seed is not None:
        cfg.seed = seed
        cfg.data.setdefault("master_seed", seed)
    return cfg
