"""
Experiment configuration read from a JSON document.

Sections: data, model, loss, train, eval, experiment. Every key is optional
and defaults to the values below; unknown keys are rejected with their
dotted path.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

from ..data.synthetic import SynthConfig
from ..exceptions import ConfigError, DataFileError, MTNetError
from ..losses import LossConfig
from ..network import NetworkConfig
from ..optim import RmsPropConfig
from ..trainer import TrainConfig

MODES = ("train", "evaluate", "ablate", "sample-efficiency", "sensitivity")
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class DataConfig:
    path: Optional[str] = None
    synth: SynthConfig = field(default_factory=SynthConfig)
    screen_missing: bool = False
    max_missing: float = 0.5
    waves_window: Optional[int] = None
    split_ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    split_seed: int = 0


@dataclass(frozen=True)
class EvalConfig:
    seeds: Tuple[int, ...] = (1, 2, 3, 4, 5)
    threshold: float = 0.5
    split: str = "test"

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("eval.seeds must list at least one seed")
        if self.split not in SPLITS:
            raise ConfigError(f"eval.split must be one of {SPLITS}, got {self.split!r}")


@dataclass(frozen=True)
class ExperimentSection:
    mode: Optional[str] = None
    fractions: Tuple[float, ...] = (0.125, 0.25, 0.5, 1.0)
    alpha_grid: Tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 5.0)
    beta_grid: Tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 5.0)
    workers: int = 1

    def __post_init__(self):
        if self.mode is not None and self.mode not in MODES:
            raise ConfigError(f"experiment.mode must be one of {MODES}, got {self.mode!r}")
        if not self.fractions or any(not 0.0 < f <= 1.0 for f in self.fractions):
            raise ConfigError(f"experiment.fractions must lie in (0, 1], got {self.fractions}")
        if self.workers < 1:
            raise ConfigError(f"experiment.workers must be positive, got {self.workers}")


TRAIN_KEYS = tuple(f.name for f in dataclasses.fields(TrainConfig) if f.name not in ("seed", "network", "loss"))
LOSS_KEYS = tuple(f.name for f in dataclasses.fields(LossConfig) if f.name != "center")


def _build(cls, doc, where, allowed=None, nested=None):
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    allowed = allowed or tuple(f.name for f in dataclasses.fields(cls))
    unknown = [k for k in doc if k not in allowed]
    if unknown:
        raise ConfigError(f"unknown key {where}.{unknown[0]}")
    kwargs = {}
    for key, value in doc.items():
        if nested and key in nested:
            kwargs[key] = _build(nested[key], value, f"{where}.{key}")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (MTNetError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid {where}: {e}") from e


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: NetworkConfig = field(default_factory=NetworkConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("the configuration must be a JSON object")
        sections = ("data", "model", "loss", "train", "eval", "experiment")
        unknown = [k for k in doc if k not in sections]
        if unknown:
            raise ConfigError(f"unknown key {unknown[0]}")
        model = _build(NetworkConfig, doc.get("model"), "model")
        loss = _build(LossConfig, doc.get("loss"), "loss", allowed=LOSS_KEYS)
        train = _build(TrainConfig, doc.get("train"), "train", allowed=TRAIN_KEYS,
                       nested={"optimizer": RmsPropConfig})
        return cls(
            data=_build(DataConfig, doc.get("data"), "data", nested={"synth": SynthConfig}),
            model=model,
            loss=loss,
            train=replace(train, network=model, loss=loss),
            eval=_build(EvalConfig, doc.get("eval"), "eval"),
            experiment=_build(ExperimentSection, doc.get("experiment"), "experiment"),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except OSError as e:
            raise DataFileError(f"cannot read config {path}: {e}") from e
        except ValueError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        return cls.from_dict(doc)

    def with_seeds(self, seeds) -> "ExperimentConfig":
        return replace(self, eval=replace(self.eval, seeds=tuple(seeds)))

    def train_config(self, seed: int, **overrides) -> TrainConfig:
        return replace(self.train, seed=int(seed), **overrides)

    def to_dict(self) -> dict:
        train = self.train.to_dict()
        for key in ("seed", "network", "loss"):
            train.pop(key)
        return {
            "data": dataclasses.asdict(self.data),
            "model": dataclasses.asdict(self.model),
            "loss": self.loss.settings(),
            "train": train,
            "eval": dataclasses.asdict(self.eval),
            "experiment": dataclasses.asdict(self.experiment),
        }
