"""Sectioned key-value run configuration with typed literal values.

Example::

    [pssa]
    embed_dim = 15
    threshold = 0.99

    [windowing]
    horizons = [1, 2, 3]

Values are Python literals (numbers, strings in quotes, lists, True/False,
None). Unknown sections or keys are rejected.
"""

from __future__ import annotations

import ast
import configparser
import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from . import __version__
from .forecast import MODES, HorizonForecaster, ModelKind, ModelSpec
from .pssa import PssaConfig
from .synthetic import SyntheticConfig
from .trainer import TrainConfig


class ConfigError(ValueError):
    """Invalid configuration; maps to a usage error."""


@dataclass
class DataSection:
    path: str | None = None
    column: str | int = 0
    site: str | None = None


@dataclass
class PssaSection:
    embed_dim: int = 15
    threshold: float = 0.99


@dataclass
class ModelSection:
    kind: str = "TCN_GRU"
    channels: int = 10
    kernel_size: int = 2
    dilations: list = field(default_factory=lambda: [1, 2, 4])
    n_blocks: int = 1
    tcn_hidden: int = 10
    hidden: int = 64
    mlp_widths: list = field(default_factory=lambda: [20, 20, 20, 1])
    mlp_activation: str = "tanh"


@dataclass
class TrainSection:
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    normalize: bool = True


@dataclass
class SplitSection:
    n_test: int = 200


@dataclass
class WindowingSection:
    dim: int = 20
    delay: int = 1
    horizons: list = field(default_factory=lambda: [1, 2, 3])


@dataclass
class RunSection:
    mode: str = "paper"
    denoise: bool = True
    out: str = "out"


@dataclass
class ExperimentSection:
    models: list = field(default_factory=lambda: ["TCN_GRU", "GRU_ONLY", "RNN_ONLY", "MLP"])
    sites: list = field(default_factory=list)
    synthetic_seeds: list = field(default_factory=lambda: [7])


SyntheticSection = dataclasses.make_dataclass(
    "SyntheticSection",
    [(f.name, f.type, field(default=f.default)) for f in fields(SyntheticConfig)],
)

SECTIONS = {
    "data": DataSection,
    "synthetic": SyntheticSection,
    "pssa": PssaSection,
    "model": ModelSection,
    "train": TrainSection,
    "split": SplitSection,
    "windowing": WindowingSection,
    "run": RunSection,
    "experiment": ExperimentSection,
}


@dataclass
class CliConfig:
    data: DataSection = field(default_factory=DataSection)
    synthetic: Any = field(default_factory=SyntheticSection)
    pssa: PssaSection = field(default_factory=PssaSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    split: SplitSection = field(default_factory=SplitSection)
    windowing: WindowingSection = field(default_factory=WindowingSection)
    run: RunSection = field(default_factory=RunSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    # -- typed views (each validates) ------------------------------------

    def pssa_config(self) -> PssaConfig:
        return PssaConfig(self.pssa.embed_dim, self.pssa.threshold)

    def model_spec(self, kind: str | None = None) -> ModelSpec:
        m = self.model
        return ModelSpec(
            ModelKind(kind or m.kind), m.channels, m.kernel_size, tuple(m.dilations),
            m.n_blocks, m.tcn_hidden, m.hidden, tuple(m.mlp_widths), m.mlp_activation,
        )

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(epochs=t.epochs, batch_size=t.batch_size, learning_rate=t.learning_rate, seed=t.seed)

    def synthetic_config(self, seed: int | None = None) -> SyntheticConfig:
        values = dataclasses.asdict(self.synthetic)
        if seed is not None:
            values["seed"] = seed
        return SyntheticConfig(**values)

    def forecaster(self, kind: str | None = None) -> HorizonForecaster:
        w = self.windowing
        return HorizonForecaster(
            self.model_spec(kind), self.pssa_config(), self.train_config(),
            window_dim=w.dim, delay=w.delay, horizons=w.horizons,
            mode=self.run.mode, normalize=self.train.normalize, denoise=self.run.denoise,
        )

    def validate(self) -> None:
        """Build every typed object once so bad values fail before any work."""
        try:
            for section, cls in SECTIONS.items():
                _check_types(section, getattr(self, section), cls)
            if self.run.mode not in MODES:
                raise ValueError(f"run.mode must be one of {MODES}")
            if self.split.n_test < 1:
                raise ValueError("split.n_test must be >= 1")
            self.synthetic_config()
            self.forecaster()
            for kind in self.experiment.models:
                self.model_spec(kind)
            if not self.experiment.models:
                raise ValueError("experiment.models must not be empty")
            for seed in self.experiment.synthetic_seeds:
                self.synthetic_config(seed)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    # -- serialization ----------------------------------------------------

    def to_text(self, extra: dict[str, dict[str, Any]] | None = None) -> str:
        lines = []
        for section in SECTIONS:
            lines.append(f"[{section}]")
            for key, value in dataclasses.asdict(getattr(self, section)).items():
                lines.append(f"{key} = {value!r}")
            lines.append("")
        for section, values in (extra or {}).items():
            lines.append(f"[{section}]")
            lines += [f"{k} = {v!r}" for k, v in values.items()]
            lines.append("")
        return "\n".join(lines)

    def set(self, dotted: str, value: Any) -> None:
        section, _, key = dotted.partition(".")
        if section not in SECTIONS or not key:
            raise ConfigError(f"unknown config key {dotted!r}")
        obj = getattr(self, section)
        if key not in {f.name for f in fields(obj)}:
            raise ConfigError(f"unknown config key {dotted!r}")
        setattr(obj, key, value)


def _check_types(section: str, obj, cls) -> None:
    defaults = cls()
    for f in fields(obj):
        value = getattr(obj, f.name)
        default = getattr(defaults, f.name)
        if value is None or default is None:
            continue
        expected = type(default)
        if f.name == "column":
            ok = isinstance(value, (str, int)) and not isinstance(value, bool)
        elif expected is bool:
            ok = isinstance(value, bool)
        elif expected is int:
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif expected is float:
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        elif expected is list:
            ok = isinstance(value, (list, tuple))
        else:
            ok = isinstance(value, expected)
        if not ok:
            raise ConfigError(f"{section}.{f.name}: expected {expected.__name__}, got {value!r}")


def parse_literal(text: str, where: str) -> Any:
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        raise ConfigError(f"{where}: cannot parse value {text!r} (strings need quotes)") from None


IGNORED_SECTIONS = {"manifest"}


def load_config(path) -> CliConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = CliConfig()
    for section in parser.sections():
        if section in IGNORED_SECTIONS:
            continue
        if section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            cfg.set(f"{section}.{key}", parse_literal(raw, f"{section}.{key}"))
    return cfg


def manifest_text(cfg: CliConfig, command: str) -> str:
    return cfg.to_text({"manifest": {"command": command, "version": __version__, "seed": cfg.train.seed, "mode": cfg.run.mode}})
