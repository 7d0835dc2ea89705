"""Experiment configuration: INI text with [model], [cocycle] and [experiment] sections."""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, fields

from .base import SuspensionModel
from .cocycle import CocycleField

EXPERIMENTS = {
    "E1": "spectrum",
    "E2": "bunching",
    "E3": "holonomy",
    "E4": "theta-scan",
    "E5": "su-breaking",
    "E6": "openness",
}
NAME_TO_CODE = {v: k for k, v in EXPERIMENTS.items()}

DEFAULT_ROTATION = "rotation 0.0 + 0.5*sin(1,0,0) + 0.4*cos(0,1,0) + 0.3*sin(0,0,1)"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSettings:
    name: str = "E1"
    n_iter: int = 2000
    n_samples: int = 100
    tol: float = 1e-10
    output: str = "out"
    # spectrum
    spectrum_n: int = 10000
    oracle_periods: str = "1 2 3 4 5"
    # bunching
    s_min: float = 0.30
    s_max: float = 0.70
    s_step: float = 0.02
    # holonomy
    n_pairs: int = 100
    n_holder_pairs: int = 1000
    holonomy_n_max: int = 200
    max_offset: float = 0.05
    # leaf and theta scan
    leaf_period: int = 5
    leaf_index: int = 0
    conjugation: float = 0.2
    theta_half_width: float = 0.5
    grid_size: int = 32
    circle_n: int = 2000
    # su-breaking
    n_transient: int = 100
    n_atoms: int = 200
    splitting_n: int = 200
    bump_time: float = 0.5
    bump_radius: float = 0.02
    orbit_window: int = 20
    sigma_eps: float = 1e-2
    homoclinic_window: int = 3
    loop_grid: int = 32
    loop_j: int = 1
    # openness
    n_perturbations: int = 20
    delta: float = 0.0
    delta_grid: str = "10 30 100 300"
    n_sweep: int = 5

    def __post_init__(self):
        code = NAME_TO_CODE.get(self.name, self.name)
        if code not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}")
        self.name = code
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type in ("int", "float") and (f.name.endswith("tol") or f.name.startswith("n_")):
                if v <= 0:
                    raise ConfigError(f"experiment.{f.name} must be positive")
        for key in ("s_step", "bump_radius", "sigma_eps", "max_offset", "circle_n", "grid_size"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"experiment.{key} must be positive")
        if self.delta < 0:
            raise ConfigError("experiment.delta must be non-negative (0 selects the default scale)")

    @classmethod
    def from_block(cls, block: dict) -> "ExperimentSettings":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in block.items():
            if key not in known:
                raise ConfigError(f"unknown key experiment.{key}")
            typ = known[key].type
            try:
                kwargs[key] = int(raw) if typ == "int" else float(raw) if typ == "float" else str(raw)
            except ValueError as exc:
                raise ConfigError(f"experiment.{key}: {exc}") from None
        return cls(**kwargs)

    def to_block(self) -> dict:
        return {f.name: repr(v) if isinstance(v, float) else str(v) for f in fields(self) for v in [getattr(self, f.name)]}

    def int_list(self, key: str) -> list[int]:
        return [int(v) for v in getattr(self, key).split()]

    def float_list(self, key: str) -> list[float]:
        return [float(v) for v in getattr(self, key).split()]


MODEL_KEYS = {"matrix", "roof", "seed"}
COCYCLE_FIXED = {"d", "alpha"}


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=lambda: {"matrix": "2 1 1 1", "roof": "1.0", "seed": "0"})
    cocycle: dict = field(default_factory=lambda: {"d": "1", "alpha": "1.0", "term0": DEFAULT_ROTATION})
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)

    def __post_init__(self):
        for key in self.model:
            if key not in MODEL_KEYS:
                raise ConfigError(f"unknown key model.{key}")
        for key in self.cocycle:
            if key not in COCYCLE_FIXED and not (key.startswith("term") and key[4:].isdigit()):
                raise ConfigError(f"unknown key cocycle.{key}")
        try:
            self.build_model()
            self.build_cocycle()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    @property
    def seed(self) -> int:
        try:
            return int(self.model.get("seed", 0))
        except ValueError:
            raise ConfigError("model.seed must be an integer") from None

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, model={**self.model, "seed": str(int(seed))})

    def with_experiment(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, experiment=dataclasses.replace(self.experiment, **changes))

    def build_model(self) -> SuspensionModel:
        return SuspensionModel.from_config(self.model)

    def build_cocycle(self, model: SuspensionModel | None = None) -> CocycleField:
        return CocycleField.from_config(model or self.build_model(), self.cocycle)

    # -- text -----------------------------------------------------------------------
    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        for sec in cp.sections():
            if sec not in ("model", "cocycle", "experiment"):
                raise ConfigError(f"unknown section [{sec}]")
        model = dict(cp["model"]) if cp.has_section("model") else None
        cocycle = dict(cp["cocycle"]) if cp.has_section("cocycle") else None
        exp = ExperimentSettings.from_block(dict(cp["experiment"]) if cp.has_section("experiment") else {})
        kwargs = {"experiment": exp}
        if model is not None:
            kwargs["model"] = model
        if cocycle is not None:
            kwargs["cocycle"] = cocycle
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def dumps(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["model"] = self.model
        cp["cocycle"] = self.cocycle
        cp["experiment"] = self.experiment.to_block()
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def echo(self) -> dict:
        return {"model": dict(self.model), "cocycle": dict(self.cocycle), "experiment": self.experiment.to_block()}
