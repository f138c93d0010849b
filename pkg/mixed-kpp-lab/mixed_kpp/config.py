"""
Run configuration: bundled defaults, a user TOML file and MIXKPP_* environment
variables, merged in that order and resolved into an immutable LabConfig.
"""
import copy
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
import toml

from .dynamics import ReactionForm, ReactionKPP, SolverConfig
from .errors import ConfigError, LabError
from .fronts import Regime
from .grid import Field, SymbolSpec, UniformGrid, make_grid
from .kernels import KernelKind
from .semigroup import WeightedNorm
from .utils import smoothed_indicator

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
DEFAULTS_FILE = DATA_DIR / "defaults.toml"
ENV_PREFIX = "MIXKPP"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def load_defaults() -> Dict[str, Dict[str, Any]]:
    return toml.load(DEFAULTS_FILE)


def _coerce(key: str, value: Any, default: Any) -> Any:
    """Converts value to the type of the default, accepting strings from the environment."""
    try:
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in _TRUE:
                return True
            if text in _FALSE:
                return False
            raise ValueError(value)
        if isinstance(default, int):
            if isinstance(value, bool) or isinstance(value, float):
                raise ValueError(value)
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
        if isinstance(default, list):
            if isinstance(value, str):
                value = [item for item in value.split(",") if item.strip()]
            if not isinstance(value, (list, tuple)):
                raise ValueError(value)
            return [float(item) for item in value]
        if not isinstance(value, str):
            raise ValueError(value)
        return value
    except (TypeError, ValueError):
        kind = type(default).__name__
        raise ConfigError(f"{key} expects type {kind}, got {value!r}") from None


def _merge(base: Dict[str, Dict[str, Any]], update: Mapping[str, Any], source: str) -> None:
    for section, values in update.items():
        if section not in base:
            raise ConfigError(f"unknown section [{section}] in {source}")
        if not isinstance(values, Mapping):
            raise ConfigError(f"[{section}] in {source} must be a table")
        for key, value in values.items():
            dotted = f"{section}.{key}"
            if key not in base[section]:
                raise ConfigError(f"unknown key {dotted} in {source}")
            base[section][key] = _coerce(dotted, value, base[section][key])


def _environment_overrides(defaults: Dict[str, Dict[str, Any]], environ: Mapping[str, str]) -> Dict[str, Dict[str, str]]:
    overrides: Dict[str, Dict[str, str]] = {}
    for section, values in defaults.items():
        for key in values:
            name = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
            if name in environ:
                overrides.setdefault(section, {})[key] = environ[name]
    return overrides


@dataclass(frozen=True)
class GridConfig:
    dim: int
    points: int
    half_width: float

    def build(self) -> UniformGrid:
        return make_grid(self.dim, self.points, self.half_width)


@dataclass(frozen=True)
class OperatorConfig:
    s: float
    regime: Regime
    gamma: float

    @property
    def spec(self) -> SymbolSpec:
        return self.regime.symbol(self.s)

    @property
    def weight(self) -> WeightedNorm:
        return WeightedNorm(self.gamma, self.s)


@dataclass(frozen=True)
class ReactionConfig:
    form: ReactionForm
    rate: float
    q: float

    def build(self) -> ReactionKPP:
        if self.form is ReactionForm.POWER:
            return ReactionKPP.power(self.rate, self.q)
        return ReactionKPP.logistic(self.rate)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    radius: float
    amplitude: float
    width: float
    thresholds: Tuple[float, ...]
    window: Optional[Tuple[float, float]]
    kernel_kind: KernelKind
    kernel_times: Tuple[float, ...]
    speed_max: float
    speed_count: int
    wave_widths: Tuple[float, ...]

    def initial_datum(self, grid: UniformGrid) -> Field:
        return smoothed_indicator(grid, self.radius, amplitude=self.amplitude, width=self.width)

    def speeds(self) -> np.ndarray:
        return np.linspace(0.0, self.speed_max, self.speed_count)


@dataclass(frozen=True)
class OutputConfig:
    out_dir: Path
    plots: bool


@dataclass(frozen=True)
class LabConfig:
    grid: GridConfig
    operator: OperatorConfig
    reaction: ReactionConfig
    solver: SolverConfig
    experiment: ExperimentConfig
    output: OutputConfig
    canonical: Dict[str, Dict[str, Any]] = field(compare=False, repr=False)

    @property
    def config_hash(self) -> str:
        return config_hash(self.canonical)


def config_hash(canonical: Mapping[str, Any]) -> str:
    text = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _enum(section: str, key: str, enum_type, value: str, exclude=()):
    choices = [member.value for member in enum_type if member not in exclude]
    if value not in choices:
        raise ConfigError(f"{section}.{key} must be one of {', '.join(choices)}, got {value!r}")
    return enum_type(value)


def _resolve(raw: Dict[str, Dict[str, Any]]) -> LabConfig:
    g = raw["grid"]
    if g["dim"] not in (1, 2):
        raise ConfigError(f"grid.dim must be 1 or 2, got {g['dim']}")
    n = g["points"]
    if n < 8 or n & (n - 1):
        raise ConfigError(f"grid.points must be a power of two >= 8, got {n}")
    if not g["half_width"] > 0:
        raise ConfigError(f"grid.half_width must be positive, got {g['half_width']}")
    grid = GridConfig(g["dim"], n, g["half_width"])

    o = raw["operator"]
    if not 0.0 < o["s"] < 1.0:
        raise ConfigError(f"operator.s must lie in (0, 1), got {o['s']}")
    if not 0.0 <= o["gamma"] < 2.0 * o["s"]:
        raise ConfigError(f"gamma must be < 2s (operator.gamma={o['gamma']}, 2s={2.0 * o['s']:g})")
    operator = OperatorConfig(o["s"], _enum("operator", "regime", Regime, o["regime"]), o["gamma"])

    r = raw["reaction"]
    form = _enum("reaction", "form", ReactionForm, r["form"], exclude=(ReactionForm.CUSTOM,))
    reaction = ReactionConfig(form, r["rate"], r["q"])
    try:
        kpp = reaction.build()
    except LabError as err:
        raise ConfigError(f"reaction: {err}") from None

    try:
        solver = SolverConfig(**raw["solver"])
        solver.validate(kpp)
    except ConfigError as err:
        raise ConfigError(f"solver: {err}") from None

    e = raw["experiment"]
    thresholds = tuple(e["thresholds"])
    if not thresholds or not all(0.0 < lam < 1.0 for lam in thresholds):
        raise ConfigError(f"experiment.thresholds must be nonempty and lie in (0, 1), got {list(thresholds)}")
    window = tuple(e["window"]) or None
    if window is not None and (len(window) != 2 or not window[0] < window[1]):
        raise ConfigError(f"experiment.window must be empty or [t0, t1] with t0 < t1, got {list(window)}")
    if not all(t > 0 for t in e["kernel_times"]):
        raise ConfigError(f"experiment.kernel_times must be positive, got {e['kernel_times']}")
    if e["speed_count"] < 2 or not e["speed_max"] > 0:
        raise ConfigError("experiment.speed_count must be >= 2 and experiment.speed_max positive")
    if not e["wave_widths"] or not all(w > 0 for w in e["wave_widths"]):
        raise ConfigError(f"experiment.wave_widths must be positive, got {e['wave_widths']}")
    if not (e["radius"] > 0 and 0.0 < e["amplitude"] <= 1.0 and e["width"] >= 0):
        raise ConfigError("experiment needs radius > 0, amplitude in (0, 1] and width >= 0")
    experiment = ExperimentConfig(
        seed=e["seed"],
        radius=e["radius"],
        amplitude=e["amplitude"],
        width=e["width"],
        thresholds=thresholds,
        window=window,
        kernel_kind=_enum("experiment", "kernel_kind", KernelKind, e["kernel_kind"]),
        kernel_times=tuple(e["kernel_times"]),
        speed_max=e["speed_max"],
        speed_count=e["speed_count"],
        wave_widths=tuple(e["wave_widths"]),
    )

    output = OutputConfig(Path(raw["output"]["out_dir"]), raw["output"]["plots"])
    return LabConfig(grid, operator, reaction, solver, experiment, output, canonical=raw)


def parse_config(
    path: Optional[os.PathLike] = None,
    environ: Optional[Mapping[str, str]] = None,
    overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> LabConfig:
    """
    Resolves defaults, then the TOML file at path, then MIXKPP_<SECTION>_<KEY>
    variables from environ, then explicit overrides (command-line flags).
    """
    raw = load_defaults()
    if path is not None:
        path = Path(path)
        try:
            user = toml.load(path)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        except toml.TomlDecodeError as err:
            raise ConfigError(f"config file {path} is not valid TOML: {err}") from None
        _merge(raw, user, str(path))
    environ = os.environ if environ is None else environ
    env = _environment_overrides(raw, environ)
    if env:
        logger.debug("environment overrides: %s", ", ".join(f"{s}.{k}" for s in sorted(env) for k in sorted(env[s])))
        _merge(raw, env, "the environment")
    if overrides:
        _merge(raw, overrides, "the command line")
    return _resolve(copy.deepcopy(raw))
