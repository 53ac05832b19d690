"""Run configuration: TOML parsing, validation and serialisation.

A configuration file has five sections::

    [model]
    scenario = "mms2d"          # or "channel"
    element = "taylor_hood"     # or "mini"
    rho = 3.0
    nu = 1.0
    kappa = 1.0
    darcy = 1.0                 # or a table {matrix = 1000.0, channel = 1.0}
    forchheimer = 10.0
    kappa_sweep = []            # extra kappa values for `simulate`
    inflow = [0.2, 0.0]         # channel scenario: velocity on the left side

    [time]
    T = 0.001
    dt = 0.0001
    initial_data = "interpolate"        # or "discrete_problem"

    [mesh]
    levels = [4, 8, 16, 32, 64]         # `simulate` uses the last level
    channels = [[-1.0, 1.0, -0.1, 0.1], ...]   # channel scenario only

    [newton]
    tol = 1e-6
    maxit = 25

    [output]
    directory = "out"
    vtk = true

Missing keys take the defaults of `RunConfig`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import tomli
import tomli_w

SCENARIOS = ("mms2d", "channel")
ELEMENTS = ("taylor_hood", "mini")
INITIAL_MODES = ("interpolate", "discrete_problem")
REGION_KEYS = ("matrix", "channel")

_DEFAULT_CHANNELS = ((-1.0, 1.0, -0.1, 0.1), (-0.55, -0.45, -1.0, 1.0), (0.45, 0.55, -1.0, 1.0))


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "mms2d"
    element: str = "taylor_hood"
    rho: float = 3.0
    nu: float = 1.0
    kappa: float = 1.0
    darcy: dict = field(default_factory=lambda: {"matrix": 1.0, "channel": 1.0})
    forchheimer: dict = field(default_factory=lambda: {"matrix": 10.0, "channel": 10.0})
    kappa_sweep: tuple[float, ...] = ()
    inflow: tuple[float, float] = (0.2, 0.0)
    T: float = 0.001
    dt: float = 1e-4
    initial_data: str = "interpolate"
    levels: tuple[int, ...] = (4, 8, 16, 32, 64)
    channels: tuple[tuple[float, float, float, float], ...] = _DEFAULT_CHANNELS
    tol: float = 1e-6
    maxit: int = 25
    directory: str = "out"
    vtk: bool = True

    def __post_init__(self):
        self.validate()

    # -- validation -------------------------------------------------------
    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"model.scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.element not in ELEMENTS:
            raise ConfigError(f"model.element must be one of {ELEMENTS}, got {self.element!r}")
        if self.initial_data not in INITIAL_MODES:
            raise ConfigError(f"time.initial_data must be one of {INITIAL_MODES}, got {self.initial_data!r}")
        try:
            self.model_params()
            for k in self.kappa_sweep:
                self.model_params(kappa=k)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.levels or any(n < 1 for n in self.levels):
            raise ConfigError("mesh.levels must be a non-empty list of positive integers")
        if any(a >= b for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError(f"mesh.levels must be strictly increasing, got {list(self.levels)}")
        if not (self.T > 0 and self.dt > 0):
            raise ConfigError("time.T and time.dt must be positive")
        n = round(self.T / self.dt)
        if n < 1 or abs(n * self.dt - self.T) > 1e-12 * self.T:
            raise ConfigError(f"time.dt={self.dt} does not divide time.T={self.T}")
        if not self.tol > 0 or self.maxit < 1:
            raise ConfigError("newton.tol must be positive and newton.maxit at least 1")
        if len(self.inflow) != 2:
            raise ConfigError("model.inflow must have two components")
        for r in self.channels:
            if len(r) != 4 or not (r[0] < r[1] and r[2] < r[3]):
                raise ConfigError(f"mesh.channels entries must be [x0, x1, y0, y1], got {list(r)}")

    @property
    def steps(self) -> int:
        return round(self.T / self.dt)

    def model_params(self, kappa: float | None = None):
        from .assembly import ModelParams
        from .mesh import CHANNEL, MATRIX

        ids = {"matrix": MATRIX, "channel": CHANNEL}
        return ModelParams(
            rho=self.rho, nu=self.nu, kappa=self.kappa if kappa is None else kappa,
            darcy={ids[k]: v for k, v in self.darcy.items()},
            forchheimer={ids[k]: v for k, v in self.forchheimer.items()},
        )

    # -- serialisation ----------------------------------------------------
    def to_dict(self) -> dict[str, dict[str, Any]]:
        d = asdict(self)
        return {
            "model": {k: d[k] for k in ("scenario", "element", "rho", "nu", "kappa", "darcy",
                                        "forchheimer")}
            | {"kappa_sweep": list(self.kappa_sweep), "inflow": list(self.inflow)},
            "time": {"T": self.T, "dt": self.dt, "initial_data": self.initial_data},
            "mesh": {"levels": list(self.levels), "channels": [list(r) for r in self.channels]},
            "newton": {"tol": self.tol, "maxit": self.maxit},
            "output": {"directory": self.directory, "vtk": self.vtk},
        }

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **changes)


_SECTIONS = {
    "model": ("scenario", "element", "rho", "nu", "kappa", "darcy", "forchheimer", "kappa_sweep", "inflow"),
    "time": ("T", "dt", "initial_data"),
    "mesh": ("levels", "channels"),
    "newton": ("tol", "maxit"),
    "output": ("directory", "vtk"),
}


def _region_table(name: str, value) -> dict[str, float]:
    if isinstance(value, dict):
        unknown = set(value) - set(REGION_KEYS)
        if unknown:
            raise ConfigError(f"model.{name} has unknown regions {sorted(unknown)}")
        missing = set(REGION_KEYS) - set(value)
        if missing:
            raise ConfigError(f"model.{name} is missing regions {sorted(missing)}")
        return {k: _real(f"model.{name}.{k}", value[k]) for k in REGION_KEYS}
    v = _real(f"model.{name}", value)
    return {k: v for k in REGION_KEYS}


def _real(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    return float(value)


def _integer(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def from_dict(data: dict) -> RunConfig:
    """Build a validated RunConfig from parsed TOML sections."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for section, keys in _SECTIONS.items():
        table = data.get(section, {})
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        extra = set(table) - set(keys)
        if extra:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")
        for key in keys:
            if key not in table:
                continue
            value = table[key]
            where = f"{section}.{key}"
            if key in ("darcy", "forchheimer"):
                kw[key] = _region_table(key, value)
            elif key in ("rho", "nu", "kappa", "T", "dt", "tol"):
                kw[key] = _real(where, value)
            elif key == "maxit":
                kw[key] = _integer(where, value)
            elif key == "levels":
                if not isinstance(value, list):
                    raise ConfigError(f"{where} must be a list")
                kw[key] = tuple(_integer(where, v) for v in value)
            elif key in ("kappa_sweep", "inflow"):
                if not isinstance(value, list):
                    raise ConfigError(f"{where} must be a list")
                kw[key] = tuple(_real(where, v) for v in value)
            elif key == "channels":
                if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
                    raise ConfigError(f"{where} must be a list of [x0, x1, y0, y1]")
                kw[key] = tuple(tuple(_real(where, v) for v in r) for r in value)
            elif key == "vtk":
                if not isinstance(value, bool):
                    raise ConfigError(f"{where} must be true or false")
                kw[key] = value
            else:
                if not isinstance(value, str):
                    raise ConfigError(f"{where} must be a string")
                kw[key] = value
    return RunConfig(**kw)


def loads(text: str) -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return from_dict(data)


def load(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror or exc}") from None
    return loads(text)


def dump(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(config.dumps(), encoding="utf-8")
