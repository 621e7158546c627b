"""Run configuration files.

TOML layout (a JSON file with the same nesting is also accepted)::

    [run]
    ell = 1.0          # renormalization length
    tol = 1e-8         # target energy tolerance
    J = 10             # Born truncation order, optional
    v0 = 12.566        # split frequency for direct quadrature, optional
    units = "raw"      # "raw": positions x and strengths alpha
                       # "rescaled": positions y = 4 pi alpha x, one common alpha
    alpha = 0.0795775  # common strength, rescaled units only

    [[obstacles]]
    position = [0.0, 0.0, 0.0]
    alpha = 1.0        # raw units only

    [grid]
    spec = "1.5:8:66"  # same syntax as --grid
    a = 5.0            # separation of the fixed pair in grid3
    b = 5.0            # triangle size in grid4
    beta = [1.0, 10.0]
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .model import FOUR_PI, ObstacleConfiguration

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("validate", "density", "energy", "force", "thermo", "scan2", "grid3", "grid4")


@dataclass(frozen=True)
class GridAxis:
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    @classmethod
    def parse(cls, text: str) -> "GridAxis":
        parts = text.strip().split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"grid axis {text!r} is not of the form start:stop:count")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigurationError(f"grid axis {text!r}: {exc}") from None
        if count < 1 or not (math.isfinite(start) and math.isfinite(stop)):
            raise ConfigurationError(f"grid axis {text!r} must have finite ends and count >= 1")
        if count > 1 and stop < start:
            raise ConfigurationError(f"grid axis {text!r} must be increasing")
        return cls(start, stop, count)


def parse_grid(text: str | None) -> tuple[GridAxis, ...]:
    if not text:
        return ()
    return tuple(GridAxis.parse(t) for t in text.split(","))


def parse_beta(text) -> tuple[float, ...]:
    if text is None:
        return ()
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        values = tuple(float(b) for b in items)
    except ValueError as exc:
        raise ConfigurationError(f"bad beta list {text!r}: {exc}") from None
    if any(not b > 0 for b in values):
        raise ConfigurationError("every beta must be positive")
    return values


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: str | None = None
    output_path: str | None = None
    json_path: str | None = None
    tol: float = 1e-8
    J: int | None = None
    v0: float | None = None
    betas: tuple[float, ...] = ()
    grid: tuple[GridAxis, ...] = ()
    a: float = 5.0
    b: float = 5.0
    ell: float = 1.0
    units: str = "raw"
    alpha: float = 1.0 / FOUR_PI
    workers: int = 1
    rel_error: str = "summed"
    obstacles: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}")
        if self.units not in ("raw", "rescaled"):
            raise ConfigurationError("units must be 'raw' or 'rescaled'")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.J is not None and self.J < 1:
            raise ConfigurationError("J must be at least 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if not (self.ell > 0 and self.alpha > 0):
            raise ConfigurationError("ell and alpha must be positive")

    def configuration(self) -> ObstacleConfiguration:
        """The obstacle configuration described by the ``[[obstacles]]`` entries."""
        if not self.obstacles:
            raise ConfigurationError(f"command {self.command!r} needs [[obstacles]] in the config")
        try:
            pos = np.array([o["position"] for o in self.obstacles], dtype=float)
            if self.units == "rescaled":
                return ObstacleConfiguration.from_rescaled(pos, self.alpha, self.ell)
            alpha = np.array([o["alpha"] for o in self.obstacles], dtype=float)
            return ObstacleConfiguration(pos, alpha, self.ell)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad obstacle entry: {exc}") from None


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            return json.loads(raw.decode())
        return tomllib.loads(raw.decode())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None


def build_manifest(command: str, config_path=None, **overrides) -> RunManifest:
    """Merge a config file with command-line overrides (``None`` means not given)."""
    data = load_config_file(config_path) if config_path else {}
    run = dict(data.get("run", {}))
    grid = dict(data.get("grid", {}))
    kwargs = {
        "command": command,
        "config_path": str(config_path) if config_path else None,
        "obstacles": tuple(data.get("obstacles", ())),
    }
    for key in ("tol", "J", "v0", "ell", "units", "alpha", "workers"):
        if key in run:
            kwargs[key] = run[key]
    for key in ("a", "b"):
        if key in grid:
            kwargs[key] = grid[key]
    if "spec" in grid:
        kwargs["grid"] = parse_grid(grid["spec"])
    if "beta" in grid:
        kwargs["betas"] = parse_beta(grid["beta"])
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "grid":
            value = parse_grid(value)
        elif key == "betas":
            value = parse_beta(value)
        kwargs[key] = value
    try:
        return RunManifest(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
