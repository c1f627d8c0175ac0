"""Parse and resolve JSON run configurations."""

import json
import math
from typing import Any, Dict, List, Optional

import numpy as np

from .bridges import MAX_ROTATIONS
from .errors import ConfigError
from .types import RunConfig

MODES = (
    "tictactoe-sweep",
    "triangle-sweep",
    "energy",
    "spectral-check",
    "monotonicity",
    "convergence-study",
)
GEOMETRIES = ("tictactoe", "triangle", "lines", "disks")

DEFAULTS: Dict[str, Any] = {
    "loops": 1000,
    "points": 1024,
    "rotations": MAX_ROTATIONS,
    "area": 1.0,
    "positions_per_loop": 16,
    "tol": 1e-10,
    "extrapolate": True,
}

# (ratio_min, ratio_max, ratio_count) when a sweep gives no explicit ratios
SWEEP_RANGES = {
    "tictactoe-sweep": (0.2, 5.0, 21),
    "triangle-sweep": (0.1, 10.0, 21),
}

DEFAULT_POINTS_LIST = [256, 1024, 4096]

_POSITIVE_REALS = (
    "w", "h", "base", "height", "area", "radius", "strength", "beta", "tol",
    "ratio_min", "ratio_max",
)
_KEYS = frozenset(RunConfig.__annotations__)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value: Any) -> bool:
    return (_is_int(value) or isinstance(value, float)) and math.isfinite(value)


def _positive_real(config: Dict[str, Any], key: str) -> float:
    value = config[key]
    if not _is_real(value) or value <= 0:
        raise ConfigError(f"{key} must be a positive number, got {value!r}", field=key)
    return float(value)


def _positive_int(config: Dict[str, Any], key: str) -> int:
    value = config[key]
    if not _is_int(value) or value < 1:
        raise ConfigError(f"{key} must be a positive integer, got {value!r}", field=key)
    return int(value)


def _power_of_two(value: Any, key: str) -> int:
    if not _is_int(value) or value < 2 or value & (value - 1):
        raise ConfigError(f"{key} must be a power of two >= 2, got {value!r}", field=key)
    return int(value)


def _positive_list(config: Dict[str, Any], key: str) -> List[float]:
    values = config[key]
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{key} must be a non-empty list", field=key)
    if not all(_is_real(v) and v > 0 for v in values):
        raise ConfigError(f"{key} must contain positive numbers, got {values!r}", field=key)
    return [float(v) for v in values]


def _require(config: Dict[str, Any], key: str, mode: str) -> None:
    if key not in config:
        raise ConfigError(f"{mode} requires {key}", field=key)


def _resolve_lines(config: Dict[str, Any]) -> List[List[float]]:
    rows = config["lines"]
    if not isinstance(rows, list) or not rows:
        raise ConfigError("lines must be a non-empty list of [nx, ny, offset]", field="lines")
    resolved = []
    for row in rows:
        if not (isinstance(row, list) and len(row) == 3 and all(_is_real(v) for v in row)):
            raise ConfigError(f"each line must be [nx, ny, offset], got {row!r}", field="lines")
        norm = math.hypot(row[0], row[1])
        if norm == 0.0:
            raise ConfigError("line normals must be non-zero", field="lines")
        resolved.append([row[0] / norm, row[1] / norm, row[2] / norm])
    return resolved


def _resolve_disks(config: Dict[str, Any]) -> List[List[float]]:
    rows = config["disks"]
    if not isinstance(rows, list) or not rows:
        raise ConfigError("disks must be a non-empty list of [cx, cy, r] or [cx, cy, r, V]", field="disks")
    resolved = []
    for row in rows:
        if not (isinstance(row, list) and len(row) in (3, 4) and all(_is_real(v) for v in row)):
            raise ConfigError(f"each disk must be [cx, cy, r] or [cx, cy, r, V], got {row!r}", field="disks")
        if row[2] <= 0 or (len(row) == 4 and row[3] <= 0):
            raise ConfigError(f"disk radius and potential must be positive, got {row!r}", field="disks")
        resolved.append([float(v) for v in row])
    return resolved


def _resolve_geometry(config: Dict[str, Any], mode: str, allowed: tuple) -> str:
    _require(config, "geometry", mode)
    geometry = config["geometry"]
    if geometry not in allowed:
        raise ConfigError(f"{mode} supports geometry in {allowed}, got {geometry!r}", field="geometry")
    needed = {"tictactoe": ("w", "h"), "triangle": ("base", "height"),
              "lines": ("lines",), "disks": ("disks",)}[geometry]
    for key in needed:
        _require(config, key, mode)
    return geometry


def _resolve_sweep(config: Dict[str, Any], mode: str) -> None:
    config["geometry"] = "tictactoe" if mode == "tictactoe-sweep" else "triangle"
    if "ratios" in config:
        config["ratios"] = _positive_list(config, "ratios")
        return
    lo, hi, count = SWEEP_RANGES[mode]
    config.setdefault("ratio_min", lo)
    config.setdefault("ratio_max", hi)
    config.setdefault("ratio_count", count)
    lo = _positive_real(config, "ratio_min")
    hi = _positive_real(config, "ratio_max")
    count = _positive_int(config, "ratio_count")
    if hi < lo:
        raise ConfigError(f"ratio_max must be >= ratio_min, got {hi} < {lo}", field="ratio_max")
    config["ratios"] = [float(r) for r in np.geomspace(lo, hi, count)]


def _resolve_mode(config: Dict[str, Any], mode: str) -> None:
    if mode in SWEEP_RANGES:
        _resolve_sweep(config, mode)
    elif mode == "energy":
        _resolve_geometry(config, mode, ("tictactoe", "triangle", "lines"))
    elif mode == "spectral-check":
        _resolve_geometry(config, mode, ("tictactoe", "lines", "disks"))
        if "betas" not in config:
            _require(config, "beta", mode)
            config["betas"] = [config["beta"]]
        config["betas"] = _positive_list(config, "betas")
    elif mode == "monotonicity":
        for key in ("beta", "gaps"):
            _require(config, key, mode)
        gaps = _positive_list(config, "gaps")
        if any(b <= a for a, b in zip(gaps, gaps[1:])):
            raise ConfigError(f"gaps must increase strictly, got {gaps}", field="gaps")
        config["gaps"] = gaps
        if "disks" in config:
            if len(config["disks"]) != 2:
                raise ConfigError("monotonicity needs exactly two disks", field="disks")
        else:
            _require(config, "radius", mode)
    elif mode == "convergence-study":
        config["geometry"] = "tictactoe"
        for key in ("w", "h"):
            _require(config, key, mode)
        config.setdefault("points_list", list(DEFAULT_POINTS_LIST))
        points_list = config["points_list"]
        if not isinstance(points_list, list) or len(points_list) < 2:
            raise ConfigError("points_list needs at least two entries", field="points_list")
        config["points_list"] = [_power_of_two(p, "points_list") for p in points_list]


def parse_config(text: str, mode: Optional[str] = None) -> RunConfig:
    """
    Parse a JSON run configuration and fill in defaults.

    Args:
        text: JSON object text (a previous run's sidecar is accepted as-is)
        mode: Mode given on the command line; must agree with the file if both are set

    Returns:
        Fully resolved configuration

    Raises:
        ConfigError: On malformed JSON, unknown keys, missing seed or bad values
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")

    unknown = sorted(set(raw) - _KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}", field=unknown[0])
    if "seed" not in raw:
        raise ConfigError("seed is required for reproducibility", field="seed")
    if not _is_int(raw["seed"]):
        raise ConfigError(f"seed must be an integer, got {raw['seed']!r}", field="seed")

    config: Dict[str, Any] = {**DEFAULTS, **raw}

    file_mode = raw.get("mode")
    if mode is not None and file_mode is not None and file_mode != mode:
        raise ConfigError(f"mode {mode!r} does not match configured mode {file_mode!r}", field="mode")
    config["mode"] = mode or file_mode
    if config["mode"] is None:
        raise ConfigError("mode is required", field="mode")
    if config["mode"] not in MODES:
        raise ConfigError(f"unknown mode {config['mode']!r}; expected one of {MODES}", field="mode")
    config.setdefault("output", f"{config['mode']}.csv")
    if not isinstance(config["output"], str) or not config["output"]:
        raise ConfigError("output must be a non-empty path", field="output")

    config["loops"] = _positive_int(config, "loops")
    config["points"] = _power_of_two(config["points"], "points")
    rotations = config["rotations"]
    if not _is_int(rotations) or not 0 <= rotations <= MAX_ROTATIONS:
        raise ConfigError("rotations must be in [0,6]", field="rotations")
    config["positions_per_loop"] = _positive_int(config, "positions_per_loop")
    if "threads" in config:
        config["threads"] = _positive_int(config, "threads")
    if "analytic" in config and not isinstance(config["analytic"], bool):
        raise ConfigError("analytic must be true or false", field="analytic")
    if not isinstance(config["extrapolate"], bool):
        raise ConfigError("extrapolate must be true or false", field="extrapolate")
    if "ratio_count" in config:
        _positive_int(config, "ratio_count")
    for key in _POSITIVE_REALS:
        if key in config:
            config[key] = _positive_real(config, key)
    if "lines" in config:
        config["lines"] = _resolve_lines(config)
    if "disks" in config:
        config["disks"] = _resolve_disks(config)
    if "geometry" in config and config["geometry"] not in GEOMETRIES:
        raise ConfigError(f"geometry must be one of {GEOMETRIES}, got {config['geometry']!r}", field="geometry")

    _resolve_mode(config, config["mode"])
    config.pop("flagged", None)
    return config  # type: ignore[return-value]
