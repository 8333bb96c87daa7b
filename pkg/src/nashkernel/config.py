"""Run configuration: JSON file plus command-line overrides."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .discretization import BCS, Grid1D
from .errors import ConfigError
from .models import DensityModel

DEFAULT_T_LIST = tuple(float(t) for t in np.logspace(-3, -2, 6))
TOP_KEYS = {"model", "grid", "alpha_list", "t_list", "epsilon", "interior_margin", "output_dir", "seed"}
GRID_KEYS = {"L", "n", "bc"}

# truncation defaults per family: (L, n)
_GRID_DEFAULTS = {"cauchy": (40.0, 2001), "gauss": (8.0, 1601), "flat": (1.0, 201),
                  "expsmooth": (8.0, 1601), "exppower": (8.0, 1601)}


@dataclass(frozen=True)
class RunConfig:
    model: DensityModel = field(default_factory=DensityModel)
    L: float = 40.0
    n: int = 2001
    bc: str = "neumann"
    alpha_list: tuple[float, ...] = (0.5,)
    t_list: tuple[float, ...] = DEFAULT_T_LIST
    epsilon: float = 0.5
    interior_margin: float = 0.25
    output_dir: str = "nkl-out"
    seed: int = 20240611

    def __post_init__(self):
        Grid1D(self.L, self.n)
        if self.bc not in BCS:
            raise ConfigError(f"bc: expected one of {BCS}, got {self.bc!r}")
        if not self.alpha_list:
            raise ConfigError("alpha_list: must not be empty")
        if any(not (math.isfinite(a) and a > 0) for a in self.alpha_list):
            raise ConfigError(f"alpha_list: entries must be positive, got {self.alpha_list}")
        t = self.t_list
        if not t or any(not (math.isfinite(x) and x > 0) for x in t) or any(b <= a for a, b in zip(t, t[1:])):
            raise ConfigError(f"t_list: must be positive and strictly ascending, got {t}")
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon: must lie in (0, 1), got {self.epsilon}")
        if not 0 <= self.interior_margin <= 0.45:
            raise ConfigError(f"interior_margin: must lie in [0, 0.45], got {self.interior_margin}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed: must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.L, self.n)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "grid": {"L": self.L, "n": self.n, "bc": self.bc},
            "alpha_list": list(self.alpha_list),
            "t_list": list(self.t_list),
            "epsilon": self.epsilon,
            "interior_margin": self.interior_margin,
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    def digest(self) -> str:
        """sha256 of the canonical JSON form, excluding the output directory."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _float_list(value, key: str) -> tuple[float, ...]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        parts = [value]
    try:
        return tuple(float(p) for p in parts)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a list of numbers, got {value!r}") from None


def _number(value, key: str, kind=float):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if kind is int and out != float(value):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return out


def load_config_file(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config: file not found: {p}")
    text = p.read_text()
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: malformed JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    return data


def parse_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Merge a JSON file with flag overrides (flags win) and apply defaults.

    ``overrides`` uses flat keys: family, beta, a, d, K_cut, L, n, bc, alpha_list,
    t_list, epsilon, interior_margin, output_dir, seed. ``None`` values are ignored.
    """
    data = load_config_file(path)
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    model_cfg = dict(data.get("model") or {})
    grid_cfg = dict(data.get("grid") or {})
    if set(grid_cfg) - GRID_KEYS:
        raise ConfigError(f"grid: unknown keys {sorted(set(grid_cfg) - GRID_KEYS)}")
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    for key in ("family", "beta", "a", "d", "K_cut"):
        if key in ov:
            model_cfg[key] = ov.pop(key)
    for key in ("L", "n", "bc"):
        if key in ov:
            grid_cfg[key] = ov.pop(key)
    rest = {k: v for k, v in data.items() if k not in ("model", "grid")}
    rest.update(ov)
    unknown = set(rest) - TOP_KEYS
    if unknown:
        raise ConfigError(f"flags: unknown keys {sorted(unknown)}")

    for key in ("beta", "a", "K_cut"):
        if model_cfg.get(key) is not None:
            model_cfg[key] = _number(model_cfg[key], key)
    if "d" in model_cfg:
        model_cfg["d"] = _number(model_cfg["d"], "d", int)
    model = DensityModel.from_dict(model_cfg)

    L0, n0 = _GRID_DEFAULTS[model.family]
    kwargs: dict[str, Any] = {
        "model": model,
        "L": _number(grid_cfg.get("L", L0), "L"),
        "n": _number(grid_cfg.get("n", n0), "n", int),
        "bc": str(grid_cfg.get("bc", "neumann")).lower(),
    }
    if "alpha_list" in rest:
        kwargs["alpha_list"] = _float_list(rest["alpha_list"], "alpha_list")
    if "t_list" in rest:
        kwargs["t_list"] = _float_list(rest["t_list"], "t_list")
    for key in ("epsilon", "interior_margin"):
        if key in rest:
            kwargs[key] = _number(rest[key], key)
    if "seed" in rest:
        kwargs["seed"] = _number(rest["seed"], "seed", int)
    if "output_dir" in rest:
        kwargs["output_dir"] = str(rest["output_dir"])
    return RunConfig(**kwargs)
