"""Run configuration: a YAML (or JSON) file plus command-line overrides."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .basis import MAX_SITES


class ConfigError(ValueError):
    pass


@dataclass
class TimeGrid:
    n: int = 60
    t_min: float = 1e-1
    t_max: float = 1e3

    def values(self) -> np.ndarray:
        from .dynamics import default_time_grid
        return default_time_grid(self.n, self.t_min, self.t_max)


@dataclass
class CollapseOptions:
    observables: list = field(default_factory=lambda: ["EE", "GR"])
    nu_initial: float = 1.0
    bounds: list = field(default_factory=lambda: [[1.0, 15.0], [0.2, 3.0]])
    restarts: int = 5


@dataclass
class RunConfig:
    sizes: list = field(default_factory=lambda: [10, 12])
    pvals: object = field(default_factory=lambda: [0])
    wgrid: list = field(default_factory=lambda: [1.0, 3.0, 5.0, 7.0, 9.0, 12.0])
    realizations: dict = field(default_factory=lambda: {"static": 100, "dynamics": 100})
    seed: int = 2024
    w: float = 0.5
    J: float = 1.0
    window_size: int = 50
    threads: int = 1
    out: str = "runs/default"
    times: TimeGrid = field(default_factory=TimeGrid)
    collapse: CollapseOptions = field(default_factory=CollapseOptions)

    def p_values(self, L: int) -> list[int]:
        if self.pvals == "all":
            return list(range(L + 1))
        return [int(P) for P in self.pvals if 0 <= int(P) <= L]

    def grid(self) -> list[tuple]:
        return [(int(L), P, float(W)) for L in self.sizes for P in self.p_values(int(L))
                for W in self.wgrid]

    def validate(self) -> "RunConfig":
        if not self.sizes:
            raise ConfigError("sizes must not be empty")
        for L in self.sizes:
            if int(L) != L or L % 2 or not 2 <= L <= MAX_SITES:
                raise ConfigError(f"size {L} must be even and within [2, {MAX_SITES}]")
        if not self.wgrid:
            raise ConfigError("wgrid must not be empty")
        if any(not np.isfinite(W) or W < 0 for W in self.wgrid):
            raise ConfigError("wgrid values must be finite and non-negative")
        if self.pvals != "all":
            if not self.pvals:
                raise ConfigError("pvals must not be empty")
            if any(int(P) != P or P < 0 for P in self.pvals):
                raise ConfigError("pvals must be non-negative integers or 'all'")
        if not self.grid():
            raise ConfigError("grid is empty: no P value fits any size")
        for k, n in self.realizations.items():
            if int(n) != n or n < 1:
                raise ConfigError(f"realizations[{k}] must be a positive integer")
        if self.window_size < 1:
            raise ConfigError("window_size must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.w < 0 or not np.isfinite(self.w) or not np.isfinite(self.J):
            raise ConfigError("w must be non-negative and J finite")
        if self.times.n < 1 or not 0 < self.times.t_min < self.times.t_max:
            raise ConfigError("time grid needs n >= 1 and 0 < t_min < t_max")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data: dict):
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for k, v in data.items():
        if k == "times":
            v = _build(TimeGrid, v)
        elif k == "collapse":
            v = _build(CollapseOptions, v)
        kwargs[k] = v
    return cls(**kwargs)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Read ``path`` (if given) and apply non-None ``overrides``; flags win."""
    data = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a mapping")
    try:
        cfg = _build(RunConfig, data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "realizations":
            cfg.realizations = {key: int(v) for key in ("static", "dynamics")}
        else:
            setattr(cfg, k, v)
    cfg.realizations = {"static": 100, "dynamics": 100, **cfg.realizations}
    return cfg.validate()


def parse_float_list(text: str) -> list[float]:
    """``"1,2,5"`` or a range ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(p) for p in text.split(":"))
        if step <= 0:
            raise ConfigError("range step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def parse_int_list(text: str):
    if text.strip() == "all":
        return "all"
    return [int(v) for v in parse_float_list(text)]
