"""Scenario configuration: defaults for the two figures, JSON loading, overrides."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import InvalidArgumentError
from .spectral import Grid, PotentialSpec, make_grid

SCENARIOS = ("fig1", "fig2", "custom")
WIDTH_RULES = ("from_veff_curvature", "from_bare_curvature")


@dataclass(frozen=True)
class GridConfig:
    xmin: float
    xmax: float
    n: int

    def build(self) -> Grid:
        return make_grid(self.xmin, self.xmax, self.n)


@dataclass(frozen=True)
class PacketConfig:
    """Initial Gaussian.  With ``center = "bare_minimum"``, ``x0`` is an offset
    from the rightmost classical minimum."""

    x0: float = 0.7
    center: str = "absolute"
    omega_w: float | str = "from_veff_curvature"
    p0: float = 0.0


@dataclass(frozen=True)
class TimeConfig:
    dt: float = 1e-3
    t_end: float | str = "auto"
    record_every: int = 10
    auto_periods: float = 4.0
    window_periods: float = 3.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "fig1"
    potential: str = "quartic_double_well"
    lam: float | None = 6.0
    omega: float | None = None
    packet: PacketConfig = field(default_factory=PacketConfig)
    spectral_grid: GridConfig = field(default_factory=lambda: GridConfig(-8.0, 8.0, 4001))
    tdse_grid: GridConfig = field(default_factory=lambda: GridConfig(-8.0, 8.0, 4001))
    flow_grid: GridConfig = field(default_factory=lambda: GridConfig(-4.0, 4.0, 1601))
    veff_range: tuple[float, float] | str = "auto"
    veff_nodes: int = 121
    times: TimeConfig = field(default_factory=TimeConfig)
    backend: str = "spectral"
    curves: tuple[str, ...] = ("ea_z1", "ea_z")
    k_uv: float = 100.0
    k_ir: float = 1e-3
    output_dir: str = "runs/fig1"
    plot: bool = True

    def __post_init__(self):
        validate(self)

    def potential_spec(self) -> PotentialSpec:
        if self.potential == "quartic_double_well":
            return PotentialSpec.quartic(self.lam)
        if self.potential == "harmonic":
            return PotentialSpec.harmonic(self.omega)
        raise InvalidArgumentError(f"unsupported potential {self.potential!r}")

    def packet_center(self) -> float:
        p = self.packet
        if p.center == "absolute":
            return p.x0
        return max(self.potential_spec().minima()) + p.x0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["curves"] = list(self.curves)
        if isinstance(self.veff_range, tuple):
            d["veff_range"] = list(self.veff_range)
        return d


def validate(cfg: ScenarioConfig) -> None:
    if cfg.name not in SCENARIOS:
        raise InvalidArgumentError(f"scenario name must be one of {SCENARIOS}, got {cfg.name!r}")
    if cfg.backend not in ("spectral", "rgflow"):
        raise InvalidArgumentError(f"backend must be 'spectral' or 'rgflow', got {cfg.backend!r}")
    bad = set(cfg.curves) - {"bare", "ea_z1", "ea_z"}
    if bad:
        raise InvalidArgumentError(f"unknown curves {sorted(bad)}")
    if cfg.packet.center not in ("absolute", "bare_minimum"):
        raise InvalidArgumentError(f"packet.center must be 'absolute' or 'bare_minimum'")
    w = cfg.packet.omega_w
    if isinstance(w, str) and w not in WIDTH_RULES:
        raise InvalidArgumentError(f"packet.omega_w must be a number or one of {WIDTH_RULES}")
    if not isinstance(w, str) and not w > 0:
        raise InvalidArgumentError("packet.omega_w must be positive")
    t = cfg.times
    if not t.dt > 0 or t.record_every < 1:
        raise InvalidArgumentError("times.dt must be positive and times.record_every >= 1")
    if not isinstance(t.t_end, str) and not t.t_end > 0:
        raise InvalidArgumentError("times.t_end must be positive")
    if isinstance(t.t_end, str) and t.t_end != "auto":
        raise InvalidArgumentError("times.t_end must be a number or 'auto'")
    if isinstance(cfg.veff_range, str) and cfg.veff_range != "auto":
        raise InvalidArgumentError("veff_range must be [lo, hi] or 'auto'")
    if cfg.veff_nodes < 5:
        raise InvalidArgumentError("veff_nodes must be >= 5")
    cfg.potential_spec()
    x0 = cfg.packet_center()
    g = cfg.tdse_grid
    if not g.xmin < x0 < g.xmax:
        raise InvalidArgumentError(f"packet center {x0} outside the TDSE grid [{g.xmin}, {g.xmax}]")


def default_config(name: str) -> ScenarioConfig:
    if name == "fig1":
        return ScenarioConfig()
    if name == "fig2":
        return ScenarioConfig(
            name="fig2",
            lam=0.1,
            packet=PacketConfig(x0=-1.0, center="bare_minimum", omega_w="from_bare_curvature", p0=0.0),
            spectral_grid=GridConfig(-16.0, 16.0, 8001),
            tdse_grid=GridConfig(-16.0, 16.0, 8001),
            flow_grid=GridConfig(-16.0, 16.0, 3201),
            curves=("bare",),
            output_dir="runs/fig2",
        )
    if name == "custom":
        return ScenarioConfig(
            name="custom",
            potential="harmonic",
            lam=None,
            omega=1.0,
            packet=PacketConfig(x0=0.7, center="absolute", omega_w="from_veff_curvature", p0=0.0),
            spectral_grid=GridConfig(-10.0, 10.0, 4001),
            tdse_grid=GridConfig(-10.0, 10.0, 4001),
            curves=("bare", "ea_z1", "ea_z"),
            output_dir="runs/custom",
        )
    raise InvalidArgumentError(f"unknown scenario {name!r}; choose from {SCENARIOS}")


_NESTED = {"packet": PacketConfig, "spectral_grid": GridConfig, "tdse_grid": GridConfig,
           "flow_grid": GridConfig, "times": TimeConfig}


def merge(cfg: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    """Apply a (possibly nested) dict of overrides; unknown keys are errors."""
    known = {f.name for f in fields(ScenarioConfig)}
    changes = {}
    for key, value in overrides.items():
        if key not in known:
            raise InvalidArgumentError(f"unknown config key {key!r}")
        if key in _NESTED and isinstance(value, dict):
            sub = getattr(cfg, key)
            sub_known = {f.name for f in fields(_NESTED[key])}
            extra = set(value) - sub_known
            if extra:
                raise InvalidArgumentError(f"unknown keys {sorted(extra)} in {key!r}")
            changes[key] = replace(sub, **value)
        elif key == "curves":
            changes[key] = tuple(value)
        elif key == "veff_range" and not isinstance(value, str):
            lo, hi = value
            changes[key] = (float(lo), float(hi))
        else:
            changes[key] = value
    return replace(cfg, **changes)


def load_config(path: str | Path | None, name: str | None = None,
                overrides: dict | None = None) -> ScenarioConfig:
    """Defaults for ``name`` (or the file's ``name``), then the JSON file, then overrides."""
    doc = {}
    if path is not None:
        with open(path) as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise InvalidArgumentError("config file must hold a JSON object")
    base = name or doc.get("name", "fig1")
    cfg = default_config(base)
    if doc:
        cfg = merge(cfg, {k: v for k, v in doc.items() if k != "name" or v == base})
    if overrides:
        cfg = merge(cfg, overrides)
    return cfg


def bare_minimum_curvature(cfg: ScenarioConfig, x: float) -> float:
    """V'' at the classical minimum nearest to x."""
    pot = cfg.potential_spec()
    xm = min(pot.minima(), key=lambda m: abs(m - x))
    c = float(pot.curvature(xm))
    if not c > 0 or not math.isfinite(c):
        raise InvalidArgumentError(f"bare curvature {c} at the minimum is not positive")
    return c
