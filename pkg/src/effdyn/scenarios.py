"""Figure scenarios: packet evolution against its classical surrogates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import io
from .classical import EAModel, Trajectory, integrate_trajectory
from .config import ScenarioConfig, bare_minimum_curvature
from .effective import EffectiveTable, build_effective_table, eval_effective, table_columns
from .errors import DomainError, EffdynError, InvalidArgumentError
from .rgflow import integrate_flow, rg_effective_potential
from .spectral import assemble_hamiltonian, lowest_eigenpairs
from .tdse import ObservableSeries, dominant_period, gaussian_packet, propagate

log = logging.getLogger(__name__)

MAX_RANGE_GROWTH = 5


class Curve(NamedTuple):
    """A phase-space curve (t, x, v)."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray

    @classmethod
    def from_series(cls, s: ObservableSeries) -> "Curve":
        return cls(s.times, s.x_mean, s.v_mean)

    @classmethod
    def from_trajectory(cls, tr: Trajectory) -> "Curve":
        return cls(tr.times, tr.x, tr.v)


def compare_phase_space(a: Curve, b: Curve, window: tuple[float, float],
                        step: float | None = None) -> tuple[float, float]:
    """RMS phase-space distance D between two curves over a time window.

    Both curves are linearly resampled on a uniform grid.  Returns D and D
    divided by the RMS radius of ``a`` about its own mean point.
    """
    t0, t1 = window
    if not t1 > t0:
        raise InvalidArgumentError(f"empty comparison window {window}")
    for name, c in (("a", a), ("b", b)):
        if t0 < c.t[0] - 1e-12 or t1 > c.t[-1] + 1e-12:
            raise DomainError(f"window {window} outside curve {name} span [{c.t[0]}, {c.t[-1]}]")
    if step is None:
        step = float(np.median(np.diff(a.t)))
    n = max(int(math.floor((t1 - t0) / step + 1e-9)), 1)
    t = t0 + step * np.arange(n + 1)
    t[-1] = min(t[-1], t1)
    xa, va = np.interp(t, a.t, a.x), np.interp(t, a.t, a.v)
    xb, vb = np.interp(t, b.t, b.x), np.interp(t, b.t, b.v)
    d = math.sqrt(np.mean((xa - xb) ** 2 + (va - vb) ** 2))
    radius = math.sqrt(np.mean((xa - xa.mean()) ** 2 + (va - va.mean()) ** 2))
    return d, (d / radius if radius > 0 else math.inf)


@dataclass
class RunArtifacts:
    config: ScenarioConfig
    output_dir: Path | None
    summary: dict
    series: ObservableSeries
    trajectories: dict[str, Trajectory]
    table: EffectiveTable | None = None
    files: list[dict] = field(default_factory=list)


def _spectral_table(cfg: ScenarioConfig, x_center: float, v0: float) -> EffectiveTable:
    """Table over +-1.2 x_turn, x_turn from energy conservation in the table itself."""
    pot = cfg.potential_spec()
    grid = cfg.spectral_grid.build()
    if cfg.veff_range != "auto":
        return build_effective_table(pot, grid, *cfg.veff_range, cfg.veff_nodes)
    half = 1.2 * max(abs(x_center), 0.05)
    for _ in range(MAX_RANGE_GROWTH):
        table = build_effective_table(pot, grid, -half, half, cfg.veff_nodes)
        e = 0.5 * eval_effective(table, x_center, "zeff") * v0**2 + eval_effective(table, x_center, "veff")
        inside = table.veff < e
        if not inside[0] and not inside[-1]:
            turning = table.nodes[inside] if inside.any() else np.array([x_center])
            x_turn = max(abs(turning.min()), abs(turning.max()), abs(x_center))
            if 1.2 * x_turn <= half * (1 + 1e-9):
                return table
            half = 1.2 * x_turn
        else:
            half *= 1.5
    raise DomainError(f"could not bracket the turning points of the scenario within +-{half:.3g}")


def _rg_table(cfg: ScenarioConfig, spectral: EffectiveTable) -> tuple[EffectiveTable, EffectiveTable]:
    """V_eff from the RG flow on the spectral nodes, Z_eff kept from the spectral table."""
    pot = cfg.potential_spec()
    final = integrate_flow(pot, cfg.flow_grid.build(), cfg.k_uv, cfg.k_ir)
    e0 = float(spectral.veff.min())
    rg = rg_effective_potential(final, "zero_point", spectral_e0=e0)
    x = spectral.nodes
    v = eval_effective(rg, x, "veff", 0)
    d1 = eval_effective(rg, x, "veff", 1)
    d2 = eval_effective(rg, x, "veff", 2)
    combined = EffectiveTable(x, v, spectral.zeff, "rgflow", dveff=d1, d2veff=d2)
    return combined, rg


def _packet_width(cfg: ScenarioConfig, table: EffectiveTable | None, x0: float) -> float:
    w = cfg.packet.omega_w
    if w == "from_veff_curvature":
        return math.sqrt(eval_effective(table, x0, "veff", 2))
    if w == "from_bare_curvature":
        return math.sqrt(bare_minimum_curvature(cfg, x0))
    return float(w)


def _period_estimate(cfg: ScenarioConfig, table: EffectiveTable | None, x0: float) -> float:
    if "ea_z1" in cfg.curves or "ea_z" in cfg.curves:
        H = assemble_hamiltonian(cfg.spectral_grid.build(), cfg.potential_spec(), 0.0)
        e = lowest_eigenpairs(H, 2).energies
        return 2.0 * math.pi / (e[1] - e[0])
    return 2.0 * math.pi / math.sqrt(bare_minimum_curvature(cfg, x0))


def scenario_table(cfg: ScenarioConfig) -> EffectiveTable:
    """The spectral effective table a scenario would use."""
    return _spectral_table(cfg, cfg.packet_center(), cfg.packet.p0)


def packet_width(cfg: ScenarioConfig) -> float:
    """Resolve the packet width rule of ``cfg`` to a number."""
    x0 = cfg.packet_center()
    table = scenario_table(cfg) if cfg.packet.omega_w == "from_veff_curvature" else None
    return _packet_width(cfg, table, x0)


def run_scenario(cfg: ScenarioConfig, write: bool = True) -> RunArtifacts:
    """Run one scenario end to end and (optionally) write its files."""
    try:
        return _run(cfg, write)
    except EffdynError as exc:
        wrapped = type(exc).__new__(type(exc))
        wrapped.__dict__.update(exc.__dict__)
        wrapped.args = (f"[scenario {cfg.name}] {exc}",)
        raise wrapped from exc


def _run(cfg: ScenarioConfig, write: bool) -> RunArtifacts:
    pot = cfg.potential_spec()
    x0 = cfg.packet_center()
    p0 = cfg.packet.p0
    needs_table = any(c in cfg.curves for c in ("ea_z1", "ea_z")) or cfg.packet.omega_w == "from_veff_curvature"

    table = rg_raw = None
    if needs_table:
        table = _spectral_table(cfg, x0, p0)
        if cfg.backend == "rgflow":
            table, rg_raw = _rg_table(cfg, table)

    omega_w = _packet_width(cfg, table, x0)
    t_est = _period_estimate(cfg, table, x0)
    dt = cfg.times.dt
    t_end = cfg.times.auto_periods * t_est if cfg.times.t_end == "auto" else float(cfg.times.t_end)
    n_steps = int(math.ceil(t_end / dt))
    t_end = n_steps * dt

    packet = gaussian_packet(cfg.tdse_grid.build(), x0, omega_w, p0)
    series = propagate(packet, pot, dt, n_steps, cfg.times.record_every)
    t_wp = dominant_period(series)
    window = (0.0, cfg.times.window_periods * t_wp)
    if window[1] > t_end:
        raise DomainError(f"comparison window {window[1]:.4g} exceeds t_end={t_end:.4g}; raise times.t_end")
    step = dt * cfg.times.record_every

    trajectories = {}
    for mode in cfg.curves:
        model = EAModel(mode, table=table if mode != "bare" else None, pot=pot)
        trajectories[mode] = integrate_trajectory(model, x0, p0, dt, t_end, stride=cfg.times.record_every)

    wp = Curve.from_series(series)
    summary = {
        "scenario": cfg.name,
        "potential": cfg.potential,
        "lambda": cfg.lam if cfg.lam is not None else "none",
        "omega": cfg.omega if cfg.omega is not None else "none",
        "backend": cfg.backend,
        "x0": x0,
        "p0": p0,
        "omega_w": omega_w,
        "packet_variance": 1.0 / (2.0 * omega_w),
        "dt": dt,
        "t_end": t_end,
        "period_estimate": t_est,
        "T_wp": t_wp,
        "window_start": window[0],
        "window_end": window[1],
        "norm_drift": float(np.max(np.abs(series.norm - 1.0))),
        "energy_drift_rel": float(np.max(np.abs(series.energy - series.energy[0])) / abs(series.energy[0])),
    }
    if table is not None:
        summary["veff_range_lo"] = table.x_lo
        summary["veff_range_hi"] = table.x_hi
        summary["veff_nodes"] = len(table.nodes)
        summary["veff_d2_at_x0"] = eval_effective(table, x0, "veff", 2)
        summary["zeff_at_x0"] = eval_effective(table, x0, "zeff", 0)
    for mode, tr in trajectories.items():
        d, dn = compare_phase_space(wp, Curve.from_trajectory(tr), window, step)
        summary[f"T_{mode}"] = dominant_period(times=tr.times, values=tr.x)
        summary[f"D_{mode}_wp"] = d
        summary[f"Dnorm_{mode}_wp"] = dn
        summary[f"energy_drift_{mode}"] = tr.energy_drift
    if "ea_z1" in trajectories and "ea_z" in trajectories:
        d1, dz = summary["D_ea_z1_wp"], summary["D_ea_z_wp"]
        summary["improvement_percent"] = 100.0 * (d1 - dz) / d1
        summary["period_error_ea_z1"] = abs(summary["T_ea_z1"] - t_wp)
        summary["period_error_ea_z"] = abs(summary["T_ea_z"] - t_wp)
        summary["ordering_D"] = dz < d1
        summary["ordering_period"] = summary["period_error_ea_z"] < summary["period_error_ea_z1"]
    if "bare" in trajectories:
        mask = (series.times >= window[0]) & (series.times <= window[1])
        xb = np.interp(series.times[mask], trajectories["bare"].times, trajectories["bare"].x)
        xw = series.x_mean[mask]
        amp = 0.5 * (xw.max() - xw.min())
        dev = float(np.max(np.abs(xw - xb)))
        summary["max_abs_dev_x_bare_wp"] = dev
        summary["amplitude_wp"] = amp
        summary["rel_dev_x_bare_wp"] = dev / amp if amp > 0 else math.inf

    art = RunArtifacts(cfg, None, summary, series, trajectories, table)
    if write:
        _write(art, rg_raw)
    return art


def _write(art: RunArtifacts, rg_raw: EffectiveTable | None) -> None:
    cfg = art.config
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [io.write_csv(out / "wp.csv", art.series.columns())]
    for mode, tr in art.trajectories.items():
        name = "ehrenfest.csv" if mode == "bare" else f"{mode}.csv"
        files.append(io.write_csv(out / name, tr.columns()))
    if art.table is not None:
        files.append(io.write_csv(out / "veff.csv", table_columns(art.table)))
    if rg_raw is not None:
        files.append(io.write_csv(out / "rg_potential.csv", {"x": rg_raw.nodes, "u_ir": rg_raw.veff}))
    files.append(io.write_report(out / "summary.txt", art.summary))
    if cfg.plot:
        from .plotting import phase_space_figure

        files.append(phase_space_figure(art, out / "phase_space.png"))
    art.output_dir = out
    art.files = files
    io.write_manifest(out / "manifest.json", files, {"scenario": cfg.name, "config": cfg.to_dict()})
