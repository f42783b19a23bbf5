"""Command line entry point: ``effdyn <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import io
from .classical import EAModel, integrate_trajectory
from .config import load_config
from .effective import table_columns
from .errors import EffdynError, InvalidArgumentError
from .rgflow import compare_to_spectral, integrate_flow, rg_effective_potential
from .scenarios import packet_width, run_scenario, scenario_table
from .tdse import dominant_period, gaussian_packet, propagate

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("effdyn")


def _parse_set(items: list[str]) -> dict:
    """``a.b=value`` pairs into a nested dict; values are parsed as JSON when possible."""
    out: dict = {}
    for item in items or []:
        if "=" not in item:
            raise InvalidArgumentError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return out


def _overrides(args) -> dict:
    ov = _parse_set(args.set)
    flat = {"lam": args.lam, "backend": args.backend, "output_dir": args.out}
    ov.update({k: v for k, v in flat.items() if v is not None})
    times = {k: v for k, v in (("dt", args.dt), ("t_end", args.t_end)) if v is not None}
    if times:
        ov.setdefault("times", {}).update(times)
    packet = {k: v for k, v in (("x0", args.x0), ("p0", args.p0), ("omega_w", args.omega_w)) if v is not None}
    if packet:
        ov.setdefault("packet", {}).update(packet)
    if args.no_plot:
        ov["plot"] = False
    return ov


def _config(args, name: str | None = None):
    return load_config(args.config, name or getattr(args, "scenario", None), _overrides(args))


def _number_or_rule(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _out_dir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_describe(args) -> int:
    cfg = _config(args)
    print(json.dumps(cfg.to_dict(), indent=2))
    return EXIT_OK


def cmd_veff(args) -> int:
    cfg = _config(args)
    table = scenario_table(cfg)
    out = _out_dir(cfg)
    files = [io.write_csv(out / "veff.csv", table_columns(table))]
    report = {"x_lo": table.x_lo, "x_hi": table.x_hi, "nodes": len(table.nodes),
              "veff_min": float(table.veff.min()), "provenance": table.provenance}
    files.append(io.write_report(out / "veff_report.txt", report))
    if cfg.plot:
        from .plotting import effective_potential_figure

        files.append(effective_potential_figure(table, cfg.potential_spec(), out / "veff.png"))
    io.write_manifest(out / "manifest.json", files, {"command": "veff", "config": cfg.to_dict()})
    sys.stdout.write(io.format_report(report))
    return EXIT_OK


def cmd_rgflow(args) -> int:
    cfg = _config(args)
    pot = cfg.potential_spec()
    final = integrate_flow(pot, cfg.flow_grid.build(), cfg.k_uv, cfg.k_ir)
    sp = scenario_table(cfg)
    rg = rg_effective_potential(final, "zero_point", spectral_e0=float(sp.veff.min()))
    window = tuple(args.window) if args.window else None
    report = compare_to_spectral(rg, sp, window=window).as_dict()
    report["floor_hits"] = final.floor_hits
    report["k_ir"] = final.k
    out = _out_dir(cfg)
    files = [
        io.write_csv(out / "rg_potential.csv", {"x": rg.nodes, "u_ir": rg.veff}),
        io.write_report(out / "rg_report.txt", report),
    ]
    io.write_manifest(out / "manifest.json", files, {"command": "rgflow", "config": cfg.to_dict()})
    sys.stdout.write(io.format_report(report))
    return EXIT_OK


def _t_end(cfg) -> float:
    if cfg.times.t_end == "auto":
        raise InvalidArgumentError("this subcommand needs an explicit --t-end")
    return float(cfg.times.t_end)


def cmd_evolve(args) -> int:
    cfg = _config(args)
    dt = cfg.times.dt
    n_steps = int(math.ceil(_t_end(cfg) / dt - 1e-9))
    packet = gaussian_packet(cfg.tdse_grid.build(), cfg.packet_center(), packet_width(cfg), cfg.packet.p0)
    series = propagate(packet, cfg.potential_spec(), dt, n_steps, cfg.times.record_every)
    out = _out_dir(cfg)
    report = {"t_end": float(series.times[-1]), "steps": n_steps,
              "norm_drift": float(abs(series.norm - 1.0).max()),
              "energy_initial": float(series.energy[0])}
    try:
        report["T_wp"] = dominant_period(series)
    except EffdynError:
        report["T_wp"] = "undetermined"
    files = [io.write_csv(out / "wp.csv", series.columns()), io.write_report(out / "evolve_report.txt", report)]
    io.write_manifest(out / "manifest.json", files, {"command": "evolve", "config": cfg.to_dict()})
    sys.stdout.write(io.format_report(report))
    return EXIT_OK


def cmd_trajectory(args) -> int:
    cfg = _config(args)
    table = scenario_table(cfg) if args.mode != "bare" else None
    model = EAModel(args.mode, table=table, pot=cfg.potential_spec())
    tr = integrate_trajectory(model, cfg.packet_center(), cfg.packet.p0, cfg.times.dt, _t_end(cfg),
                              stride=cfg.times.record_every)
    out = _out_dir(cfg)
    report = {"mode": args.mode, "t_end": float(tr.times[-1]), "energy_drift": tr.energy_drift}
    files = [io.write_csv(out / f"{args.mode}.csv", tr.columns()),
             io.write_report(out / f"{args.mode}_report.txt", report)]
    io.write_manifest(out / "manifest.json", files, {"command": "trajectory", "config": cfg.to_dict()})
    sys.stdout.write(io.format_report(report))
    return EXIT_OK


def cmd_figure(args) -> int:
    cfg = _config(args, args.command)
    art = run_scenario(cfg)
    sys.stdout.write(io.format_report(art.summary))
    log.info("wrote %s", ", ".join(f["file"] for f in art.files))
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(args.level, fault=args.fault, echo=lambda line: print(line, flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_CHECK


def _scenario_options(p: argparse.ArgumentParser, scenario: bool = True) -> None:
    p.add_argument("--config", help="JSON file with ScenarioConfig fields")
    if scenario:
        p.add_argument("--scenario", choices=("fig1", "fig2", "custom"),
                       help="defaults to start from (default: the file's name, else fig1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--lam", type=float, help="quartic coupling")
    p.add_argument("--backend", choices=("spectral", "rgflow"))
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--x0", type=float, help="packet centre (or offset, with center=bare_minimum)")
    p.add_argument("--p0", type=float)
    p.add_argument("--omega-w", dest="omega_w", type=_number_or_rule,
                   help="packet width: a number, from_veff_curvature or from_bare_curvature")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config field, e.g. --set packet.x0=0.5 (repeatable)")
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="effdyn", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", help="print the resolved configuration")
    _scenario_options(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("veff", help="tabulate V_eff and Z_eff")
    _scenario_options(p)
    p.set_defaults(func=cmd_veff)

    p = sub.add_parser("rgflow", help="integrate the flow and compare with the spectral table")
    _scenario_options(p)
    p.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"),
                   help="comparison interval (default: whole overlap)")
    p.set_defaults(func=cmd_rgflow)

    p = sub.add_parser("evolve", help="single TDSE run")
    _scenario_options(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("trajectory", help="single classical run")
    _scenario_options(p)
    p.add_argument("--mode", choices=("bare", "ea_z1", "ea_z"), default="ea_z")
    p.set_defaults(func=cmd_trajectory)

    for name in ("fig1", "fig2"):
        p = sub.add_parser(name, help=f"full {name} scenario")
        _scenario_options(p, scenario=False)
        p.set_defaults(func=cmd_figure)

    p = sub.add_parser("check", help="run the acceptance criteria")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.add_argument("--fault", choices=("eom_sign",), help="inject a known defect")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidArgumentError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"effdyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EffdynError as exc:
        print(f"effdyn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
