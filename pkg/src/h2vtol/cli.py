"""Command-line front end.

Exit codes: 0 nominal, 1 bad input (parse, config or usage error), 2 run terminated
with a diagnostic or a fault case not maintained.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
from scipy.signal import freqz

from .airframe import SECTIONS as VEHICLE_SECTIONS
from .airframe import load_vehicle_config
from .config import ConfigError, split_overrides
from .control.filters import analytic_magnitude, butterworth2_coefficients
from .energy import HydrogenCylinder, catalog_metrics, load_catalog
from .mission.faults import fault_cases, run_campaign
from .mission.runner import endurance_estimate, run_scenario
from .mission.scenario import SECTIONS as SCENARIO_SECTIONS
from .mission.scenario import apply_scenario_overrides, load_scenario, reference_scenario_path

EXIT_OK, EXIT_INPUT, EXIT_TERMINATED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _scenario_path(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    try:
        return reference_scenario_path(name)
    except FileNotFoundError:
        raise ConfigError(f"no scenario file or shipped scenario named {name!r}") from None


def _load(args, default: str):
    """Scenario and vehicle with the command-line overrides applied."""
    scenario = load_scenario(_scenario_path(args.scenario or default))
    overrides = split_overrides(args.set or [])
    unknown = set(overrides) - set(SCENARIO_SECTIONS) - set(VEHICLE_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown override section {sorted(unknown)[0]!r}")
    scenario = apply_scenario_overrides(scenario, overrides)
    run = scenario.run
    if getattr(args, "seed", None) is not None:
        run = dataclasses.replace(run, seed=args.seed)
    if getattr(args, "duration", None) is not None:
        run = dataclasses.replace(run, duration_s=args.duration)
    scenario = dataclasses.replace(scenario, run=run)
    vehicle = load_vehicle_config(run.vehicle or None,
                                  {k: v for k, v in overrides.items() if k in VEHICLE_SECTIONS})
    return scenario, vehicle


def cmd_run(args) -> int:
    scenario, vehicle = _load(args, "endurance")
    log = run_scenario(scenario, vehicle)
    out = Path(args.out or f"out/{scenario.run.name}")
    log.write(out)
    s = log.summary
    print(f"{scenario.run.name}: flight {s['flight_time_s']:.1f} s, H2 {s['h2_consumed_g']:.2f} g, "
          f"final pressure {s['final_pressure_bar']:.1f} bar, final phase {s['final_phase']} -> {out}")
    if s["terminated"] is not None:
        t = s["terminated"]
        print(f"terminated at {t['time_s']:.2f} s: {t['reason']}: {t['message']}", file=sys.stderr)
        return EXIT_TERMINATED
    return EXIT_OK


def cmd_catalog(args) -> int:
    entries = load_catalog(args.catalog)
    rows = [(e, catalog_metrics(e)) for e in entries]
    if args.sort:
        rows.sort(key=lambda r: r[1].specific_energy, reverse=True)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(("maker", "volume_l", "pressure_bar", "weight_kg", "h2_g", "energy_wh", "wh_per_kg", "wt_pct"))
        for e, m in rows:
            w.writerow((e.maker, f"{e.volume:g}", f"{e.rated_pressure:g}", f"{e.dry_weight:g}",
                        f"{m.h2_mass:.1f}", f"{m.energy:.0f}", f"{m.specific_energy:.0f}",
                        f"{m.weight_fraction:.2f}"))
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_endurance(args) -> int:
    scenario, _ = _load(args, "endurance")
    c = scenario.cylinder
    cylinder = HydrogenCylinder(c.volume_l, c.pressure_bar, c.min_usable_bar, c.rated_bar)
    hours = endurance_estimate(cylinder, args.power, args.efficiency)
    print(json.dumps({"usable_h2_g": cylinder.usable_mass, "mean_power_w": args.power,
                      "efficiency": args.efficiency, "endurance_h": hours}, sort_keys=True))
    return EXIT_OK


def cmd_faults(args) -> int:
    scenario, vehicle = _load(args, "faults")
    kinds = tuple(k.strip() for k in args.kinds.split(","))
    bad = set(kinds) - {"link", "connector", "node", "dual"}
    if bad:
        raise ConfigError(f"unknown fault kind {sorted(bad)[0]!r}")
    results = run_campaign(scenario, fault_cases(kinds), args.workers, vehicle)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(("kind", "fault", "maintained", "lost_commands", "degraded", "allocation_rank", "terminated"))
        for r in results:
            w.writerow((r.case.kind, r.case.label, int(r.maintained), r.lost_commands,
                        " ".join(r.degraded_actuators), r.allocation_rank, r.terminated or ""))
    finally:
        if out is not sys.stdout:
            out.close()
    passed = sum(r.maintained for r in results)
    print(f"{passed}/{len(results)} cases maintained", file=sys.stderr)
    return EXIT_OK if passed == len(results) else EXIT_TERMINATED


def cmd_filters(args) -> int:
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(("cutoff_hz", "freq_hz", "magnitude_db", "analytic_db"))
        for cutoff in args.cutoff:
            b, a = butterworth2_coefficients(cutoff, args.rate)
            freqs = cutoff * np.logspace(-1, 1.5, args.points)
            freqs = freqs[freqs < 0.5 * args.rate]
            _, h = freqz(b, a, worN=freqs, fs=args.rate)
            for f, mag, ref in zip(freqs, np.abs(h), analytic_magnitude(freqs, cutoff, args.rate)):
                w.writerow((f"{cutoff:g}", f"{f:.6g}", f"{20 * np.log10(mag):.4f}", f"{20 * np.log10(ref):.4f}"))
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="h2vtol", description="Hybrid-energy tail-sitter simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_flags(q, default):
        q.add_argument("--scenario", help=f"scenario file or shipped name (default {default})")
        q.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a scenario or vehicle value; repeatable")

    q = sub.add_parser("run", help="fly a scenario and write timeseries.csv, summary.json, phases.csv")
    scenario_flags(q, "endurance")
    q.add_argument("--out", help="output directory (default out/<scenario name>)")
    q.add_argument("--seed", type=int)
    q.add_argument("--duration", type=float, help="simulated seconds")
    q.set_defaults(func=cmd_run)

    q = sub.add_parser("catalog", help="storage metrics for a cylinder catalog")
    q.add_argument("--catalog", help="catalog file (default: shipped table)")
    q.add_argument("--sort", action="store_true", help="sort by Wh/kg, best first")
    q.add_argument("--out", help="CSV file (default stdout)")
    q.set_defaults(func=cmd_catalog)

    q = sub.add_parser("endurance", help="closed-form endurance of the scenario cylinder")
    scenario_flags(q, "endurance")
    q.add_argument("--power", type=float, default=550.0, help="mean fuel-cell power, W")
    q.add_argument("--efficiency", type=float, default=0.53, help="fuel-cell LHV efficiency")
    q.set_defaults(func=cmd_endurance)

    q = sub.add_parser("faults", help="single-failure campaign over a short base mission")
    scenario_flags(q, "faults")
    q.add_argument("--seed", type=int)
    q.add_argument("--duration", type=float)
    q.add_argument("--kinds", default="link,connector,node", help="comma list of link, connector, node, dual")
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--out", help="CSV report (default stdout)")
    q.set_defaults(func=cmd_faults)

    q = sub.add_parser("filters", help="frequency response of the control-loop filters")
    q.add_argument("--cutoff", type=float, nargs="+", default=[1.5, 0.5], help="cutoffs, Hz")
    q.add_argument("--rate", type=float, default=500.0, help="sample rate, Hz")
    q.add_argument("--points", type=int, default=60)
    q.add_argument("--out", help="CSV file (default stdout)")
    q.set_defaults(func=cmd_filters)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # ConfigError, CatalogError and FilterConfigError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
