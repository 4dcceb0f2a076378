"""Command-line front end: ``qls catalog|detect|spectrum|pumpprobe|tables``."""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CatalogError, InfeasibleAlpha, NotFound, NumericalError, StalledGeneration
from .molecule import load_catalog
from .optimizer import (
    DURATION_MODELS,
    OBJECTIVES,
    TABLE_HEATING_RATES,
    OptimizationProblem,
    Optimum,
    evaluate,
    optimize_angle,
    optimize_fixed_angle,
    reproduce_tables,
    validate_full_dynamics,
)
from .pumpprobe import IvrModel, pump_probe_curve
from .recoil import PulseSpec, spectrum_scan
from .sweep import SweepTable, fmt

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _problem_kwargs(args) -> dict:
    return {
        "rabi_cap": 2 * math.pi * args.rabi_cap_khz * 1e3,
        "duration_model": args.duration_model,
        "objective": args.objective,
        "roundtrip": args.roundtrip,
    }


def _crystal(args, catalog):
    return catalog.crystal(args.molecule, args.ion, 2 * math.pi * args.trap_freq_khz * 1e3)


def _base_meta(args, catalog) -> dict:
    return {"catalog_sha256": catalog.digest(), "catalog_source": catalog.source, "version": __version__}


# --- subcommands ------------------------------------------------------------

def cmd_catalog(args, catalog) -> int:
    if args.action == "list":
        for m in catalog.molecules:
            modes = ", ".join(f"{v.label} {v.frequency:g}" for v in m.modes)
            print(f"{m.name}\t{m.mass:g} Da\tion={m.default_ion}\t{modes}")
        for i in catalog.ions:
            print(f"{i.name}\t{i.mass:g} Da\tcontrol {i.control_wavelength * 1e9:g} nm")
        return EXIT_OK
    if args.action == "show":
        if not args.name:
            raise UsageError("catalog show needs a molecule or ion name")
        doc = catalog.to_dict()
        for entry in doc["molecules"] + doc["ions"]:
            if entry["name"] == args.name:
                print(json.dumps(entry, indent=2, ensure_ascii=False))
                return EXIT_OK
        raise NotFound(f"{args.name!r} not found")
    if args.action == "validate":
        if not args.name:
            raise UsageError("catalog validate needs a file")
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            try:
                cat = load_catalog(args.name, strict=True)
            except (OSError, Warning) as exc:
                raise CatalogError(str(exc)) from exc
        print(f"ok: {len(cat.molecules)} molecules, {len(cat.ions)} ions, sha256 {cat.digest()}")
        return EXIT_OK
    raise UsageError(f"unknown catalog action {args.action!r}")


def cmd_detect(args, catalog) -> int:
    crystal = _crystal(args, catalog)
    mode = crystal.molecule.mode(args.mode)
    problem = OptimizationProblem(crystal, mode.frequency, args.heating, photon_count=args.photons,
                                  **_problem_kwargs(args))
    if args.optimize_angle:
        opt = optimize_angle(problem)
    else:
        theta = math.radians(args.angle)
        if args.alpha is None:
            opt = optimize_fixed_angle(problem, theta)
        else:
            ev = evaluate(problem, theta, args.alpha)
            opt = Optimum(theta, args.alpha, ev.duration, ev.value, ev.outcome.background,
                          ev.outcome.contrast, ev.outcome.spin_flip_probability)
    cols = ["efficiency", "theta_deg", "alpha", "duration", "contrast", "background", "spin_flip_probability"]
    units = ["", "deg", "", "s", "", "", ""]
    meta = _base_meta(args, catalog)
    meta.update(molecule=crystal.molecule.name, mode=mode.label, ion=crystal.ion.name,
                trap_frequency_khz=args.trap_freq_khz, heating_rate=args.heating, photons=args.photons,
                **{k: v for k, v in vars(args).items() if k in ("rabi_cap_khz", "duration_model", "objective", "roundtrip")})
    table = SweepTable(cols, units, metadata=meta)
    table.add_row([opt.efficiency, opt.theta_deg, opt.alpha_star, opt.duration, opt.contrast,
                   opt.background, opt.spin_flip_probability])
    if args.validate_full_dynamics:
        chk = validate_full_dynamics(problem, opt)
        meta["full_dynamics"] = {"duration_s": fmt(chk.full_duration), "surrogate_duration_s": fmt(chk.surrogate_duration),
                                 "relative_discrepancy": fmt(chk.relative_discrepancy), "fidelity": fmt(chk.fidelity)}
    _emit(table.dumps(args.format), args.out)
    return EXIT_OK


def cmd_spectrum(args, catalog) -> int:
    if not args.start < args.stop or not args.step > 0:
        raise UsageError("need --from < --to and --step > 0")
    crystal = _crystal(args, catalog)
    grid = np.arange(args.start, args.stop + 0.5 * args.step, args.step)
    table = spectrum_scan(crystal, grid, PulseSpec(args.pulse_fs * 1e-15, args.pulse_area), args.heating,
                          **_problem_kwargs(args))
    table.metadata.update(_base_meta(args, catalog))
    _emit(table.dumps(args.format), args.out)
    return EXIT_OK


def _parse_delays(text: str) -> np.ndarray:
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError as exc:
        raise UsageError(f"--delays expects start:stop:count, got {text!r}") from exc
    if start < 0 or stop < start or count < 1:
        raise UsageError("--delays needs 0 <= start <= stop and count >= 1")
    return np.linspace(start, stop, count)


def cmd_pumpprobe(args, catalog) -> int:
    if not args.tau1 > 0:
        raise UsageError("--tau1 must be positive")
    crystal = _crystal(args, catalog)
    mode = crystal.molecule.mode(args.mode)
    delays = _parse_delays(args.delays)
    table = pump_probe_curve(IvrModel(args.tau1, mode), crystal, args.heating, delays, mode,
                             **_problem_kwargs(args))
    table.metadata.update(_base_meta(args, catalog))
    _emit(table.dumps(args.format), args.out)
    return EXIT_OK


def cmd_tables(args, catalog) -> int:
    photons = 1 if args.which == 2 else 2
    table = reproduce_tables(args.heating_rates, photons, catalog, **_problem_kwargs(args))
    table.metadata.update(_base_meta(args, catalog))
    table.metadata["table"] = args.which
    _emit(table.dumps(args.format), args.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _add_physics(p, heating_required=True):
    p.add_argument("--molecule", required=True)
    p.add_argument("--mode", default=None, help="mode label (default: strongest)")
    p.add_argument("--ion", default=None, help="logic ion (default: catalog entry)")
    p.add_argument("--trap-freq", dest="trap_freq_khz", type=float, default=500.0, help="kHz")
    p.add_argument("--heating", type=float, required=heating_required, default=0.0, help="quanta/s")


def _add_model(p):
    p.add_argument("--rabi-cap", dest="rabi_cap_khz", type=float, default=300.0, help="kHz")
    p.add_argument("--duration-model", choices=DURATION_MODELS, default="ld")
    p.add_argument("--objective", choices=OBJECTIVES, default="signal-minus-background")
    p.add_argument("--roundtrip-heating", dest="roundtrip", action="store_true", help="heat during the inverse mapping too")


def _add_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qls", description="Recoil spectroscopy of molecular ions with motional cat states.")
    parser.add_argument("--version", action="version", version=f"qls {__version__}")
    parser.add_argument("--catalog", default=None, help="catalog JSON (default: $QLS_CATALOG, then built-in)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("catalog", help="list, show or validate catalog entries")
    p.add_argument("action", choices=("list", "show", "validate"))
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("detect", help="single-photon or two-photon detection efficiency")
    _add_physics(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--angle", type=float, default=0.0, help="overlap angle in degrees")
    g.add_argument("--optimize-angle", action="store_true")
    p.add_argument("--alpha", type=float, default=None, help="cat size (default: optimised)")
    p.add_argument("--photons", type=int, choices=(1, 2), default=1)
    p.add_argument("--validate-full-dynamics", action="store_true")
    _add_model(p)
    _add_output(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("spectrum", help="spin-flip probability against pulse centre")
    _add_physics(p)
    p.add_argument("--from", dest="start", type=float, required=True, help="cm^-1")
    p.add_argument("--to", dest="stop", type=float, required=True, help="cm^-1")
    p.add_argument("--step", type=float, default=10.0, help="cm^-1")
    p.add_argument("--pulse-fs", type=float, default=200.0)
    p.add_argument("--pulse-area", type=float, default=1.0)
    _add_model(p)
    _add_output(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("pumpprobe", help="pump-probe delay curve")
    _add_physics(p)
    p.add_argument("--tau1", type=float, required=True, help="bright-state lifetime, s")
    p.add_argument("--delays", required=True, help="start:stop:count in s")
    _add_model(p)
    _add_output(p)
    p.set_defaults(func=cmd_pumpprobe)

    p = sub.add_parser("tables", help="reproduce the efficiency tables")
    p.add_argument("--which", type=int, choices=(2, 3), required=True)
    p.add_argument("--heating-rates", type=lambda s: [float(x) for x in s.split(",")],
                   default=list(TABLE_HEATING_RATES), help="comma-separated quanta/s")
    _add_model(p)
    _add_output(p)
    p.set_defaults(func=cmd_tables)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"qls: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        catalog = load_catalog(args.catalog)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return args.func(args, catalog)
    except (UsageError, NotFound, CatalogError, ValueError, OSError) as exc:
        print(f"qls: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleAlpha, StalledGeneration) as exc:
        print(f"qls: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"qls: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
