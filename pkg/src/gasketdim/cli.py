"""Command-line front end: ``gasketdim <command> [flags]``.

All CSV/JSON output uses fixed column order and 17-significant-digit reals,
so identical flags give byte-identical files.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

import numpy as np

from gasketdim.boxdim import (
    DEFAULT_OVERSAMPLE,
    box_count_series,
    estimate_dimension,
    fif_bounds,
    finite_energy_bounds,
    harmonic_bounds,
)
from gasketdim.energy import VertexFunction, energy_series
from gasketdim.fif import AlphaSpec, OperatorSpec, build_fif, parse_alpha
from gasketdim.gasket import check_level, enumerate_level, write_edges_csv, write_vertices_csv
from gasketdim.harmonic import BoundaryValues, PiecewiseHarmonicSpec, harmonic_extend, piecewise_harmonic_extend
from gasketdim.io import dumps_json
from gasketdim.providers import VertexTableProvider, parse_provider


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise CliError(f"{args.command}: missing required " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _rng(args) -> np.random.Generator:
    return np.random.default_rng(args.seed)


def _parse_levels(text: str) -> tuple[int, int]:
    lo, sep, hi = str(text).partition("..")
    try:
        m0, m1 = (int(lo), int(hi)) if sep else (0, int(lo))
    except ValueError:
        raise CliError(f"--levels expects M0..M1, got {text!r}") from None
    if not 0 <= m0 <= m1:
        raise CliError(f"--levels needs 0 <= M0 <= M1, got {text!r}")
    return m0, m1


def _parse_boundary(text: str, rng) -> BoundaryValues:
    if str(text).strip() == "random":
        return BoundaryValues.of(rng.uniform(0.0, 1.0, 3))
    parts = [float(t) for t in str(text).split(",")]
    if len(parts) != 3:
        raise CliError(f"--boundary needs three values A,B,C, got {text!r}")
    return BoundaryValues.of(parts)


def _load_piecewise(path: str) -> PiecewiseHarmonicSpec:
    """``{"partition_level": p, "cells": {"12": [A, B, C], ...}}``."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        return PiecewiseHarmonicSpec(int(doc["partition_level"]), doc["cells"])
    except KeyError as exc:
        raise CliError(f"piecewise spec {path} lacks key {exc.args[0]!r}") from None


def _read_table(path: str) -> VertexFunction:
    with open(path, newline="") as fh:
        return VertexFunction.from_csv(fh)


def cmd_gasket(args) -> None:
    _require(args, "level", "out")
    g = enumerate_level(check_level(args.level))
    with _output(args.out) as fh:
        write_vertices_csv(g, fh)
    if args.edges:
        with _output(args.edges) as fh:
            write_edges_csv(g, fh)


def cmd_harmonic(args) -> None:
    _require(args, "level")
    if args.piecewise:
        u = piecewise_harmonic_extend(_load_piecewise(args.piecewise), check_level(args.level))
    else:
        _require(args, "boundary")
        u = harmonic_extend(_parse_boundary(args.boundary, _rng(args)), check_level(args.level))
    with _output(args.out) as fh:
        u.to_csv(fh)


def cmd_fif(args) -> None:
    _require(args, "n", "alpha", "f", "b", "level")
    rng = _rng(args)
    f = parse_provider(args.f)
    if args.b.strip() == "harmonic":
        b = OperatorSpec("harmonic_interpolant").apply(f)
    else:
        b = parse_provider(args.b)
    alpha: AlphaSpec = parse_alpha(str(args.alpha), int(args.n), rng)
    inst = build_fif(f, b, alpha, check_level(args.level))

    header_path = args.header
    if header_path is None and args.out not in (None, "-"):
        header_path = str(Path(args.out).with_suffix(".json"))
    if args.out is not None or not args.energy_series:
        with _output(args.out) as fh:
            inst.values.to_csv(fh)
    if header_path is not None:
        with _output(header_path) as fh:
            fh.write(dumps_json(inst.header()))
    if args.energy_series:
        series = energy_series(inst.values.restrict, inst.level)
        with _output(args.series_out) as fh:
            series.to_csv(fh)


def cmd_energy(args) -> None:
    _require(args, "input", "levels")
    m0, m1 = _parse_levels(args.levels)
    check_level(m1)
    provider = VertexTableProvider(_read_table(args.input), args.input)
    series = energy_series(provider, m1, m_min=m0)
    with _output(args.out) as fh:
        series.to_csv(fh)


def cmd_boxdim(args) -> None:
    _require(args, "input", "kmin", "kmax")
    u = _read_table(args.input)
    r = int(args.oversample)
    if r < 1:
        raise CliError("--oversample must be at least 1")
    if u.level < args.kmax + r:
        raise CliError(f"input level {u.level} is below kmax + oversample = {args.kmax + r}")
    series = box_count_series(u, args.kmin, args.kmax, args.method, r, threads=args.threads)
    with _output(args.out) as fh:
        if args.plot_data:
            series.plot_csv(fh)
        else:
            series.to_csv(fh)
    if args.report:
        est = estimate_dimension(series)
        report = {"method": args.method, "oversample": r, "input_level": u.level, **est.as_dict()}
        with _output(args.report) as fh:
            fh.write(dumps_json(report))


def cmd_bounds(args) -> None:
    _require(args, "kind")
    if args.kind == "harmonic":
        lo, hi = harmonic_bounds()
        doc = {"lower": lo, "upper": hi}
    elif args.kind == "energy":
        lo, hi = finite_energy_bounds()
        doc = {"lower": lo, "upper": hi}
    else:
        _require(args, "psi", "eta")
        fb = fif_bounds(args.psi, args.eta)
        doc = {"lower": fb.lower, "upper": fb.upper, "case": fb.case, "psi": args.psi, "eta": args.eta}
    with _output(args.out) as fh:
        fh.write(dumps_json(doc))


COMMANDS = {
    "gasket": cmd_gasket,
    "harmonic": cmd_harmonic,
    "fif": cmd_fif,
    "energy": cmd_energy,
    "boxdim": cmd_boxdim,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized inputs")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--config", help="JSON file with default values for this command's flags")
    common.add_argument("--out", help="output file (default: standard output)")

    parser = _Parser(prog="gasketdim", description="Energy and box-dimension experiments on the Sierpinski gasket.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gasket", parents=[common], help="vertex (and edge) tables of a level")
    p.add_argument("--level", type=int)
    p.add_argument("--edges", help="also write the edge table here")

    p = sub.add_parser("harmonic", parents=[common], help="harmonic or piecewise-harmonic function")
    p.add_argument("--boundary", help="A,B,C or 'random'")
    p.add_argument("--level", type=int)
    p.add_argument("--piecewise", help="JSON file with per-cell boundary triples")

    p = sub.add_parser("fif", parents=[common], help="alpha-fractal interpolation function")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", help="comma list, single value, random[:MAX] or JSON word map")
    p.add_argument("--f", help="seed function spec")
    p.add_argument("--b", help="base function spec, or 'harmonic' for the seed's harmonic interpolant")
    p.add_argument("--level", type=int)
    p.add_argument("--energy-series", action="store_true", help="emit (m, crude, renormalized) for m <= level")
    p.add_argument("--series-out", help="file for the energy series (default: standard output)")
    p.add_argument("--header", help="JSON header file (default: --out with suffix .json)")

    p = sub.add_parser("energy", parents=[common], help="energy series of a tabulated function")
    p.add_argument("--input")
    p.add_argument("--levels", help="M0..M1")

    p = sub.add_parser("boxdim", parents=[common], help="box counts of a function graph")
    p.add_argument("--input")
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--method", choices=("column", "grid"), default="column")
    p.add_argument("--oversample", type=int, default=DEFAULT_OVERSAMPLE)
    p.add_argument("--plot-data", action="store_true", help="emit (k log 2, log N) instead of raw counts")
    p.add_argument("--report", help="write the regression estimate as JSON here")

    p = sub.add_parser("bounds", parents=[common], help="theoretical dimension bounds")
    p.add_argument("--kind", choices=("harmonic", "energy", "fif"))
    p.add_argument("--psi", type=float)
    p.add_argument("--eta", type=float)
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise CliError("a command is required: " + ", ".join(COMMANDS))
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise CliError("--config must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(k for k in (key.replace("-", "_") for key in config) if k not in known)
        if unknown:
            raise CliError(f"{args.command}: unknown config keys {unknown}")
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in config.items()})
        # flags given on the command line still win over the config file
        args = parser.parse_args(argv)
    if args.threads < 1:
        raise CliError("--threads must be at least 1")
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        COMMANDS[args.command](args)
    except (CliError, ValueError, KeyError, OSError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"gasketdim: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
