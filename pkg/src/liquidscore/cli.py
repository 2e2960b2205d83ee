"""Command-line interface: ``liquidscore {fit,validate,plot,basis,gen}``.

Exit status: 0 success, 2 bad input (parse, schema, dimensions), 3
infeasible constraints, 4 numerical failure.  Logs go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import splines
from .divstats import DegenerateDataError, score_divergence
from .scorecard import (
    FitError,
    InfeasibleFitError,
    build_design_matrix,
    coefficient_layout,
    fit,
    plot_series,
    split_masks,
    write_plot_csv,
)
from .specfile import SpecError, load_spec
from .synthetic import write_dataset
from .tables import TableError, format_number, read_csv

log = logging.getLogger("liquidscore")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

COEFF_HEADER = ("index", "characteristic", "label", "raw", "woe")


class InputError(Exception):
    pass


def write_coefficients(path, columns, raw, woe) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COEFF_HEADER)
        for col in columns:
            w.writerow([col.number, col.characteristic, col.label, repr(float(raw[col.index])), repr(float(woe[col.index]))])


def read_coefficients(path, layout, column="woe") -> np.ndarray:
    """Coefficient vector from a coefficient CSV, checked against `layout`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != COEFF_HEADER:
        raise InputError(f"{path}: expected header {','.join(COEFF_HEADER)}")
    body = rows[1:]
    if len(body) != len(layout):
        raise InputError(f"{path}: {len(body)} coefficients, spec defines {len(layout)}")
    pos = COEFF_HEADER.index(column)
    out = np.empty(len(layout))
    for row, col in zip(body, layout):
        if int(row[0]) != col.number or row[1] != col.characteristic or row[2] != col.label:
            raise InputError(f"{path}: row {row[:3]} does not match coefficient {col.number} "
                             f"({col.characteristic}, {col.label})")
        out[col.index] = float(row[pos])
    return out


def _mkdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fit(args) -> int:
    spec = load_spec(args.spec)
    data = read_csv(args.data)
    out = _mkdir(args.out)
    result = fit(spec, data)
    write_coefficients(out / "coefficients.csv", result.columns, result.coeffs_raw, result.coeffs_woe)
    for name, series in result.plot_series.items():
        write_plot_csv(out / f"plot_{name}.csv", series)
    dev, val = split_masks(data, spec.fit.split_column, spec.fit.validation_values)
    report = {
        "p": len(result.columns),
        "n_dev": int(dev.sum()),
        "n_val": int(val.sum()),
        "beta": result.beta,
        "dev_divergence": result.dev_divergence,
        "val_divergence": result.val_divergence,
        "qp": {
            "status": result.qp.status.value,
            "iterations": result.qp.iterations,
            "objective": result.qp.objective,
        },
        "kkt": result.kkt.as_dict(),
        "constraint_residuals": result.residuals,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    log.info("dev divergence %.6f, val divergence %s", result.dev_divergence, result.val_divergence)
    return EXIT_OK


def cmd_validate(args) -> int:
    spec = load_spec(args.spec)
    data = read_csv(args.data)
    dm = build_design_matrix(spec, data)
    S = read_coefficients(args.coeffs, dm.columns, args.column)
    y = data.get(spec.fit.label_column)
    if y is None:
        raise InputError(f"data has no label column {spec.fit.label_column!r}")
    dev, val = split_masks(data, spec.fit.split_column, spec.fit.validation_values)
    result = {}
    for name, mask in (("dev", dev), ("val", val)):
        result[name] = score_divergence(S, dm.values[mask], y[mask]) if mask.any() else None
    if args.json:
        json.dump(result, sys.stdout)
        sys.stdout.write("\n")
    else:
        for name, div in result.items():
            print(f"{name} divergence: {'n/a' if div is None else repr(div)}")
    return EXIT_OK


def _traditional(path):
    if path is None:
        return {}
    with open(path) as fh:
        doc = json.load(fh)
    out = {}
    for name, entry in doc.items():
        if isinstance(entry, list):
            out[name] = (entry, None)
        else:
            out[name] = (entry["weights"], entry.get("knots"))
    return out


def cmd_plot(args) -> int:
    spec = load_spec(args.spec)
    layout = coefficient_layout(spec)
    S = read_coefficients(args.coeffs, layout, args.column)
    trad = _traditional(args.traditional)
    liquid = [c for c in spec.characteristics if c.liquid is not None]
    if not liquid:
        log.warning("spec has no liquid characteristics; nothing to plot")
        return EXIT_OK
    out = _mkdir(args.out)
    for c in liquid:
        idx = [col.index for col in layout if col.characteristic == c.name and col.kind == "basis"]
        weights, knots = trad.get(c.name, (None, None))
        series = plot_series(c, S[idx], weights, args.points, knots)
        write_plot_csv(out / f"plot_{c.name}.csv", series)
    return EXIT_OK


def cmd_basis(args) -> int:
    knots = [float(v) for v in args.knots.split(",")]
    k = splines.validate_knots(knots)
    if args.points < 2:
        raise InputError("--points must be at least 2")
    x = np.linspace(k[0], k[-1], args.points)
    x[-1] = k[-1]
    B = splines.basis_block(x, k, args.order).values
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + [f"b{j}" for j in range(1, B.shape[1] + 1)])
        for xi, row in zip(x, B):
            w.writerow([format_number(xi)] + [format_number(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_gen(args) -> int:
    with open(args.seed_config) as fh:
        config = json.load(fh)
    info = write_dataset(config, args.out)
    log.info("wrote %s (intercept %.6f)", args.out, info["intercept"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liquidscore", description="Fit and inspect liquid scorecards.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a scorecard and write coefficients, report and plot data")
    p.add_argument("--spec", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="divergence of a coefficient file on the dev/val split")
    p.add_argument("--spec", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--coeffs", required=True)
    p.add_argument("--column", choices=["raw", "woe"], default="woe")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="write step/spline plot series per liquid characteristic")
    p.add_argument("--spec", required=True)
    p.add_argument("--coeffs", required=True)
    p.add_argument("--traditional", help="JSON of traditional score weights per characteristic")
    p.add_argument("--column", choices=["raw", "woe"], default="woe")
    p.add_argument("--points", type=int, default=100, help="number of intervals (points - 1)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("basis", help="tabulate a B-spline basis")
    p.add_argument("--knots", required=True, help="comma-separated knots")
    p.add_argument("--order", type=int, choices=[1, 2, 3, 4], default=4)
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--out", help="output CSV (default: standard output)")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("gen", help="generate a seeded synthetic dataset")
    p.add_argument("--seed-config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InfeasibleFitError as exc:
        log.error("infeasible: %s", exc)
        return EXIT_INFEASIBLE
    except FitError as exc:
        if exc.stage in ("design", "constraints"):
            log.error("input error in %s", exc)
            return EXIT_INPUT
        log.error("numerical failure in %s", exc)
        return EXIT_NUMERIC
    except DegenerateDataError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (SpecError, TableError, InputError, OSError, KeyError, ValueError,
            jsonschema.ValidationError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
