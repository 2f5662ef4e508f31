"""Command-line interface: ``ot-symmetry <subcommand> ...``.

Exit codes: 0 on success, 1 on any error, 2 when ``--fail-on-reject`` is set
and the test rejects.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__, seeding
from .confset import confidence_grid, confidence_hull
from .exceptions import IncompatibleERD, OTSymmetryError
from .group import SymmetryGroup
from .reference import ERDS, ReferenceSet, ScoreFunction, build_reference, check_erd
from .simulate import are_check, power_study, results_to_csv, results_to_json, scenario
from .stats import TEST_KINDS, exact_null, run_test


class CliError(Exception):
    """Problem with user input that should end in exit code 1."""


# --------------------------------------------------------------------------
# Input parsing


def _parse_rows(text, source):
    rows = []
    width = None
    first_data = True
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        fields = next(csv.reader([s]))
        try:
            vals = [float(v) for v in fields]
        except ValueError:
            if first_data and not rows:
                first_data = False
                continue  # header line
            raise CliError(f"{source}: line {lineno}: non-numeric value in {s!r}") from None
        first_data = False
        if not all(math.isfinite(v) for v in vals):
            raise CliError(f"{source}: line {lineno}: NaN or infinite value")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise CliError(f"{source}: line {lineno}: expected {width} columns, found {len(vals)}")
        rows.append(vals)
    if not rows:
        raise CliError(f"{source}: no data rows")
    return np.array(rows, dtype=float)


def read_matrix(path):
    """Read a numeric CSV (optional header, '#' comments) into an (n, p) array."""
    if path == "-":
        return _parse_rows(sys.stdin.read(), "<stdin>")
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    return _parse_rows(text, path)


def make_group(spec, p):
    if spec.startswith("finite:"):
        mats = read_matrix(spec.split(":", 1)[1])
        q = int(round(math.sqrt(mats.shape[1])))
        if q * q != mats.shape[1]:
            raise CliError("finite group file needs p*p columns per row (one flattened matrix per row)")
        if q != p:
            raise CliError(f"finite group acts on R^{q} but the data has p = {p}")
        return SymmetryGroup.finite(mats.reshape(-1, q, q))
    if spec not in ("central", "sign", "spherical"):
        raise CliError(f"unknown group {spec!r}")
    return SymmetryGroup.from_name(spec, p)


# --------------------------------------------------------------------------
# Subcommands


def _reference_for(args, group, n, seed):
    if getattr(args, "reference_file", None):
        ref = ReferenceSet.from_csv(args.reference_file, group=group, erd=args.erd)
        if ref.n != n:
            raise CliError(f"reference file has {ref.n} points but the data has {n} rows")
        return ref
    return build_reference(group, args.erd, n, args.construction, seed)


def _emit(text, args):
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_test(args):
    X = read_matrix(args.input)
    n, p = X.shape
    seed = seeding.resolve_seed(args.seed)
    ref = None
    if args.test != "hotelling":
        group = make_group(args.group, p)
        check_erd(group, args.erd)
        ref = _reference_for(args, group, n, seed)
        if args.score == "gaussian-plugin":
            ref = ref.with_score(ScoreFunction.from_data(X))
    rep = run_test(X, ref, args.test, args.alpha, args.calibration, args.B, seed)
    if args.output == "csv":
        d = rep.to_dict()
        d.pop("reference", None)
        d["raw"] = json.dumps(d["raw"])
        d["version"] = __version__
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=sorted(d), lineterminator="\n")
        w.writeheader()
        w.writerow(d)
        _emit(buf.getvalue(), args)
    else:
        _emit(rep.to_json(version=__version__) + "\n", args)
    return 2 if (args.fail_on_reject and rep.reject) else 0


def cmd_null_dist(args):
    seed = seeding.resolve_seed(args.seed)
    if args.input:
        X = read_matrix(args.input)
        n, p = X.shape
    else:
        if args.n is None or args.p is None:
            raise CliError("null-dist needs --input or both --n and --p")
        n, p = args.n, args.p
    group = make_group(args.group, p)
    check_erd(group, args.erd)
    ref = _reference_for(args, group, n, seed)
    if args.score == "gaussian-plugin":
        if not args.input:
            raise CliError("the plug-in score needs --input data")
        ref = ref.with_score(ScoreFunction.from_data(X))
    null = exact_null(ref, args.test, args.B, seeding.stream(seed, seeding.NULL))
    if args.output == "csv":
        _emit("statistic\n" + "".join(f"{v:.6g}\n" for v in null), args)
    else:
        body = {"test_kind": args.test, "B": len(null), "n": n, "p": p, "seed": seed,
                "reference": ref.metadata(), "null": [float(f"{v:.6g}") for v in null],
                "version": __version__}
        _emit(json.dumps(body, indent=2, sort_keys=True) + "\n", args)
    return 0


def _threads(args):
    from .simulate import default_threads
    return args.threads if args.threads else default_threads()


def cmd_power(args):
    name, lam = args.scenario, args.lam
    if args.table_row:
        name, _, lam_s = args.table_row.partition(":")
        lam = float(lam_s) if lam_s else 0.0
    if not name:
        raise CliError("power needs --scenario or --table-row")
    if args.reps is not None and args.reps < 1:
        raise CliError("--reps must be a positive integer")
    spec = scenario(name, lam, n=args.n, p=args.p)
    methods = args.method or ["gwsr", "sign", "hotelling"]
    group = None
    if args.group_override:
        group = make_group(args.group_override, spec.p)
    res = power_study(spec, methods, args.reps, args.alpha, seeding.resolve_seed(args.seed), group,
                      args.erd, args.construction, args.calibration, args.B, _threads(args))
    _emit(results_to_json(res) + "\n" if args.output == "json" else results_to_csv(res), args)
    return 0


def cmd_are(args):
    if args.reps < 1:
        raise CliError("--reps must be a positive integer")
    group = make_group(args.group, args.p)
    check_erd(group, args.erd)
    g, h = are_check(args.erd, group, args.shift, args.n, args.ratio, args.reps,
                     seeding.resolve_seed(args.seed), args.law, args.construction, _threads(args),
                     args.p, args.alpha)
    res = [g, h]
    if args.output == "json":
        rows = json.loads(results_to_json(res))
        body = {"gwsr": rows[0], "hotelling": rows[1],
                "difference": float(f"{g.power - h.power:.6g}"), "ratio": args.ratio}
        _emit(json.dumps(body, indent=2, sort_keys=True) + "\n", args)
    else:
        _emit(results_to_csv(res), args)
    return 0


def _parse_bounds(text, p):
    parts = [t for t in text.split(",") if t]
    out = []
    for t in parts:
        lo, _, hi = t.partition(":")
        out.append((float(lo), float(hi)))
    if len(out) == 1 and p > 1:
        out = out * p
    return out


def cmd_confset(args):
    X = read_matrix(args.input)
    n, p = X.shape
    group = make_group(args.group, p)
    check_erd(group, args.erd)
    seed = seeding.resolve_seed(args.seed)
    ref = _reference_for(args, group, n, seed)
    if args.score == "gaussian-plugin":
        ref = ref.with_score(ScoreFunction.from_data(X))
    if args.mode == "grid":
        bounds = _parse_bounds(args.bounds, p) if args.bounds else None
        cs = confidence_grid(X, alpha=args.alpha, bounds=bounds, step=args.step,
                             calibration=args.calibration, seed=seed, B=args.B, test_kind=args.test,
                             points=args.points, ref=ref)
    else:
        cs = confidence_hull(X, alpha=args.alpha, calibration=args.calibration, seed=seed, B=args.B,
                             test_kind=args.test, ref=ref)
    _emit(cs.to_csv() if args.output == "csv" else cs.to_json() + "\n", args)
    return 0


def cmd_reference(args):
    group = make_group(args.group, args.p)
    check_erd(group, args.erd)
    ref = build_reference(group, args.erd, args.n, args.construction, seeding.resolve_seed(args.seed))
    text = ref.to_csv()
    if args.emit and args.emit != "-":
        with open(args.emit, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------
# Parser


def _common(p, calibration_default="exact", tests=True):
    p.add_argument("--group", default="central",
                   help="central, sign, spherical or finite:<file> (one flattened p*p matrix per row)")
    p.add_argument("--erd", choices=ERDS, default="gaussian")
    p.add_argument("--construction", choices=("halton", "random"), default="halton")
    p.add_argument("--score", choices=("identity", "gaussian-plugin"), default="identity")
    p.add_argument("--calibration", default=calibration_default,
                   choices=("asymptotic", "exact", "auto") if calibration_default == "auto" else ("asymptotic", "exact"))
    p.add_argument("--B", "-B", type=int, default=999, help="Monte-Carlo null size (default 999)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None, help="64-bit unsigned master seed")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: OT_SYMMETRY_THREADS or all cores)")
    if tests:
        p.add_argument("--test", choices=TEST_KINDS, default="gwsr")


def build_parser():
    ap = argparse.ArgumentParser(prog="ot-symmetry",
                                 description="Distribution-free tests of multivariate symmetry.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test symmetry of a data set")
    _common(t)
    t.add_argument("--input", "-i", required=True, help="CSV file, or - for stdin")
    t.add_argument("--reference-file", help="reference CSV written by the reference subcommand")
    t.add_argument("--fail-on-reject", action="store_true", help="exit with status 2 on rejection")
    t.set_defaults(func=cmd_test)

    nd = sub.add_parser("null-dist", help="export the Monte-Carlo null distribution")
    _common(nd)
    nd.add_argument("--input", "-i")
    nd.add_argument("--n", type=int)
    nd.add_argument("--p", type=int)
    nd.add_argument("--reference-file")
    nd.set_defaults(func=cmd_null_dist)

    pw = sub.add_parser("power", help="empirical power on a named scenario")
    _common(pw, calibration_default="auto", tests=False)
    pw.set_defaults(group=None)
    pw.add_argument("--scenario")
    pw.add_argument("--lambda", dest="lam", type=float, default=0.0)
    pw.add_argument("--table-row", help="SCENARIO:LAMBDA, e.g. C1:0.2")
    pw.add_argument("--reps", type=int, default=1000)
    pw.add_argument("--method", action="append", choices=("gwsr", "sign", "hotelling"))
    pw.add_argument("--n", type=int)
    pw.add_argument("--p", type=int)
    pw.add_argument("--json", dest="output", action="store_const", const="json",
                    help="same as --output json")
    pw.set_defaults(func=cmd_power, output="csv")

    ar = sub.add_parser("are", help="GWSR on n samples against Hotelling's T^2 on ratio*n samples")
    _common(ar, tests=False)
    ar.add_argument("--law", choices=("epanechnikov", "gauss"), default="epanechnikov")
    ar.add_argument("--shift", type=float, default=0.05)
    ar.add_argument("--n", type=int, default=1000)
    ar.add_argument("--p", type=int, default=2)
    ar.add_argument("--ratio", type=float, default=0.864)
    ar.add_argument("--reps", type=int, default=1000)
    ar.set_defaults(func=cmd_are, construction="random")

    cs = sub.add_parser("confset", help="confidence set for the center of symmetry")
    _common(cs)
    cs.add_argument("--input", "-i", required=True)
    cs.add_argument("--reference-file")
    cs.add_argument("--mode", choices=("grid", "hull"), default="grid")
    cs.add_argument("--bounds", help="lo:hi[,lo:hi...]; default mean +- 3 sd")
    cs.add_argument("--step", type=float)
    cs.add_argument("--points", type=int, default=41)
    cs.set_defaults(func=cmd_confset)

    rf = sub.add_parser("reference", help="build and emit a reference set")
    _common(rf, tests=False)
    rf.add_argument("--n", type=int, required=True)
    rf.add_argument("--p", type=int, required=True)
    rf.add_argument("--emit", help="output CSV path (default stdout)")
    rf.set_defaults(func=cmd_reference)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "power":
        args.group_override = args.group
    try:
        if args.command != "power" and args.erd == "uniform" and args.group == "spherical":
            raise IncompatibleERD("the uniform ERD cannot be used with the spherical group")
        if getattr(args, "B", 999) < 100:
            raise CliError("--B must be at least 100")
        return args.func(args)
    except (CliError, OTSymmetryError, ValueError, OSError, KeyError, np.linalg.LinAlgError) as exc:
        msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": msg}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
