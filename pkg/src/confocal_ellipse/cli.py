"""Command-line front end.

Every subcommand takes long-form flags only. Data outputs are
deterministic given the flags; each file written is accompanied by a
``<file>.manifest.json`` recording the flags, seed and a timestamp.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import benchmark as bench
from . import cylinder as cyl
from .conic import (
    ConicClass,
    algebraic_to_geometric,
    canonicalize,
    classify_conic,
    geometric_to_algebraic,
)
from .distance import (
    algebraic_distance,
    confocal_distance,
    confocal_residuals,
    oracle_distance,
    sampson_distance,
)
from .errors import (
    DegenerateInput,
    EllipseError,
    EmptyResult,
    InitializationFailed,
    InvalidAxes,
    NumericalFailure,
    ParseError,
)
from .fitters import LMConfig, fit_circle_lm, fit_confocal_lm, fit_halir, fit_taubin
from .simulate import SimConfig, format_points, rasterize_ellipse, read_points, rmse

PROG = "confocal-ellipse"
SCHEMA = 1
SWEEP_LINES = ("major-axis", "minor-axis", "diagonal")
SEEDED = ("simulate", "bench-distance", "bench-fit", "cylinder")


class CliError(Exception):
    """Failure with the pipeline stage it happened in and an exit code."""

    def __init__(self, stage, message, code=2):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.code = code


def _floats(text, n, name):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must be {n} comma-separated numbers") from None
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"{name} must be {n} comma-separated finite numbers")
    return tuple(vals)


def _rho(text):
    return _floats(text, 5, "--rho")


def _point(text):
    return _floats(text, 2, "--point")


def _fmt(x):
    return repr(float(x))


def _manifest(args):
    flags = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {
        "schema": SCHEMA,
        "tool": PROG,
        "version": __version__,
        "subcommand": args.command,
        "flags": flags,
        "seed": getattr(args, "seed", None),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _write_output(args, text):
    """Write ``text`` to ``--out`` (plus its manifest) or to stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    try:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        with open(args.out + ".manifest.json", "w") as fh:
            json.dump(_manifest(args), fh, indent=2, default=_json_default)
            fh.write("\n")
    except OSError as exc:
        raise CliError("write output", str(exc)) from exc


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _read_points(path):
    try:
        return read_points(path)
    except ParseError as exc:
        raise CliError("read points", f"{path}: {exc}") from exc
    except OSError as exc:
        raise CliError("read points", str(exc)) from exc


# -- fit -----------------------------------------------------------------------

def cmd_fit(args):
    pts = _read_points(args.points)
    try:
        config = LMConfig(args.lambda0, args.nu0, args.gamma, args.max_iters, args.rel_tol)
    except ValueError as exc:
        raise CliError("parse lm flags", str(exc)) from exc
    iterations, status = 0, "direct"
    try:
        if args.method == "halir":
            ell = fit_halir(pts)
        elif args.method == "taubin":
            tau = fit_taubin(pts)
            if classify_conic(tau) is not ConicClass.ELLIPSE:
                raise CliError("fit", f"fit is not an ellipse (Taubin returned a "
                                      f"{classify_conic(tau).value})")
            ell = algebraic_to_geometric(tau)
        elif args.method == "circle":
            res = fit_circle_lm(pts, config)
            ell, iterations, status = res.ellipse, res.iterations, res.status.value
        else:
            res = fit_confocal_lm(pts, config)
            ell, iterations, status = res.ellipse, res.iterations, res.status.value
    except InitializationFailed as exc:
        raise CliError("initial fit", str(exc)) from exc
    except DegenerateInput as exc:
        raise CliError("fit", str(exc)) from exc
    except NumericalFailure as exc:
        raise CliError("fit", str(exc), code=3) from exc
    sd = float(np.sum(confocal_residuals(ell, pts, jacobian=False)[0] ** 2))
    err = rmse(ell, pts)
    doc = {
        "schema": SCHEMA,
        "method": args.method,
        "n_points": int(len(pts)),
        "ellipse": dict(zip(("xc", "yc", "a", "b", "theta"), map(float, ell))),
        "iterations": int(iterations),
        "status": status,
        "final_sd": sd,
        "rmse": err,
    }
    if args.json:
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = (
            f"method      {args.method}\n"
            f"points      {len(pts)}\n"
            f"rho         {','.join(_fmt(v) for v in ell)}\n"
            f"iterations  {iterations}\n"
            f"status      {status}\n"
            f"final_sd    {_fmt(sd)}\n"
            f"rmse        {_fmt(err)}\n"
        )
    _write_output(args, text)


# -- distance ------------------------------------------------------------------

def _distance_row(rho, pts):
    tau = geometric_to_algebraic(rho)
    alg = np.abs(algebraic_distance(tau, pts))
    samp = np.abs(sampson_distance(tau, pts, strict=False))
    conf = confocal_distance(rho, pts).norm
    orc = oracle_distance(rho, pts)
    return alg, samp, conf, orc


def _sweep_points(line, lo, hi, steps):
    t = np.linspace(lo, hi, steps)
    if line == "major-axis":
        return t, np.column_stack([t, np.zeros_like(t)])
    if line == "minor-axis":
        return t, np.column_stack([np.zeros_like(t), t])
    return t, np.column_stack([t, t])


def cmd_distance(args):
    try:
        rho = canonicalize(args.rho)
    except InvalidAxes as exc:
        raise CliError("parse ellipse", str(exc)) from exc
    if args.sweep:
        t, pts = _sweep_points(args.sweep, args.range[0], args.range[1], args.steps)
        alg, samp, conf, orc = _distance_row(rho, pts)
        buf = io.StringIO()
        buf.write("t,x,y,algebraic,sampson,confocal,oracle\n")
        for row in zip(t, pts[:, 0], pts[:, 1], alg, samp, conf, orc):
            buf.write(",".join("nan" if not math.isfinite(v) else _fmt(v) for v in row) + "\n")
        _write_output(args, buf.getvalue())
        return
    if args.point is None:
        raise CliError("parse point", "--point is required unless --sweep is given")
    alg, samp, conf, orc = (float(v) for v in _distance_row(rho, np.array(args.point)))
    values = {"algebraic": alg, "sampson": samp, "confocal": conf, "oracle": orc}
    if args.json:
        doc = {"schema": SCHEMA, "rho": list(rho), "point": list(args.point),
               "distances": {k: (v if math.isfinite(v) else None) for k, v in values.items()}}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = "".join(
            f"{k:<10}  {_fmt(v) if math.isfinite(v) else 'undefined'}\n" for k, v in values.items()
        )
    _write_output(args, text)


# -- simulate ------------------------------------------------------------------

def cmd_simulate(args):
    try:
        config = SimConfig(tuple(args.rho), args.alpha_s, args.alpha_f, args.sigma, args.seed)
    except (InvalidAxes, ValueError) as exc:
        raise CliError("parse config", str(exc)) from exc
    try:
        pts = rasterize_ellipse(config)
    except EmptyResult as exc:
        raise CliError("simulate", str(exc)) from exc
    header = {
        "rho": ",".join(_fmt(v) for v in config.rho),
        "alpha_s": _fmt(config.alpha_s),
        "alpha_f": _fmt(config.alpha_f),
        "sigma": _fmt(config.sigma),
        "seed": config.seed,
        "points": len(pts),
    }
    _write_output(args, format_points(pts, header))


# -- benchmarks ----------------------------------------------------------------

def _records_text(args, records, **extra):
    if args.json:
        return bench.records_to_json(records, **extra) + "\n"
    buf = io.StringIO()
    bench.write_records_csv(buf, records)
    return buf.getvalue()


def cmd_bench_distance(args):
    records = bench.run_distance_benchmark(args.n, args.seed, sigma=args.sigma,
                                           workers=args.threads)
    _write_output(args, _records_text(args, records, suite="distance", seed=args.seed))


def cmd_bench_fit(args):
    records = bench.run_fit_benchmark(args.suite, args.repeats, args.seed, n_configs=args.n,
                                      workers=args.threads)
    _write_output(args, _records_text(args, records, suite=args.suite, seed=args.seed))


# -- cylinder ------------------------------------------------------------------

def cmd_cylinder(args):
    try:
        cloud = cyl.load_point_cloud(args.cloud)
    except ParseError as exc:
        raise CliError("read cloud", f"{args.cloud}: {exc}") from exc
    except (OSError, EllipseError) as exc:
        raise CliError("read cloud", str(exc)) from exc
    try:
        ref = cyl.load_reference(args.reference)
    except (OSError, ValueError) as exc:
        raise CliError("read reference", str(exc)) from exc
    fitters = tuple(f.strip() for f in args.fitters.split(",") if f.strip())
    unknown = [f for f in fitters if f not in cyl.FITTERS]
    if not fitters or unknown:
        raise CliError("parse fitters", f"choose from {', '.join(cyl.FITTERS)}")
    rows = cyl.run_cylinder_benchmark(cloud, ref, args.planes, args.seed, fitters,
                                      band=args.band, max_points=args.max_points)
    if args.json:
        text = json.dumps({"schema": SCHEMA, "rows": [r._asdict() for r in rows]}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        cyl.write_benchmark_csv(buf, rows)
        text = buf.getvalue()
    _write_output(args, text)


# -- parser --------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", help="output file; a .manifest.json is written next to it")
    p.add_argument("--json", action="store_true", help="emit JSON instead of text/CSV")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker processes")


def build_parser():
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("fit", help="fit an ellipse to a point file", allow_abbrev=False)
    p.add_argument("--points", required=True, help="two-column point file")
    p.add_argument("--method", choices=("confocal", "halir", "taubin", "circle"),
                   default="confocal")
    d = LMConfig()
    p.add_argument("--lambda0", type=float, default=d.lambda0)
    p.add_argument("--nu0", type=float, default=d.nu0)
    p.add_argument("--gamma", type=float, default=d.gamma)
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    p.add_argument("--rel-tol", type=float, default=d.rel_tol)
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("distance", help="compare distance measures", allow_abbrev=False)
    p.add_argument("--rho", type=_rho, required=True, help="xc,yc,a,b,theta")
    p.add_argument("--point", type=_point, help="x,y")
    p.add_argument("--sweep", choices=SWEEP_LINES, help="emit a CSV along a line instead")
    p.add_argument("--range", type=lambda s: _floats(s, 2, "--range"), default=(-10.0, 10.0),
                   help="sweep parameter range lo,hi (default -10,10)")
    p.add_argument("--steps", type=_positive_int, default=201)
    _common(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("simulate", help="simulate pixelated edge points", allow_abbrev=False)
    p.add_argument("--rho", type=_rho, required=True, help="xc,yc,a,b,theta")
    p.add_argument("--alpha-s", type=float, default=0.0)
    p.add_argument("--alpha-f", type=float, default=2 * math.pi)
    p.add_argument("--sigma", type=float, default=0.0)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench-distance", help="distance accuracy benchmark",
                       allow_abbrev=False)
    p.add_argument("--n", type=_positive_int, default=1000, help="number of random ellipses")
    p.add_argument("--sigma", type=float, default=None, help="fixed noise level")
    _common(p)
    p.set_defaults(func=cmd_bench_distance)

    p = sub.add_parser("bench-fit", help="fitter accuracy benchmark", allow_abbrev=False)
    p.add_argument("--suite", choices=bench.SUITES, default="overall")
    p.add_argument("--repeats", type=_positive_int, default=50)
    p.add_argument("--n", type=_positive_int, default=200,
                   help="random configurations (overall suite)")
    _common(p)
    p.set_defaults(func=cmd_bench_fit)

    p = sub.add_parser("cylinder", help="cylinder recovery benchmark", allow_abbrev=False)
    p.add_argument("--cloud", required=True, help="x y z point file (metres)")
    p.add_argument("--reference", required=True, help="JSON reference cylinder")
    p.add_argument("--planes", type=_positive_int, default=1000)
    p.add_argument("--band", type=float, default=0.001)
    p.add_argument("--max-points", type=_positive_int, default=50)
    p.add_argument("--fitters", default="halir,confocal")
    _common(p)
    p.set_defaults(func=cmd_cylinder)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(f"{PROG} {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    except NumericalFailure as exc:
        print(f"{PROG} {args.command}: error: numerical failure: {exc}", file=sys.stderr)
        return 3
    except EllipseError as exc:
        print(f"{PROG} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if args.command in SEEDED:
        print(f"seed: {args.seed}", file=sys.stderr)
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
