"""Monte Carlo benchmarks for distance approximations and ellipse fitters.

Every random draw comes from ``numpy.random.SeedSequence(seed, spawn_key=...)``
keyed by the trial's position, so results do not depend on execution order
or on the number of worker processes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .conic import (
    ConicClass,
    algebraic_to_geometric,
    canonicalize,
    classify_conic,
    geometric_to_algebraic,
)
from .distance import algebraic_distance, confocal_distance, oracle_distance, sampson_distance
from .errors import EllipseError
from .fitters import LMConfig, fit_confocal_lm, fit_halir, fit_taubin
from .simulate import edge_contacts, noisy_pixels, p_error, rmse

__all__ = [
    "BenchmarkRecord",
    "BASE_CONFIG",
    "SWEEPS",
    "SUITES",
    "FIT_METHODS",
    "summarize",
    "run_distance_benchmark",
    "run_fit_benchmark",
    "write_records_csv",
    "records_to_json",
]

FIT_METHODS = ("halir", "taubin", "confocal")
SUITES = ("overall", "rotation", "aspect", "noise", "arc")

# Base configuration of the one-at-a-time sweeps. Semi-minor length and
# center are not fixed by the experiment description; see README.
BASE_CONFIG = dict(xc=0.0, yc=0.0, b=50.0, theta=math.pi / 4, aspect=2.0, sigma=2.0,
                   alpha_s=0.0, arc=2 * math.pi)

SWEEPS = {
    "rotation": ("theta", np.linspace(0.0, math.pi, 21)),
    "aspect": ("aspect", np.linspace(1.0, 4.0, 21)),
    "noise": ("sigma", np.linspace(0.0, 5.0, 21)),
    "arc": ("arc", np.linspace(math.pi / 2, 2 * math.pi, 21)),
}

_TAGS = {"distance_config": 1, "distance_noise": 2, "fit_config": 3, "fit_noise": 4,
         "sweep_noise": 5}


def _rng(seed, tag, *key):
    ss = np.random.SeedSequence(int(seed), spawn_key=(_TAGS[tag], *map(int, key)))
    return np.random.default_rng(ss)


@dataclass
class BenchmarkRecord:
    """Summary statistics of one measured quantity for one method and setting."""

    suite: str
    parameter: str
    value: float
    method: str
    quantity: str
    n: int
    mean: float
    median: float
    p95: float
    failures: int = 0

    def as_dict(self):
        return dataclasses.asdict(self)


def summarize(samples):
    """``(n, mean, median, p95)`` of the finite samples; percentiles interpolate linearly."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    x = x[np.isfinite(x)]
    if x.size == 0:
        return 0, math.nan, math.nan, math.nan
    return int(x.size), float(x.mean()), float(np.percentile(x, 50)), float(np.percentile(x, 95))


def _record(suite, parameter, value, method, quantity, samples, failures=0):
    n, mean, med, p95 = summarize(samples)
    return BenchmarkRecord(suite, parameter, float(value), method, quantity, n, mean, med, p95,
                           int(failures))


def _map(fn, items, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(it) for it in items]


# -- distance approximations ---------------------------------------------------

def _distance_trial(args):
    seed, i, sigma_fixed = args
    rng = _rng(seed, "distance_config", i)
    theta = rng.uniform(0.0, math.pi)
    aspect = rng.uniform(1.5, 4.0)
    sigma = rng.uniform(0.5, 15.0)
    center = rng.uniform(0.0, 1.0, size=2)
    if sigma_fixed is not None:
        sigma = sigma_fixed
    b = 50.0
    truth = canonicalize((center[0], center[1], aspect * b, b, theta))
    pixels, contacts = edge_contacts(truth, 0.0, math.pi / 2)
    pts = noisy_pixels(pixels, contacts, sigma, _rng(seed, "distance_noise", i))
    ref = oracle_distance(truth, pts)
    tau = geometric_to_algebraic(truth)
    return {
        "algebraic": np.abs(np.abs(algebraic_distance(tau, pts)) - ref),
        "sampson": np.abs(np.abs(sampson_distance(tau, pts, strict=False)) - ref),
        "confocal": np.abs(confocal_distance(truth, pts).norm - ref),
    }


def run_distance_benchmark(n_ellipses, seed, sigma=None, workers=1):
    """Absolute deviation of each distance approximation from the true distance.

    Each random ellipse has semi-minor 50 px, aspect ratio in [1.5, 4],
    rotation in [0, pi), noise sigma in [0.5, 15] px (or ``sigma`` when
    given) and spans a quarter arc. Sampson values at critical points are
    counted as failures and left out of the statistics.
    """
    if n_ellipses < 1:
        raise ValueError("n_ellipses must be at least 1")
    trials = _map(_distance_trial, [(seed, i, sigma) for i in range(n_ellipses)], workers)
    records = []
    for method in ("algebraic", "sampson", "confocal"):
        vals = np.concatenate([t[method] for t in trials])
        records.append(_record("distance", "n_ellipses", n_ellipses, method, "abs_deviation",
                               vals, failures=int(np.sum(~np.isfinite(vals)))))
    return records


# -- fitters -------------------------------------------------------------------

def fit_all(points, truth, methods=FIT_METHODS, config=None):
    """Fit ``points`` with each method; returns ``{method: (rmse, p_error, iterations)}``.

    Methods that fail (degenerate input, Taubin returning a non-ellipse, ...)
    map to ``None``.
    """
    config = config or LMConfig()
    out = {}
    halir = None
    try:
        halir = fit_halir(points)
    except EllipseError:
        pass
    for m in methods:
        try:
            if m == "halir":
                if halir is None:
                    raise EllipseError("halir failed")
                est, iters = halir, 0
            elif m == "taubin":
                tau = fit_taubin(points)
                if classify_conic(tau) is not ConicClass.ELLIPSE:
                    raise EllipseError("not an ellipse")
                est, iters = algebraic_to_geometric(tau), 0
            elif m == "confocal":
                if halir is None:
                    raise EllipseError("halir failed")
                res = fit_confocal_lm(points, config, init=halir)
                est, iters = res.ellipse, res.iterations
            else:
                raise ValueError(f"unknown method {m!r}")
        except EllipseError:
            out[m] = None
            continue
        out[m] = (rmse(est, points), p_error(est, truth), iters)
    return out


def _config_trials(truth, alpha_s, arc, sigma, repeats, rng_for, methods):
    pixels, contacts = edge_contacts(truth, alpha_s, alpha_s + arc)
    res = {m: {"rmse": [], "p_error": [], "iterations": [], "failures": 0} for m in methods}
    for r in range(repeats):
        pts = noisy_pixels(pixels, contacts, sigma, rng_for(r))
        fits = fit_all(pts, truth, methods) if len(pts) >= 6 else {m: None for m in methods}
        for m, v in fits.items():
            if v is None:
                res[m]["failures"] += 1
                continue
            res[m]["rmse"].append(v[0])
            res[m]["p_error"].append(v[1])
            res[m]["iterations"].append(v[2])
    return res


def _overall_trial(args):
    seed, i, repeats, methods = args
    rng = _rng(seed, "fit_config", i)
    theta = rng.uniform(0.0, math.pi)
    aspect = rng.uniform(1.5, 4.0)
    sigma = rng.uniform(0.5, 5.0)
    b = rng.uniform(10.0, 100.0)
    arc = (2 * math.pi, 1.5 * math.pi, math.pi)[rng.integers(3)]
    center = rng.uniform(0.0, 1.0, size=2)
    truth = canonicalize((center[0], center[1], aspect * b, b, theta))
    return _config_trials(truth, 0.0, arc, sigma, repeats,
                          lambda r: _rng(seed, "fit_noise", i, r), methods)


def _sweep_trial(args):
    seed, suite_idx, j, param, value, repeats, methods = args
    cfg = dict(BASE_CONFIG)
    cfg[param] = float(value)
    b = cfg["b"]
    truth = canonicalize((cfg["xc"], cfg["yc"], cfg["aspect"] * b, b, cfg["theta"]))
    return _config_trials(truth, cfg["alpha_s"], cfg["arc"], cfg["sigma"], repeats,
                          lambda r: _rng(seed, "sweep_noise", suite_idx, j, r), methods)


def run_fit_benchmark(suite, repeats, seed, n_configs=200, methods=FIT_METHODS, workers=1,
                      values=None):
    """Compare fitters on simulated edge points.

    ``suite="overall"`` draws ``n_configs`` random ellipses (aspect 1.5-4,
    sigma 0.5-5 px, semi-minor 10-100 px, arc 2pi, 3pi/2 or pi) and pools
    RMSE, P-Error and iteration counts over all configs and repeats. The
    sweeps (``rotation``, ``aspect``, ``noise``, ``arc``) hold
    :data:`BASE_CONFIG` fixed and vary one parameter over its grid in
    :data:`SWEEPS` (or ``values``), producing one record per grid value.
    All iterative fits start from the Halir estimate with default
    :class:`LMConfig`.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    suite = suite.lower()
    records = []
    if suite == "overall":
        trials = _map(_overall_trial, [(seed, i, repeats, tuple(methods))
                                       for i in range(n_configs)], workers)
        for m in methods:
            fails = sum(t[m]["failures"] for t in trials)
            for q in ("rmse", "p_error", "iterations"):
                if q == "iterations" and m != "confocal":
                    continue
                vals = [v for t in trials for v in t[m][q]]
                records.append(_record("overall", "n_configs", n_configs, m, q, vals, fails))
        return records
    if suite not in SWEEPS:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    param, grid = SWEEPS[suite]
    if values is not None:
        grid = np.asarray(values, dtype=float)
    suite_idx = SUITES.index(suite)
    jobs = [(seed, suite_idx, j, param, v, repeats, tuple(methods)) for j, v in enumerate(grid)]
    trials = _map(_sweep_trial, jobs, workers)
    for v, t in zip(grid, trials):
        for m in methods:
            records.append(_record(suite, param, v, m, "p_error", t[m]["p_error"],
                                   t[m]["failures"]))
            if m == "confocal":
                records.append(_record(suite, param, v, m, "iterations", t[m]["iterations"],
                                       t[m]["failures"]))
    return records


CSV_FIELDS = ["suite", "parameter", "value", "method", "quantity", "n", "mean", "median", "p95",
              "failures"]


def write_records_csv(path_or_file, records):
    """One CSV row per record, columns as in ``CSV_FIELDS``."""
    def _write(fh):
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow({k: (repr(v) if isinstance(v, float) else v)
                        for k, v in r.as_dict().items()})

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def records_to_json(records, **extra):
    doc = {"schema": 1, **extra, "records": [r.as_dict() for r in records]}
    return json.dumps(doc, indent=2, allow_nan=True)
