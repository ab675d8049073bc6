"""Command-line entry point: ``eispde <command> --config FILE [...]``.

Every command writes ``<command>.json`` plus its CSV tables into ``--out-dir``
and exits 0 on pass, 1 on fail, 2 when the run is labelled out-of-theory.
Malformed input exits 3 with a diagnostic on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, build_model, load_config
from .experiments import (ExperimentConfig, OutOfTheory, Report, run_p1, run_p2,
                          run_strong_error, run_weak_limit)
from .integrator import SchemeParams, simulate
from .measures import EmpiricalMeasure, dL_distance_1d, dL_distance_sliced
from .model import compute_constants, validate_h3, validate_h4
from .noise import NoiseStream, resolve_seed

USAGE_ERROR = 3


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit(report: Report, args, cfg, seed) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in report.tables.items():
        write_csv(out / f"{name}.csv", header, rows)
    doc = {"command": args.command, "version": version_string(), "seed": seed,
           "config": cfg, **report.to_dict()}
    if "constants" in report.details:
        doc["constants"] = report.details["constants"]
    elif cfg is not None:
        doc["constants"] = compute_constants(build_model(cfg)).to_dict()
    with open(out / f"{args.command}.json", "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{args.command}: {report.status}  ({out / (args.command + '.json')})")
    for note in report.notes:
        print(f"  note: {note}")
    return report.exit_code


def _seed(args, cfg):
    default = (cfg or {}).get("experiment", {}).get("seed", 0)
    return resolve_seed(args.seed, default=int(default))


def cmd_validate(args, cfg, model, exp):
    h3 = validate_h3(model, rng_seed=exp.seed, radius=exp.radius)
    h4 = validate_h4(model, rng_seed=exp.seed, radius=exp.radius)
    rows = [[r.check, r.samples, k, v, r.passed] for r in (h3, h4) for k, v in r.observed.items()]
    return Report("validate", h3.passed and h4.passed, True,
                  {"H3": h3.to_dict(), "H4": h4.to_dict()},
                  {"validate": (["check", "samples", "statistic", "value", "passed"], rows)})


def cmd_constants(args, cfg, model, exp):
    c = compute_constants(model)
    d = c.to_dict()
    for k in ("Lbar", "beta1", "rho1", "rho2", "tau", "delta1", "delta2",
              "stepsize_bound_p1", "stepsize_bound_p2"):
        print(f"{k} = {d[k]!r}")
    for v in c.violations:
        print(f"violation: {v}")
    rows = [[k, v] for k, v in d.items() if isinstance(v, (int, float))]
    return Report("constants", True, c.stationary_theory, {"constants": d},
                  {"constants": (["name", "value"], rows)}, list(c.violations))


def cmd_simulate(args, cfg, model, exp):
    steps = exp.steps if exp.steps is not None else 1
    params = SchemeParams(exp.dt, steps, exp.record_every)
    x0 = np.zeros(model.n)
    traj = simulate(model, params, x0, NoiseStream(exp.seed, exp.base_dt or exp.dt, model.n))
    c = compute_constants(model)
    if args.dump_trajectory:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        traj.to_csv(Path(args.out_dir) / args.dump_trajectory)
    sq = np.sum(traj.states ** 2, axis=-1)
    rows = [[int(k), float(t), float(v), 0.0] for k, t, v in zip(traj.steps, traj.times, sq)]
    return Report("simulate", bool(np.all(np.isfinite(sq))), c.admissible(exp.dt),
                  {"dt": exp.dt, "steps": steps, "final_sq_norm": float(sq[-1])},
                  {"simulate": (["k", "t", "sq_norm", "stderr"], rows)})


def _read_samples(path) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    try:
        return np.atleast_1d(np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read samples from {path}: {exc}") from None


def cmd_distance(args, cfg, model, exp):
    a, b = _read_samples(args.samples_a), _read_samples(args.samples_b)
    if a.shape[1] != b.shape[1]:
        raise ConfigError(f"sample files have {a.shape[1]} and {b.shape[1]} columns")
    if a.shape[1] == 1:
        d, method = dL_distance_1d(a[:, 0], b[:, 0]), "exact-1d"
    else:
        d = dL_distance_sliced(EmpiricalMeasure(a), EmpiricalMeasure(b), args.directions, exp.seed)
        method = "sliced"
    print(f"d_L = {d!r}")
    return Report("distance", True, True, {"distance": d, "method": method},
                  {"distance": (["statistic", "value"], [["d_L", d]])})


COMMANDS = {
    "validate": cmd_validate, "constants": cmd_constants, "simulate": cmd_simulate,
    "p1": lambda a, c, m, e: run_p1(m, e), "p2": lambda a, c, m, e: run_p2(m, e),
    "rate": lambda a, c, m, e: run_strong_error(m, e),
    "weak-limit": lambda a, c, m, e: run_weak_limit(m, e),
    "distance": cmd_distance,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eispde", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "distance")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--out-dir", default="out")
        if name == "simulate":
            s.add_argument("--dump-trajectory", metavar="CSV", default=None)
        if name == "distance":
            s.add_argument("samples_a")
            s.add_argument("samples_b")
            s.add_argument("--directions", type=int, default=32)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else None
        seed = _seed(args, cfg)
        exp = ExperimentConfig.from_config(cfg or {}, seed=seed, threads=args.threads)
        model = build_model(cfg) if cfg is not None else None
        report = COMMANDS[args.command](args, cfg, model, exp)
    except OutOfTheory as exc:
        print(f"{args.command}: refused: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    return emit(report, args, cfg, seed)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
