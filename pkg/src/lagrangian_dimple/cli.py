"""``lagdimple`` command-line front end.

Every subcommand reads a JSON :class:`RunConfig`; numeric grids go to CSV
and reports to JSON, on ``--out`` or stdout.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import fieldsim
from .config import Command, ConfigError, RunConfig, apply_override, axis_range, build_model, load_config
from .dimple import DimpleError, classify_euclid, classify_sphere
from .kernels import KernelError, kernel_from_json
from .transport_euclid import TransportCovariance, UnsupportedModel
from .transport_sphere import SphereKind
from .velocity import VelocityError, law_from_json

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4


def _fmt(x: Any) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(header: Sequence[str], rows, out: str | None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return _emit(buf.getvalue(), out)


def write_json(obj: Any, out: str | None) -> str:
    return _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", out)


def _emit(text: str, out: str | None) -> str:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _is_sphere(cfg: RunConfig) -> bool:
    return cfg.model.get("domain", "euclid") != "euclid"


def run_curve(cfg: RunConfig) -> str:
    model = build_model(cfg.model, cfg.seed)
    us = np.sort(axis_range(cfg.options.get("u"), (-3.0, 3.0, 241)))
    if _is_sphere(cfg):
        theta0 = float(cfg.options.get("theta0", math.pi / 4))
        return write_csv(["u", "psi"], ((u, model(theta0, u)) for u in us), cfg.out)
    h0 = np.asarray(cfg.options.get("h0", [0.0] * model.kernel.dim), dtype=float)
    return write_csv(["u", "C"], ((u, model(h0, u)) for u in us), cfg.out)


def run_contour(cfg: RunConfig) -> str:
    model = build_model(cfg.model, cfg.seed)
    us = np.sort(axis_range(cfg.options.get("u"), (0.0, 1.0, 64)))
    if _is_sphere(cfg):
        thetas = np.sort(axis_range(cfg.options.get("theta"), (0.0, math.pi, 64)))
        rows = ((t, u, model(t, u)) for t in thetas for u in us)
        return write_csv(["theta", "u", "psi"], rows, cfg.out)
    e = np.asarray(cfg.options.get("direction", [1.0] + [0.0] * (model.kernel.dim - 1)), dtype=float)
    if e.shape != (model.kernel.dim,) or not np.any(e):
        raise ConfigError("direction must be a nonzero vector of the kernel dimension")
    e = e / np.linalg.norm(e)
    ss = np.sort(axis_range(cfg.options.get("s"), (0.0, 1.0, 64)))
    rows = ((s, u, model(s * e, u)) for s in ss for u in us)
    return write_csv(["s", "u", "C"], rows, cfg.out)


def run_classify(cfg: RunConfig) -> str:
    model = build_model(cfg.model, cfg.seed)
    opts = cfg.options
    kw = {}
    if "grid_n" in opts:
        kw["grid_n"] = int(opts["grid_n"])
    if "root_tol" in opts:
        kw["root_tol"] = float(opts["root_tol"])
    if "domain" in opts:
        kw["domain"] = tuple(float(x) for x in opts["domain"])
    if isinstance(model, TransportCovariance):
        report = classify_euclid(model.kernel, model.law, directions=opts.get("directions"), **kw)
    else:
        report = classify_sphere(model, **kw)
    return write_json(report.to_json(bool(opts.get("include_samples", False))), cfg.out)


def _sim_points(spec: dict[str, Any], domain: str, dim: int) -> fieldsim.PointSet:
    kind = spec.get("kind", "fibonacci" if domain == "sphere2" else "circle" if domain == "circle" else "grid")
    if kind == "fibonacci":
        return fieldsim.fibonacci_sphere(int(spec.get("n", 400)))
    if kind == "circle":
        return fieldsim.circle_points(int(spec.get("n", 64)))
    if kind == "grid":
        axes = [axis_range(spec, (0.0, 1.0, 10))] * dim
        mesh = np.meshgrid(*axes, indexing="ij")
        return fieldsim.PointSet(np.column_stack([m.ravel() for m in mesh]))
    if kind == "explicit":
        return fieldsim.PointSet(np.asarray(spec["points"], dtype=float), "euclidean" if domain == "euclid" else "sphere")
    raise ConfigError(f"unknown point set kind {kind!r}")


def run_simulate(cfg: RunConfig) -> str:
    m = cfg.model
    domain = m.get("domain", "euclid")
    kernel = kernel_from_json(m["kernel"])
    times = [float(t) for t in cfg.options.get("times", [0.0, 1.0])]
    n_real = int(cfg.options.get("realizations", 1))
    workers = int(cfg.options.get("workers", 1))
    pts = _sim_points(dict(cfg.options.get("points", {})), domain, kernel.dim)
    if domain == "euclid":
        runs = fieldsim.simulate_many(
            fieldsim.simulate_transport_euclid, n_real, cfg.seed, workers,
            kernel=kernel, law=law_from_json(m["law"]), grid=pts, times=times,
        )
    else:
        axis = m.get("axis", "uniform")
        runs = fieldsim.simulate_many(
            fieldsim.simulate_transport_sphere, n_real, cfg.seed, workers,
            kernel=kernel, axis=None if axis in (None, "uniform") or SphereKind(domain) is SphereKind.CIRCLE else axis,
            alpha=float(m.get("alpha", 1.0)), pts=pts, times=times,
        )
    header = ["time", "point_index"] + [f"x{i + 1}" for i in range(pts.dim)] + ["value"]
    if n_real == 1:
        return write_csv(header, fieldsim.snapshot_rows(runs[0]), cfg.out)
    rows = [[r, *row] for r, snaps in enumerate(runs) for row in fieldsim.snapshot_rows(snaps)]
    header = ["realization", *header]
    return write_csv(header, rows, cfg.out)


def run_validate(cfg: RunConfig) -> tuple[str, bool]:
    from .validation import run_suites

    try:
        results = run_suites(cfg.options.get("suites"))
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    passed = all(c["passed"] for suite in results.values() for c in suite.values())
    return write_json({"passed": passed, "suites": results}, cfg.out), passed


RUNNERS = {
    Command.CURVE: run_curve,
    Command.CONTOUR: run_contour,
    Command.CLASSIFY: run_classify,
    Command.SIMULATE: run_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lagdimple", description="Transport covariances and the dimple effect.")
    sub = p.add_subparsers(dest="command", required=True)
    for c in Command:
        s = sub.add_parser(c.value)
        s.add_argument("--config", help="JSON run config")
        s.add_argument("--out", help="output file (default: stdout)")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a dotted config key; VALUE is parsed as JSON when possible")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config) if args.config else {}
        raw["command"] = args.command
        for ov in args.override:
            apply_override(raw, ov)
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["out"] = args.out
        cfg = RunConfig.from_dict(raw)
        if cfg.command is Command.VALIDATE:
            _, passed = run_validate(cfg)
            return EXIT_OK if passed else EXIT_VALIDATION
        RUNNERS[cfg.command](cfg)
        return EXIT_OK
    except (ConfigError, KernelError, VelocityError, UnsupportedModel, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (fieldsim.FactorizationError, DimpleError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # Downstream closed stdout early (e.g. piped into head).
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
