"""Command-line interface: ``conebounds <command> [options]``.

Commands: ``width``, ``bound``, ``solve``, ``generate``, ``sweep`` and
``validate``.  Output is JSON (or CSV for sweeps) carrying the resolved
configuration and seed.  ``CONEBOUNDS_SEED`` supplies the default seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds, experiments, sampling, solvers
from .exceptions import ConeBoundsError
from .geometry.cones import ConeHandle
from .geometry.models import SignalDescriptor, StructureModel
from .geometry.width import width_closed_form, width_monte_carlo

EXIT_FAIL = 1
EXIT_USAGE = 2

VALIDATE_DEFAULTS = {
    "gordon": dict(n=50, k=2, m=40, t=3.0, trials=200),
    "correlation": dict(n=50, k=2, m=40, t=6.0, trials=200),
    "adversarial": dict(n=100, k=3, m=80, t=2.0, trials=200),
}


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("CONEBOUNDS_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CONEBOUNDS_SEED must be an integer, got {raw!r}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _emit(args, payload: dict, text: str = None):
    out = text if text is not None else json.dumps(_jsonable(payload), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def _model_from_args(args) -> tuple:
    kind = args.model
    if kind == "block_sparse":
        if args.q is None or args.b is None or args.k is None:
            raise UsageError("--model block_sparse needs --q, --b and --k")
        return StructureModel.block_sparse(args.q, args.b), args.k
    if kind == "low_rank":
        d = args.d if args.d is not None else (math.isqrt(args.n) if args.n else None)
        if d is None or args.r is None:
            raise UsageError("--model low_rank needs --d (or --n = d^2) and --r")
        return StructureModel.low_rank(d), args.r
    if args.n is None or args.k is None:
        raise UsageError(f"--model {kind} needs --n and --k")
    return StructureModel(kind, args.n), args.k


def cmd_width(args):
    model, k = _model_from_args(args)
    try:
        cf = width_closed_form(model, k)
    except ConeBoundsError:
        if model.kind != "non_negative":
            raise
        cf = None
    est = {"closed_form_bound": cf, "mc_estimate": None, "mc_samples": 0, "mc_std_error": None}
    if args.mc_samples:
        x0 = sampling.random_signal(model, k, sampling.stream(args.seed, sampling.SIGNAL))
        cone = ConeHandle(SignalDescriptor(model, x0))
        est = width_monte_carlo(cone, args.mc_samples, args.seed, closed_form=cf).to_dict()
    config = {"model": model.to_dict(), "complexity": k, "mc_samples": args.mc_samples, "seed": args.seed}
    _emit(args, {"command": "width", "config": config, "result": est})
    return 0


def cmd_bound(args):
    params = bounds.BoundParams(args.m, args.width, args.t, args.znorm)
    report = bounds.bound_report(params)
    config = {"m": args.m, "width": args.width, "t": args.t, "znorm": args.znorm}
    _emit(args, {"command": "bound", "config": config, "result": report.to_dict()})
    return 0


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"could not parse {path}: {exc}")
    except OSError as exc:
        raise UsageError(f"could not read {path}: {exc}")


def cmd_solve(args):
    data = _load_json(args.input)
    if not isinstance(data, dict):
        raise UsageError(f"{args.input} must hold a JSON object")
    if data.get("seed") is None:
        data["seed"] = args.seed
    inst = solvers.ProblemInstance.from_dict(data)
    kwargs = {"tol": args.tol, "max_iter": args.max_iter}
    extra = {}
    if args.method == "penalized":
        if args.lam is None:
            raise UsageError("--method penalized needs --lambda (a number or 'auto')")
        if args.lam == "auto":
            anchor = inst.anchor()
            width = width_monte_carlo(ConeHandle(anchor), args.width_samples, args.seed)
            tau = solvers.compute_tau_star(anchor, args.tau_samples, args.seed)
            lam = solvers.lambda_best(inst, width, tau)
            extra = {"width": width.to_dict(), "tau_star": tau, "lambda": lam}
        else:
            try:
                lam = float(args.lam)
            except ValueError:
                raise UsageError(f"--lambda must be a number or 'auto', got {args.lam!r}")
        kwargs["lam"] = lam
    elif args.method == "socp" and args.delta is not None:
        kwargs["delta"] = args.delta
    if args.method == "ls":
        kwargs = {}
    result = solvers.solve(inst, args.method, **kwargs)
    config = {"input": str(args.input), "method": args.method, "seed": args.seed, "tol": args.tol,
              "max_iter": args.max_iter, "m": inst.m, "n": inst.n, "model": inst.model.to_dict()}
    payload = {"command": "solve", "config": config, "result": result.to_dict()}
    if extra:
        payload["lambda_rule"] = extra
    _emit(args, payload)
    return 0


def cmd_generate(args):
    model, k = _model_from_args(args)
    spec = {
        "m": args.m,
        "n": model.n,
        "model": model.to_dict(),
        "seed": args.seed,
        "sigma": args.sigma,
        "A": {"generator": "gaussian"},
        "x0": {"generator": "structured", "complexity": k},
        "z": {"generator": "gaussian", "sigma": args.sigma},
    }
    if args.explicit:
        spec = solvers.ProblemInstance.from_dict(spec).to_dict()
    _emit(args, spec)
    return 0


def _sweep_config(args) -> experiments.SweepConfig:
    data = _load_json(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise UsageError("sweep config must be a JSON object")
    overrides = {
        "m_values": args.m_values, "trials_per_m": args.trials, "t": args.t, "sigma": args.sigma,
        "n": args.n, "complexity": args.k, "width_source": args.width_source,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed_given or "base_seed" not in data:
        data["base_seed"] = args.seed
    return experiments.SweepConfig.from_dict(data)


def cmd_sweep(args):
    config = _sweep_config(args)
    result = experiments.run_sweep(config, jobs=args.jobs)
    summary = {"command": "sweep", "config": config.to_dict(), "summary": result.summary}
    if args.format == "json":
        summary["records"] = [
            {c: getattr(r, c) for c in experiments.CSV_COLUMNS} for r in result.records
        ]
        _emit(args, summary)
    else:
        _emit(args, None, text=experiments.records_to_csv(result.records))
        if args.summary:
            Path(args.summary).write_text(json.dumps(_jsonable(summary), indent=2) + "\n")
        elif args.out:
            Path(str(args.out) + ".summary.json").write_text(json.dumps(_jsonable(summary), indent=2) + "\n")
    return 0


def cmd_validate(args):
    defaults = VALIDATE_DEFAULTS[args.check]
    data = _load_json(args.config) if args.config else {}
    n = args.n or data.get("n", defaults["n"])
    k = args.k or data.get("complexity", defaults["k"])
    m = args.m or defaults["m"]
    t = defaults["t"] if args.t is None else args.t
    trials = args.trials or defaults["trials"]
    data.update(n=n, complexity=k, m_values=[m], trials_per_m=trials, t=t, base_seed=args.seed)
    if args.sigma is not None:
        data["sigma"] = args.sigma
    config = experiments.SweepConfig.from_dict(data)
    result = experiments.VALIDATORS[args.check](config, m, trials, t, width=args.width)
    payload = {"command": "validate", "config": config.to_dict(), "check": args.check,
               "result": result.to_dict()}
    _emit(args, payload)
    return 0 if result.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default: $CONEBOUNDS_SEED or 0)")
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="conebounds", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p):
        p.add_argument("--model", choices=("sparse", "block_sparse", "low_rank", "non_negative"), required=True)
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int, help="sparsity or number of active blocks")
        p.add_argument("--r", type=int, help="rank (low_rank)")
        p.add_argument("--q", type=int, help="number of blocks (block_sparse)")
        p.add_argument("--b", type=int, help="block size (block_sparse)")
        p.add_argument("--d", type=int, help="matrix side (low_rank)")

    p = sub.add_parser("width", parents=[common], help="Gaussian width of a tangent cone")
    model_flags(p)
    p.add_argument("--mc-samples", type=int, default=0)
    p.set_defaults(func=cmd_width)

    p = sub.add_parser("bound", parents=[common], help="closed-form error bounds")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--width", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--znorm", type=float, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("solve", parents=[common], help="solve a problem instance file")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("lasso", "socp", "penalized", "ls"), required=True)
    p.add_argument("--lambda", dest="lam", default=None, help="penalty, or 'auto' for the width-based rule")
    p.add_argument("--delta", type=float, default=None, help="SOCP residual level (default ||z||)")
    p.add_argument("--tol", type=float, default=solvers.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=solvers.DEFAULT_MAX_ITER)
    p.add_argument("--width-samples", type=int, default=2000)
    p.add_argument("--tau-samples", type=int, default=2000)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", parents=[common], help="write a problem instance file")
    model_flags(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--explicit", action="store_true", help="write arrays instead of generator specs")
    p.set_defaults(func=cmd_generate)

    def experiment_flags(p):
        p.add_argument("--config", default=None, help="JSON config file; flags override it")
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--t", type=float)
        p.add_argument("--sigma", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("sweep", parents=[common], help="run a sweep over m and write CSV")
    experiment_flags(p)
    p.add_argument("--m-values", type=lambda s: [int(v) for v in s.split(",")], default=None)
    p.add_argument("--width-source", choices=("closed_form", "mc"), default=None)
    p.add_argument("--summary", default=None, help="summary JSON path (default: <out>.summary.json)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="Monte Carlo check of a probabilistic bound")
    experiment_flags(p)
    p.add_argument("--check", choices=tuple(experiments.VALIDATORS), required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--width", type=float, default=None, help="override the width used in the bound")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.seed_given = args.seed is not None
        if args.seed is None:
            args.seed = _default_seed()
        if args.format is None:
            args.format = "csv" if args.command == "sweep" else "json"
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"conebounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConeBoundsError as exc:
        print(f"conebounds: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
