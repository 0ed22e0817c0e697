"""Command-line interface: ``ttodeco {generate,decompose,dodd,bench}``.

Exit status is 0 on success, 1 when a solver fails (a JSON error report is
written to stderr) and 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .dodd import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    general_dodd,
    procrustes_square_dodd,
    sinkhorn_square_dodd,
)
from .errors import InvalidConfig, NotConverged, TTDecompError
from .harness import ExperimentConfig, add_noise, make_instance, run_experiment, trial_seed
from .io import (
    decomposition_to_dict,
    read_json,
    read_tensor,
    tensor_to_dict,
    write_json,
)
from .odeco_tt2 import decompose_odeco_tt2
from .symm_tt2 import DEFAULT_PSD_ATTEMPTS, decompose_symm_tt2
from .symm_ttl import NULL_TOL, PROBE_TOL, decompose_symm_ttl
from .tensor import DEFAULT_RANK_TOL, TrainDecomposition, assemble_train, relative_error

EXIT_OK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2

SCHEMAS = """\
file formats:
  tensor JSON        {"shape": [n1, n2, ...], "data": [...]}  data in row-major
                     order; a matrix is a 2-way tensor
  decomposition JSON {"carriages": [{"type": "symmetric", "coefficients": [...],
                       "vectors": [[...], ...]}, ...], "contractedEdges": p,
                      "meta": {...}}  vectors are listed column by column;
                     odeco carriages carry "vectorsA", "vectorsB", "vectorsC"
  factors JSON       {"lambda": [...], "mu": [...], "Q": [[...], ...],
                      "iterations": k, "converged": bool,
                      "reconstructionError": e}  Q row by row
  config JSON        {"kind": "symm-tt2", "n": 5, "ranks": [2, 3],
                      "orthogonal": true, "noiseSigma": 0, "trials": 100,
                      "seed": 1, "solverOpts": {"rankTol": 1e-8}}
                     kinds: symm-tt2 symm-ttl odeco-tt2 dodd-square dodd-general
"""


class UsageError(Exception):
    pass


def _ranks(text):
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_solver_flags(p, dodd=False):
    p.add_argument("--seed", type=int, default=0, help="seed of the generic weights (default 0)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="DODD convergence tolerance (default 1e-28)")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER, help="DODD iteration budget (default 1000)")
    p.add_argument("--learn-rate", type=int, default=2, help="Tandem Procrustes pairs per outer step (default 2)")
    p.add_argument("--d", type=int, default=None, help="DODD inflation size")
    if not dodd:
        p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL, help="relative rank cut-off (default 1e-8)")
        p.add_argument("--psd-attempts", type=int, default=DEFAULT_PSD_ATTEMPTS,
                       help="PSD redraw budget when whitening (default 200)")
        p.add_argument("--whiten", action="store_true", help="whiten first (non-orthogonal symm-tt2)")
        p.add_argument("--p", type=int, default=1, help="contracted edges per junction (default 1)")
        p.add_argument("--null-tol", type=float, default=NULL_TOL, help="symmetrizer null-space cut-off")
        p.add_argument("--probe-tol", type=float, default=PROBE_TOL, help="sweep consistency cut-off")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ttodeco",
        description="Decompose orthogonally decomposable tensor trains and run DODD solvers.",
        epilog=SCHEMAS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter

    g = sub.add_parser("generate", help="write a random exact instance and its ground truth",
                       epilog=SCHEMAS, formatter_class=fmt)
    g.add_argument("--kind", required=True,
                   choices=["symm-tt2", "symm-ttl", "odeco-tt2", "dodd-square", "dodd-general"])
    g.add_argument("--n", type=int, required=True, help="mode dimension, or matrix columns for DODD")
    g.add_argument("--ranks", type=_ranks, default=(), help="carriage ranks, e.g. 2,3")
    g.add_argument("--m", type=int, help="matrix rows (dodd-general)")
    g.add_argument("--d", type=int, help="inflation size (dodd-general)")
    g.add_argument("--bond", type=int, help="bond dimension (odeco-tt2, default n)")
    g.add_argument("--non-orthogonal", action="store_true", help="non-orthogonal vectors (symm-tt2)")
    g.add_argument("--non-exact", action="store_true", help="Gaussian matrix (dodd-general)")
    g.add_argument("--p", type=int, default=1, help="contracted edges per junction")
    g.add_argument("--sigma", type=float, default=0.0, help="relative noise level")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True, help="tensor JSON path")
    g.add_argument("--truth", help="ground-truth JSON path")

    d = sub.add_parser("decompose", help="decompose a tensor JSON", epilog=SCHEMAS, formatter_class=fmt)
    d.add_argument("--kind", required=True, choices=["symm-tt2", "symm-ttl", "odeco-tt2"])
    d.add_argument("--input", required=True)
    d.add_argument("--output", help="decomposition JSON path (default: stdout)")
    d.add_argument("--method", default="auto", choices=["auto", "sinkhorn", "procrustes", "general"],
                   help="DODD solver for odeco-tt2")
    _add_solver_flags(d)

    o = sub.add_parser("dodd", help="DODD of a matrix", epilog=SCHEMAS, formatter_class=fmt)
    o.add_argument("--input", required=True, help="2-way tensor JSON")
    o.add_argument("--output", help="factors JSON path (default: stdout)")
    o.add_argument("--method", default="general", choices=["sinkhorn", "procrustes", "general"])
    _add_solver_flags(o, dodd=True)

    b = sub.add_parser("bench", help="run an experiment config", epilog=SCHEMAS, formatter_class=fmt)
    b.add_argument("--config", required=True)
    b.add_argument("--out-dir", default=".", help="directory for the CSV and JSON outputs")
    b.add_argument("--name", help="output file stem (default: config file stem)")
    b.add_argument("--trials", type=int, help="override the trial count")
    b.add_argument("--seed", type=int, help="override the base seed")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-timing", action="store_true", help="leave runtimes out for byte-identical output")
    return parser


def _emit(obj, path):
    write_json(obj, path or "-")


def _load_tensor(path):
    try:
        return read_tensor(path)
    except TTDecompError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def cmd_generate(args):
    cfg = ExperimentConfig(
        kind=args.kind,
        n=args.n,
        ranks=args.ranks,
        m=args.m,
        d=args.d,
        bond=args.bond,
        orthogonal=not args.non_orthogonal,
        exact=not args.non_exact,
        noise_sigma=args.sigma,
        trials=1,
        seed=args.seed,
        solver_opts={"contracted_edges": args.p} if args.p != 1 else {},
    )
    rng = np.random.default_rng(trial_seed(cfg.seed, 0))
    data, truth = make_instance(cfg, 0, rng)
    noisy = add_noise(data, cfg.noise_sigma, rng)
    write_json(tensor_to_dict(noisy), args.output)
    if args.truth:
        if isinstance(truth, TrainDecomposition):
            out = decomposition_to_dict(truth)
        elif truth is None:
            out = {}
        else:
            out = {k: np.asarray(v).tolist() for k, v in truth.items()}
        out["seed"] = args.seed
        write_json(out, args.truth)
    return EXIT_OK


def cmd_decompose(args):
    T = _load_tensor(args.input)
    if args.kind == "symm-tt2":
        dec = decompose_symm_tt2(T, whitening=args.whiten, rng=args.seed, rank_tol=args.rank_tol,
                                 psd_attempts=args.psd_attempts, contracted_edges=args.p)
    elif args.kind == "symm-ttl":
        dec = decompose_symm_ttl(T, rng=args.seed, rank_tol=args.rank_tol, null_tol=args.null_tol,
                                 probe_tol=args.probe_tol)
    else:
        dec = decompose_odeco_tt2(T, d=args.d, method=args.method, rng=args.seed, rank_tol=args.rank_tol,
                                  learn_rate=args.learn_rate, tol=args.tol, max_iter=args.max_iter)
    dec.meta["seed"] = args.seed
    err = relative_error(assemble_train(dec), T)
    out = decomposition_to_dict(dec)
    if args.output:
        write_json(out, args.output)
        print(json.dumps({"relativeError": err}))
    else:
        out["relativeError"] = err
        write_json(out, "-")
    return EXIT_OK


def cmd_dodd(args):
    X = _load_tensor(args.input)
    if X.ndim != 2:
        raise UsageError(f"dodd needs a 2-way tensor, got shape {list(X.shape)}")
    kw = dict(tol=args.tol, max_iter=args.max_iter, strict=True)
    try:
        if args.method == "sinkhorn":
            f = sinkhorn_square_dodd(X, **kw)
        elif args.method == "procrustes":
            f = procrustes_square_dodd(X, **kw)
        else:
            d = args.d if args.d is not None else max(X.shape)
            f = general_dodd(X, d, args.learn_rate, rng=args.seed, **kw)
    except NotConverged as exc:
        _emit(exc.factors.to_dict(X), args.output)
        raise
    _emit(f.to_dict(X), args.output)
    return EXIT_OK


def cmd_bench(args):
    raw = read_json(args.config)
    if not isinstance(raw, dict):
        raise UsageError("config JSON must be an object")
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = ExperimentConfig.from_dict(raw)
    stats = run_experiment(cfg, workers=args.workers)
    name = args.name or os.path.splitext(os.path.basename(args.config))[0]
    os.makedirs(args.out_dir, exist_ok=True)
    base = os.path.join(args.out_dir, name)
    timing = not args.no_timing
    stats.write_csv(base + ".csv", timing=timing)
    stats.write_histogram(base + "_hist.csv")
    summary = stats.summary(timing=timing)
    write_json(summary, base + "_summary.json")
    print(json.dumps({"csv": base + ".csv", **{k: summary["aggregates"][k]
                      for k in ("trials", "geoMeanRelErr", "successCount")}}))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "decompose": cmd_decompose, "dodd": cmd_dodd, "bench": cmd_bench}


def _report(obj):
    sys.stderr.write(json.dumps(obj) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvalidConfig as exc:
        _report(exc.to_dict())
        return EXIT_USAGE
    except TTDecompError as exc:
        _report(exc.to_dict())
        return EXIT_SOLVER
    except (OSError, json.JSONDecodeError, UsageError) as exc:
        _report({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
