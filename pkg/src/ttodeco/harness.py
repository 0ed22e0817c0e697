"""Seeded instance generation and batch experiments.

Every trial draws from its own generator, seeded from ``(config.seed,
trial_index)``, so results do not depend on the order or process in which
trials run.
"""

from __future__ import annotations

import csv
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .dodd import (
    general_dodd,
    orthogonality_error,
    procrustes_square_dodd,
    sinkhorn_square_dodd,
)
from .errors import InvalidConfig, TTDecompError
from .odeco_tt2 import decompose_odeco_tt2
from .symm_tt2 import decompose_symm_tt2
from .symm_ttl import NULL_TOL, PROBE_TOL, decompose_symm_ttl
from .tensor import (
    DEFAULT_RANK_TOL,
    OdecoCarriage,
    SymmetricCarriage,
    TrainDecomposition,
    as_generator,
    assemble_train,
    random_orthonormal,
    relative_error,
)

__all__ = [
    "KINDS",
    "ExperimentConfig",
    "TrialStats",
    "trial_seed",
    "random_coefficients",
    "satisfies_drc",
    "make_instance",
    "add_noise",
    "noise_scaled_ttl_opts",
    "run_trial",
    "run_experiment",
    "geo_mean",
]

KINDS = ("symm-tt2", "symm-ttl", "dodd-square", "dodd-general", "odeco-tt2")
SUCCESS_TOL = 1e-10
ERR_FLOOR = 1e-300
COEF_LOW, COEF_HIGH = 0.5, 2.0
ZERO_ENTRY_TOL = 1e-12
CSV_FIELDS = ("trial", "seed", "relErr", "iterations", "converged", "psdAttempts", "runtimeSec", "status")

# JSON key -> solver keyword
_OPT_KEYS = {
    "rankTol": "rank_tol",
    "psdAttempts": "psd_attempts",
    "p": "contracted_edges",
    "contractedEdges": "contracted_edges",
    "nullTol": "null_tol",
    "probeTol": "probe_tol",
    "tol": "tol",
    "maxIter": "max_iter",
    "learnRate": "learn_rate",
}


@dataclass
class ExperimentConfig:
    """Declarative description of a batch of trials.

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    n : int
        Mode dimension (symmetric and odeco trains) or the matrix size
        (``dodd-square``) or the column count (``dodd-general``).
    ranks : tuple of int
        Carriage ranks; for ``symm-ttl`` its length is the train length.
    m : int
        Row count of a ``dodd-general`` block.
    d : int
        DODD inflation size (``dodd-general``, ``odeco-tt2``).
    bond : int
        Bond dimension of odeco instances (defaults to ``n``).
    orthogonal : bool
        ``symm-tt2`` only: orthonormal carriage vectors, otherwise whitening
        is used.
    exact : bool
        ``dodd-general`` only: crop of an inflated DODD, otherwise Gaussian
        entries with standard deviation 5.
    method : str
        Solver variant for the DODD kinds and ``odeco-tt2``.
    noise_sigma : float
    trials : int
    seed : int
    solver_opts : dict
        Extra solver keywords (``rank_tol``, ``tol``, ``max_iter``,
        ``learn_rate``, ``psd_attempts``, ``contracted_edges``, ``null_tol``,
        ``probe_tol``).
    """

    kind: str
    n: int | None = None
    ranks: tuple = ()
    m: int | None = None
    d: int | None = None
    bond: int | None = None
    orthogonal: bool = True
    exact: bool = True
    method: str | None = None
    noise_sigma: float = 0.0
    trials: int = 100
    seed: int = 0
    solver_opts: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        self.ranks = tuple(int(r) for r in self.ranks)
        self.validate()

    @property
    def L(self):
        return len(self.ranks) if self.kind == "symm-ttl" else 2

    def validate(self):
        if self.kind not in KINDS:
            raise InvalidConfig(f"unknown kind {self.kind!r}; choose from {KINDS}")
        if int(self.trials) < 1:
            raise InvalidConfig("trials must be >= 1")
        if not self.noise_sigma >= 0:
            raise InvalidConfig("noise_sigma must be >= 0")
        if self.n is None or self.n < 1:
            raise InvalidConfig("n must be a positive integer")
        unknown = set(self.solver_opts) - set(_OPT_KEYS.values())
        if unknown:
            raise InvalidConfig(f"unknown solver options {sorted(unknown)}")
        k = self.kind
        if k in ("symm-tt2", "symm-ttl", "odeco-tt2"):
            want = 2 if k != "symm-ttl" else None
            if want and len(self.ranks) != want:
                raise InvalidConfig(f"{k} needs exactly two ranks")
            if k == "symm-ttl" and len(self.ranks) < 3:
                raise InvalidConfig("symm-ttl needs at least three ranks")
            limit = self.n if k != "odeco-tt2" else min(self.n, self.bond or self.n)
            if any(r < 1 or r > limit for r in self.ranks):
                raise InvalidConfig(f"ranks must lie in [1, {limit}], got {self.ranks}")
            if k == "symm-ttl" and not satisfies_drc(self.ranks):
                raise InvalidConfig(f"ranks {self.ranks} violate the decreasing ranks condition")
            if k == "odeco-tt2" and self.d is not None and self.d < max(self.ranks):
                raise InvalidConfig("d must be at least both carriage ranks")
        if k == "dodd-square" and self.method not in (None, "sinkhorn", "procrustes"):
            raise InvalidConfig("dodd-square method must be sinkhorn or procrustes")
        if k == "dodd-general":
            if self.m is None or self.d is None:
                raise InvalidConfig("dodd-general needs m and d")
            if self.d < max(self.m, self.n):
                raise InvalidConfig("d must be at least max(m, n)")

    @classmethod
    def from_dict(cls, obj):
        """Build from JSON-style keys (camelCase accepted)."""
        obj = dict(obj)
        opts = {}
        for key, val in dict(obj.pop("solverOpts", obj.pop("solver_opts", {}))).items():
            if key not in _OPT_KEYS and key not in _OPT_KEYS.values():
                raise InvalidConfig(f"unknown solver option {key!r}")
            opts[_OPT_KEYS.get(key, key)] = val
        aliases = {"noiseSigma": "noise_sigma", "sigma": "noise_sigma"}
        kw = {aliases.get(k, k): v for k, v in obj.items()}
        allowed = set(cls.__dataclass_fields__) - {"solver_opts"}
        extra = set(kw) - allowed
        if extra:
            raise InvalidConfig(f"unknown config keys {sorted(extra)}")
        if "kind" not in kw:
            raise InvalidConfig("config needs a 'kind'")
        return cls(solver_opts=opts, **kw)

    def to_dict(self):
        out = asdict(self)
        out["ranks"] = list(self.ranks)
        return out


def satisfies_drc(ranks) -> bool:
    """Decreasing ranks condition.

    Every interior rank must be reachable from one end of the train by a
    non-increasing chain of ranks.
    """
    r = list(ranks)
    for j in range(1, len(r) - 1):
        from_left = all(r[k] >= r[k + 1] for k in range(j))
        from_right = all(r[k] <= r[k + 1] for k in range(j, len(r) - 1))
        if not (from_left or from_right):
            return False
    return True


def trial_seed(base_seed: int, index: int) -> int:
    """Deterministic 32-bit seed of one trial."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def random_coefficients(r, rng, signed=True):
    """Magnitudes uniform on ``[0.5, 2]``; random signs when ``signed``."""
    c = rng.uniform(COEF_LOW, COEF_HIGH, r)
    if signed:
        c = c * rng.choice([-1.0, 1.0], r)
    return c


def _nonorthogonal_unit_vectors(n, r, rng):
    # entrywise positive directions keep the slice sums PSD for most weights
    X = rng.uniform(0.0, 1.0, (n, r))
    return X / np.linalg.norm(X, axis=0)


def _symm_carriage(n, r, rng, orthogonal=True):
    if orthogonal:
        return SymmetricCarriage(random_coefficients(r, rng), random_orthonormal(n, r, rng))
    return SymmetricCarriage(
        random_coefficients(r, rng, signed=False), _nonorthogonal_unit_vectors(n, r, rng), orthogonal=False
    )


def _dodd_matrix(rows, cols, d, rng):
    lam = random_coefficients(d, rng)
    mu = random_coefficients(d, rng)
    Q = random_orthonormal(d, d, rng)
    X = (lam[:, None] * Q * mu[None, :])[:rows, :cols]
    return X, {"lambda": lam, "mu": mu, "Q": Q}


def make_instance(config: ExperimentConfig, trial_index: int = 0, rng=None):
    """Generate one exact instance and its ground truth.

    Returns
    -------
    data : ndarray
        Tensor (train kinds) or matrix (DODD kinds).
    truth : TrainDecomposition or dict or None
        ``None`` for non-exact DODD instances.
    """
    if rng is None:
        rng = np.random.default_rng(trial_seed(config.seed, trial_index))
    k = config.kind
    if k in ("symm-tt2", "symm-ttl"):
        cars = [_symm_carriage(config.n, r, rng, config.orthogonal or k == "symm-ttl") for r in config.ranks]
        p = int(config.solver_opts.get("contracted_edges", 1))
        truth = TrainDecomposition(cars, contracted_edges=p)
        return assemble_train(truth), truth
    if k == "odeco-tt2":
        nc = config.bond or config.n
        cars = [
            OdecoCarriage(
                random_coefficients(r, rng),
                random_orthonormal(config.n, r, rng),
                random_orthonormal(config.n, r, rng),
                random_orthonormal(nc, r, rng),
            )
            for r in config.ranks
        ]
        truth = TrainDecomposition(cars)
        return assemble_train(truth), truth
    if k == "dodd-square":
        while True:
            X, truth = _dodd_matrix(config.n, config.n, config.n, rng)
            if np.min(np.abs(X)) >= ZERO_ENTRY_TOL:
                return X, truth
    # dodd-general
    if config.exact:
        return _dodd_matrix(config.m, config.n, config.d, rng)
    return rng.normal(0.0, 5.0, (config.m, config.n)), None


def add_noise(T, sigma: float, rng=None):
    """``T + sigma * |T| / |N| * N`` with ``N`` standard normal."""
    T = np.asarray(T, dtype=float)
    if sigma < 0:
        raise InvalidConfig("sigma must be >= 0")
    if sigma == 0:
        return T.copy()
    N = as_generator(rng).standard_normal(T.shape)
    return T + sigma * (np.linalg.norm(T) / np.linalg.norm(N)) * N


def noise_scaled_ttl_opts(sigma: float) -> dict:
    """Default length-L tolerances for noise level ``sigma``.

    Noise lifts zero eigenvalues and null-space singular values to about
    ``sigma``; the cut-offs are kept well above that.
    """
    if sigma <= 0:
        return {}
    return {
        "rank_tol": max(DEFAULT_RANK_TOL, 100.0 * sigma),
        "null_tol": max(NULL_TOL, 1000.0 * sigma),
        "probe_tol": max(PROBE_TOL, 1000.0 * sigma),
    }


def _solve(config, data, rng):
    """Run the configured solver; returns ``(relErr, iterations, converged, psdAttempts)``."""
    opts = config.solver_opts
    k = config.kind
    if k == "symm-tt2":
        kw = {key: opts[key] for key in ("rank_tol", "psd_attempts", "contracted_edges") if key in opts}
        dec = decompose_symm_tt2(data, whitening=not config.orthogonal, rng=rng, **kw)
        return relative_error(assemble_train(dec), data), 0, True, dec.meta.get("psdAttempts", 0)
    if k == "symm-ttl":
        kw = noise_scaled_ttl_opts(config.noise_sigma)
        kw.update({key: opts[key] for key in ("rank_tol", "null_tol", "probe_tol") if key in opts})
        dec = decompose_symm_ttl(data, rng=rng, **kw)
        return relative_error(assemble_train(dec), data), 0, True, 0
    if k == "odeco-tt2":
        kw = {key: opts[key] for key in ("rank_tol", "learn_rate", "tol", "max_iter") if key in opts}
        dec = decompose_odeco_tt2(data, d=config.d, method=config.method or "auto", rng=rng, **kw)
        return relative_error(assemble_train(dec), data), dec.meta["iterations"], True, 0
    kw = {key: opts[key] for key in ("tol", "max_iter") if key in opts}
    if k == "dodd-square":
        solver = procrustes_square_dodd if config.method == "procrustes" else sinkhorn_square_dodd
        f = solver(data, **kw)
    else:
        f = general_dodd(data, config.d, opts.get("learn_rate", 2), rng=rng, **kw)
    err = max(orthogonality_error(f.Q), f.reconstruction_error(data))
    return err, f.iterations, f.converged, 0


def run_trial(config: ExperimentConfig, index: int) -> dict:
    """One trial; solver errors are recorded in ``status`` instead of raised."""
    seed = trial_seed(config.seed, index)
    rng = np.random.default_rng(seed)
    data, _ = make_instance(config, index, rng)
    data = add_noise(data, config.noise_sigma, rng)
    t0 = time.perf_counter()
    status = "ok"
    try:
        err, iters, conv, psd = _solve(config, data, rng)
    except TTDecompError as exc:
        err, iters, conv = math.nan, 0, False
        psd = exc.details.get("attempts", 0)
        status = exc.code
    runtime = time.perf_counter() - t0
    if status == "ok" and not conv:
        status = "NotConverged"
    return {
        "trial": index,
        "seed": seed,
        "relErr": float(err),
        "iterations": int(iters),
        "converged": bool(conv),
        "psdAttempts": int(psd),
        "runtimeSec": runtime,
        "status": status,
    }


def geo_mean(errors) -> float:
    """``10 ** mean(log10(err))`` over finite errors, floored at 1e-300."""
    e = np.asarray([x for x in errors if np.isfinite(x)], dtype=float)
    if e.size == 0:
        return math.nan
    return float(10.0 ** np.mean(np.log10(np.maximum(e, ERR_FLOOR))))


@dataclass
class TrialStats:
    """Per-trial records of one experiment and their aggregates."""

    config: ExperimentConfig
    per_trial: list

    @property
    def errors(self):
        return [t["relErr"] for t in self.per_trial]

    def aggregates(self) -> dict:
        errs = self.errors
        finite = [e for e in errs if np.isfinite(e)]
        psd_found = sum(
            1 for t in self.per_trial if t["status"] != "PsdSearchFailed"
        )
        return {
            "trials": len(self.per_trial),
            "geoMeanRelErr": geo_mean(errs),
            "meanRelErr": float(np.mean(finite)) if finite else math.nan,
            "successCount": sum(1 for e in finite if e < SUCCESS_TOL),
            "convergedCount": sum(1 for t in self.per_trial if t["converged"]),
            "failedCount": sum(1 for t in self.per_trial if not np.isfinite(t["relErr"])),
            "psdFoundCount": psd_found,
            "meanRuntime": float(np.mean([t["runtimeSec"] for t in self.per_trial])),
            "statusCounts": dict(sorted(Counter(t["status"] for t in self.per_trial).items())),
        }

    def iteration_histogram(self):
        """Sorted ``(iterations, count)`` pairs."""
        return sorted(Counter(t["iterations"] for t in self.per_trial).items())

    def summary(self, timing: bool = True) -> dict:
        agg = self.aggregates()
        if not timing:
            agg.pop("meanRuntime")
        return {
            "config": self.config.to_dict(),
            "aggregates": agg,
            "coefficientDistribution": f"uniform magnitude on [{COEF_LOW}, {COEF_HIGH}]",
            "backend": _kernels.BACKEND,
        }

    def write_csv(self, path, timing: bool = True):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_FIELDS)
            for t in self.per_trial:
                w.writerow(
                    [
                        t["trial"],
                        t["seed"],
                        repr(t["relErr"]),
                        t["iterations"],
                        int(t["converged"]),
                        t["psdAttempts"],
                        f"{t['runtimeSec']:.6f}" if timing else "",
                        t["status"],
                    ]
                )

    def write_histogram(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("iterations", "count"))
            w.writerows(self.iteration_histogram())


def _run_one(args):
    return run_trial(*args)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> TrialStats:
    """Run every trial of ``config``; ``workers > 1`` uses a process pool."""
    jobs = [(config, i) for i in range(int(config.trials))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs))
    else:
        rows = [_run_one(j) for j in jobs]
    rows.sort(key=lambda t: t["trial"])
    return TrialStats(config, rows)
