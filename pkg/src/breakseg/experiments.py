"""Penalty-exponent sweeps over databases of simulated signals.

Each database item is a ``(Signal, TrueModel)`` pair. The penalty
coefficient of signal ``i`` is ``d_i**alpha * l_i**beta`` (times the
difference-based variance estimate when the variance term is on), where
``d_i`` is the number of samples and ``l_i`` the length in positions of
the model the signal was drawn from.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .segmentation import flsa_fusion_path, segment_least_squares
from .selection import (
    ErrorCurve,
    best_lambda,
    breakpoint_errors,
    error_curve,
    flsa_error_curve,
    test_error,
    train_error,
    variance_estimate,
)
from .signals import Signal, TrueModel, make_true_signal, sample_signal

__all__ = [
    "SweepRow",
    "SweepTable",
    "ExperimentResult",
    "EXPERIMENTS",
    "sweep_exponents",
    "sweep_flsa",
    "build_database",
    "database_layout",
    "run_experiment",
    "grid_argmin",
    "worker_count",
]

log = logging.getLogger(__name__)

MEANS = (-1.0, 0.0, 1.0, 0.0)
P_DESK = 7000
SPACING = 1000
K_MAX = 15
# wide enough that d**alpha * lambda spans the whole FLSA path for alpha in [0, 2]
FLSA_LAMBDA_GRID = np.logspace(-10, 4, 281)


@dataclass(frozen=True)
class ExperimentSpec:
    """Desk-scale simulation protocol for one experiment."""

    name: str
    densities: tuple[int, ...]
    lengths: tuple[int, ...]
    alpha_grid: tuple[float, ...]
    beta_grid: tuple[float, ...]
    k_max: int = K_MAX
    flsa: bool = False
    variance_term: bool = False


def _grid(lo, hi, step):
    n = int(round((hi - lo) / step))
    return tuple(round(lo + i * step, 10) for i in range(n + 1))


def _geom(lo, hi, n):
    return tuple(int(round(v)) for v in np.geomspace(lo, hi, n))


EXPERIMENTS = {
    "density": ExperimentSpec(
        "density", densities=_geom(70, 7000, 8), lengths=(P_DESK,),
        alpha_grid=_grid(-0.5, 1.5, 0.1), beta_grid=(0.0,)),
    "length": ExperimentSpec(
        "length", densities=(600,), lengths=_geom(700, 7000, 8),
        alpha_grid=(0.0,), beta_grid=_grid(-1.5, 0.5, 0.1)),
    "composite": ExperimentSpec(
        "composite", densities=(70, 150, 300, 600), lengths=(700, 1500, 3000, 7000),
        alpha_grid=_grid(-1.0, 1.0, 0.25), beta_grid=_grid(-1.0, 1.0, 0.25)),
    "flsa": ExperimentSpec(
        "flsa", densities=_geom(70, 7000, 8), lengths=(P_DESK,),
        alpha_grid=_grid(0.0, 2.0, 0.1), beta_grid=(0.0,), flsa=True),
}


@dataclass
class SweepRow:
    alpha: float
    beta: float
    train_error: float
    test_error: float
    lambdas: np.ndarray
    pair_errors: np.ndarray
    curves: list[ErrorCurve] = field(repr=False, default_factory=list)

    @property
    def per_signal(self) -> list[dict]:
        """Selected lambda and its own training error for every signal."""
        return [{"lambda": float(lam), "error": float(self.pair_errors[i, i])}
                for i, lam in enumerate(self.lambdas)]


@dataclass
class SweepTable:
    rows: list[SweepRow]

    def argmin(self) -> SweepRow:
        return self.rows[grid_argmin([(r.alpha, r.beta) for r in self.rows],
                                     [r.test_error for r in self.rows])]


def worker_count() -> int:
    """Sweep parallelism from ``BREAKSEG_THREADS`` (unset or 0 means all cores)."""
    raw = os.environ.get("BREAKSEG_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("BREAKSEG_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _map(func, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


def grid_argmin(points: Sequence[tuple[float, ...]], values: Sequence[float], tol: float = 1e-9) -> int:
    """Index of the minimizing grid point.

    When several grid points tie, the one nearest the centroid of the tied
    set is returned (first in grid order on equal distance), so a flat
    minimum reports its middle rather than its edge.
    """
    values = np.asarray(values, dtype=float)
    tied = np.flatnonzero(values <= values.min() + tol)
    pts = np.asarray(points, dtype=float)[tied]
    center = pts.mean(axis=0)
    dist = np.linalg.norm(pts - center, axis=1)
    return int(tied[np.argmin(dist)])


def _prepare_dp(args):
    signal, model, k_max = args
    fit = segment_least_squares(signal.values, min(k_max, signal.d))
    berr = breakpoint_errors(fit, signal.positions, model.breaks, model.P)
    return fit.sse, berr


def _coefficient(d, length, alpha, beta, s2):
    return d ** alpha * length ** beta * s2


def sweep_exponents(db: Sequence[tuple[Signal, TrueModel]], alpha_grid, beta_grid=(0.0,),
                    gamma: bool = False, k_max: int = K_MAX, workers: int | None = None,
                    keep_curves: bool = False) -> SweepTable:
    """Train and test breakpoint error of least-squares penalties over an exponent grid.

    Parameters
    ----------
    db : sequence of (Signal, TrueModel)
        Signals with the model each was sampled from.
    alpha_grid, beta_grid : sequence of float
        Exponents of the sample count and of the length in the penalty.
    gamma : bool
        Multiply the penalty by the difference-based variance estimate.
    k_max : int
        Largest segmentation model fitted per signal.
    """
    if len(db) == 0:
        raise ValueError("empty signal database")
    if len(alpha_grid) == 0 or len(beta_grid) == 0:
        raise ValueError("exponent grids must be nonempty")
    workers = worker_count() if workers is None else workers
    prepared = _map(_prepare_dp, [(s, m, k_max) for s, m in db], workers)
    dims = [(s.d, m.P, variance_estimate(s.values) if gamma else 1.0) for s, m in db]
    rows = []
    for alpha in alpha_grid:
        for beta in beta_grid:
            curves = [error_curve(sse, None, None, None, c=_coefficient(d, l, alpha, beta, s2), berr=berr)
                      for (sse, berr), (d, l, s2) in zip(prepared, dims)]
            rows.append(_summarize(alpha, beta, curves, keep_curves))
    return SweepTable(rows)


def sweep_flsa(db: Sequence[tuple[Signal, TrueModel]], alpha_grid, lambda_grid=None,
               workers: int | None = None, keep_curves: bool = False) -> SweepTable:
    """Exponent sweep for FLSA with ``lambda2 = lambda * d**alpha`` on a lambda grid."""
    if len(db) == 0:
        raise ValueError("empty signal database")
    if lambda_grid is None:
        lambda_grid = FLSA_LAMBDA_GRID
    workers = worker_count() if workers is None else workers
    fuses = _map(flsa_fusion_path, [s.values for s, _ in db], workers)
    rows = []
    for alpha in alpha_grid:
        curves = [flsa_error_curve(s.values, s.positions, m.breaks, m.P, alpha, lambda_grid, fuse=f)
                  for (s, m), f in zip(db, fuses)]
        rows.append(_summarize(alpha, 0.0, curves, keep_curves))
    return SweepTable(rows)


def _summarize(alpha, beta, curves, keep_curves):
    _, best = train_error(curves)
    lambdas = np.array([best_lambda(c) for c in curves])
    total, pairs = test_error(curves, lambdas)
    return SweepRow(float(alpha), float(beta), best, total, lambdas, pairs,
                    curves if keep_curves else [])


def database_layout(spec: ExperimentSpec) -> list[tuple[int, int]]:
    """(sample count, length) of each signal built by :func:`build_database`, in order."""
    return [(d, l) for d in spec.densities for l in spec.lengths if d <= l]


def build_database(spec: ExperimentSpec, seed) -> list[tuple[Signal, TrueModel]]:
    """One noisy signal per (density, length) combination of ``spec``."""
    base = make_true_signal(P_DESK, SPACING, MEANS, 1.0)
    combos = database_layout(spec)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = root.spawn(len(combos))
    db = []
    for (d, length), ss in zip(combos, seeds):
        model = base if length == base.P else base.crop(length)
        db.append((sample_signal(model, d, seed=ss), model))
    return db


@dataclass
class ExperimentResult:
    name: str
    seed: int
    replicates: int
    alpha: np.ndarray
    beta: np.ndarray
    train_error: np.ndarray
    test_error: np.ndarray
    sd_test: np.ndarray
    tables: list[SweepTable] = field(repr=False, default_factory=list)

    def argmin(self) -> tuple[float, float]:
        i = grid_argmin(list(zip(self.alpha, self.beta)), self.test_error)
        return float(self.alpha[i]), float(self.beta[i])

    def rows(self):
        return zip(self.alpha, self.beta, self.train_error, self.test_error, self.sd_test)


def run_experiment(name: str, seed: int = 1, replicates: int = 3, alpha_grid=None, beta_grid=None,
                   variance_term: bool | None = None, workers: int | None = None,
                   keep_curves: bool = False) -> ExperimentResult:
    """Run a named desk-scale experiment over ``replicates`` independent databases.

    Train and test errors are averaged over replicates; ``sd_test`` is the
    standard deviation of the test error across them.
    """
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    spec = EXPERIMENTS[name]
    alpha_grid = spec.alpha_grid if alpha_grid is None else tuple(alpha_grid)
    beta_grid = spec.beta_grid if beta_grid is None else tuple(beta_grid)
    gamma = spec.variance_term if variance_term is None else variance_term
    tables = []
    for r, ss in enumerate(np.random.SeedSequence(seed).spawn(replicates)):
        db = build_database(spec, ss)
        log.info("%s replicate %d: %d signals", name, r + 1, len(db))
        if spec.flsa:
            tables.append(sweep_flsa(db, alpha_grid, workers=workers, keep_curves=keep_curves))
        else:
            tables.append(sweep_exponents(db, alpha_grid, beta_grid, gamma=gamma, k_max=spec.k_max,
                                          workers=workers, keep_curves=keep_curves))
    train = np.array([[row.train_error for row in t.rows] for t in tables])
    test = np.array([[row.test_error for row in t.rows] for t in tables])
    first = tables[0].rows
    return ExperimentResult(
        name=name, seed=seed, replicates=replicates,
        alpha=np.array([row.alpha for row in first]),
        beta=np.array([row.beta for row in first]),
        train_error=train.mean(axis=0), test_error=test.mean(axis=0),
        sd_test=test.std(axis=0), tables=tables,
    )
