"""Exact penalized model-selection paths and the error curves built on them.

A penalized criterion ``lambda * c * k + SSE_k`` picks a model size that is
piecewise constant in ``lambda``. Everything here keeps that structure
exactly: curves are stored as sorted thresholds plus one value per piece,
and piece ``i`` covers ``[thresholds[i-1], thresholds[i])`` with the first
piece open at 0 and the last unbounded.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .breakpoint_error import breakpoint_error
from .segmentation import (
    SegmentationFit,
    SmoothedSignal,
    flsa_fusion_path,
    phi_breaks,
)

__all__ = [
    "SelectionPath",
    "ErrorCurve",
    "selection_path",
    "breakpoint_errors",
    "error_curve",
    "best_lambda",
    "train_error",
    "test_error",
    "sampled_curve",
    "flsa_error_curve",
    "signal_error",
    "variance_estimate",
    "SSE_TOL",
]

# relative slack allowed when checking that SSE is nonincreasing
SSE_TOL = 1e-9
# two curve values closer than this count as equal when looking for minima
ERROR_TOL = 1e-9
SIGNAL_ERROR_FLOOR = 1e-300


@dataclass(frozen=True)
class SelectionPath:
    """Selected model size as a function of the penalty multiplier."""

    thresholds: np.ndarray
    ks: np.ndarray
    c: float

    def select(self, lam: float) -> int:
        """Model size chosen at ``lam``; ties at a threshold go to the smaller k."""
        return int(self.ks[bisect_right(self.thresholds, lam)])

    def intervals(self):
        edges = np.concatenate(([0.0], self.thresholds, [np.inf]))
        return [(float(lo), float(hi), int(k)) for lo, hi, k in zip(edges[:-1], edges[1:], self.ks)]


@dataclass(frozen=True)
class ErrorCurve:
    """Piecewise-constant function of ``lambda`` on ``(0, inf)``.

    ``ks`` records the selected model size per piece when the curve comes
    from one selection path; it is ``None`` for sums of curves.
    """

    thresholds: np.ndarray
    errors: np.ndarray
    ks: np.ndarray | None = None

    def __post_init__(self):
        th = np.asarray(self.thresholds, dtype=float)
        err = np.asarray(self.errors, dtype=float)
        if len(err) != len(th) + 1:
            raise ValueError("an error curve needs one more value than thresholds")
        if np.any(np.diff(th) <= 0) or (len(th) and th[0] <= 0):
            raise ValueError("thresholds must be positive and strictly increasing")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "errors", err)
        if self.ks is not None:
            object.__setattr__(self, "ks", np.asarray(self.ks, dtype=np.int64))

    def __call__(self, lam: float) -> float:
        return float(self.errors[bisect_right(self.thresholds, lam)])

    def intervals(self):
        edges = np.concatenate(([0.0], self.thresholds, [np.inf]))
        ks = self.ks if self.ks is not None else [None] * len(self.errors)
        return [(float(lo), float(hi), None if k is None else int(k), float(e))
                for lo, hi, k, e in zip(edges[:-1], edges[1:], ks, self.errors)]

    def minimum(self) -> float:
        return float(self.errors.min())


def _check_sse(sse):
    sse = np.asarray(sse, dtype=float)
    if sse.ndim != 1 or len(sse) == 0:
        raise ValueError("SSE must be a nonempty 1-d sequence")
    scale = max(1.0, float(np.max(np.abs(sse))))
    if np.any(np.diff(sse) > SSE_TOL * scale):
        raise ValueError("SSE must be nonincreasing in k")
    return np.minimum.accumulate(sse)


def selection_path(sse: Sequence[float], c: float = 1.0) -> SelectionPath:
    """Exact path of ``argmin_k lambda*c*k + SSE_k`` over ``lambda > 0``.

    Walks the lower convex hull of ``(k, SSE_k)`` from the largest useful
    model down to ``k = 1``. The crossing between hull models ``k1 < k2``
    is ``(SSE_k1 - SSE_k2) / (c * (k2 - k1))``.
    """
    if not c > 0 or not math.isfinite(c):
        raise ValueError(f"penalty coefficient must be positive, got {c}")
    sse = _check_sse(sse)
    # smallest k attaining the minimal SSE wins as lambda -> 0+
    k = int(np.flatnonzero(sse == sse.min())[0]) + 1
    thresholds, ks = [], [k]
    current = 0.0
    while k > 1:
        cand = np.arange(1, k)
        cross = (sse[cand - 1] - sse[k - 1]) / (c * (k - cand))
        best = cross.min()
        # among simultaneous crossings the smallest model wins
        nxt = int(cand[np.flatnonzero(cross == best)[0]])
        if best > current:
            thresholds.append(float(best))
            ks.append(nxt)
        else:
            ks[-1] = nxt
        current = max(current, float(best))
        k = nxt
    return SelectionPath(np.array(thresholds), np.array(ks, dtype=np.int64), float(c))


def breakpoint_errors(fit: SegmentationFit, p, breaks, P: int) -> np.ndarray:
    """Breakpoint error total of every model ``k = 1..k_max`` in ``fit``."""
    return np.array([float(breakpoint_error(breaks, P, phi_breaks(fit.fitted(k), p)).total)
                     for k in range(1, fit.k_max + 1)])


def error_curve(fit, p, breaks, P: int, c: float = 1.0, berr=None) -> ErrorCurve:
    """Breakpoint error of the penalized model selected at each ``lambda``.

    ``fit`` may be a :class:`SegmentationFit` or directly an SSE sequence
    (then ``berr``, the per-k errors, is required). Passing a precomputed
    ``berr`` avoids recomputing it across penalty coefficients.
    """
    if isinstance(fit, SegmentationFit):
        sse = fit.sse
        if berr is None:
            berr = breakpoint_errors(fit, p, breaks, P)
    else:
        sse = fit
        if berr is None:
            raise ValueError("per-model errors are required when passing raw SSE")
    berr = np.asarray(berr, dtype=float)
    path = selection_path(sse, c)
    return ErrorCurve(path.thresholds, berr[path.ks - 1], path.ks)


def _merge_equal(curve: ErrorCurve):
    """Collapse adjacent pieces with equal error into runs ``(lo, hi, error)``."""
    runs = []
    for lo, hi, _, err in curve.intervals():
        if runs and runs[-1][2] == err:
            runs[-1][1] = hi
        else:
            runs.append([lo, hi, err])
    return runs


def best_lambda(curve: ErrorCurve) -> float:
    """A minimizer of the curve: geometric midpoint of the widest minimizing run.

    Width is measured in log10(lambda). A run starting at 0 gets ``hi / 10``
    as its lower end and an unbounded run gets ``lo * 10`` as its upper end;
    a run covering everything uses the outermost thresholds of the curve.
    """
    if len(curve.thresholds) == 0:
        return 1.0
    lowest = curve.minimum()
    runs = _merge_equal(ErrorCurve(curve.thresholds,
                                   np.where(curve.errors <= lowest + ERROR_TOL, lowest, curve.errors)))
    best, best_width = None, -np.inf
    for lo, hi, err in runs:
        if err != lowest:
            continue
        if lo == 0.0 and math.isinf(hi):
            lo, hi = curve.thresholds[0] / 10.0, curve.thresholds[-1] * 10.0
        elif lo == 0.0:
            lo = hi / 10.0
        elif math.isinf(hi):
            hi = lo * 10.0
        width = math.log10(hi) - math.log10(lo)
        if width > best_width:
            best, best_width = math.sqrt(lo * hi), width
    return best


def train_error(curves: Sequence[ErrorCurve]) -> tuple[ErrorCurve, float]:
    """Pointwise sum of curves and its minimal value."""
    if len(curves) == 0:
        raise ValueError("need at least one curve")
    th = np.unique(np.concatenate([c.thresholds for c in curves]))
    total = np.zeros(len(th) + 1)
    for c in curves:
        # piece i of the merged grid lies inside piece idx[i] of c
        idx = np.searchsorted(c.thresholds, np.concatenate(([0.0], th)), side="right")
        total += c.errors[idx]
    summed = ErrorCurve(th, total)
    return summed, summed.minimum()


def test_error(curves: Sequence[ErrorCurve], lambdas: Sequence[float]) -> tuple[float, np.ndarray]:
    """Sum over ordered pairs ``i != j`` of curve ``i`` evaluated at ``lambdas[j]``.

    Returns the total and the ``z x z`` matrix ``M[i, j] = E_i(lambda_j)``
    (its diagonal is not part of the total).
    """
    z = len(curves)
    if z < 2:
        raise ValueError("test error needs at least 2 signals")
    if len(lambdas) != z:
        raise ValueError("one selected lambda per curve is required")
    M = np.array([[curves[i](lambdas[j]) for j in range(z)] for i in range(z)])
    return float(M.sum() - np.trace(M)), M


test_error.__test__ = False  # keep pytest from collecting it on import


def sampled_curve(grid, errors) -> ErrorCurve:
    """Turn errors sampled on an increasing positive grid into a step curve.

    Each sample owns the span between the geometric midpoints to its
    neighbours; the end samples extend to 0 and infinity.
    """
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        raise ValueError("a sampled curve needs at least 2 grid points")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be positive and strictly increasing")
    return ErrorCurve(np.sqrt(grid[:-1] * grid[1:]), np.asarray(errors, dtype=float))


def flsa_error_curve(y, p, breaks, P: int, alpha: float, lambda_grid,
                     fuse: np.ndarray | None = None) -> ErrorCurve:
    """Breakpoint error of the FLSA fit with ``lambda2 = lambda * d**alpha``.

    Evaluated on ``lambda_grid``; the change set at each ``lambda2`` is read
    off the exact fusion path, so ``fuse`` (from
    :func:`~breakseg.segmentation.flsa_fusion_path`) can be shared across
    exponents.
    """
    y = np.asarray(y, dtype=float)
    p = np.asarray(p)
    grid = np.asarray(lambda_grid, dtype=float)
    if len(grid) == 0:
        raise ValueError("lambda grid is empty")
    if fuse is None:
        fuse = flsa_fusion_path(y)
    scale = len(y) ** alpha
    order = np.argsort(fuse)
    sorted_fuse = fuse[order]
    mids = (p[:-1] + p[1:]) // 2
    # the surviving change set depends only on how many fusions happened
    cache = {}
    errors = []
    for lam in grid:
        cut = int(np.searchsorted(sorted_fuse, lam * scale, side="right"))
        if cut not in cache:
            guesses = mids[np.sort(order[cut:])]
            cache[cut] = float(breakpoint_error(breaks, P, guesses.tolist()).total)
        errors.append(cache[cut])
    return sampled_curve(grid, errors)


def signal_error(fit, k: int, true_model, p) -> float:
    """log10 of the mean squared deviation of the fit from the true means."""
    if isinstance(fit, SegmentationFit):
        fitted = fit.fitted(k)
    elif isinstance(fit, SmoothedSignal):
        fitted = fit.values
    else:
        fitted = np.asarray(fit, dtype=float)
    truth = true_model.means_at(np.asarray(p))
    mse = float(np.mean((fitted - truth) ** 2))
    return math.log10(max(mse, SIGNAL_ERROR_FLOOR))


def variance_estimate(y) -> float:
    """Difference-based noise variance: half the mean squared first difference."""
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError("need at least 2 observations")
    return float(np.sum(np.diff(y) ** 2) / (2 * (len(y) - 1)))
