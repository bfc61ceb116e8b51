"""Least-squares segmentation and the fused lasso signal approximator."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SegmentationFit",
    "SmoothedSignal",
    "segment_least_squares",
    "residual_variance",
    "phi_breaks",
    "flsa_solve",
    "flsa_fusion_path",
    "flsa_kkt_residual",
    "model_breaks",
    "FLSA_FUSION_TOL",
]

# adjacent FLSA values closer than this are treated as fused
FLSA_FUSION_TOL = 1e-9


@dataclass(frozen=True)
class SegmentationFit:
    """Optimal ``k``-segment least-squares models for ``k = 1..k_max``.

    ``changes[k - 1]`` holds the 1-based change indices ``j`` (a change
    between ``y_j`` and ``y_{j+1}``) and ``means[k - 1]`` the segment means.
    """

    y: np.ndarray
    changes: tuple[tuple[int, ...], ...]
    means: tuple[np.ndarray, ...]
    sse: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.changes)

    @property
    def d(self) -> int:
        return len(self.y)

    def _check_k(self, k):
        if not 1 <= k <= self.k_max:
            raise ValueError(f"k must be in 1..{self.k_max}, got {k}")

    def fitted(self, k: int) -> np.ndarray:
        """The piecewise-constant fitted vector of the ``k``-segment model."""
        self._check_k(k)
        bounds = (0,) + self.changes[k - 1] + (self.d,)
        return np.repeat(self.means[k - 1], np.diff(bounds))

    def sigma2(self, k: int) -> float:
        self._check_k(k)
        return float(self.sse[k - 1] / self.d)


def segment_least_squares(y, k_max: int) -> SegmentationFit:
    """Segment-neighborhood dynamic programming for the squared-error loss.

    Interval costs come from prefix sums of ``y`` and ``y**2`` so each DP
    layer costs O(d^2). Among equal-cost candidates the leftmost last change
    wins.

    Parameters
    ----------
    y : array_like
        Observations ordered by position.
    k_max : int
        Largest number of segments, ``1 <= k_max <= len(y)``.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) == 0:
        raise ValueError("y must be a nonempty 1-d sequence")
    d = len(y)
    if not 1 <= k_max <= d:
        raise ValueError(f"k_max must be in 1..{d}, got {k_max}")

    s1 = np.concatenate(([0.0], np.cumsum(y)))
    s2 = np.concatenate(([0.0], np.cumsum(y * y)))
    ends = np.arange(1, d + 1)
    # cost[k][t]: best cost of y[:t] in k segments; last[k][t]: start of last segment
    cost = np.full((k_max, d + 1), np.inf)
    last = np.zeros((k_max, d + 1), dtype=np.int64)
    cost[0, 1:] = s2[1:] - s1[1:] ** 2 / ends
    for k in range(1, k_max):
        prev = cost[k - 1]
        for t in range(k + 1, d + 1):
            s = np.arange(k, t)
            n = t - s
            tot = s1[t] - s1[s]
            cand = prev[k:t] + (s2[t] - s2[s]) - tot * tot / n
            i = int(np.argmin(cand))
            cost[k, t] = cand[i]
            last[k, t] = k + i

    changes, means, sse = [], [], np.empty(k_max)
    for k in range(1, k_max + 1):
        bounds = [d]
        t = d
        for layer in range(k - 1, 0, -1):
            t = int(last[layer, t])
            bounds.append(t)
        bounds.append(0)
        bounds.reverse()
        seg_means = np.array([y[a:b].mean() for a, b in zip(bounds, bounds[1:])])
        fitted = np.repeat(seg_means, np.diff(bounds))
        changes.append(tuple(bounds[1:-1]))
        means.append(seg_means)
        sse[k - 1] = float(np.sum((y - fitted) ** 2))
    # recomputed residuals can break monotonicity at the rounding level
    sse = np.minimum.accumulate(sse)
    return SegmentationFit(y, tuple(changes), tuple(means), sse)


def residual_variance(fit: SegmentationFit, k: int) -> float:
    """Mean squared residual ``SSE_k / d`` of the ``k``-segment model."""
    return fit.sigma2(k)


def phi_breaks(x, p, tol: float = 0.0) -> list[int]:
    """Floor midpoints ``(p_j + p_{j+1}) // 2`` wherever ``x`` changes.

    ``tol`` is the smallest adjacent difference counted as a change; the
    default 0 means exact inequality.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p)
    if x.shape != p.shape or x.ndim != 1:
        raise ValueError("x and p must be 1-d sequences of equal length")
    if np.any(np.diff(p) <= 0):
        raise ValueError("positions must be strictly increasing")
    diff = np.abs(np.diff(x))
    idx = np.flatnonzero(diff > tol)
    return [int(v) for v in (p[idx] + p[idx + 1]) // 2]


@dataclass(frozen=True)
class SmoothedSignal:
    values: np.ndarray
    lambda2: float

    def change_indices(self, tol: float = FLSA_FUSION_TOL) -> np.ndarray:
        return np.flatnonzero(np.abs(np.diff(self.values)) > tol) + 1


def flsa_solve(y, lambda2: float) -> SmoothedSignal:
    """Exact minimizer of ``0.5*||y - m||^2 + lambda2 * sum |m_j - m_{j+1}|``.

    Condat's direct taut-string style algorithm: segments are grown left to
    right while the running dual variable stays within ``[-lambda2, lambda2]``,
    with backtracking to the last admissible jump when it leaves.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) == 0:
        raise ValueError("y must be a nonempty 1-d sequence")
    if lambda2 < 0 or not np.isfinite(lambda2):
        raise ValueError(f"lambda2 must be a finite value >= 0, got {lambda2}")
    lam = float(lambda2)
    n = len(y)
    if lam == 0.0 or n == 1:
        return SmoothedSignal(y.copy(), lam)
    x = y.tolist()
    out = [0.0] * n
    k = k0 = kplus = kminus = 0
    umin, umax = lam, -lam
    vmin, vmax = x[0] - lam, x[0] + lam
    twolam = 2.0 * lam
    while True:
        while k == n - 1:
            if umin < 0.0:
                while True:
                    out[k0] = vmin
                    k0 += 1
                    if k0 > kminus:
                        break
                k = kminus = k0
                vmin = x[k]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                while True:
                    out[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = kplus = k0
                vmax = x[k]
                umax = -lam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while k0 <= k:
                    out[k0] = vmin
                    k0 += 1
                return SmoothedSignal(np.array(out), lam)
        umin += x[k + 1] - vmin
        if umin < -lam:
            while True:
                out[k0] = vmin
                k0 += 1
                if k0 > kminus:
                    break
            k = kplus = kminus = k0
            vmin = x[k]
            vmax = vmin + twolam
            umin, umax = lam, -lam
            continue
        umax += x[k + 1] - vmax
        if umax > lam:
            while True:
                out[k0] = vmax
                k0 += 1
                if k0 > kplus:
                    break
            k = kplus = kminus = k0
            vmax = x[k]
            vmin = vmax - twolam
            umin, umax = lam, -lam
            continue
        k += 1
        if umin >= lam:
            kminus = k
            vmin += (umin - lam) / (kminus - k0 + 1)
            umin = lam
        if umax <= -lam:
            kplus = k
            vmax += (umax + lam) / (kplus - k0 + 1)
            umax = -lam


def flsa_kkt_residual(y, m, lambda2: float, tol: float = FLSA_FUSION_TOL) -> float:
    """Largest violation of the subgradient optimality conditions.

    With ``r_j = sum_{i<=j} (y_i - m_i)``, optimality requires ``r_d = 0``,
    ``|r_j| <= lambda2`` everywhere and ``r_j = -lambda2 * sign(m_{j+1} - m_j)``
    at every change.
    """
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    r = np.cumsum(y - m)
    worst = abs(r[-1])
    if len(y) > 1:
        inner = r[:-1]
        worst = max(worst, float(np.max(np.abs(inner)) - lambda2))
        step = np.diff(m)
        moved = np.abs(step) > tol
        if np.any(moved):
            target = -lambda2 * np.sign(step[moved])
            worst = max(worst, float(np.max(np.abs(inner[moved] - target))))
    return max(worst, 0.0)


def flsa_fusion_path(y) -> np.ndarray:
    """Penalty level at which each adjacent pair ``(j, j+1)`` fuses for good.

    Without the sparsity term the 1-d solution path only ever merges
    neighbouring groups as ``lambda2`` grows. Between merges a group ``g``
    sits at ``(S_g - lambda2 * (s_left + s_right)) / n_g`` with ``s`` the
    signs of its differences to its neighbours, so merge times follow from
    linear equations. Returns an array of length ``d - 1``; the change
    between ``j`` and ``j+1`` (0-based) is present iff
    ``lambda2 < fuse[j]``.
    """
    y = np.asarray(y, dtype=float)
    d = len(y)
    fuse = np.zeros(max(d - 1, 0))
    if d <= 1:
        return fuse

    # initial groups: maximal runs of equal values (fused at lambda2 = 0)
    starts = [0] + [j + 1 for j in range(d - 1) if y[j + 1] != y[j]]
    stops = starts[1:] + [d]
    ng = len(starts)
    total = [float(y[a:b].sum()) for a, b in zip(starts, stops)]
    size = [b - a for a, b in zip(starts, stops)]
    lastidx = [b - 1 for b in stops]
    left = list(range(-1, ng - 1))
    right = list(range(1, ng + 1))
    right[-1] = -1
    alive = [True] * ng
    version = [0] * ng
    value0 = [total[g] / size[g] for g in range(ng)]

    def slope(g):
        # d m_g / d lambda2, from the signs toward live neighbours
        s = 0.0
        mg = value0[g]
        if left[g] >= 0:
            s += np.sign(mg - value0[left[g]])
        if right[g] >= 0:
            s += np.sign(mg - value0[right[g]])
        return -s / size[g]

    slopes = [slope(g) for g in range(ng)]
    # value of group g at penalty lam is base[g] + slopes[g] * lam
    base = [total[g] / size[g] for g in range(ng)]

    def meet(g, h, now):
        gap = (base[g] + slopes[g] * now) - (base[h] + slopes[h] * now)
        closing = slopes[h] - slopes[g]
        if gap == 0:
            return now
        if closing == 0 or np.sign(closing) != np.sign(gap):
            return None
        return max(now, (base[g] - base[h]) / closing)

    heap = []

    def push(g, now):
        h = right[g]
        if h < 0:
            return
        t = meet(g, h, now)
        if t is not None:
            heapq.heappush(heap, (t, g, version[g], h, version[h]))

    for g in range(ng - 1):
        push(g, 0.0)

    def value(g, lam):
        return base[g] + slopes[g] * lam

    def absorb(g, h, t):
        # h = right[g] joins g at penalty t
        fuse[lastidx[g]] = t
        total[g] += total[h]
        size[g] += size[h]
        lastidx[g] = lastidx[h]
        right[g] = right[h]
        if right[g] >= 0:
            left[right[g]] = g
        alive[h] = False

    while heap:
        t, g, vg, h, vh = heapq.heappop(heap)
        if not (alive[g] and alive[h]) or version[g] != vg or version[h] != vh or right[g] != h:
            continue
        now = value(g, t)
        absorb(g, h, t)
        # neighbours meeting at the same penalty merge too; a tie has no sign
        while True:
            tol = 1e-12 * (1.0 + abs(now))
            if right[g] >= 0 and abs(value(right[g], t) - now) <= tol:
                absorb(g, right[g], t)
            elif left[g] >= 0 and abs(value(left[g], t) - now) <= tol:
                lg = left[g]
                absorb(lg, g, t)
                g = lg
            else:
                break
        s = 0.0
        if left[g] >= 0:
            s += np.sign(now - value(left[g], t))
        if right[g] >= 0:
            s += np.sign(now - value(right[g], t))
        slopes[g] = -s / size[g]
        base[g] = now - slopes[g] * t
        version[g] += 1
        if left[g] >= 0:
            push(left[g], t)
        push(g, t)
    return fuse


def model_breaks(model, p, k: int | None = None) -> list[int]:
    """Breakpoint guesses of a fitted model at sample positions ``p``.

    ``model`` is a :class:`SegmentationFit` (with ``k``), a
    :class:`SmoothedSignal`, or a plain fitted vector. DP fits use exact
    inequality of adjacent values; FLSA output uses :data:`FLSA_FUSION_TOL`.
    """
    if isinstance(model, SegmentationFit):
        if k is None:
            raise ValueError("k is required for a SegmentationFit")
        return phi_breaks(model.fitted(k), p)
    if isinstance(model, SmoothedSignal):
        return phi_breaks(model.values, p, tol=FLSA_FUSION_TOL)
    return phi_breaks(model, p)
