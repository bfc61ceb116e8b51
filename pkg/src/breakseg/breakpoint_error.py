"""Exact breakpoint detection error of a guess set against true breakpoints.

Arithmetic is done with :class:`fractions.Fraction` so the merge
implementation and the brute-force oracle can be compared exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

__all__ = [
    "Region",
    "ErrorBreakdown",
    "regions_from_breakpoints",
    "imprecision",
    "breakpoint_error",
    "breakpoint_error_naive",
    "check_breaks",
    "check_guesses",
]


class Region(NamedTuple):
    """Closed interval ``[lower, upper]`` of candidate positions around ``brk``."""

    lower: int
    brk: int
    upper: int

    def __contains__(self, g):
        return self.lower <= g <= self.upper


@dataclass(frozen=True)
class ErrorBreakdown:
    fp: int
    fn: int
    imprecision: Fraction

    @property
    def total(self) -> Fraction:
        return self.fp + self.fn + self.imprecision

    def as_dict(self) -> dict:
        return {
            "fp": self.fp,
            "fn": self.fn,
            "imprecision": float(self.imprecision),
            "total": float(self.total),
        }


def check_breaks(breaks: Iterable[int], P: int) -> list[int]:
    """Validate a true break set: strictly sorted and inside ``1..P-1``."""
    B = [int(b) for b in breaks]
    if P < 2:
        raise ValueError(f"P must be >= 2, got {P}")
    for a, b in zip(B, B[1:]):
        if b <= a:
            raise ValueError(f"breakpoints must be strictly increasing, got {a} then {b}")
    if B and (B[0] < 1 or B[-1] > P - 1):
        raise ValueError(f"breakpoints must lie in 1..{P - 1}")
    return B


def check_guesses(guesses: Iterable[int], P: int) -> list[int]:
    """Return the guesses sorted; duplicates and out-of-range values are errors."""
    G = sorted(int(g) for g in guesses)
    for a, b in zip(G, G[1:]):
        if a == b:
            raise ValueError(f"duplicate guess {a}")
    if G and (G[0] < 1 or G[-1] > P - 1):
        bad = G[0] if G[0] < 1 else G[-1]
        raise ValueError(f"guess {bad} outside 1..{P - 1}")
    return G


def regions_from_breakpoints(breaks: Iterable[int], P: int) -> list[Region]:
    """Partition ``1..P-1`` into one region per breakpoint.

    Region boundaries sit at the floor of the midpoint between consecutive
    breaks; the first region starts at 1 and the last ends at ``P - 1``.
    """
    B = check_breaks(breaks, P)
    regions = []
    lower = 1
    for i, b in enumerate(B):
        upper = P - 1 if i == len(B) - 1 else (b + B[i + 1]) // 2
        regions.append(Region(lower, b, upper))
        lower = upper + 1
    return regions


def imprecision(region, g: int) -> Fraction:
    """Piecewise-affine cost of guess ``g`` for ``region = (lower, brk, upper)``.

    Zero at the break, rising linearly to 1 at the region limits, and 1
    everywhere outside.
    """
    lower, brk, upper = region
    if g == brk:
        return Fraction(0)
    if lower < g < brk:
        return Fraction(brk - g, brk - lower)
    if brk < g < upper:
        return Fraction(g - brk, upper - brk)
    return Fraction(1)


def breakpoint_error(breaks: Iterable[int], P: int, guesses: Iterable[int]) -> ErrorBreakdown:
    """Breakpoint error of ``guesses`` w.r.t. ``breaks`` by one sorted merge.

    Within a region only the guesses adjacent to the break can attain the
    minimal imprecision, so the cost is O(n + m) after sorting.
    """
    regions = regions_from_breakpoints(breaks, P)
    G = check_guesses(guesses, P)
    if not regions:
        return ErrorBreakdown(len(G), 0, Fraction(0))
    fp = fn = 0
    total_imprecision = Fraction(0)
    j = 0
    m = len(G)
    for region in regions:
        count = 0
        below = above = None
        while j < m and G[j] <= region.upper:
            g = G[j]
            if g <= region.brk:
                below = g
            elif above is None:
                above = g
            count += 1
            j += 1
        if count == 0:
            fn += 1
            continue
        fp += count - 1
        total_imprecision += min(imprecision(region, g) for g in (below, above) if g is not None)
    return ErrorBreakdown(fp, fn, total_imprecision)


def breakpoint_error_naive(breaks: Iterable[int], P: int, guesses: Iterable[int]) -> ErrorBreakdown:
    """Brute-force O(n m) evaluation of the same error, used as a test oracle."""
    regions = regions_from_breakpoints(breaks, P)
    G = check_guesses(guesses, P)
    outside = sum(1 for g in G if not any(g in r for r in regions))
    fp, fn = outside, 0
    total_imprecision = Fraction(0)
    for region in regions:
        inside = [g for g in G if g in region]
        if not inside:
            fn += 1
            continue
        fp += len(inside) - 1
        total_imprecision += min(imprecision(region, g) for g in inside)
    return ErrorBreakdown(fp, fn, total_imprecision)
