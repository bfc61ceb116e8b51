"""Annotation-based error functions for data without known breakpoints."""

from __future__ import annotations

import csv
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

__all__ = [
    "Annotation",
    "AnnotationSet",
    "AnnotationError",
    "incomplete_error",
    "negative_regions",
    "complete_error",
    "zero_one_error",
    "read_annotations",
    "write_annotations",
]

UNBOUNDED = math.inf


@dataclass(frozen=True)
class Annotation:
    """Region ``[lower, upper]`` allowed to hold ``min_breaks..max_breaks`` breaks.

    ``max_breaks`` may be ``math.inf`` for "at least ``min_breaks``".
    """

    lower: int
    upper: int
    min_breaks: int = 1
    max_breaks: float = 1

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty annotation region [{self.lower}, {self.upper}]")
        if self.min_breaks < 0 or self.max_breaks < self.min_breaks:
            raise ValueError(
                f"allowed count interval [{self.min_breaks}, {self.max_breaks}] is empty or negative"
            )

    def count(self, sorted_guesses: Sequence[int]) -> int:
        return bisect_right(sorted_guesses, self.upper) - bisect_left(sorted_guesses, self.lower)

    def false_positives(self, sorted_guesses) -> int:
        excess = self.count(sorted_guesses) - self.max_breaks
        return int(excess) if excess > 0 else 0

    def false_negatives(self, sorted_guesses) -> int:
        return max(self.min_breaks - self.count(sorted_guesses), 0)


class AnnotationSet(tuple):
    """Ordered collection of :class:`Annotation` objects."""

    def __new__(cls, annotations: Iterable[Annotation] = ()):
        return super().__new__(cls, annotations)

    def __add__(self, other):
        return AnnotationSet(tuple(self) + tuple(other))

    @property
    def complete(self) -> bool:
        """True when regions are pairwise disjoint and each allows exactly one break."""
        return (all(a.min_breaks == 1 and a.max_breaks == 1 for a in self)
                and _disjoint(self))

    def sorted(self) -> "AnnotationSet":
        return AnnotationSet(sorted(self, key=lambda a: (a.lower, a.upper)))


class AnnotationError(NamedTuple):
    fp: int
    fn: int
    total: int


def _disjoint(annotations) -> bool:
    ordered = sorted(annotations, key=lambda a: a.lower)
    return all(a.upper < b.lower for a, b in zip(ordered, ordered[1:]))


def _sorted_guesses(guesses):
    G = sorted(int(g) for g in guesses)
    for a, b in zip(G, G[1:]):
        if a == b:
            raise ValueError(f"duplicate guess {a}")
    return G


def incomplete_error(annotations: Iterable[Annotation], guesses: Iterable[int]) -> AnnotationError:
    """Count guesses above each region's maximum plus shortfalls below its minimum.

    Guesses outside every annotated region cost nothing. Overlapping
    regions are scored independently.
    """
    G = _sorted_guesses(guesses)
    fp = fn = 0
    for ann in annotations:
        fp += ann.false_positives(G)
        fn += ann.false_negatives(G)
    return AnnotationError(fp, fn, fp + fn)


def negative_regions(annotations: Iterable[Annotation], P: int) -> AnnotationSet:
    """Zero-break annotations covering every gap of ``1..P-1`` between regions."""
    ordered = sorted(annotations, key=lambda a: a.lower)
    if not _disjoint(ordered):
        raise ValueError("negative regions need pairwise disjoint annotations")
    for ann in ordered:
        if ann.lower < 1 or ann.upper > P - 1:
            raise ValueError(f"annotation [{ann.lower}, {ann.upper}] outside 1..{P - 1}")
    edges = [0] + [x for a in ordered for x in (a.lower, a.upper)] + [P]
    gaps = []
    for left, right in zip(edges[0::2], edges[1::2]):
        if left + 1 <= right - 1:
            gaps.append(Annotation(left + 1, right - 1, 0, 0))
    return AnnotationSet(gaps)


def complete_error(annotations: Iterable[Annotation], guesses: Iterable[int]) -> int:
    """Stray guesses outside all regions plus per-region FP and FN counts.

    Every region must allow exactly one break and regions must be disjoint.
    """
    annotations = list(annotations)
    if any(a.min_breaks != 1 or a.max_breaks != 1 for a in annotations):
        raise ValueError("complete error requires every annotation to allow exactly 1 break")
    if not _disjoint(annotations):
        raise ValueError("complete error requires disjoint annotation regions")
    G = _sorted_guesses(guesses)
    total = 0
    inside = 0
    for ann in annotations:
        n = ann.count(G)
        inside += n
        total += 1 if n == 0 else n - 1
    return total + len(G) - inside


def zero_one_error(annotations: Iterable[Annotation], guesses: Iterable[int]) -> int:
    """Number of annotated regions whose guess count is not allowed."""
    G = _sorted_guesses(guesses)
    return sum(1 for a in annotations if not a.min_breaks <= a.count(G) <= a.max_breaks)


def read_annotations(path) -> AnnotationSet:
    """Read ``lower,upper,min_breaks,max_breaks`` CSV; blank max means unbounded."""
    lines = [line for line in Path(path).read_text().splitlines()
             if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    expected = ["lower", "upper", "min_breaks", "max_breaks"]
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
        raise ValueError(f"{path}: expected header {','.join(expected)}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        try:
            hi = (row["max_breaks"] or "").strip()
            out.append(Annotation(int(row["lower"]), int(row["upper"]), int(row["min_breaks"]),
                                  UNBOUNDED if hi == "" else int(hi)))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return AnnotationSet(out)


def write_annotations(annotations: Iterable[Annotation], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lower", "upper", "min_breaks", "max_breaks"])
        for a in annotations:
            hi = "" if math.isinf(a.max_breaks) else int(a.max_breaks)
            writer.writerow([a.lower, a.upper, a.min_breaks, hi])

