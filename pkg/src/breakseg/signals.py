"""Piecewise-constant true models and noisy samples drawn from them."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import cycle, islice
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Segment",
    "TrueModel",
    "Signal",
    "make_true_signal",
    "sample_signal",
    "true_breakpoints",
    "make_rng",
]

SCHEMES = ("uniform-spaced", "uniform-random")


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; every stochastic output in the package goes through here."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Segment:
    end: int
    mean: float
    sd: float


@dataclass(frozen=True)
class TrueModel:
    """Piecewise-constant normal distribution over positions ``1..P``.

    Segment ``i`` covers positions ``segments[i-1].end + 1`` through
    ``segments[i].end``. A zero ``sd`` is allowed here (noise-free models);
    :func:`make_true_signal` is stricter.
    """

    P: int
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(
            s if isinstance(s, Segment) else Segment(int(s[0]), float(s[1]), float(s[2]))
            for s in self.segments
        ))
        if self.P < 2:
            raise ValueError(f"P must be >= 2, got {self.P}")
        if not self.segments:
            raise ValueError("a model needs at least one segment")
        prev = 0
        for seg in self.segments:
            if seg.end <= prev:
                raise ValueError("segment end positions must be strictly increasing")
            if seg.sd < 0 or not np.isfinite(seg.sd) or not np.isfinite(seg.mean):
                raise ValueError(f"invalid segment parameters {seg}")
            prev = seg.end
        if prev != self.P:
            raise ValueError(f"last segment must end at P={self.P}, ends at {prev}")
        for a, b in zip(self.segments, self.segments[1:]):
            if a.mean == b.mean and a.sd == b.sd:
                raise ValueError(
                    f"adjacent segments ending at {a.end} and {b.end} have the same distribution"
                )

    @property
    def breaks(self) -> list[int]:
        return [s.end for s in self.segments[:-1]]

    def means_at(self, positions) -> np.ndarray:
        return self._lookup(positions, "mean")

    def sds_at(self, positions) -> np.ndarray:
        return self._lookup(positions, "sd")

    def _lookup(self, positions, attr):
        positions = np.asarray(positions)
        ends = np.array([s.end for s in self.segments])
        idx = np.searchsorted(ends, positions, side="left")
        values = np.array([getattr(s, attr) for s in self.segments])
        return values[idx]

    def crop(self, length: int) -> "TrueModel":
        """Restrict the model to positions ``1..length``."""
        if not 2 <= length <= self.P:
            raise ValueError(f"crop length must be in 2..{self.P}, got {length}")
        kept = []
        for seg in self.segments:
            if seg.end >= length:
                kept.append(Segment(length, seg.mean, seg.sd))
                break
            kept.append(seg)
        return TrueModel(length, tuple(kept))

    def to_dict(self) -> dict:
        return {
            "P": self.P,
            "segments": [{"end": s.end, "mean": s.mean, "sd": s.sd} for s in self.segments],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrueModel":
        segs = tuple(Segment(int(s["end"]), float(s["mean"]), float(s["sd"]))
                     for s in data["segments"])
        return cls(int(data["P"]), segs)

    def to_json(self, path, **extra) -> None:
        payload = self.to_dict()
        payload.update(extra)
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_json(cls, path) -> "TrueModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Signal:
    """Noisy sample ``values`` observed at sorted integer ``positions``."""

    positions: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        if pos.ndim != 1 or pos.shape != val.shape:
            raise ValueError("positions and values must be 1-d arrays of equal length")
        if len(pos) < 1:
            raise ValueError("a signal needs at least one sample")
        if pos[0] < 1 or np.any(np.diff(pos) <= 0):
            raise ValueError("positions must be strictly increasing integers >= 1")
        if not np.all(np.isfinite(val)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", val)

    def __len__(self):
        return len(self.values)

    @property
    def d(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return (np.array_equal(self.positions, other.positions)
                and np.array_equal(self.values, other.values))

    def to_csv(self, path=None, header_lines: Sequence[str] = ()) -> str:
        """Write ``position,value`` CSV; ``header_lines`` become ``#`` comments."""
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["position", "value"])
        for p, v in zip(self.positions, self.values):
            writer.writerow([int(p), repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "Signal":
        rows = [line for line in Path(path).read_text().splitlines()
                if line.strip() and not line.lstrip().startswith("#")]
        reader = csv.DictReader(rows)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["position", "value"]:
            raise ValueError(f"{path}: expected header 'position,value'")
        positions, values = [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                positions.append(int(row["position"]))
                values.append(float(row["value"]))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad row {lineno}: {exc}") from None
        return cls(np.array(positions), np.array(values))


def make_true_signal(P: int, break_spacing: int, means: Sequence[float],
                     sds: Sequence[float] | float = 1.0) -> TrueModel:
    """Build a model with a segment every ``break_spacing`` positions.

    Means and standard deviations are taken cyclically from ``means`` and
    ``sds``; the last segment may be shorter.
    """
    if P < 2:
        raise ValueError(f"P must be >= 2, got {P}")
    if break_spacing < 1:
        raise ValueError(f"break_spacing must be >= 1, got {break_spacing}")
    if len(means) == 0:
        raise ValueError("means must be nonempty")
    if np.isscalar(sds):
        sds = [sds]
    if len(sds) == 0 or any(s <= 0 for s in sds):
        raise ValueError("standard deviations must be positive")
    ends = list(range(break_spacing, P, break_spacing)) + [P]
    params = zip(islice(cycle(means), len(ends)), islice(cycle(sds), len(ends)))
    segments = tuple(Segment(e, float(m), float(s)) for e, (m, s) in zip(ends, params))
    return TrueModel(P, segments)


def true_breakpoints(model: TrueModel) -> list[int]:
    """Positions ``j`` whose distribution differs from that of ``j + 1``."""
    return model.breaks


def _spaced_positions(P, d):
    pos = np.floor(np.arange(1, d + 1) * P / d + 0.5).astype(np.int64)
    # collisions pushed right; cannot overrun since d <= P
    for j in range(1, d):
        if pos[j] <= pos[j - 1]:
            pos[j] = pos[j - 1] + 1
    if pos[-1] > P:
        for j in range(d - 1, -1, -1):
            limit = P - (d - 1 - j)
            if pos[j] <= limit:
                break
            pos[j] = limit
    return pos


def sample_signal(model: TrueModel, d: int, seed=None, scheme: str = "uniform-spaced") -> Signal:
    """Draw ``d`` observations ``y ~ N(mean_p, sd_p^2)`` at positions in ``1..P``."""
    if not 1 <= d <= model.P:
        raise ValueError(f"sample count d must be in 1..{model.P}, got {d}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown sampling scheme {scheme!r}; expected one of {SCHEMES}")
    rng = make_rng(seed)
    if scheme == "uniform-spaced":
        positions = _spaced_positions(model.P, d)
    else:
        positions = np.sort(rng.choice(model.P, size=d, replace=False)) + 1
    noise = rng.standard_normal(d)
    values = model.means_at(positions) + model.sds_at(positions) * noise
    meta = {"P": model.P, "d": d, "length": model.P, "seed": seed, "scheme": scheme}
    return Signal(positions, values, meta)
