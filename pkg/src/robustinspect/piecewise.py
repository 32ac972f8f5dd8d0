"""Piecewise functions on [0, 1] over the basis {1/v, 1, v, v^2, sqrt(v)}.

Every allocation and payment rule in the closed-form mechanisms is a finite
concatenation of such pieces.  Segments are half-open ``[lo, hi)`` except the
last, which is closed.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InvariantViolation

COEFF_NAMES = ("c_m1", "c0", "c1", "c2", "ch")

# Zero-length pieces produced by coinciding breakpoints are dropped.
_MIN_WIDTH = 1e-15


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    c_m1: float = 0.0
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    ch: float = 0.0

    @property
    def coeffs(self) -> tuple[float, float, float, float, float]:
        return (self.c_m1, self.c0, self.c1, self.c2, self.ch)

    def value(self, v):
        """Evaluate the basis combination (scalar or array, no domain check)."""
        out = self.c0 + self.c1 * v + self.c2 * v * v
        if self.ch:
            out = out + self.ch * np.sqrt(v)
        if self.c_m1:
            out = out + self.c_m1 / v
        return out

    def integral(self, a: float | None = None, b: float | None = None) -> float:
        a = self.lo if a is None else a
        b = self.hi if b is None else b
        total = (
            self.c0 * (b - a)
            + self.c1 * (b * b - a * a) / 2.0
            + self.c2 * (b**3 - a**3) / 3.0
            + self.ch * (2.0 / 3.0) * (b**1.5 - a**1.5)
        )
        if self.c_m1:
            total += self.c_m1 * math.log(b / a)
        return total


class PiecewiseFn:
    """Immutable piecewise function tiling [0, 1]."""

    __slots__ = ("_segments", "_los")

    def __init__(self, segments: Iterable[Segment]):
        segs = tuple(segments)
        _check_tiling(segs)
        object.__setattr__(self, "_segments", segs)
        object.__setattr__(self, "_los", [s.lo for s in segs])

    def __setattr__(self, name, value):
        raise AttributeError("PiecewiseFn is immutable")

    @classmethod
    def from_pieces(cls, pieces: Sequence[tuple[float, float, dict]]) -> "PiecewiseFn":
        """Build from ``(lo, hi, {coeff: value})`` triples, dropping empty pieces.

        Consecutive pieces must share endpoints; a piece whose width is below
        1e-15 is removed and its neighbour stretched over the gap.
        """
        kept = [(lo, hi, c) for lo, hi, c in pieces if hi - lo > _MIN_WIDTH]
        if not kept:
            raise InvariantViolation("no segment of positive width")
        segs = []
        for i, (lo, hi, c) in enumerate(kept):
            lo = 0.0 if i == 0 else segs[-1].hi
            hi = 1.0 if i == len(kept) - 1 else hi
            segs.append(Segment(lo, hi, **c))
        return cls(segs)

    @classmethod
    def constant(cls, c: float) -> "PiecewiseFn":
        return cls([Segment(0.0, 1.0, c0=c)])

    @classmethod
    def linear(cls, slope: float, intercept: float) -> "PiecewiseFn":
        return cls([Segment(0.0, 1.0, c0=intercept, c1=slope)])

    @property
    def segments(self) -> tuple[Segment, ...]:
        return self._segments

    @property
    def breakpoints(self) -> list[float]:
        """Interior breakpoints."""
        return self._los[1:]

    def segment_index(self, v: float) -> int:
        return min(bisect.bisect_right(self._los, v) - 1, len(self._segments) - 1)

    def __call__(self, v):
        if np.ndim(v) == 0:
            return eval_fn(self, float(v))
        return eval_many(self, np.asarray(v, dtype=float))

    def __eq__(self, other):
        return isinstance(other, PiecewiseFn) and self._segments == other._segments

    def __hash__(self):
        return hash(self._segments)

    def __repr__(self):
        return f"PiecewiseFn({len(self._segments)} segments, breaks={self.breakpoints})"

    def integral(self) -> float:
        """Exact integral over [0, 1] (per-segment antiderivatives)."""
        return math.fsum(s.integral() for s in self._segments)

    def jumps(self) -> list[float]:
        """|left limit - right value| at each interior breakpoint."""
        out = []
        for left, right in zip(self._segments, self._segments[1:]):
            out.append(abs(float(left.value(right.lo)) - float(right.value(right.lo))))
        return out

    def map_coeffs(self, fn) -> "PiecewiseFn":
        return PiecewiseFn(
            Segment(s.lo, s.hi, *fn(s.coeffs)) for s in self._segments
        )

    def restrict(self, lo: float, hi: float) -> list[tuple[float, float, dict]]:
        """Pieces of this function clipped to [lo, hi], for reassembly."""
        out = []
        for s in self._segments:
            a, b = max(s.lo, lo), min(s.hi, hi)
            if b > a:
                out.append((a, b, dict(zip(COEFF_NAMES, s.coeffs))))
        return out


def _check_tiling(segs: Sequence[Segment]) -> None:
    if not segs:
        raise InvariantViolation("a piecewise function needs at least one segment")
    if segs[0].lo != 0.0:
        raise InvariantViolation(f"first segment starts at {segs[0].lo!r}, expected 0")
    if segs[-1].hi != 1.0:
        raise InvariantViolation(f"last segment ends at {segs[-1].hi!r}, expected 1")
    for i, s in enumerate(segs):
        for name, c in zip(COEFF_NAMES, s.coeffs):
            if not math.isfinite(c):
                raise InvariantViolation(f"segment {i}: coefficient {name} is not finite")
        if not s.lo < s.hi:
            raise InvariantViolation(f"segment {i}: lo={s.lo!r} is not below hi={s.hi!r}")
        if s.c_m1 != 0.0 and s.lo <= 0.0:
            raise InvariantViolation(f"segment {i}: 1/v term on a segment touching 0")
        if i and segs[i - 1].hi != s.lo:
            raise InvariantViolation(
                f"segments {i - 1} and {i} overlap or leave a gap "
                f"({segs[i - 1].hi!r} vs {s.lo!r})"
            )


def eval_fn(f: PiecewiseFn, v: float) -> float:
    """Value of ``f`` at ``v``; the owning segment follows the half-open rule."""
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"evaluation point {v!r} outside [0, 1]")
    return float(f.segments[f.segment_index(v)].value(v))


def eval_many(f: PiecewiseFn, v: np.ndarray) -> np.ndarray:
    if v.size and (v.min() < 0.0 or v.max() > 1.0):
        raise DomainError("evaluation points outside [0, 1]")
    idx = np.searchsorted(np.asarray(f._los), v, side="right") - 1
    idx = np.clip(idx, 0, len(f.segments) - 1)
    out = np.empty_like(v)
    for k, seg in enumerate(f.segments):
        mask = idx == k
        if mask.any():
            out[mask] = seg.value(v[mask])
    return out


def reward_from_payment(p: PiecewiseFn) -> PiecewiseFn:
    """Reward rule r(v) = v - p(v) on the same breakpoints."""
    return p.map_coeffs(lambda c: (-c[0], -c[1], 1.0 - c[2], -c[3], -c[4]))


def times_identity(pieces):
    """Multiply pieces by v.  Only valid for pieces without v^2 or sqrt terms."""
    out = []
    for lo, hi, c in pieces:
        if c.get("c2", 0.0) or c.get("ch", 0.0):
            raise ValueError("v * (v^2 or sqrt v) leaves the basis")
        out.append((lo, hi, {"c0": c.get("c_m1", 0.0), "c1": c.get("c0", 0.0),
                             "c2": c.get("c1", 0.0)}))
    return out


def blend(f: PiecewiseFn, g: PiecewiseFn, weight: float) -> PiecewiseFn:
    """Convex combination ``(1 - weight) f + weight g`` on merged breakpoints."""
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"blend weight {weight!r} outside [0, 1]")
    cuts = sorted({0.0, 1.0, *f.breakpoints, *g.breakpoints})
    pieces = []
    for lo, hi in zip(cuts, cuts[1:]):
        mid = 0.5 * (lo + hi)
        a = f.segments[f.segment_index(mid)].coeffs
        b = g.segments[g.segment_index(mid)].coeffs
        mixed = [(1.0 - weight) * x + weight * y for x, y in zip(a, b)]
        pieces.append((lo, hi, dict(zip(COEFF_NAMES, mixed))))
    return PiecewiseFn.from_pieces(pieces)
