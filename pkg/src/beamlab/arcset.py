"""Exact algebra of finite unions of angular intervals on the circle.

Angles live in the reference range [-pi, pi). An ArcSet is a canonical,
sorted tuple of pairwise-disjoint half-open intervals [start, end); any
arc crossing the +pi seam is stored split in two. The half-open
convention makes complement and partition exact: a boundary point
belongs to the interval whose start it equals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

TWO_PI = 2.0 * math.pi
PI = math.pi

# Gaps narrower than this merge during canonicalization, and slivers
# shorter than it are dropped. Keeps repeated intersections from
# accumulating degenerate intervals.
MERGE_TOL = 1e-12


def wrap_angle(theta: float) -> float:
    """Map an angle to the reference range [-pi, pi)."""
    wrapped = math.fmod(theta + PI, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    result = wrapped - PI
    # fmod rounding can land exactly on +pi; fold it to -pi.
    return -PI if result >= PI else result


def _canonicalize(raw: list[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    """Sort, merge near-adjacent intervals, and drop slivers.

    Input intervals must already lie inside [-pi, pi] with start < end.
    """
    spans = sorted((s, e) for s, e in raw if e - s > MERGE_TOL)
    merged: list[list[float]] = []
    for start, end in spans:
        if merged and start <= merged[-1][1] + MERGE_TOL:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    if len(merged) == 1 and merged[0][0] <= -PI + MERGE_TOL and merged[0][1] >= PI - MERGE_TOL:
        return ((-PI, PI),)
    return tuple((s, e) for s, e in merged)


@dataclass(frozen=True)
class ArcSet:
    """Canonical finite union of half-open angular intervals.

    Construct via :meth:`from_intervals`, :meth:`arc`, :meth:`empty` or
    :meth:`full_circle` rather than directly, so the canonical-form
    invariants hold and equality means set equality.
    """

    intervals: tuple[tuple[float, float], ...] = ()

    @staticmethod
    def empty() -> "ArcSet":
        return ArcSet(())

    @staticmethod
    def full_circle() -> "ArcSet":
        return ArcSet(((-PI, PI),))

    @staticmethod
    def arc(start: float, end: float) -> "ArcSet":
        """Single arc from start to end, traversed counterclockwise.

        The length end - start must lie in [0, 2*pi]; the arc is placed
        on the circle from the wrapped start, splitting at the +pi seam
        if needed. end may exceed pi (or start may exceed end after
        wrapping), which expresses wrap-around arcs.
        """
        return ArcSet.from_intervals([(start, end)])

    @staticmethod
    def from_intervals(pairs: Iterable[tuple[float, float]]) -> "ArcSet":
        """Build a canonical set from (start, end) pairs with end >= start.

        Each pair denotes the counterclockwise arc of length end - start
        (at most a full turn) beginning at the wrapped start angle.
        """
        raw: list[tuple[float, float]] = []
        for start, end in pairs:
            length = end - start
            if length < 0.0:
                raise ValueError(f"interval end {end} precedes start {start}")
            if length >= TWO_PI - MERGE_TOL:
                return ArcSet.full_circle()
            if length <= MERGE_TOL:
                continue
            lo = wrap_angle(start)
            hi = lo + length
            if hi <= PI:
                raw.append((lo, hi))
            else:
                # Crosses the seam: store the two halves.
                raw.append((lo, PI))
                raw.append((-PI, hi - TWO_PI))
        return ArcSet(_canonicalize(raw))

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self.intervals)

    def is_empty(self) -> bool:
        return not self.intervals


def measure(a: ArcSet) -> float:
    """Total angular length of the set, in radians."""
    return math.fsum(end - start for start, end in a.intervals)


def contains(a: ArcSet, theta: float) -> bool:
    """Membership test with the half-open convention.

    theta must already lie in [-pi, pi).
    """
    if not -PI <= theta < PI:
        raise ValueError(f"angle {theta} outside [-pi, pi)")
    for start, end in a.intervals:
        if start <= theta < end:
            return True
        if start > theta:
            break
    return False


def intersect(a: ArcSet, b: ArcSet) -> ArcSet:
    """Set intersection of two canonical sets."""
    pieces: list[tuple[float, float]] = []
    ai = bi = 0
    ia, ib = a.intervals, b.intervals
    while ai < len(ia) and bi < len(ib):
        lo = max(ia[ai][0], ib[bi][0])
        hi = min(ia[ai][1], ib[bi][1])
        if hi > lo:
            pieces.append((lo, hi))
        # Advance whichever interval ends first.
        if ia[ai][1] <= ib[bi][1]:
            ai += 1
        else:
            bi += 1
    return ArcSet(_canonicalize(pieces))


def complement(a: ArcSet) -> ArcSet:
    """Complement relative to the full circle."""
    if not a.intervals:
        return ArcSet.full_circle()
    gaps: list[tuple[float, float]] = []
    cursor = -PI
    for start, end in a.intervals:
        if start > cursor:
            gaps.append((cursor, start))
        cursor = end
    if cursor < PI:
        gaps.append((cursor, PI))
    return ArcSet(_canonicalize(gaps))


def union(a: ArcSet, b: ArcSet) -> ArcSet:
    """Set union of two canonical sets."""
    return ArcSet(_canonicalize(list(a.intervals) + list(b.intervals)))


def take_measured_subset(a: ArcSet, omega: float) -> ArcSet:
    """Deterministic subset of the set with total measure omega.

    Intervals are consumed in sorted order from their start points; the
    last one is truncated to hit the requested measure exactly. A
    request within MERGE_TOL of 0 or of measure(a) returns the empty
    set or the whole set respectively.
    """
    total = measure(a)
    if not -MERGE_TOL <= omega <= total + MERGE_TOL:
        raise ValueError(f"requested measure {omega} outside [0, {total}]")
    if omega <= MERGE_TOL:
        return ArcSet.empty()
    if omega >= total - MERGE_TOL:
        return a
    pieces: list[tuple[float, float]] = []
    remaining = omega
    for start, end in a.intervals:
        length = end - start
        if length < remaining:
            pieces.append((start, end))
            remaining -= length
        else:
            pieces.append((start, start + remaining))
            break
    return ArcSet(_canonicalize(pieces))
