"""Belief tracking for two-user angular localization.

The base station's posterior over each user's direction is always
uniform on a support set: feedback is error-free, so a slot's beam
either contains the user's angle or it does not, and the support simply
intersects with the beam or its complement. Two representations are
kept in step:

- explicit mode carries the support ArcSets and validates the geometry;
- statistic mode carries only (u1, u2, rho), the support widths plus a
  flag marking whether both supports are the same set, which is all the
  planner needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .arcset import (
    ArcSet,
    TWO_PI,
    complement,
    contains,
    intersect,
    measure,
    take_measured_subset,
    union,
)

# Width bookkeeping tolerance between stored widths and support measures.
WIDTH_TOL = 1e-10


class InconsistencyError(Exception):
    """A support update emptied a region, impossible under error-free feedback."""


class Feedback(NamedTuple):
    """Per-user ACK (True) / NACK (False) for one alignment slot."""

    c1: bool
    c2: bool


class OutcomeProbs(NamedTuple):
    """Probabilities of the four feedback outcomes of one slot."""

    ack_ack: float
    ack_nack: float
    nack_ack: float
    nack_nack: float


@dataclass(frozen=True)
class GroundTruth:
    """True user angles, drawn once per frame."""

    theta1: float
    theta2: float


@dataclass(frozen=True)
class BeliefState:
    """Sufficient statistic of the posterior, optionally with geometry.

    Attributes:
        u1, u2: uncertainty widths (rad), in (0, 2*pi].
        rho: True when both supports are the identical set.
        supports: optional explicit support pair; when present their
            measures must match the widths and they must be identical
            (rho True) or disjoint (rho False).
    """

    u1: float
    u2: float
    rho: bool
    supports: tuple[ArcSet, ArcSet] | None = None

    def __post_init__(self) -> None:
        for u in (self.u1, self.u2):
            if not 0.0 < u <= TWO_PI + WIDTH_TOL:
                raise ValueError(f"uncertainty width {u} outside (0, 2*pi]")
        if self.rho and abs(self.u1 - self.u2) > WIDTH_TOL:
            raise ValueError("co-located users must share one uncertainty width")
        if self.supports is not None:
            for u, sup in zip((self.u1, self.u2), self.supports):
                if abs(measure(sup) - u) > WIDTH_TOL:
                    raise ValueError("support measure disagrees with stored width")

    @property
    def explicit(self) -> bool:
        return self.supports is not None


def initial_state(sigma: float) -> BeliefState:
    """Fresh belief: both users uniform on the same arc of width sigma."""
    if not 0.0 < sigma <= TWO_PI:
        raise ValueError(f"initial width {sigma} outside (0, 2*pi]")
    support = ArcSet.arc(-sigma / 2.0, sigma / 2.0)
    return BeliefState(sigma, sigma, True, (support, support))


def sample_ground_truth(sigma: float, rng: np.random.Generator) -> GroundTruth:
    """Draw the two user angles independently, uniform on the initial arc."""
    theta = rng.uniform(-sigma / 2.0, sigma / 2.0, size=2)
    return GroundTruth(float(theta[0]), float(theta[1]))


def feedback(gt: GroundTruth, beam: ArcSet) -> Feedback:
    """Error-free per-user beacon detection for one slot."""
    return Feedback(contains(beam, gt.theta1), contains(beam, gt.theta2))


def _post_beam(support: ArcSet, beam: ArcSet, ack: bool) -> ArcSet:
    new = intersect(support, beam if ack else complement(beam))
    if new.is_empty():
        raise InconsistencyError("support update produced an empty region")
    return new


def update_supports(state: BeliefState, beam: ArcSet, fb: Feedback) -> BeliefState:
    """Explicit-geometry posterior update for one slot of feedback.

    Each support intersects with the beam on ACK or with its complement
    on NACK; widths and the co-location flag are recomputed from the
    resulting sets.
    """
    if state.supports is None:
        raise ValueError("update_supports requires an explicit-geometry state")
    s1 = _post_beam(state.supports[0], beam, fb.c1)
    s2 = _post_beam(state.supports[1], beam, fb.c2)
    return BeliefState(measure(s1), measure(s2), s1 == s2, (s1, s2))


def _check_action(state: BeliefState, w1: float, w2: float) -> None:
    if not 0.0 <= w1 <= state.u1 + WIDTH_TOL or not 0.0 <= w2 <= state.u2 + WIDTH_TOL:
        raise ValueError("scanned width must lie within the current uncertainty")
    if state.rho and abs(w1 - w2) > WIDTH_TOL:
        raise ValueError("co-located users must be scanned with one shared width")


def transition(state: BeliefState, w1: float, w2: float, fb: Feedback) -> BeliefState:
    """Statistic-only state update for one slot.

    The new width is the scanned width on ACK and the remainder on
    NACK; co-location survives only concordant feedback.
    """
    _check_action(state, w1, w2)
    new_u1 = w1 if fb.c1 else state.u1 - w1
    new_u2 = w2 if fb.c2 else state.u2 - w2
    new_rho = state.rho and fb.c1 == fb.c2
    return BeliefState(new_u1, new_u2, new_rho, None)


def ack_probabilities(state: BeliefState, w1: float, w2: float) -> OutcomeProbs:
    """Distribution of the four feedback outcomes for the given scan widths.

    Users are independent and uniform on their supports, so each ACKs
    with probability w_i / u_i regardless of rho.
    """
    _check_action(state, w1, w2)
    p1 = w1 / state.u1
    p2 = w2 / state.u2
    return OutcomeProbs(
        ack_ack=p1 * p2,
        ack_nack=p1 * (1.0 - p2),
        nack_ack=(1.0 - p1) * p2,
        nack_nack=(1.0 - p1) * (1.0 - p2),
    )


def realize_beam(state: BeliefState, w1: float, w2: float, placement: str = "start") -> ArcSet:
    """Materialize a beam achieving the requested in-support widths.

    Any beam with the right overlap works; this picks a deterministic
    one. With placement "start" the overlap is cut from the leading
    edges of the support intervals, with "end" from the trailing edges.
    Co-located users get a single shared cut; disjoint users get the
    union of per-support cuts.
    """
    if state.supports is None:
        raise ValueError("realize_beam requires an explicit-geometry state")

    def cut(support: ArcSet, w: float) -> ArcSet:
        if placement == "start":
            return take_measured_subset(support, w)
        if placement == "end":
            keep_out = take_measured_subset(support, measure(support) - w)
            return intersect(support, complement(keep_out))
        raise ValueError(f"unknown placement {placement!r}")

    if state.rho:
        if abs(w1 - w2) > WIDTH_TOL:
            raise ValueError("co-located users must be scanned with one shared width")
        return cut(state.supports[0], w1)
    return union(cut(state.supports[0], w1), cut(state.supports[1], w2))


def widths_match(a: BeliefState, b: BeliefState, tol: float = WIDTH_TOL) -> bool:
    """True when two states agree on the sufficient statistic."""
    return (
        math.isclose(a.u1, b.u1, rel_tol=0.0, abs_tol=tol)
        and math.isclose(a.u2, b.u2, rel_tol=0.0, abs_tol=tol)
        and a.rho == b.rho
    )
