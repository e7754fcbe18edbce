"""Optimal time-division split of the data window between the two users.

Once alignment ends, each user is served in turn inside the data window
with a beam covering its remaining uncertainty. The split is chosen to
minimize total energy, which is width-weighted energy per radian summed
over the users; the objective is strictly convex in the split and
diverges at both endpoints, so the optimum is the unique point where
the width-weighted marginal energies of the two users balance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment_state import BeliefState
from .link_energy import (
    FrameTiming,
    InfeasibleRateError,
    LinkParams,
    energy_arr,
    energy_deriv1_arr,
    snr_factor,
)

# Bracket inset and convergence control for the bisection root-finder.
# The marginal-balance function is strictly increasing, so bracketing
# cannot fail; 60 halvings push the bracket width below 1e-12 relative.
BRACKET_INSET = 1e-9
BISECT_ITERS = 60


def solve_tau_arr(
    u1: np.ndarray,
    u2: np.ndarray,
    t_cm: float,
    r1: float,
    r2: float,
    g1: float,
    g2: float,
    t_fr: float,
) -> np.ndarray:
    """Vectorized optimal time share of user 1 for batches of widths.

    Bisects the strictly increasing marginal-balance function
    u1 * e1'(tau) - u2 * e2'(t_cm - tau) on the inset bracket. Entries
    whose balance is undefined across the whole bracket (both users'
    costs overflowed) come back as NaN.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    lo = np.full(u1.shape, BRACKET_INSET * t_cm)
    hi = np.full(u1.shape, (1.0 - BRACKET_INSET) * t_cm)
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        with np.errstate(invalid="ignore"):
            bal = u1 * energy_deriv1_arr(mid, r1, g1, t_fr) - u2 * energy_deriv1_arr(
                t_cm - mid, r2, g2, t_fr
            )
        go_right = bal < 0.0
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    res = 0.5 * (lo + hi)
    # A feasible problem has its optimum strictly inside the region where
    # both costs are finite, so a non-finite cost here means there is no
    # feasible split at all.
    with np.errstate(invalid="ignore"):
        cost = u1 * energy_arr(res, r1, g1, t_fr) + u2 * energy_arr(
            t_cm - res, r2, g2, t_fr
        )
    return np.where(np.isfinite(cost), res, np.nan)


def solve_tau(
    u1: float, u2: float, t_cm: float, link1: LinkParams, link2: LinkParams, t_fr: float
) -> float:
    """Optimal duration (s) of user 1's share of the data window.

    Args:
        u1, u2: post-alignment uncertainty widths (rad), > 0.
        t_cm: data window duration (s), > 0.
        link1, link2: per-user link constants carrying the rate demands.
        t_fr: frame duration (s).

    Raises:
        InfeasibleRateError: when the rate demands overflow the window
            everywhere in the bracket.
    """
    if u1 <= 0.0 or u2 <= 0.0:
        raise ValueError("uncertainty widths must be strictly positive")
    if t_cm <= 0.0:
        raise ValueError("data window must be strictly positive")
    tau = float(
        solve_tau_arr(
            np.asarray(u1),
            np.asarray(u2),
            t_cm,
            link1.rate,
            link2.rate,
            snr_factor(link1),
            snr_factor(link2),
            t_fr,
        )
    )
    if not np.isfinite(tau):
        raise InfeasibleRateError(
            f"rates ({link1.rate}, {link2.rate}) bps/Hz overflow a {t_cm:.3e} s window"
        )
    return tau


def terminal_cost(
    u1: float, u2: float, t_cm: float, link1: LinkParams, link2: LinkParams, t_fr: float
) -> float:
    """Minimal data-phase energy (J) given the post-alignment widths.

    Independent of whether the two supports coincide; only the widths
    matter once alignment is over.
    """
    tau = solve_tau(u1, u2, t_cm, link1, link2, t_fr)
    g1, g2 = snr_factor(link1), snr_factor(link2)
    cost = u1 * float(energy_arr(np.asarray(tau), link1.rate, g1, t_fr)) + u2 * float(
        energy_arr(np.asarray(t_cm - tau), link2.rate, g2, t_fr)
    )
    if not np.isfinite(cost):
        raise InfeasibleRateError(
            f"rates ({link1.rate}, {link2.rate}) bps/Hz are infeasible in a {t_cm:.3e} s window"
        )
    return cost


@dataclass(frozen=True)
class Schedule:
    """Concrete data-phase plan: time split, powers, and beam-widths."""

    tau1: float
    power1: float
    power2: float
    beamwidth1: float
    beamwidth2: float
    energy_total: float


def make_schedule(
    state: BeliefState, timing: FrameTiming, link1: LinkParams, link2: LinkParams
) -> Schedule:
    """Build the data-phase schedule for a post-alignment belief.

    Beams cover each user's remaining uncertainty exactly, and powers
    are inverted from the rate targets so the demanded rates are met
    with equality over the frame.
    """
    t_cm = timing.t_cm
    tau1 = solve_tau(state.u1, state.u2, t_cm, link1, link2, timing.t_fr)
    tau2 = t_cm - tau1
    g1, g2 = snr_factor(link1), snr_factor(link2)
    e1 = float(energy_arr(np.asarray(tau1), link1.rate, g1, timing.t_fr))
    e2 = float(energy_arr(np.asarray(tau2), link2.rate, g2, timing.t_fr))
    if not (np.isfinite(e1) and np.isfinite(e2)):
        raise InfeasibleRateError(
            f"rates ({link1.rate}, {link2.rate}) bps/Hz are infeasible in a {t_cm:.3e} s window"
        )
    # energy = tau * power = width * energy-per-radian, hence power below.
    return Schedule(
        tau1=tau1,
        power1=state.u1 * e1 / tau1,
        power2=state.u2 * e2 / tau2,
        beamwidth1=state.u1,
        beamwidth2=state.u2,
        energy_total=state.u1 * e1 + state.u2 * e2,
    )
