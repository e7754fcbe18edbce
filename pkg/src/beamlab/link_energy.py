"""Radio-link constants and the energy-per-radian cost of data delivery.

All quantities are SI (W, J, s, Hz, m, rad); dB and dBm appear only at
input/output boundaries. The central object is the energy per radian of
beam-width needed to deliver a spectral-efficiency demand within a
transmit window, together with its first two derivatives, which drive
both the time-division split and the alignment-phase planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Exponent guard: 2**y overflows double precision near y = 1024. Above
# the cap the cost is reported as +inf and callers treat the operating
# point as infeasible (root-finders routinely probe tiny windows).
Y_CAP = 1024.0

LN2 = math.log(2.0)


class InfeasibleRateError(Exception):
    """Raised when a rate demand cannot be met within the time window."""


@dataclass(frozen=True)
class LinkParams:
    """Per-user radio constants and the user's rate demand.

    Attributes:
        wavelength: carrier wavelength (m).
        distance: base-station to user distance (m).
        alpha: path-loss exponent.
        n0: noise power spectral density (W/Hz).
        w_tot: total bandwidth (Hz).
        rate: spectral-efficiency demand averaged over a frame (bps/Hz).
        d_max: optional cap on distance (m).
    """

    wavelength: float
    distance: float
    alpha: float
    n0: float
    w_tot: float
    rate: float
    d_max: float | None = None

    def __post_init__(self) -> None:
        for name in ("wavelength", "distance", "alpha", "n0", "w_tot", "rate"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.d_max is not None and self.distance > self.d_max:
            raise ValueError(f"distance {self.distance} exceeds d_max {self.d_max}")


@dataclass(frozen=True)
class FrameTiming:
    """Frame structure: alignment slots followed by a data window.

    Attributes:
        t_fr: frame duration (s).
        t_slot: alignment slot duration (s).
        t_beacon: beacon duration within a slot (s).
        l_slots: number of alignment slots in the frame.
    """

    t_fr: float
    t_slot: float
    t_beacon: float
    l_slots: int

    def __post_init__(self) -> None:
        if self.t_fr <= 0.0 or self.t_slot <= 0.0 or self.t_beacon <= 0.0:
            raise ValueError("frame durations must be strictly positive")
        if self.t_beacon >= self.t_slot:
            raise ValueError("t_beacon must be shorter than t_slot")
        if self.l_slots < 0:
            raise ValueError("l_slots must be non-negative")
        if self.l_slots * self.t_slot >= self.t_fr:
            raise ValueError("alignment slots must leave a positive data window")

    @property
    def t_cm(self) -> float:
        """Duration of the data communication window (s)."""
        return self.t_fr - self.l_slots * self.t_slot


def snr_factor(p: LinkParams) -> float:
    """SNR scaling factor gamma (1/W) of the link budget."""
    return p.wavelength**2 * p.distance ** (-p.alpha) / (8.0 * math.pi * p.n0 * p.w_tot)


def _pow2(y: np.ndarray) -> np.ndarray:
    """2**y with the overflow guard applied; +inf above Y_CAP."""
    with np.errstate(over="ignore"):
        return np.where(y > Y_CAP, np.inf, np.exp2(np.minimum(y, Y_CAP)))


def _pow2m1(y: np.ndarray) -> np.ndarray:
    """2**y - 1 with the overflow guard applied; +inf above Y_CAP.

    expm1 keeps the relative accuracy near y = 0 that a literal
    2**y - 1 loses to cancellation.
    """
    with np.errstate(over="ignore"):
        return np.where(y > Y_CAP, np.inf, np.expm1(LN2 * np.minimum(y, Y_CAP)))


def energy_arr(tau: np.ndarray, rate: float, gamma: float, t_fr: float) -> np.ndarray:
    """Vectorized energy per radian; +inf where the exponent overflows."""
    tau = np.asarray(tau, dtype=float)
    y = t_fr * rate / tau
    return tau * _pow2m1(y) / gamma


def energy_deriv1_arr(tau: np.ndarray, rate: float, gamma: float, t_fr: float) -> np.ndarray:
    """Vectorized first derivative; -inf where the exponent overflows."""
    tau = np.asarray(tau, dtype=float)
    y = t_fr * rate / tau
    p = _pow2(y)
    with np.errstate(invalid="ignore", over="ignore"):
        val = (_pow2m1(y) - p * LN2 * y) / gamma
    return np.where(np.isposinf(p), -np.inf, val)


def energy_deriv2_arr(tau: np.ndarray, rate: float, gamma: float, t_fr: float) -> np.ndarray:
    """Vectorized second derivative; +inf where the exponent overflows."""
    tau = np.asarray(tau, dtype=float)
    y = t_fr * rate / tau
    with np.errstate(over="ignore"):
        return _pow2(y) * LN2**2 * y**3 / (gamma * t_fr * rate)


def _check_tau(tau: float) -> None:
    if tau <= 0.0:
        raise ValueError("transmit window tau must be strictly positive")


def energy_per_radian(tau: float, p: LinkParams, t_fr: float) -> float:
    """Energy (J) per radian of beam-width to serve p.rate in window tau.

    Strictly positive, strictly decreasing, and convex in tau. Returns
    +inf when the required exponent overflows (infeasible window).
    """
    _check_tau(tau)
    return float(energy_arr(np.asarray(tau), p.rate, snr_factor(p), t_fr))


def energy_deriv1(tau: float, p: LinkParams, t_fr: float) -> float:
    """First derivative of energy_per_radian in tau; negative for tau > 0."""
    _check_tau(tau)
    return float(energy_deriv1_arr(np.asarray(tau), p.rate, snr_factor(p), t_fr))


def energy_deriv2(tau: float, p: LinkParams, t_fr: float) -> float:
    """Second derivative of energy_per_radian in tau; positive for tau > 0."""
    _check_tau(tau)
    return float(energy_deriv2_arr(np.asarray(tau), p.rate, snr_factor(p), t_fr))


def convexity_margin(
    y1: np.ndarray, y2: np.ndarray, rate_ratio: float = 1.0, *, flip_sign: bool = False
) -> np.ndarray:
    """Curvature margin of the post-alignment cost in the beam-widths.

    Evaluated in the normalized exponents y_i = t_fr * rate_i / tau_i,
    the margin is proportional (by a positive factor) to the second
    derivative of the width-weighted communication cost with respect to
    either width. Strict positivity over the operating range is what
    makes half-splitting the uncertainty optimal slot by slot.

    Args:
        y1, y2: normalized exponents, broadcastable arrays, > 0.
        rate_ratio: rate demand of user 1 divided by user 2's.
        flip_sign: fault-injection hook for verification self-tests;
            negates the cross term so the check must fail.

    Returns:
        Margin values; positive means convex at that operating point.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    a1 = LN2 * y1 - 1.0 + np.exp2(-y1)
    a2 = LN2 * y2 - 1.0 + np.exp2(-y2)
    b1 = 1.0 - np.exp2(-y1)
    p2 = np.exp2(y2)
    cross = 2.0 * rate_ratio * b1 * a1 * LN2**2 * p2 * y2**3 / y1
    if flip_sign:
        cross = -cross
    return p2 * a2 * 2.0 * b1 * LN2**2 * y1**2 - p2 * a2 * a1**2 + cross
