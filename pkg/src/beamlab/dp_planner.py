"""Backward induction over beam-widths for the alignment phase.

The planner discretizes widths on a global lattice of fractions of the
initial width: width = sigma * m / M for integer m, with M + 1 lattice
points per axis (default 257). Scan actions are lattice points inside
the current uncertainty, so every feedback outcome lands back on the
lattice and the recursion stays exact in the state variables; only the
terminal cost involves real arithmetic.

Normalized tables keep the recursion free of probability weights. With
V_k the expected future energy,

    G_k[m1, m2] = m1 * m2 * V_k(m1 d, m2 d, rho=0)
    D_k[m]      = m * m  * V_k(m d, m d, rho=1),   d = sigma / M,

the disjoint-support recursion becomes a pure four-term minimum

    G_k[m1, m2] = min over (j1, j2) of
        G_{k+1}[j1, j2] + G_{k+1}[m1-j1, j2]
      + G_{k+1}[j1, m2-j2] + G_{k+1}[m1-j1, m2-j2]

and the shared-support one

    D_k[m] = min over j of
        D_{k+1}[j] + D_{k+1}[m-j] + G_{k+1}[j, m-j] + G_{k+1}[m-j, j].

Zero-width rows are zero by construction, which silently handles the
zero-probability branches. Disjoint supports born from one shared
region always satisfy m1 + m2 <= M, so only that triangle is reachable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .link_energy import FrameTiming, InfeasibleRateError, LinkParams, energy_arr, snr_factor
from .tdm_scheduler import solve_tau, solve_tau_arr

MIN_GRID_POINTS = 129

# Relative slack under which two action values count as tied; argmin
# selection prefers the tied action closest to the half-width point so
# stored argmins are meaningful where whole plateaus of actions tie.
TIE_REL = 1e-11


@dataclass(frozen=True)
class BisectionReport:
    """Outcome of checking half-splitting against the grid optimum."""

    states_checked: int
    states_exact_half: int
    violations: tuple[tuple[int, int, int, int], ...]  # (k, m1, m2, rho)
    max_central_rel_dev: float
    max_exact_half_rel_dev: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class HalvingReport:
    """Outcome of checking the collapse of slot values to terminal cost."""

    states_checked: int
    max_rel_dev: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_dev <= self.tolerance


@dataclass(frozen=True)
class ValueTable:
    """Per-slot value tables and argmins from backward induction.

    g_tables[k] and d_tables[k] hold the normalized tables above for
    k = 0..l_slots; argmin arrays hold the minimizing lattice actions
    for k < l_slots (ties resolved toward the half-width point).
    """

    sigma: float
    l_slots: int
    grid_m: int
    timing: FrameTiming
    link1: LinkParams
    link2: LinkParams
    g_tables: tuple[np.ndarray, ...]
    d_tables: tuple[np.ndarray, ...]
    argmin_j1: tuple[np.ndarray | None, ...]
    argmin_j2: tuple[np.ndarray | None, ...]
    argmin_diag: tuple[np.ndarray | None, ...]

    @property
    def delta(self) -> float:
        """Lattice pitch (rad)."""
        return self.sigma / self.grid_m

    def value(self, k: int, m1: int, m2: int, rho: bool) -> float:
        """Expected future energy (J) at slot k for lattice widths m_i."""
        if not 0 <= k <= self.l_slots:
            raise ValueError(f"slot {k} outside 0..{self.l_slots}")
        if m1 < 1 or m2 < 1:
            raise ValueError("lattice widths must be at least one cell")
        if rho:
            if m1 != m2 or m1 > self.grid_m:
                raise ValueError("shared-support states are diagonal with m <= M")
            return float(self.d_tables[k][m1]) / (m1 * m1)
        if m1 + m2 > self.grid_m:
            raise ValueError("disjoint-support states satisfy m1 + m2 <= M")
        return float(self.g_tables[k][m1, m2]) / (m1 * m2)

    def root_value(self) -> float:
        """Expected total data-phase energy (J) from the initial belief."""
        return self.value(0, self.grid_m, self.grid_m, True)

    def to_csv(self, path: str) -> None:
        """Dump values and argmin fractions for external plotting.

        Columns: k, u1_frac, u2_frac, rho, value_J, argmin_w1_frac,
        argmin_w2_frac. Width and action fractions are relative to the
        initial width. Terminal rows carry empty argmin fields.
        """
        if self.l_slots > 0 and self.argmin_diag[0] is None:
            raise ValueError("table was built without argmins; rebuild with with_argmins=True")
        m = self.grid_m
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["k", "u1_frac", "u2_frac", "rho", "value_J", "argmin_w1_frac", "argmin_w2_frac"]
            )
            for k in range(self.l_slots + 1):
                terminal = k == self.l_slots
                for mm in range(1, m + 1):
                    row = [k, _frac(mm, m), _frac(mm, m), 1, f"{self.value(k, mm, mm, True):.12e}"]
                    if terminal:
                        row += ["", ""]
                    else:
                        j = int(self.argmin_diag[k][mm])
                        row += [_frac(j, m), _frac(j, m)]
                    writer.writerow(row)
                for m1 in range(1, m):
                    for m2 in range(1, m - m1 + 1):
                        row = [
                            k,
                            _frac(m1, m),
                            _frac(m2, m),
                            0,
                            f"{self.value(k, m1, m2, False):.12e}",
                        ]
                        if terminal:
                            row += ["", ""]
                        else:
                            row += [
                                _frac(int(self.argmin_j1[k][m1, m2]), m),
                                _frac(int(self.argmin_j2[k][m1, m2]), m),
                            ]
                        writer.writerow(row)


def _frac(num: int, den: int) -> str:
    return f"{num / den:.10g}"


def _terminal_tables(
    sigma: float, grid_m: int, t_cm: float, link1: LinkParams, link2: LinkParams, t_fr: float
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized terminal cost tables over the full lattice square."""
    m = grid_m
    delta = sigma / m
    g1, g2 = snr_factor(link1), snr_factor(link2)
    idx = np.arange(m + 1, dtype=float)
    m1g, m2g = np.meshgrid(idx, idx, indexing="ij")
    mask = (m1g > 0) & (m2g > 0)
    u1 = m1g[mask] * delta
    u2 = m2g[mask] * delta
    tau = solve_tau_arr(u1, u2, t_cm, link1.rate, link2.rate, g1, g2, t_fr)
    cost = u1 * energy_arr(tau, link1.rate, g1, t_fr) + u2 * energy_arr(
        t_cm - tau, link2.rate, g2, t_fr
    )
    if not np.all(np.isfinite(cost)):
        raise InfeasibleRateError(
            f"rates ({link1.rate}, {link2.rate}) bps/Hz are infeasible in a {t_cm:.3e} s window"
        )
    g_table = np.zeros((m + 1, m + 1))
    g_table[mask] = m1g[mask] * m2g[mask] * cost
    # Terminal cost ignores the support geometry, so the shared-support
    # table is the diagonal of the disjoint one.
    d_table = np.diag(g_table).copy()
    return g_table, d_table


def backward_induction(
    l_slots: int,
    sigma: float,
    timing: FrameTiming,
    link1: LinkParams,
    link2: LinkParams,
    grid_points: int = 257,
    with_argmins: bool = True,
) -> ValueTable:
    """Run exact lattice backward induction over the alignment slots.

    Args:
        l_slots: number of alignment slots (0..10).
        sigma: initial uncertainty width (rad).
        timing: frame timing; its slot count is overridden by l_slots.
        link1, link2: per-user link constants with rate demands.
        grid_points: lattice points per width axis, odd, >= 129.
        with_argmins: also record minimizing actions (needed only for
            the CSV dump; skipping them roughly halves the runtime).

    Returns:
        A ValueTable with tables for slots 0..l_slots.
    """
    if not 0 <= l_slots <= 10:
        raise ValueError("l_slots must lie in 0..10")
    if grid_points < MIN_GRID_POINTS:
        raise ValueError(f"grid too coarse: need at least {MIN_GRID_POINTS} points per axis")
    m = grid_points - 1
    if m % 2:
        raise ValueError("grid_points must be odd so half-widths are lattice points")
    timing = replace(timing, l_slots=l_slots)

    g_t, d_t = _terminal_tables(sigma, m, timing.t_cm, link1, link2, timing.t_fr)
    g_tables = [g_t]
    d_tables = [d_t]
    arg1: list[np.ndarray | None] = [None]
    arg2: list[np.ndarray | None] = [None]
    argd: list[np.ndarray | None] = [None]

    # Distance-to-half penalties per axis length, used only to resolve
    # ties toward the half-width action.
    half_dist = [np.abs(np.arange(n + 1) - n / 2.0) / max(n, 1) for n in range(m + 1)]

    g_next, d_next = g_t, d_t
    for _ in range(l_slots):
        g_cur = np.zeros_like(g_next)
        d_cur = np.zeros_like(d_next)
        a1 = np.zeros((m + 1, m + 1), dtype=np.int32) if with_argmins else None
        a2 = np.zeros((m + 1, m + 1), dtype=np.int32) if with_argmins else None
        ad = np.zeros(m + 1, dtype=np.int32) if with_argmins else None
        for m2 in range(m + 1):
            rows = m - m2
            # W[a, j2] = G[a, j2] + G[a, m2 - j2] shared across all m1.
            w = g_next[: rows + 1, : m2 + 1] + g_next[: rows + 1, m2::-1]
            pen2 = half_dist[m2][np.newaxis, :]
            for m1 in range(rows + 1):
                acts = w[: m1 + 1] + w[m1::-1]
                best = acts.min()
                g_cur[m1, m2] = best
                if with_argmins:
                    flat = np.argmin(
                        acts + (TIE_REL * best) * (half_dist[m1][:, np.newaxis] + pen2)
                    )
                    a1[m1, m2], a2[m1, m2] = divmod(int(flat), m2 + 1)
        for mm in range(m + 1):
            j = np.arange(mm + 1)
            acts_d = d_next[: mm + 1] + d_next[mm::-1] + g_next[j, mm - j] + g_next[mm - j, j]
            best = acts_d.min()
            d_cur[mm] = best
            if with_argmins:
                ad[mm] = int(np.argmin(acts_d + (TIE_REL * best) * half_dist[mm]))
        g_tables.append(g_cur)
        d_tables.append(d_cur)
        arg1.append(a1)
        arg2.append(a2)
        argd.append(ad)
        g_next, d_next = g_cur, d_cur

    # Tables were built terminal-first; slot order is the reverse.
    g_tables.reverse()
    d_tables.reverse()
    arg1.reverse()
    arg2.reverse()
    argd.reverse()
    return ValueTable(
        sigma=sigma,
        l_slots=l_slots,
        grid_m=m,
        timing=timing,
        link1=link1,
        link2=link2,
        g_tables=tuple(g_tables),
        d_tables=tuple(d_tables),
        argmin_j1=tuple(arg1),
        argmin_j2=tuple(arg2),
        argmin_diag=tuple(argd),
    )


def _triangle_indices(m: int) -> tuple[np.ndarray, np.ndarray]:
    m1v, m2v = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
    keep = m1v + m2v <= m
    return m1v[keep], m2v[keep]


def verify_bisection_optimality(table: ValueTable, tol: float = 1e-9) -> BisectionReport:
    """Check that half-splitting attains the grid optimum everywhere.

    For every reachable state and slot, the cheapest action within one
    lattice step of the half-width point must match the stored grid
    minimum to relative tol; where the exact half-width is itself a
    lattice action (even coordinates) its own value is held to the same
    bar. Violations are collected per state.
    """
    m = table.grid_m
    m1v, m2v = _triangle_indices(m)
    violations: list[tuple[int, int, int, int]] = []
    max_central = 0.0
    max_exact = 0.0
    checked = 0
    exact_states = 0
    for k in range(table.l_slots):
        g_next = table.g_tables[k + 1]
        d_next = table.d_tables[k + 1]

        best = np.full(m1v.shape, np.inf)
        for c1 in {0, 1}:
            for c2 in {0, 1}:
                j1 = (m1v + c1) // 2
                j2 = (m2v + c2) // 2
                val = (
                    g_next[j1, j2]
                    + g_next[m1v - j1, j2]
                    + g_next[j1, m2v - j2]
                    + g_next[m1v - j1, m2v - j2]
                )
                best = np.minimum(best, val)
        ref = table.g_tables[k][m1v, m2v]
        dev = (best - ref) / ref
        max_central = max(max_central, float(dev.max()))
        checked += dev.size
        for i in np.nonzero(dev > tol)[0]:
            violations.append((k, int(m1v[i]), int(m2v[i]), 0))
        even = (m1v % 2 == 0) & (m2v % 2 == 0)
        if even.any():
            j1 = m1v[even] // 2
            j2 = m2v[even] // 2
            val = 4.0 * g_next[j1, j2]
            dev_e = (val - ref[even]) / ref[even]
            max_exact = max(max_exact, float(dev_e.max()))
            exact_states += int(even.sum())

        mm = np.arange(1, m + 1)
        best_d = np.full(mm.shape, np.inf)
        for c in {0, 1}:
            j = (mm + c) // 2
            val = d_next[j] + d_next[mm - j] + g_next[j, mm - j] + g_next[mm - j, j]
            best_d = np.minimum(best_d, val)
        ref_d = table.d_tables[k][1:]
        dev_d = (best_d - ref_d) / ref_d
        max_central = max(max_central, float(dev_d.max()))
        checked += dev_d.size
        for i in np.nonzero(dev_d > tol)[0]:
            violations.append((k, int(mm[i]), int(mm[i]), 1))
        even_m = mm % 2 == 0
        j = mm[even_m] // 2
        val = 2.0 * d_next[j] + g_next[j, j] * 2.0
        dev_de = (val - ref_d[even_m]) / ref_d[even_m]
        max_exact = max(max_exact, float(dev_de.max()))
        exact_states += int(even_m.sum())

    return BisectionReport(
        states_checked=checked,
        states_exact_half=exact_states,
        violations=tuple(violations[:100]),
        max_central_rel_dev=max_central,
        max_exact_half_rel_dev=max_exact,
        tolerance=tol,
    )


def verify_halving_identity(table: ValueTable, rel_tol: float = 1e-6) -> HalvingReport:
    """Check that slot-k values collapse to the terminal cost at halved widths.

    At slot k with r = l_slots - k splits remaining, the value at any
    state whose lattice widths are divisible by 2**r must equal the
    terminal cost of the widths divided by 2**r, for both the shared
    and the disjoint support flavor. The divisibility restriction keeps
    the comparison on states where repeated half-splitting stays on the
    lattice.
    """
    delta = table.delta
    m = table.grid_m
    t_cm = table.timing.t_cm
    max_dev = 0.0
    checked = 0
    for k in range(table.l_slots + 1):
        r = table.l_slots - k
        step = 2**r
        for mm in range(step, m + 1, step):
            u_half = mm * delta / step
            ref = _terminal_pair_cost(u_half, u_half, t_cm, table.link1, table.link2, table.timing.t_fr)
            for rho in (True, False):
                if not rho and 2 * mm > m:
                    continue
                val = table.value(k, mm, mm, rho)
                max_dev = max(max_dev, abs(val - ref) / ref)
                checked += 1
    return HalvingReport(states_checked=checked, max_rel_dev=max_dev, tolerance=rel_tol)


def _terminal_pair_cost(
    u1: float, u2: float, t_cm: float, link1: LinkParams, link2: LinkParams, t_fr: float
) -> float:
    tau = solve_tau(u1, u2, t_cm, link1, link2, t_fr)
    g1, g2 = snr_factor(link1), snr_factor(link2)
    return u1 * float(energy_arr(np.asarray(tau), link1.rate, g1, t_fr)) + u2 * float(
        energy_arr(np.asarray(t_cm - tau), link2.rate, g2, t_fr)
    )


def closed_form_power(
    sigma: float, l_slots: int, timing: FrameTiming, link1: LinkParams, link2: LinkParams
) -> float:
    """Average data-phase power (W) of the half-splitting policy.

    After l_slots half-splits both widths are sigma / 2**l_slots with
    certainty, so the expected power is the terminal cost at those
    widths divided by the frame duration.
    """
    timing = replace(timing, l_slots=l_slots)
    u = sigma / 2**l_slots
    return _terminal_pair_cost(u, u, timing.t_cm, link1, link2, timing.t_fr) / timing.t_fr
