"""Monte Carlo experiment engine for the beam-alignment protocols.

Draws ground-truth angles, runs a protocol per frame, and accumulates
power statistics that can be checked against the closed forms. Trials
are processed in fixed-size blocks; each block owns a generator seeded
by (master_seed, stream, block_index) and block partial sums are folded
in block order, so results are byte-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .alignment_state import (
    BeliefState,
    Feedback,
    GroundTruth,
    feedback,
    initial_state,
    realize_beam,
    sample_ground_truth,
    ack_probabilities,
    transition,
    update_supports,
)
from .arcset import ArcSet
from .dp_planner import closed_form_power
from .link_energy import FrameTiming, InfeasibleRateError, LinkParams, energy_per_radian
from .protocols import (
    SCHEME_BISECTION,
    SCHEME_EXHAUSTIVE,
    SCHEME_NAMES,
    SCHEME_SINGLE_USER,
    ExhaustiveConfig,
    SingleUserConfig,
    optimize_depth,
    single_user_power,
)
from .tdm_scheduler import Schedule, make_schedule, solve_tau

# Trials per seeding block. Large enough that numpy batch work dominates,
# small enough that a 10^5-trial run spreads over many workers.
BLOCK = 4096

CSV_HEADER = (
    "scheme,r_tot,psi,depth1,depth2,mean_power_w,mean_power_dbm,stderr_w,n_trials,closed_form_w"
)


@dataclass(frozen=True)
class TrialRecord:
    """One simulated frame; seed is the global trial counter."""

    seed: int
    theta1: float
    theta2: float
    slots_used: int
    tau1: float
    energy_j: float
    power_w: float
    rho_trajectory: tuple[bool, ...]


@dataclass(frozen=True)
class TrialStats:
    """Aggregated power statistics of one Monte Carlo run."""

    mean_power_w: float
    stderr_w: float
    n_trials: int
    records: tuple[TrialRecord, ...]


@dataclass(frozen=True)
class SweepRow:
    """One (scheme, R_tot) point of a sweep; None fields mean infeasible."""

    scheme: str
    r_tot: float
    psi: float
    depth1: int | None
    depth2: int | None
    mean_power_w: float | None
    mean_power_dbm: float | None
    stderr_w: float | None
    n_trials: int | None
    closed_form_w: float | None

    @property
    def feasible(self) -> bool:
        return self.mean_power_w is not None


def watts_to_dbm(power_w: float) -> float:
    if power_w <= 0.0:
        raise ValueError("power must be positive to convert to dBm")
    return 10.0 * math.log10(power_w / 1e-3)


def worker_count(explicit: int | None = None) -> int:
    """Thread-pool size: explicit argument, else BEAMLAB_THREADS, else auto."""
    if explicit is not None and explicit > 0:
        return explicit
    raw = os.environ.get("BEAMLAB_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ValueError(f"BEAMLAB_THREADS must be an integer, got {raw!r}") from exc
        if cap < 0:
            raise ValueError(f"BEAMLAB_THREADS must be non-negative, got {cap}")
        if cap > 0:
            return cap
    return max(1, os.cpu_count() or 1)


@dataclass
class _BlockResult:
    sum_w: float
    sum_sq: float
    records: list[TrialRecord]


def _block_rng(master_seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, stream, block)))


def _bisection_rho_trajectories(thetas: np.ndarray, sigma: float, depth: int) -> np.ndarray:
    """Per-trial support-coincidence flags for the halving policy.

    Positions are scaled to depth-bit integers; the supports coincide
    after slot k exactly when the leading k bits agree.
    """
    cells = np.floor((thetas + sigma / 2.0) / sigma * 2**depth).astype(np.int64)
    cells = np.clip(cells, 0, 2**depth - 1)
    out = np.empty((thetas.shape[0], depth), dtype=bool)
    for k in range(1, depth + 1):
        shift = depth - k
        out[:, k - 1] = (cells[:, 0] >> shift) == (cells[:, 1] >> shift)
    return out


def _run_blocks(
    n_trials: int,
    master_seed: int,
    stream: int,
    workers: int | None,
    block_fn,
) -> tuple[float, float, tuple[TrialRecord, ...]]:
    """Map block_fn over seeding blocks and fold partials in block order."""
    starts = list(range(0, n_trials, BLOCK))

    def one(args: tuple[int, int]) -> _BlockResult:
        idx, start = args
        cnt = min(BLOCK, n_trials - start)
        return block_fn(_block_rng(master_seed, stream, idx), start, cnt)

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        parts = list(pool.map(one, enumerate(starts)))
    total = math.fsum(p.sum_w for p in parts)
    total_sq = math.fsum(p.sum_sq for p in parts)
    records: list[TrialRecord] = []
    for p in parts:
        records.extend(p.records)
    return total, total_sq, tuple(records)


def run_trials(
    scheme: str,
    depths: tuple[int, int],
    sigma: float,
    timing: FrameTiming,
    link1: LinkParams,
    link2: LinkParams,
    n_trials: int,
    master_seed: int,
    *,
    stream: int = 0,
    workers: int | None = None,
    keep_records: bool = False,
) -> TrialStats:
    """Monte Carlo power statistics for one scheme at fixed depths.

    The single-user scheme is deterministic, so it is evaluated in
    closed form and reported with n_trials = 0; both joint schemes are
    simulated. Results depend on master_seed and stream but not on the
    worker count.
    """
    if scheme not in SCHEME_NAMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEME_NAMES}")
    if scheme == SCHEME_SINGLE_USER:
        power = single_user_power(SingleUserConfig(*depths), timing, link1, link2, sigma)
        return TrialStats(mean_power_w=power, stderr_w=0.0, n_trials=0, records=())
    if n_trials < 1:
        raise ValueError("joint schemes need at least one trial")

    if scheme == SCHEME_BISECTION:
        block_fn = _bisection_block_fn(depths, sigma, timing, link1, link2, keep_records)
    else:
        block_fn = _exhaustive_block_fn(depths, sigma, timing, link1, link2, keep_records)
    total, total_sq, records = _run_blocks(n_trials, master_seed, stream, workers, block_fn)
    mean = total / n_trials
    if n_trials > 1:
        var = max(0.0, (total_sq - n_trials * mean * mean) / (n_trials - 1))
    else:
        var = 0.0
    return TrialStats(
        mean_power_w=mean,
        stderr_w=math.sqrt(var / n_trials),
        n_trials=n_trials,
        records=records,
    )


def _bisection_block_fn(
    depths: tuple[int, int],
    sigma: float,
    timing: FrameTiming,
    link1: LinkParams,
    link2: LinkParams,
    keep_records: bool,
):
    if depths[0] != depths[1]:
        raise ValueError("joint bisection shares one depth between the users")
    depth = depths[0]
    # Every feedback branch halves the width, so the schedule is the
    # same for all trials; only the support trajectory varies.
    power = closed_form_power(sigma, depth, timing, link1, link2)
    energy = power * timing.t_fr
    u_final = sigma / 2**depth
    t_cm = timing.t_fr - depth * timing.t_slot
    tau1 = solve_tau(u_final, u_final, t_cm, link1, link2, timing.t_fr)

    def block(rng: np.random.Generator, start: int, cnt: int) -> _BlockResult:
        recs: list[TrialRecord] = []
        if keep_records:
            thetas = rng.uniform(-sigma / 2.0, sigma / 2.0, size=(cnt, 2))
            rho = _bisection_rho_trajectories(thetas, sigma, depth)
            for i in range(cnt):
                recs.append(
                    TrialRecord(
                        seed=start + i,
                        theta1=float(thetas[i, 0]),
                        theta2=float(thetas[i, 1]),
                        slots_used=depth,
                        tau1=tau1,
                        energy_j=energy,
                        power_w=power,
                        rho_trajectory=tuple(bool(b) for b in rho[i]),
                    )
                )
        return _BlockResult(sum_w=cnt * power, sum_sq=cnt * power * power, records=recs)

    return block


def _exhaustive_block_fn(
    depths: tuple[int, int],
    sigma: float,
    timing: FrameTiming,
    link1: LinkParams,
    link2: LinkParams,
    keep_records: bool,
):
    if depths[0] != depths[1]:
        raise ValueError("the exhaustive sweep shares one depth between the users")
    cfg = ExhaustiveConfig(depths[0])
    k = cfg.beams
    u = cfg.beamwidth
    # Per-scan-length energy lookup; NaN marks frame-infeasible lengths,
    # which trip an error only if a trial actually draws one.
    energy_by_m = np.full(k + 1, np.nan)
    tau_by_m = np.full(k + 1, np.nan)
    for m in range(1, k + 1):
        t_cm = timing.t_fr - m * timing.t_slot
        if t_cm <= 0.0:
            continue
        tau = solve_tau(u, u, t_cm, link1, link2, timing.t_fr)
        tau_by_m[m] = tau
        energy_by_m[m] = u * energy_per_radian(tau, link1, timing.t_fr) + u * energy_per_radian(
            t_cm - tau, link2, timing.t_fr
        )

    def block(rng: np.random.Generator, start: int, cnt: int) -> _BlockResult:
        thetas = rng.uniform(-sigma / 2.0, sigma / 2.0, size=(cnt, 2))
        ids = np.minimum(np.floor((thetas + math.pi) / u).astype(np.int64) + 1, k)
        slots = np.maximum(ids[:, 0], ids[:, 1])
        energies = energy_by_m[slots]
        if not np.all(np.isfinite(energies)):
            bad = int(slots[~np.isfinite(energies)][0])
            raise InfeasibleRateError(
                f"a {bad}-slot sweep leaves no data window in a {timing.t_fr:.3e} s frame"
            )
        powers = energies / timing.t_fr
        recs: list[TrialRecord] = []
        if keep_records:
            for i in range(cnt):
                m = int(slots[i])
                first_diff = int(min(ids[i, 0], ids[i, 1]))
                same = ids[i, 0] == ids[i, 1]
                traj = tuple(same or kk < first_diff for kk in range(1, m + 1))
                recs.append(
                    TrialRecord(
                        seed=start + i,
                        theta1=float(thetas[i, 0]),
                        theta2=float(thetas[i, 1]),
                        slots_used=m,
                        tau1=float(tau_by_m[m]),
                        energy_j=float(energies[i]),
                        power_w=float(powers[i]),
                        rho_trajectory=traj,
                    )
                )
        return _BlockResult(
            sum_w=float(np.sum(powers)), sum_sq=float(np.sum(powers * powers)), records=recs
        )

    return block


def sweep(
    schemes: Sequence[str],
    r_tot_grid: Sequence[float],
    psi: float,
    sigma: float,
    timing: FrameTiming,
    base_link1: LinkParams,
    base_link2: LinkParams,
    depth_cap: int,
    n_trials: int,
    master_seed: int,
    *,
    workers: int | None = None,
) -> list[SweepRow]:
    """Depth-optimized power of every scheme across a sum-rate grid.

    Per point the rates are split as R1 = R_tot/(1+psi), R2 = psi*R1.
    Infeasible points become rows with empty statistics and the sweep
    continues. Each row draws from its own seed stream, fixed by the
    row's position, so results do not depend on which schemes fail.
    """
    if not r_tot_grid:
        raise ValueError("sum-rate grid must be nonempty")
    if not 0.0 < psi <= 1.0:
        raise ValueError(f"rate ratio psi must lie in (0, 1], got {psi}")
    rows: list[SweepRow] = []
    stream = 0
    for scheme in schemes:
        for r_tot in r_tot_grid:
            stream += 1
            r1 = r_tot / (1.0 + psi)
            link1 = _with_rate(base_link1, r1)
            link2 = _with_rate(base_link2, psi * r1)
            try:
                choice = optimize_depth(scheme, depth_cap, sigma, timing, link1, link2)
                stats = run_trials(
                    scheme,
                    choice.depths,
                    sigma,
                    timing,
                    link1,
                    link2,
                    n_trials,
                    master_seed,
                    stream=stream,
                    workers=workers,
                )
            except InfeasibleRateError:
                rows.append(
                    SweepRow(scheme, r_tot, psi, None, None, None, None, None, None, None)
                )
                continue
            rows.append(
                SweepRow(
                    scheme=scheme,
                    r_tot=r_tot,
                    psi=psi,
                    depth1=choice.depths[0],
                    depth2=choice.depths[1],
                    mean_power_w=stats.mean_power_w,
                    mean_power_dbm=watts_to_dbm(stats.mean_power_w),
                    stderr_w=stats.stderr_w,
                    n_trials=stats.n_trials,
                    closed_form_w=choice.power_w,
                )
            )
    return rows


def _with_rate(link: LinkParams, rate: float) -> LinkParams:
    from dataclasses import replace

    return replace(link, rate=rate)


def write_csv(rows: Iterable[SweepRow], path: str) -> None:
    """Write sweep rows with the stable schema, LF endings, UTF-8."""

    def num(x: float | None) -> str:
        return "" if x is None else f"{x:.12e}"

    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fields = [
                r.scheme,
                f"{r.r_tot:.12e}",
                f"{r.psi:.12e}",
                "" if r.depth1 is None else str(r.depth1),
                "" if r.depth2 is None else str(r.depth2),
                num(r.mean_power_w),
                num(r.mean_power_dbm),
                num(r.stderr_w),
                "" if r.n_trials is None else str(r.n_trials),
                num(r.closed_form_w),
            ]
            fh.write(",".join(fields) + "\n")


OUTCOME_ORDER = (
    Feedback(True, True),
    Feedback(True, False),
    Feedback(False, True),
    Feedback(False, False),
)


def run_episode(
    sigma: float,
    n_slots: int,
    omega_frac: float,
    rng: np.random.Generator,
    mode: str = "statistic",
    placement: str = "start",
) -> tuple[tuple[Feedback, ...], BeliefState]:
    """Simulate one alignment episode under the rule omega = frac * u.

    mode "explicit" draws an angle pair and realizes actual beams with
    the given placement rule; mode "statistic" never touches geometry
    and samples feedback straight from the outcome probabilities. Both
    return the feedback sequence and the final belief, which lets the
    two simulation styles be compared distributionally.
    """
    if mode not in ("explicit", "statistic"):
        raise ValueError(f"unknown episode mode {mode!r}")
    if not 0.0 < omega_frac < 1.0:
        raise ValueError("omega fraction must lie strictly between 0 and 1")
    fbs: list[Feedback] = []
    if mode == "explicit":
        state = initial_state(sigma)
        gt = sample_ground_truth(sigma, rng)
        for _ in range(n_slots):
            w1, w2 = omega_frac * state.u1, omega_frac * state.u2
            beam = realize_beam(state, w1, w2, placement)
            fb = feedback(gt, beam)
            state = update_supports(state, beam, fb)
            fbs.append(fb)
    else:
        state = BeliefState(u1=sigma, u2=sigma, rho=True)
        for _ in range(n_slots):
            w1, w2 = omega_frac * state.u1, omega_frac * state.u2
            probs = ack_probabilities(state, w1, w2)
            draw = rng.random()
            acc = 0.0
            fb = OUTCOME_ORDER[-1]
            for outcome, p in zip(OUTCOME_ORDER, probs):
                acc += p
                if draw < acc:
                    fb = outcome
                    break
            state = transition(state, w1, w2, fb)
            fbs.append(fb)
    return tuple(fbs), state


@dataclass(frozen=True)
class SlotTrace:
    """One alignment slot of a traced frame."""

    k: int
    beam: ArcSet
    fb: Feedback
    u1: float
    u2: float
    rho: bool


def trace_frame(
    sigma: float,
    timing: FrameTiming,
    link1: LinkParams,
    link2: LinkParams,
    rng: np.random.Generator,
    placement: str = "start",
) -> tuple[GroundTruth, list[SlotTrace], Schedule]:
    """Run one explicit halving frame and keep per-slot detail."""
    state = initial_state(sigma)
    gt = sample_ground_truth(sigma, rng)
    steps: list[SlotTrace] = []
    for k in range(1, timing.l_slots + 1):
        w1, w2 = state.u1 / 2.0, state.u2 / 2.0
        beam = realize_beam(state, w1, w2, placement)
        fb = feedback(gt, beam)
        state = update_supports(state, beam, fb)
        steps.append(SlotTrace(k=k, beam=beam, fb=fb, u1=state.u1, u2=state.u2, rho=state.rho))
    return gt, steps, make_schedule(state, timing, link1, link2)
