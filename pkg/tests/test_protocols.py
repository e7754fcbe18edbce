"""End-to-end protocol rules: cell arithmetic, enumeration, depth choice."""

from __future__ import annotations

import math

import numpy as np
import pytest

from beamlab.alignment_state import BeliefState, GroundTruth
from beamlab.arcset import TWO_PI
from beamlab.dp_planner import closed_form_power
from beamlab.link_energy import FrameTiming, InfeasibleRateError, energy_per_radian
from beamlab.protocols import (
    MAX_DEPTH,
    SCHEME_BISECTION,
    SCHEME_EXHAUSTIVE,
    SCHEME_NAMES,
    SCHEME_SINGLE_USER,
    DepthChoice,
    ExhaustiveConfig,
    SingleUserConfig,
    bisection_policy,
    cell_index,
    cell_probabilities,
    exhaustive_expected_power,
    exhaustive_protocol,
    single_user_power,
    single_user_protocol,
    optimize_depth,
)
from beamlab.tdm_scheduler import solve_tau

# ---------------------------------------------------------------------------
# cell arithmetic


def test_cell_index_examples():
    k = 8
    w = TWO_PI / k
    assert cell_index(-math.pi, k) == 1
    assert cell_index(-math.pi + w, k) == 2
    assert cell_index(0.0, k) == 5
    assert cell_index(math.pi - 1e-9, k) == 8
    assert cell_index(math.pi, k) == 8


def test_cell_index_rejects_out_of_range():
    with pytest.raises(ValueError):
        cell_index(4.0, 8)


def test_cell_index_brackets_are_consistent():
    rng = np.random.default_rng(3)
    for k in (2, 8, 128):
        w = TWO_PI / k
        for theta in rng.uniform(-math.pi, math.pi, 200):
            j = cell_index(float(theta), k)
            assert -math.pi + (j - 1) * w <= theta < -math.pi + j * w + 1e-12


def test_cell_probabilities_full_circle_uniform():
    p = cell_probabilities(TWO_PI, 16)
    assert p == pytest.approx(np.full(16, 1.0 / 16.0), abs=1e-15)
    assert math.fsum(p) == pytest.approx(1.0, abs=1e-12)


def test_cell_probabilities_narrow_prior():
    p = cell_probabilities(math.pi, 4)
    assert p == pytest.approx([0.0, 0.5, 0.5, 0.0], abs=1e-15)


# ---------------------------------------------------------------------------
# exhaustive sweep


def test_exhaustive_slots_follow_max_cell(timing, split_links):
    l1, l2 = split_links
    cfg8 = ExhaustiveConfig(3)
    w = cfg8.beamwidth
    in_cell = lambda j: -math.pi + (j - 0.5) * w

    out = exhaustive_protocol(GroundTruth(in_cell(3), in_cell(5)), cfg8, timing, l1, l2)
    assert out.slots_used == 5
    assert out.feasible

    same = exhaustive_protocol(GroundTruth(in_cell(2), in_cell(2)), cfg8, timing, l1, l2)
    assert same.slots_used == 2


def test_exhaustive_energy_reconstruction(timing, split_links):
    l1, l2 = split_links
    cfg8 = ExhaustiveConfig(3)
    w = cfg8.beamwidth
    out = exhaustive_protocol(GroundTruth(0.1, -0.1), cfg8, timing, l1, l2)
    t_cm = timing.t_fr - out.slots_used * timing.t_slot
    tau = solve_tau(w, w, t_cm, l1, l2, timing.t_fr)
    energy = w * energy_per_radian(tau, l1, timing.t_fr) + w * energy_per_radian(
        t_cm - tau, l2, timing.t_fr
    )
    assert out.tau1 == pytest.approx(tau, rel=1e-12)
    assert out.energy_j == pytest.approx(energy, rel=1e-12)
    assert out.power_w == pytest.approx(energy / timing.t_fr, rel=1e-12)


def test_exhaustive_scan_can_eat_the_frame(timing, split_links):
    l1, l2 = split_links
    cfg = ExhaustiveConfig(10)
    near_seam = math.pi - 1e-6
    out = exhaustive_protocol(GroundTruth(near_seam, 0.0), cfg, timing, l1, l2)
    assert not out.feasible
    assert math.isnan(out.energy_j)
    assert out.slots_used == 1024


def test_exhaustive_expected_power_matches_mc(timing, split_links):
    # Verify the per-trial path on a sample, then check the scan-length
    # expectation statistically with the per-length energies it implies.
    l1, l2 = split_links
    cfg8 = ExhaustiveConfig(3)
    k = cfg8.beams
    w = cfg8.beamwidth
    energy_by_m = np.array(
        [
            exhaustive_protocol(
                GroundTruth(-math.pi + (m - 0.5) * w, -math.pi + 0.5 * w),
                cfg8,
                timing,
                l1,
                l2,
            ).energy_j
            for m in range(1, k + 1)
        ]
    )

    rng = np.random.default_rng(7)
    for theta1, theta2 in rng.uniform(-math.pi, math.pi, size=(200, 2)):
        out = exhaustive_protocol(GroundTruth(theta1, theta2), cfg8, timing, l1, l2)
        m = max(cell_index(float(theta1), k), cell_index(float(theta2), k))
        assert out.slots_used == m
        assert out.energy_j == pytest.approx(energy_by_m[m - 1], rel=1e-12)

    n = 500_000
    ids = rng.integers(1, k + 1, size=(n, 2)).max(axis=1)
    sample = energy_by_m[ids - 1] / timing.t_fr
    mean = float(np.mean(sample))
    stderr = float(np.std(sample, ddof=1)) / math.sqrt(n)
    exact = exhaustive_expected_power(cfg8, timing, l1, l2)
    assert abs(mean - exact) <= 3.0 * stderr


def test_exhaustive_expected_power_narrow_prior_skips_far_cells(timing, split_links):
    # With the prior confined to half the circle, far cells have zero
    # probability and must not contribute (nor trip feasibility checks).
    l1, l2 = split_links
    cfg = ExhaustiveConfig(3)
    full = exhaustive_expected_power(cfg, timing, l1, l2, sigma=TWO_PI)
    narrow = exhaustive_expected_power(cfg, timing, l1, l2, sigma=math.pi)
    assert narrow < full


def test_exhaustive_expected_power_raises_when_sweep_too_long(split_links):
    l1, l2 = split_links
    tight = FrameTiming(t_fr=2e-4, t_slot=10e-6, t_beacon=5e-6, l_slots=1)
    with pytest.raises(InfeasibleRateError):
        exhaustive_expected_power(ExhaustiveConfig(5), tight, l1, l2)


# ---------------------------------------------------------------------------
# single-user scheme


def test_single_user_outcome_ignores_angles(timing, split_links):
    l1, l2 = split_links
    cfg = SingleUserConfig(4, 6)
    a = single_user_protocol(GroundTruth(0.3, -2.0), cfg, timing, l1, l2)
    b = single_user_protocol(GroundTruth(-1.0, 1.0), cfg, timing, l1, l2)
    assert a == b


def test_single_user_energy_reconstruction(cfg, timing):
    from dataclasses import replace

    l1, l2 = cfg.links(2.0)
    sucfg = SingleUserConfig(4, 6)
    out = single_user_protocol(GroundTruth(0.0, 0.0), sucfg, timing, l1, l2)

    expected = []
    for l_i, link in ((4, l1), (6, l2)):
        t_cm = timing.t_fr - l_i * timing.t_slot
        doubled = replace(link, rate=2.0 * link.rate)
        expected.append((TWO_PI / 2**l_i) * energy_per_radian(t_cm, doubled, timing.t_fr))
    assert out.energy1_j == pytest.approx(expected[0], rel=1e-12)
    assert out.energy2_j == pytest.approx(expected[1], rel=1e-12)
    assert out.power_w == pytest.approx(sum(expected) / (2.0 * timing.t_fr), rel=1e-12)


def test_single_user_symmetry(cfg, timing, equal_links):
    l1, l2 = equal_links
    out = single_user_protocol(GroundTruth(0.0, 0.0), SingleUserConfig(5, 5), timing, l1, l2)
    assert out.energy1_j == out.energy2_j


def test_single_user_infeasible_depth_raises(split_links):
    l1, l2 = split_links
    tight = FrameTiming(t_fr=9e-5, t_slot=10e-6, t_beacon=5e-6, l_slots=1)
    with pytest.raises(InfeasibleRateError):
        single_user_power(SingleUserConfig(9, 9), tight, l1, l2)


# ---------------------------------------------------------------------------
# matched-rate coincidence


def test_equal_rates_make_single_user_match_bisection(cfg, timing, equal_links):
    # At a symmetric rate split the alternating scheme and the joint
    # halving scheme are two bookkeepings of the same physics.
    l1, l2 = equal_links
    su = optimize_depth(SCHEME_SINGLE_USER, 7, cfg.sigma, timing, l1, l2)
    jb = optimize_depth(SCHEME_BISECTION, 7, cfg.sigma, timing, l1, l2)
    gap_db = abs(10.0 * math.log10(su.power_w / jb.power_w))
    assert gap_db <= 0.1


# ---------------------------------------------------------------------------
# depth optimization


def test_optimize_depth_matches_direct_enumeration(cfg, timing, split_links):
    l1, l2 = split_links

    jb = optimize_depth(SCHEME_BISECTION, 7, cfg.sigma, timing, l1, l2)
    powers = [closed_form_power(cfg.sigma, d, timing, l1, l2) for d in range(1, 8)]
    assert jb.power_w == pytest.approx(min(powers), rel=1e-12)
    assert jb.depths[0] == int(np.argmin(powers)) + 1

    ex = optimize_depth(SCHEME_EXHAUSTIVE, 7, cfg.sigma, timing, l1, l2)
    powers = [
        exhaustive_expected_power(ExhaustiveConfig(d), timing, l1, l2) for d in range(1, 8)
    ]
    assert ex.power_w == pytest.approx(min(powers), rel=1e-12)

    su = optimize_depth(SCHEME_SINGLE_USER, 4, cfg.sigma, timing, l1, l2)
    best = min(
        (single_user_power(SingleUserConfig(a, b), timing, l1, l2), (a, b))
        for a in range(1, 5)
        for b in range(1, 5)
    )
    assert su.power_w == pytest.approx(best[0], rel=1e-12)
    assert su.depths == best[1]


def test_optimize_depth_breaks_ties_toward_smaller(monkeypatch, cfg, timing, split_links):
    l1, l2 = split_links
    monkeypatch.setattr("beamlab.protocols.closed_form_power", lambda *a, **k: 1.0)
    choice = optimize_depth(SCHEME_BISECTION, 7, cfg.sigma, timing, l1, l2)
    assert choice == DepthChoice(depths=(1, 1), power_w=1.0)


def test_low_rate_still_prefers_deep_alignment(cfg, timing):
    # Even at a tiny rate demand the narrower beam buys more than the
    # shorter data window costs, so the deepest depth wins.
    l1, l2 = cfg.links(0.1)
    assert closed_form_power(cfg.sigma, 7, timing, l1, l2) < closed_form_power(
        cfg.sigma, 6, timing, l1, l2
    )
    choice = optimize_depth(SCHEME_BISECTION, 7, cfg.sigma, timing, l1, l2)
    assert choice.depths == (7, 7)


def test_optimize_depth_validation(cfg, timing, split_links):
    l1, l2 = split_links
    with pytest.raises(ValueError):
        optimize_depth("halving", 7, cfg.sigma, timing, l1, l2)
    with pytest.raises(ValueError):
        optimize_depth(SCHEME_BISECTION, 0, cfg.sigma, timing, l1, l2)


def test_optimize_depth_raises_when_nothing_feasible(cfg, timing):
    l1, l2 = cfg.link(1, 5000.0), cfg.link(2, 5000.0)
    with pytest.raises(InfeasibleRateError):
        optimize_depth(SCHEME_SINGLE_USER, 3, cfg.sigma, timing, l1, l2)


# ---------------------------------------------------------------------------
# rate-split invariance of the joint schemes


def test_joint_power_depends_only_on_sum_rate(cfg, timing):
    # Matched radio constants: any split of the same sum rate yields the
    # same joint power, for both joint schemes.
    splits = [(1.0, 1.0), (4.0 / 3.0, 2.0 / 3.0), (1.5, 0.5)]
    jb = [
        closed_form_power(cfg.sigma, 7, timing, cfg.link(1, r1), cfg.link(2, r2))
        for r1, r2 in splits
    ]
    ex = [
        exhaustive_expected_power(
            ExhaustiveConfig(7), timing, cfg.link(1, r1), cfg.link(2, r2)
        )
        for r1, r2 in splits
    ]
    for val in jb[1:]:
        assert val == pytest.approx(jb[0], rel=1e-9)
    for val in ex[1:]:
        assert val == pytest.approx(ex[0], rel=1e-9)


# ---------------------------------------------------------------------------
# odds and ends


def test_scheme_names_and_policy():
    assert SCHEME_NAMES == (SCHEME_BISECTION, SCHEME_EXHAUSTIVE, SCHEME_SINGLE_USER)
    pol = bisection_policy()
    assert pol.name == SCHEME_BISECTION
    assert pol.action(BeliefState(1.0, 0.5, False)) == (0.5, 0.25)


def test_config_validation():
    with pytest.raises(ValueError):
        ExhaustiveConfig(0)
    with pytest.raises(ValueError):
        ExhaustiveConfig(MAX_DEPTH + 1)
    with pytest.raises(ValueError):
        SingleUserConfig(0, 1)
    assert ExhaustiveConfig(3).beams == 8
    assert ExhaustiveConfig(3).beamwidth == pytest.approx(TWO_PI / 8.0, rel=1e-15)
