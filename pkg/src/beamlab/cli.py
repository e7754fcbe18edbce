"""Command-line surface: config parsing, orchestration, CSV emission.

The config is a flat key = value text file; command-line overrides win.
Times, lengths, and frequencies accept unit suffixes (ms, us, mm, MHz);
noise density is given in dBm/Hz; canonical serialization emits plain
SI numerals so a load/serialize/load round trip is exact.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .arcset import TWO_PI
from .dp_planner import (
    backward_induction,
    closed_form_power,
    verify_bisection_optimality,
    verify_halving_identity,
)
from .link_energy import (
    FrameTiming,
    InfeasibleRateError,
    LinkParams,
    convexity_margin,
    energy_deriv1,
    energy_deriv2,
    energy_per_radian,
)
from .protocols import (
    SCHEME_BISECTION,
    SCHEME_EXHAUSTIVE,
    SCHEME_NAMES,
    ExhaustiveConfig,
    exhaustive_expected_power,
)
from .sim_harness import run_trials, sweep, trace_frame, watts_to_dbm, write_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_VERIFY = 3

DEFAULT_R_TOT_GRID = tuple(0.5 * i for i in range(1, 21))


class ConfigError(Exception):
    """Invalid configuration file, key, or value."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Scenario parameters with textbook urban-microcell defaults."""

    t_fr: float = 2e-3
    t_slot: float = 10e-6
    t_beacon: float = 5e-6
    l_slots: int = 7
    depth_cap: int = 7
    sigma: float = TWO_PI
    d1: float = 50.0
    d2: float = 50.0
    wavelength: float = 5e-3
    alpha: float = 2.0
    n0_dbm: float = -174.0
    w_tot: float = 500e6
    schemes: tuple[str, ...] = SCHEME_NAMES
    r_tot_grid: tuple[float, ...] = DEFAULT_R_TOT_GRID
    psi: float = 0.5
    trials: int = 100_000
    master_seed: int = 2024
    output: str = "sweep.csv"

    def timing(self) -> FrameTiming:
        return FrameTiming(
            t_fr=self.t_fr, t_slot=self.t_slot, t_beacon=self.t_beacon, l_slots=self.l_slots
        )

    def n0_w_per_hz(self) -> float:
        return 10.0 ** (self.n0_dbm / 10.0) * 1e-3

    def link(self, user: int, rate: float) -> LinkParams:
        return LinkParams(
            wavelength=self.wavelength,
            distance=self.d1 if user == 1 else self.d2,
            alpha=self.alpha,
            n0=self.n0_w_per_hz(),
            w_tot=self.w_tot,
            rate=rate,
        )

    def links(self, r_tot: float) -> tuple[LinkParams, LinkParams]:
        r1 = r_tot / (1.0 + self.psi)
        return self.link(1, r1), self.link(2, self.psi * r1)

    def validate(self) -> None:
        """Fail fast with field-level messages before any heavy work."""
        try:
            self.timing()
            self.link(1, 1.0)
            self.link(2, 1.0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 < self.sigma <= TWO_PI:
            raise ConfigError(f"sigma must lie in (0, 2*pi], got {self.sigma}")
        if not 0.0 < self.psi <= 1.0:
            raise ConfigError(f"psi must lie in (0, 1], got {self.psi}")
        if not 1 <= self.depth_cap <= 10:
            raise ConfigError(f"depth_cap must lie in 1..10, got {self.depth_cap}")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if not self.r_tot_grid or any(r <= 0.0 for r in self.r_tot_grid):
            raise ConfigError("r_tot_grid must be a nonempty list of positive rates")
        for scheme in self.schemes:
            if scheme not in SCHEME_NAMES:
                raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEME_NAMES}")


_TIME = {"": 1.0, "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}
_LENGTH = {"": 1.0, "m": 1.0, "cm": 1e-2, "mm": 1e-3, "km": 1e3}
_FREQ = {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_PLAIN = {"": 1.0}
_DBM = {"": 1.0, "dbm": 1.0, "dbm/hz": 1.0}

# key -> (config field, allowed unit suffixes)
_QUANTITY_KEYS = {
    "t_fr": ("t_fr", _TIME),
    "t_slot": ("t_slot", _TIME),
    "t_beacon": ("t_beacon", _TIME),
    "sigma": ("sigma", _PLAIN),
    "d1": ("d1", _LENGTH),
    "d2": ("d2", _LENGTH),
    "wavelength": ("wavelength", _LENGTH),
    "alpha": ("alpha", _PLAIN),
    "n0": ("n0_dbm", _DBM),
    "w_tot": ("w_tot", _FREQ),
    "psi": ("psi", _PLAIN),
}
_INT_KEYS = {"l_slots", "depth_cap", "trials", "master_seed"}

_QTY_RE = re.compile(r"^([-+]?[0-9.eE+-]+)\s*([a-zA-Zµ/]*)$")


def _parse_quantity(key: str, text: str, units: dict[str, float]) -> float:
    m = _QTY_RE.match(text.strip())
    if m is None:
        raise ConfigError(f"{key}: cannot parse quantity {text!r}")
    num, suffix = m.group(1), m.group(2).replace("µ", "u").lower()
    if suffix not in units:
        raise ConfigError(f"{key}: unsupported unit {m.group(2)!r} in {text!r}")
    try:
        value = float(num)
    except ValueError as exc:
        raise ConfigError(f"{key}: bad number {num!r}") from exc
    return value * units[suffix]


def apply_assignment(cfg: ExperimentConfig, key: str, value: str) -> ExperimentConfig:
    """Set one config key from its textual form."""
    key = key.strip()
    value = value.strip()
    if key in _QUANTITY_KEYS:
        field, units = _QUANTITY_KEYS[key]
        return replace(cfg, **{field: _parse_quantity(key, value, units)})
    if key in _INT_KEYS:
        try:
            return replace(cfg, **{key: int(value)})
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from exc
    if key == "schemes":
        return replace(cfg, schemes=tuple(s.strip() for s in value.split(",") if s.strip()))
    if key == "r_tot_grid":
        try:
            grid = tuple(float(tok) for tok in value.split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"r_tot_grid: expected comma-separated numbers, got {value!r}") from exc
        return replace(cfg, r_tot_grid=grid)
    if key == "output":
        return replace(cfg, output=value)
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        try:
            cfg = apply_assignment(cfg, key, value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical config text: SI numerals (n0 in dBm/Hz), one key per line."""
    lines = []
    for f in fields(cfg):
        key = "n0" if f.name == "n0_dbm" else f.name
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            text = ",".join(str(v) for v in val)
        else:
            text = repr(val) if isinstance(val, float) else str(val)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def load_config(path: str | None, assignments: Sequence[str] = ()) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        cfg = parse_config_text(text)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        cfg = apply_assignment(cfg, key, value)
    return cfg


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with the config code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    common.add_argument("--psi", type=float, help="rate ratio R2/R1 in (0, 1]")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    common.add_argument("--seed", type=int, help="master seed")

    parser = _Parser(prog="beamlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_sweep = sub.add_parser(
        "sweep", parents=[common], help="power-vs-sum-rate sweep over all schemes"
    )
    p_sweep.add_argument("--output", "-o", help="CSV output path")
    p_sweep.add_argument("--schemes", help="comma-separated scheme subset")
    p_sweep.add_argument("--r-tot", dest="r_tot", help="comma-separated sum-rate grid")

    p_verify = sub.add_parser(
        "verify", parents=[common], help="run the numerical verification suite"
    )
    p_verify.add_argument(
        "--dp-slots", type=int, default=5, help="alignment slots for the planner checks"
    )
    p_verify.add_argument(
        "--dump-table", metavar="PATH", help="also dump the planner value table as CSV"
    )
    p_verify.add_argument(
        "--fault-inject",
        action="store_true",
        help="flip the curvature combination's sign (negative control)",
    )

    p_trace = sub.add_parser(
        "trace", parents=[common], help="trace one frame slot by slot"
    )
    p_trace.add_argument("--slots", type=int, help="alignment slots to trace")
    p_trace.add_argument(
        "--r-tot", dest="r_tot_scalar", type=float, default=2.0, help="sum rate for the schedule"
    )
    p_trace.add_argument(
        "--placement", choices=("start", "end"), default="start", help="beam placement rule"
    )
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config, args.assignments)
    if args.psi is not None:
        cfg = replace(cfg, psi=args.psi)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if getattr(args, "output", None) is not None:
        cfg = replace(cfg, output=args.output)
    if getattr(args, "schemes", None) is not None:
        cfg = apply_assignment(cfg, "schemes", args.schemes)
    if getattr(args, "r_tot", None) is not None:
        cfg = apply_assignment(cfg, "r_tot_grid", args.r_tot)
    cfg.validate()
    return cfg


def cmd_sweep(cfg: ExperimentConfig) -> int:
    rows = sweep(
        cfg.schemes,
        cfg.r_tot_grid,
        cfg.psi,
        cfg.sigma,
        cfg.timing(),
        cfg.link(1, 1.0),
        cfg.link(2, 1.0),
        cfg.depth_cap,
        cfg.trials,
        cfg.master_seed,
    )
    try:
        write_csv(rows, cfg.output)
    except OSError as exc:
        print(f"cannot write {cfg.output!r}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {cfg.output} ({len(rows)} rows)")
    print(f"{'scheme':<16} {'R_tot':>6} {'d1':>3} {'d2':>3} {'power [dBm]':>12}")
    infeasible = []
    for r in rows:
        if r.feasible:
            print(
                f"{r.scheme:<16} {r.r_tot:>6.2f} {r.depth1:>3d} {r.depth2:>3d}"
                f" {r.mean_power_dbm:>12.3f}"
            )
        else:
            infeasible.append(r)
            print(f"{r.scheme:<16} {r.r_tot:>6.2f} {'-':>3} {'-':>3} {'infeasible':>12}")
    if infeasible:
        points = ", ".join(f"{r.scheme}@{r.r_tot:g}" for r in infeasible)
        print(f"infeasible points: {points}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _check(name: str, passed: bool, detail: str, results: list[bool]) -> None:
    results.append(passed)
    print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")


def cmd_verify(
    cfg: ExperimentConfig, dp_slots: int, fault_inject: bool, dump_table: str | None = None
) -> int:
    results: list[bool] = []
    link1, link2 = cfg.links(2.0)
    timing = cfg.timing()
    t_cm = cfg.t_fr - cfg.depth_cap * cfg.t_slot

    taus = np.logspace(math.log10(1e-4 * t_cm), math.log10(0.999 * t_cm), 200)
    d1 = np.array([energy_deriv1(t, link1, cfg.t_fr) for t in taus])
    d2 = np.array([energy_deriv2(t, link1, cfg.t_fr) for t in taus])
    fin = np.isfinite(d1)
    _check(
        "energy-derivative-signs",
        bool(np.all(d1[fin] < 0.0) and np.all(d2[fin] > 0.0)),
        f"{fin.sum()} finite points, max e' = {d1[fin].max():.3e}, min e'' = {d2[fin].min():.3e}",
        results,
    )

    fd_max = 0.0
    for t in taus[::8][1:]:
        h = 1e-6 * t
        fd1 = (energy_per_radian(t + h, link1, cfg.t_fr) - energy_per_radian(t - h, link1, cfg.t_fr)) / (
            2.0 * h
        )
        fd2 = (energy_deriv1(t + h, link1, cfg.t_fr) - energy_deriv1(t - h, link1, cfg.t_fr)) / (
            2.0 * h
        )
        if math.isfinite(fd1):
            fd_max = max(fd_max, abs(fd1 - energy_deriv1(t, link1, cfg.t_fr)) / abs(fd1))
        if math.isfinite(fd2):
            fd_max = max(fd_max, abs(fd2 - energy_deriv2(t, link1, cfg.t_fr)) / abs(fd2))
    _check(
        "derivative-consistency",
        fd_max <= 1e-5,
        f"max rel deviation from finite differences = {fd_max:.3e}",
        results,
    )

    ys = np.logspace(math.log10(0.01), math.log10(30.0), 200)
    y1g, y2g = np.meshgrid(ys, ys, indexing="ij")
    q = convexity_margin(y1g, y2g, rate_ratio=link1.rate / link2.rate, flip_sign=fault_inject)
    _check(
        "curvature-grid",
        bool(np.all(q > 0.0)),
        f"{q.size} grid points, min margin = {q.min():.3e}",
        results,
    )

    table = backward_induction(
        dp_slots, cfg.sigma, timing, link1, link2, with_argmins=dump_table is not None
    )
    if dump_table is not None:
        table.to_csv(dump_table)
        print(f"wrote planner table to {dump_table}")
    rep = verify_bisection_optimality(table)
    _check(
        "planner-halving-optimality",
        rep.passed,
        f"{rep.states_checked} states, {len(rep.violations)} violations, "
        f"max central dev = {rep.max_central_rel_dev:.3e}, "
        f"max exact-half dev = {rep.max_exact_half_rel_dev:.3e}",
        results,
    )
    hal = verify_halving_identity(table)
    _check(
        "planner-width-collapse",
        hal.passed,
        f"{hal.states_checked} states, max rel dev = {hal.max_rel_dev:.3e}",
        results,
    )
    cf = closed_form_power(cfg.sigma, dp_slots, timing, link1, link2)
    root = table.root_value() / cfg.t_fr
    root_dev = abs(root - cf) / cf
    _check(
        "planner-vs-closed-form",
        root_dev <= 1e-6,
        f"rel deviation = {root_dev:.3e}",
        results,
    )

    stats = run_trials(
        SCHEME_BISECTION,
        (cfg.depth_cap, cfg.depth_cap),
        cfg.sigma,
        timing,
        link1,
        link2,
        cfg.trials,
        cfg.master_seed,
    )
    cf = closed_form_power(cfg.sigma, cfg.depth_cap, timing, link1, link2)
    diff = abs(stats.mean_power_w - cf)
    _check(
        "halving-mc-vs-closed-form",
        diff <= 3.0 * stats.stderr_w + 1e-12 * cf,
        f"{stats.n_trials} trials, |mc - cf| = {diff:.3e} W, stderr = {stats.stderr_w:.3e} W",
        results,
    )

    stats = run_trials(
        SCHEME_EXHAUSTIVE,
        (cfg.depth_cap, cfg.depth_cap),
        cfg.sigma,
        timing,
        link1,
        link2,
        cfg.trials,
        cfg.master_seed,
        stream=1,
    )
    exact = exhaustive_expected_power(
        ExhaustiveConfig(cfg.depth_cap), timing, link1, link2, cfg.sigma
    )
    diff = abs(stats.mean_power_w - exact)
    _check(
        "sweep-mc-vs-enumeration",
        diff <= 3.0 * stats.stderr_w + 1e-12 * exact,
        f"{stats.n_trials} trials, |mc - exact| = {diff:.3e} W, stderr = {stats.stderr_w:.3e} W",
        results,
    )

    failed = results.count(False)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_trace(cfg: ExperimentConfig, slots: int | None, r_tot: float, placement: str) -> int:
    timing = cfg.timing()
    if slots is not None:
        timing = replace(timing, l_slots=slots)
    link1, link2 = cfg.links(r_tot)
    rng = np.random.default_rng(cfg.master_seed)
    gt, steps, schedule = trace_frame(cfg.sigma, timing, link1, link2, rng, placement)
    print(f"theta1 = {gt.theta1:+.6f} rad, theta2 = {gt.theta2:+.6f} rad")
    print(f"{'slot':>4} {'beam':<40} {'c1':>2} {'c2':>2} {'u1':>9} {'u2':>9} {'rho':>3}")
    for s in steps:
        beam_txt = " ".join(f"[{a:+.4f},{b:+.4f})" for a, b in s.beam)
        print(
            f"{s.k:>4} {beam_txt:<40} {int(s.fb.c1):>2} {int(s.fb.c2):>2}"
            f" {s.u1:>9.6f} {s.u2:>9.6f} {int(s.rho):>3}"
        )
    print(
        f"schedule: tau1 = {schedule.tau1:.6e} s, "
        f"power1 = {schedule.power1:.6e} W ({watts_to_dbm(schedule.power1):.2f} dBm), "
        f"power2 = {schedule.power2:.6e} W ({watts_to_dbm(schedule.power2):.2f} dBm), "
        f"energy = {schedule.energy_total:.6e} J"
    )
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.dp_slots, args.fault_inject, args.dump_table)
        return cmd_trace(cfg, args.slots, args.r_tot_scalar, args.placement)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleRateError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
