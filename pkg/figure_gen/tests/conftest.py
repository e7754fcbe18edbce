"""Synthetic CSV builders shared by the figure tests."""

from __future__ import annotations

import pytest

from figure_gen.schema import SWEEP_HEADER, VALUE_HEADER

SCHEMES = ("joint-bisection", "joint-exhaustive", "single-user")

# dB offsets over joint bisection per rate; the single-user gap peaks
# at 7.0 dB at sum rate 2.0.
SU_GAPS = {1.0: 5.0, 2.0: 7.0, 3.0: 6.0, 4.0: 4.0}
EX_GAP = 3.0


def _num(x: float) -> str:
    return f"{x:.12e}"


def _dbm_to_w(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def sweep_line(scheme: str, r_tot: float, psi: float, dbm: float) -> str:
    w = _dbm_to_w(dbm)
    return ",".join(
        [scheme, _num(r_tot), _num(psi), "7", "7", _num(w), _num(dbm), _num(0.0), "0", _num(w)]
    )


def infeasible_line(scheme: str, r_tot: float, psi: float) -> str:
    return ",".join([scheme, _num(r_tot), _num(psi)] + [""] * 7)


def base_dbm(r_tot: float) -> float:
    return -6.0 + 2.0 * (r_tot - 1.0)


def scheme_dbm(scheme: str, r_tot: float) -> float:
    if scheme == "joint-exhaustive":
        return base_dbm(r_tot) + EX_GAP
    if scheme == "single-user":
        return base_dbm(r_tot) + SU_GAPS[r_tot]
    return base_dbm(r_tot)


def make_sweep_text(psi: float = 0.5) -> str:
    lines = [",".join(SWEEP_HEADER)]
    for scheme in SCHEMES:
        for r_tot in sorted(SU_GAPS):
            lines.append(sweep_line(scheme, r_tot, psi, scheme_dbm(scheme, r_tot)))
    return "\n".join(lines) + "\n"


@pytest.fixture
def sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    path.write_text(make_sweep_text(), encoding="utf-8")
    return path


def _frac(num: int, den: int) -> str:
    return f"{num / den:.10g}"


def make_value_text(l_slots: int = 2, grid_m: int = 8) -> str:
    """Tiny planner dump with exact half-split argmins."""
    lines = [",".join(VALUE_HEADER)]
    for k in range(l_slots + 1):
        terminal = k == l_slots
        scale = 10.0 ** (k - 4)
        for mm in range(1, grid_m + 1):
            row = [str(k), _frac(mm, grid_m), _frac(mm, grid_m), "1", _num(scale * mm * mm)]
            row += ["", ""] if terminal else [_frac(mm // 2 or 1, grid_m)] * 2
            lines.append(",".join(row))
        for m1 in range(1, grid_m):
            for m2 in range(1, grid_m - m1 + 1):
                row = [str(k), _frac(m1, grid_m), _frac(m2, grid_m), "0", _num(scale * m1 * m2)]
                row += ["", ""] if terminal else [_frac(m1 // 2 or 1, grid_m), _frac(m2 // 2 or 1, grid_m)]
                lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@pytest.fixture
def value_csv(tmp_path):
    path = tmp_path / "table.csv"
    path.write_text(make_value_text(), encoding="utf-8")
    return path
