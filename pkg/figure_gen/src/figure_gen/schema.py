"""Typed readers for the sweep and planner-table CSV interchange files.

Both readers validate the header field by field before touching a
single row, so schema drift fails with the offending column named
instead of surfacing later as a misparsed number.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

SWEEP_HEADER = (
    "scheme",
    "r_tot",
    "psi",
    "depth1",
    "depth2",
    "mean_power_w",
    "mean_power_dbm",
    "stderr_w",
    "n_trials",
    "closed_form_w",
)
VALUE_HEADER = (
    "k",
    "u1_frac",
    "u2_frac",
    "rho",
    "value_J",
    "argmin_w1_frac",
    "argmin_w2_frac",
)


class SchemaError(Exception):
    """Input CSV header does not match the published schema."""


class DataError(Exception):
    """Input CSV parses but holds no usable rows for the request."""


@dataclass(frozen=True)
class SweepPoint:
    """One sweep CSV row; measurement fields are None when infeasible."""

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
        return self.mean_power_dbm is not None


@dataclass(frozen=True)
class ValuePoint:
    """One planner-table CSV row; argmins are None on terminal rows."""

    k: int
    u1_frac: float
    u2_frac: float
    rho: bool
    value_j: float
    argmin_w1_frac: float | None
    argmin_w2_frac: float | None


def _check_header(found: list[str], expected: tuple[str, ...], path: str) -> None:
    for idx, (got, want) in enumerate(zip(found, expected), start=1):
        if got != want:
            raise SchemaError(f"{path}: header column {idx} is {got!r}, expected {want!r}")
    if len(found) < len(expected):
        missing = ", ".join(expected[len(found) :])
        raise SchemaError(f"{path}: header is missing column(s) {missing}")
    if len(found) > len(expected):
        extra = ", ".join(found[len(expected) :])
        raise SchemaError(f"{path}: header has unexpected column(s) {extra}")


def _rows(path: str, expected: tuple[str, ...]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file, expected header {','.join(expected)}")
        _check_header(header, expected, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise DataError(f"{path} line {lineno}: expected {len(expected)} fields, got {len(row)}")
            yield lineno, row


def _parse(path: str, lineno: int, column: str, text: str, kind):
    try:
        return kind(text)
    except ValueError as exc:
        raise DataError(f"{path} line {lineno}: bad {column} value {text!r}") from exc


def _parse_opt(path: str, lineno: int, column: str, text: str, kind):
    return None if text == "" else _parse(path, lineno, column, text, kind)


def read_sweep_csv(path: str) -> tuple[SweepPoint, ...]:
    """Load and validate one sweep CSV."""
    points = []
    for lineno, row in _rows(path, SWEEP_HEADER):
        points.append(
            SweepPoint(
                scheme=row[0],
                r_tot=_parse(path, lineno, "r_tot", row[1], float),
                psi=_parse(path, lineno, "psi", row[2], float),
                depth1=_parse_opt(path, lineno, "depth1", row[3], int),
                depth2=_parse_opt(path, lineno, "depth2", row[4], int),
                mean_power_w=_parse_opt(path, lineno, "mean_power_w", row[5], float),
                mean_power_dbm=_parse_opt(path, lineno, "mean_power_dbm", row[6], float),
                stderr_w=_parse_opt(path, lineno, "stderr_w", row[7], float),
                n_trials=_parse_opt(path, lineno, "n_trials", row[8], int),
                closed_form_w=_parse_opt(path, lineno, "closed_form_w", row[9], float),
            )
        )
    return tuple(points)


def read_value_csv(path: str) -> tuple[ValuePoint, ...]:
    """Load and validate one planner-table CSV."""
    points = []
    for lineno, row in _rows(path, VALUE_HEADER):
        rho = row[3]
        if rho not in ("0", "1"):
            raise DataError(f"{path} line {lineno}: bad rho value {rho!r}")
        points.append(
            ValuePoint(
                k=_parse(path, lineno, "k", row[0], int),
                u1_frac=_parse(path, lineno, "u1_frac", row[1], float),
                u2_frac=_parse(path, lineno, "u2_frac", row[2], float),
                rho=rho == "1",
                value_j=_parse(path, lineno, "value_J", row[4], float),
                argmin_w1_frac=_parse_opt(path, lineno, "argmin_w1_frac", row[5], float),
                argmin_w2_frac=_parse_opt(path, lineno, "argmin_w2_frac", row[6], float),
            )
        )
    return tuple(points)
