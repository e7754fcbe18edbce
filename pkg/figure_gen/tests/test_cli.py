"""End-to-end command-line runs, including against the real simulator."""

from __future__ import annotations

import re
import subprocess
import sys

import pytest

from figure_gen.cli import main
from figure_gen.schema import SWEEP_HEADER

from conftest import make_sweep_text


def test_sweep_subcommand(tmp_path, capsys, sweep_csv) -> None:
    out = tmp_path / "fig.svg"
    rc = main(["sweep", str(sweep_csv), "-o", str(out), "--annotate-gap"])
    captured = capsys.readouterr()
    assert rc == 0
    assert out.exists()
    assert f"wrote {out}" in captured.out
    assert "7.0 dB" in captured.out


def test_table_subcommand(tmp_path, capsys, value_csv) -> None:
    out = tmp_path / "table.svg"
    rc = main(["table", str(value_csv), "-o", str(out), "--slot", "0"])
    assert rc == 0
    assert out.exists()
    capsys.readouterr()


def test_schema_violation_names_column(tmp_path, capsys) -> None:
    bad = tmp_path / "bad.csv"
    header = list(SWEEP_HEADER)
    header[2] = "ratio"
    bad.write_text(",".join(header) + "\n", encoding="utf-8")
    rc = main(["sweep", str(bad), "-o", str(tmp_path / "fig.svg")])
    captured = capsys.readouterr()
    assert rc == 1
    assert "column 3 is 'ratio', expected 'psi'" in captured.err
    assert not (tmp_path / "fig.svg").exists()


def test_empty_filter_is_an_error(tmp_path, capsys) -> None:
    path = tmp_path / "sweep.csv"
    path.write_text(make_sweep_text(psi=0.5), encoding="utf-8")
    rc = main(["sweep", str(path), "-o", str(tmp_path / "fig.svg"), "--psi", "1.0"])
    captured = capsys.readouterr()
    assert rc == 1
    assert "no rows with psi = 1" in captured.err
    assert not (tmp_path / "fig.svg").exists()


def test_missing_input_is_an_error(tmp_path, capsys) -> None:
    rc = main(["sweep", str(tmp_path / "absent.csv"), "-o", str(tmp_path / "fig.svg")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


@pytest.mark.skipif(
    subprocess.run(
        [sys.executable, "-c", "import beamlab"], capture_output=True
    ).returncode
    != 0,
    reason="simulator package not installed",
)
def test_renders_default_sweep_from_simulator(tmp_path, capsys) -> None:
    """Full pipeline: simulator sweep CSV in, annotated 3-curve figure out."""
    csv_path = tmp_path / "sweep.csv"
    run = subprocess.run(
        [
            sys.executable,
            "-m",
            "beamlab.cli",
            "sweep",
            "-o",
            str(csv_path),
            "--trials",
            "2000",
        ],
        capture_output=True,
        text=True,
    )
    assert run.returncode == 0, run.stderr

    out = tmp_path / "fig.svg"
    rc = main(["sweep", str(csv_path), "-o", str(out), "--psi", "0.5", "--annotate-gap"])
    captured = capsys.readouterr()
    assert rc == 0

    match = re.search(r"max single-user gap: (\d+\.\d) dB", captured.out)
    assert match is not None
    gap = float(match.group(1))
    assert 6.0 <= gap <= 8.0
    assert round(gap) == 7

    from figure_gen.sweep_plot import FigureSpec, build_sweep_figure, load_points

    fig, note = build_sweep_figure(
        load_points(FigureSpec(inputs=(str(csv_path),), output=str(out), psi=0.5)),
        annotate_gap=True,
    )
    assert len(fig.axes[0].lines) == 3
    assert note is not None and note.endswith("dB")
