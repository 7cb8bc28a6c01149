import math
import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qkl.sweep import (
    CSV_HEADER,
    EXPANSION_INVALID,
    LARGE_BETA_GRID,
    NOT_CONVERGED,
    SMALL_BETA_GRID,
    TRUNCATED_SUPPORT,
    SweepRow,
    SweepSpec,
    SweepSpecError,
    beta_grid,
    read_csv,
    render_svg_chart,
    run_sweep,
    write_csv,
    write_svg_chart,
)
from qkl.kl import kl_oscillator_analytic
from qkl.quadrature import QuadratureSpec


def test_default_grids():
    assert SMALL_BETA_GRID == (1e-6, 1e-1, 50)
    assert LARGE_BETA_GRID == (1e-1, 1e2, 50)
    spec = SweepSpec()
    grid = beta_grid(spec)
    assert len(grid) == 50 and grid[0] == 1e-6 and grid[-1] == 1e-1
    assert np.allclose(np.diff(np.log10(grid)), 5 / 49)


def test_linear_grid():
    grid = beta_grid(SweepSpec(beta_min=1e-3, beta_max=1e-2, points=10, grid="linear"))
    assert np.allclose(np.diff(grid), 1e-3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"models": ()},
        {"models": ("no_such",)},
        {"models": ("gup_oscillator", "gup_oscillator")},
        {"beta_min": 0.0},
        {"beta_min": 1e-2, "beta_max": 1e-3},
        {"beta_max": math.inf},
        {"points": 1},
        {"points": 2.5},
        {"grid": "cubic"},
        {"r": 0.0},
        {"box_support_factor": 1.5},
        {"workers": 0},
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(SweepSpecError):
        SweepSpec(**kwargs)


def test_two_points_two_rows_per_model():
    rows = run_sweep(SweepSpec(beta_min=1e-3, beta_max=1e-2, points=2))
    assert [(r.model, r.beta) for r in rows] == [
        ("gup_oscillator", 1e-3),
        ("gup_oscillator", 1e-2),
        ("nonlocal_box", 1e-3),
        ("nonlocal_box", 1e-2),
    ]


def test_flags():
    rows = run_sweep(SweepSpec(beta_min=1e-2, beta_max=1.0, points=3))
    by = {(r.model, r.beta): r for r in rows}
    assert by[("gup_oscillator", 1e-2)].flags == ()
    assert by[("gup_oscillator", 1.0)].flags == (EXPANSION_INVALID,)
    assert by[("gup_oscillator", 0.1)].flags == (EXPANSION_INVALID,)
    assert all(TRUNCATED_SUPPORT in by[("nonlocal_box", b)].flags for b in (1e-2, 0.1, 1.0))
    assert all(NOT_CONVERGED not in r.flags for r in rows)


def test_expansion_flag_scales_with_r():
    rows = run_sweep(SweepSpec(models=("gup_oscillator",), beta_min=0.1, beta_max=0.5, points=2, r=2.0))
    assert [r.flags for r in rows] == [(), (EXPANSION_INVALID,)]


def test_non_convergence_is_flagged_not_raised():
    starved = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-300, max_subdivisions=2)
    rows = run_sweep(SweepSpec(models=("gup_oscillator",), beta_min=1e-3, beta_max=1e-2, points=2, quadrature=starved))
    assert len(rows) == 2 and all(NOT_CONVERGED in r.flags for r in rows)


def test_oscillator_rows_carry_log10():
    rows = run_sweep(SweepSpec(models=("gup_oscillator",), beta_min=1e-4, beta_max=1e-2, points=3))
    for row in rows:
        assert row.log10_kl is not None
        assert abs(10 ** row.log10_kl - row.kl) / row.kl <= 1e-12
        assert row.deformed_norm == pytest.approx(1.0, abs=1e-10)
        assert row.kl < kl_oscillator_analytic(1.0, row.beta)


def test_negative_box_value_has_null_log():
    rows = run_sweep(SweepSpec(models=("nonlocal_box",), beta_min=1e-2, beta_max=2e-2, points=2))
    assert rows[0].kl < 0 and rows[0].log10_kl is None


def test_parallel_matches_serial():
    base = dict(beta_min=1e-4, beta_max=1e-1, points=6)
    assert run_sweep(SweepSpec(**base)) == run_sweep(SweepSpec(workers=3, **base))


# --------------------------------------------------------------------------
# CSV


def test_empty_csv_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv([], path)
    assert path.read_bytes() == (",".join(CSV_HEADER) + "\n").encode()
    assert read_csv(path) == []


def test_csv_format(tmp_path):
    rows = [
        SweepRow("nonlocal_box", 1e-3, 0.1, -1.0, 1e-12, 1.1, (TRUNCATED_SUPPORT,)),
        SweepRow("gup_oscillator", 0.5, 2.0, None, 0.0, 1.0, (NOT_CONVERGED, EXPANSION_INVALID)),
    ]
    path = tmp_path / "rows.csv"
    write_csv(rows, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[1] == "nonlocal_box,0.001,0.1,-1.0,1e-12,1.1,TRUNCATED_SUPPORT"
    assert lines[2] == "gup_oscillator,0.5,2.0,,0.0,1.0,NOT_CONVERGED|EXPANSION_INVALID"


def test_read_csv_rejects_other_files(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(path)
    with pytest.raises(OSError, match="missing.csv"):
        read_csv(tmp_path / "missing.csv")


def test_write_error_has_path_context(tmp_path):
    with pytest.raises(OSError, match="nodir"):
        write_csv([], tmp_path / "nodir" / "out.csv")


finite = st.floats(allow_nan=False, allow_infinity=False)
rows_strategy = st.lists(
    st.builds(
        SweepRow,
        model=st.sampled_from(["gup_oscillator", "nonlocal_box"]),
        beta=st.floats(min_value=1e-12, max_value=1e3),
        kl=finite,
        log10_kl=st.none() | finite,
        error_estimate=st.floats(min_value=0.0, allow_infinity=True, allow_nan=False),
        deformed_norm=finite,
        flags=st.sets(st.sampled_from([TRUNCATED_SUPPORT, NOT_CONVERGED, EXPANSION_INVALID])).map(
            lambda s: tuple(f for f in (TRUNCATED_SUPPORT, NOT_CONVERGED, EXPANSION_INVALID) if f in s)
        ),
    ),
    max_size=8,
)


@given(rows_strategy)
def test_csv_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "rows.csv"
    write_csv(rows, path)
    assert read_csv(path) == rows


# --------------------------------------------------------------------------
# SVG


def _fake_rows(models, n=50):
    betas = np.logspace(-6, -1, n)
    return [
        SweepRow(m, float(b), float(3 * b / 8 / (k + 1)), math.log10(3 * b / 8 / (k + 1)), 0.0, 1.0, ())
        for k, m in enumerate(models)
        for b in betas
    ]


def test_svg_structure():
    svg = render_svg_chart(_fake_rows(["gup_oscillator", "nonlocal_box"]))
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert 'viewBox="0 0 960 540"' in svg
    assert svg.count("<polyline") == 2
    assert "<script" not in svg
    assert "gup_oscillator" in svg and "nonlocal_box" in svg
    assert "beta" in svg and "log10" in svg


def test_svg_skips_rows_without_log():
    rows = _fake_rows(["nonlocal_box"], n=5)
    rows[2] = SweepRow("nonlocal_box", rows[2].beta, -1.0, None, 0.0, 1.0, ())
    svg = render_svg_chart(rows)
    points = re.search(r'<polyline[^>]*points="([^"]*)"', svg).group(1).split()
    assert len(points) == 4


def test_svg_is_deterministic(tmp_path):
    rows = _fake_rows(["gup_oscillator", "nonlocal_box"])
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    write_svg_chart(rows, a)
    write_svg_chart(list(rows), b)
    assert a.read_bytes() == b.read_bytes()


def test_svg_rejects_empty():
    with pytest.raises(ValueError):
        render_svg_chart([])
