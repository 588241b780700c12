import math

import pytest

from confform.atlas import AtlasRow, BoundaryCurve
from confform.plots import emit_plot, has_zero_line, polyline_points


def rows(values):
    return [AtlasRow(-1.0, c, L, 1.0, c * L, -1.0, True) for c, L in values]


def test_polyline_monotone_and_labelled(tmp_path):
    data = [(-2.0, 1.0), (-1.0, 2.0), (0.0, 4.0), (0.5, 7.0)]
    p = emit_plot(rows(data), tmp_path / "L.svg", "L", title="k = -1")
    pts = polyline_points(p)
    assert len(pts) == 4
    assert all(b[0] > a[0] for a, b in zip(pts, pts[1:]))
    # SVG y grows downward, so an increasing curve has decreasing y
    assert all(b[1] < a[1] for a, b in zip(pts, pts[1:]))
    text = p.read_text()
    assert ">c<" in text and "k = -1" in text
    assert not has_zero_line(p)


def test_zero_line_when_sign_changes(tmp_path):
    p = emit_plot(rows([(-2.0, 1.0), (-1.0, 2.0), (0.5, 7.0)]), tmp_path / "Lh.svg", "L_hat")
    assert has_zero_line(p)
    assert "L̂" in p.read_text(encoding="utf-8")


def test_unconverged_rows_skipped(tmp_path):
    rs = rows([(-1.0, 2.0), (0.0, 3.0)]) + [AtlasRow.marker(-1.0, 2.0, "inadmissible")]
    assert len(polyline_points(emit_plot(rs, tmp_path / "x.svg"))) == 2


def test_boundary_curve_input(tmp_path):
    curve = BoundaryCurve("t", ((-1.0, 2.0), (0.0, 3.0), (0.5, 5.0)), -1)
    p = emit_plot(curve, tmp_path / "b.svg", "L_hat")
    assert has_zero_line(p)
    assert len(polyline_points(p)) == 3


def test_too_few_samples(tmp_path):
    with pytest.raises(ValueError):
        emit_plot(rows([(0.0, math.pi)]), tmp_path / "one.svg")
