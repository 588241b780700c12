import math

import numpy as np
import pytest

from confform.atlas import LengthInverter
from confform.disk import disk_c_hat
from confform.junction import (
    BoundaryMetric,
    PositiveEulerCharacteristic,
    SurfaceComponent,
    TopologyError,
    TripleJunctionSpec,
    all_disk_case,
    boundary_correspondence,
    check_compatibility,
    load_spec,
    match_junction,
    uniqueness_probe,
)
from confform.operators import ConformalState
from confform.solver import CurvatureTarget, SolverOptions, solve


@pytest.fixture(scope="module")
def coarse_torus(coarse_ops):
    return SurfaceComponent("mesh", coarse_ops, "torus")


@pytest.fixture(scope="module")
def mixed(coarse_torus):
    spec = TripleJunctionSpec((SurfaceComponent.disk("cap"), coarse_torus, coarse_torus))
    return spec, match_junction(spec)


def test_spec_validation(coarse_torus):
    d = SurfaceComponent.disk()
    with pytest.raises(ValueError):
        TripleJunctionSpec((d, d))
    with pytest.raises(ValueError):
        TripleJunctionSpec((d, d, d), junction_samples=8)
    with pytest.raises(ValueError):
        SurfaceComponent("sphere")
    with pytest.raises(ValueError):
        SurfaceComponent("mesh")
    assert TripleJunctionSpec((d, coarse_torus, coarse_torus)).chi == -1


def test_all_disk_case_exact():
    d = SurfaceComponent.disk()
    spec = TripleJunctionSpec((d, d, d))
    r = all_disk_case(spec)
    assert (r.k, r.c, r.l0) == (1.0, (0.0, 0.0, 0.0), 2 * math.pi)
    assert r.to_dict()["states"] == [{"kind": "hemisphere"}] * 3
    with pytest.raises(PositiveEulerCharacteristic) as info:
        match_junction(spec)
    assert info.value.infimum == 6 * math.pi


def test_torus_plus_two_disks_rejected(coarse_torus):
    d = SurfaceComponent.disk()
    spec = TripleJunctionSpec((coarse_torus, d, d))
    assert spec.chi == 1
    with pytest.raises(PositiveEulerCharacteristic):
        match_junction(spec)
    with pytest.raises(TopologyError):
        all_disk_case(spec)


def test_symmetric_triple(coarse_torus, coarse_ops):
    spec = TripleJunctionSpec((coarse_torus,) * 3)
    r = match_junction(spec)
    L0 = solve(coarse_ops, CurvatureTarget(-1.0, 0.0)).boundary_length
    assert max(abs(c) for c in r.c) < 1e-8
    assert math.isclose(r.l0, L0, rel_tol=1e-8)


def test_mixed_triple_balances(mixed, coarse_ops):
    spec, r = mixed
    assert abs(r.curvature_sum) < 1e-8
    assert max(r.lengths) - min(r.lengths) < 1e-8 * r.l0
    assert r.c[0] > 1 and r.c[1] == r.c[2] < 0
    # independent oracle: the closed-form disk term cancels two torus terms
    c_t = LengthInverter(coarse_ops, SolverOptions(), rel_tol=1e-12).invert(r.l0)[0]
    assert abs(disk_c_hat(r.l0) + 2 * r.l0 * c_t) < 1e-7
    assert check_compatibility(spec, r) < 1e-8


def test_bracket_independence(mixed):
    spec, r = mixed
    other = match_junction(spec, bracket_scale=(3.0, 5.0))
    assert math.isclose(other.l0, r.l0, rel_tol=1e-8)
    # the bracket only shrinks once bisection starts
    widths = [hi - lo for lo, hi, _, _ in other.bracket_history]
    assert all(b < a for a, b in zip(widths, widths[1:]))


def test_uniqueness_probe(mixed):
    spec, r = mixed
    assert uniqueness_probe(spec, r, 2) < 1e-8
    with pytest.raises(ValueError):
        uniqueness_probe(spec, r, 0)


def test_correspondence_constant_speed(mixed, coarse_torus):
    spec, r = mixed
    corr = r.correspondences[1]
    assert corr.shape == (spec.junction_samples, 3)
    u = r.states[1].u
    mesh = coarse_torus.ops.mesh
    loop = mesh.boundary_loop
    # realized arclength up to each sample, recomputed edge by edge
    eu = np.exp(u[loop])
    seg = mesh.boundary_edge_lengths() * 0.5 * (eu + np.roll(eu, -1))
    total = seg.sum()
    assert math.isclose(total, r.lengths[1], rel_tol=1e-12)
    for t, s, x in corr:
        s = int(s)
        assert 0 <= x < 1
        assert math.isclose(seg[:s].sum() + x * seg[s], t * total, rel_tol=1e-10, abs_tol=1e-12)
    disk = r.correspondences[0]
    assert np.all(disk[:, 1] == -1)
    np.testing.assert_allclose(disk[:, 2], 2 * math.pi * disk[:, 0])


def test_correspondence_uniform_state(coarse_torus):
    n = coarse_torus.ops.mesh.vertex_count
    a = boundary_correspondence(coarse_torus, ConformalState.zeros(n), 32)
    b = boundary_correspondence(coarse_torus, ConformalState(np.full(n, 0.7)), 32)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_boundary_metric_reads_back_c(coarse_ops):
    rep = solve(coarse_ops, CurvatureTarget(-1.0, -0.4))
    m = BoundaryMetric.from_state(coarse_ops, rep.state, k=-1.0)
    np.testing.assert_allclose(m.curvature, -0.4, atol=1e-8)
    assert math.isclose(m.length, rep.boundary_length, rel_tol=1e-12)


def test_compatibility_unequal_lengths():
    d = SurfaceComponent.disk()
    spec = TripleJunctionSpec((d, d, d))
    with pytest.raises(ValueError, match="unequal"):
        check_compatibility(spec, [BoundaryMetric.constant(0, 1.0), BoundaryMetric.constant(0, 1.0),
                                   BoundaryMetric.constant(0, 2.0)])
    ms = [BoundaryMetric.constant(c, 3.0) for c in (2.0, -1.5, -0.5)]
    assert check_compatibility(spec, ms) == 0.0


def test_load_spec_shares_components(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("[junction]\njunction_samples = 32\n\n"
                 "[a]\nkind = mesh\ngenerator = torus\nnu = 8\nnv = 8\n\n"
                 "[b]\nkind = mesh\ngenerator = torus\nnu = 8\nnv = 8\n\n"
                 "[c]\nkind = disk\n")
    spec = load_spec(p)
    assert spec.junction_samples == 32
    assert spec.components[0] is spec.components[1]
    assert [c.kind for c in spec.components] == ["mesh", "mesh", "disk"]


@pytest.mark.parametrize("body, exc", [("[a]\nkind = blob\n", ValueError),
                                       ("[a]\nkind = mesh\ngenerator = klein\n", ValueError)])
def test_load_spec_errors(tmp_path, body, exc):
    p = tmp_path / "bad.cfg"
    p.write_text(body)
    with pytest.raises(exc):
        load_spec(p)


def test_missing_spec_file(tmp_path):
    with pytest.raises(ValueError, match="cannot read"):
        load_spec(tmp_path / "nope.cfg")
