import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confform.mesh import generate_flat_square, generate_flat_disk
from confform.operators import ConformalState, build_operators, conformal_measures
from confform.solver import (
    CurvatureTarget,
    InadmissibleTarget,
    NearBlowup,
    NonConvergence,
    SolverOptions,
    continuation_solve,
    discrete_energy,
    dumps,
    is_admissible,
    jacobian,
    length_derivative,
    residual,
    solve,
    solve_linearized,
)


def gb_gap(ops, rep):
    return abs(rep.k * rep.area + rep.c * rep.boundary_length - 2 * math.pi * ops.chi)


# ---- residual, Jacobian, energy -------------------------------------------


def test_flat_square_residual_at_zero():
    ops = build_operators(generate_flat_square())
    F = residual(ops, np.zeros(4), CurvatureTarget(0.0, 0.0, strict=False))
    np.testing.assert_allclose(F, math.pi / 2, rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 0), st.floats(-3, 1))
def test_residual_sum_identity(coarse_ops, seed, k, c):
    u = np.random.default_rng(seed).uniform(-1, 1, coarse_ops.mesh.vertex_count)
    F = residual(coarse_ops, u, CurvatureTarget(k, c, strict=False))
    A, L = conformal_measures(coarse_ops, u)
    assert math.isclose(math.fsum(F), 2 * math.pi * coarse_ops.chi - k * A - c * L, abs_tol=1e-10)


@pytest.mark.parametrize("k, c", [(-1.0, -1.0), (-1.0, 0.5), (-2.0, 1.2)])
def test_jacobian_matches_central_differences(coarse_ops, k, c):
    t = CurvatureTarget(k, c, strict=False)
    rng = np.random.default_rng(7)
    u = rng.uniform(-0.5, 0.5, coarse_ops.mesh.vertex_count)
    J = jacobian(coarse_ops, u, t)
    for _ in range(3):
        d = rng.standard_normal(u.size)
        eps = 1e-6
        fd = (residual(coarse_ops, u + eps * d, t) - residual(coarse_ops, u - eps * d, t)) / (2 * eps)
        np.testing.assert_allclose(J @ d, fd, rtol=1e-6, atol=1e-7 * np.abs(fd).max())


def test_jacobian_symmetric(coarse_ops):
    J = jacobian(coarse_ops, np.zeros(coarse_ops.mesh.vertex_count), CurvatureTarget(-1, -1))
    assert abs(J - J.T).max() < 1e-14


def test_energy_gradient_is_residual(coarse_ops):
    t = CurvatureTarget(-1.0, 0.3)
    rng = np.random.default_rng(11)
    u = rng.uniform(-0.5, 0.5, coarse_ops.mesh.vertex_count)
    F = residual(coarse_ops, u, t)
    d = rng.standard_normal(u.size)
    eps = 1e-5
    fd = (discrete_energy(coarse_ops, u + eps * d, t) - discrete_energy(coarse_ops, u - eps * d, t)) / (2 * eps)
    assert math.isclose(fd, F @ d, rel_tol=1e-7, abs_tol=1e-9)


def test_energy_at_zero_is_half_area(torus_ops):
    E = discrete_energy(torus_ops, ConformalState.zeros(torus_ops.mesh.vertex_count), CurvatureTarget(-1, 0))
    assert math.isclose(E, 0.5 * torus_ops.base_area, rel_tol=1e-13)


def test_energy_descent_history_monotone(torus_ops):
    rep = solve(torus_ops, CurvatureTarget(-1, -1), None, SolverOptions(line_search="energy-descent"))
    h = rep.energy_history
    assert len(h) >= 2
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(h, h[1:]))


# ---- admissibility --------------------------------------------------------


@pytest.mark.parametrize("k, c, ok", [(-1, 0.999, True), (-1, 1.0, False), (0, -1, True), (0, 0, False),
                                      (0.5, -1, False), (-4, 1.9, True), (-4, 2.0, False),
                                      (float("nan"), -1, False)])
def test_admissible_region(k, c, ok):
    assert is_admissible(k, c) is ok


def test_inadmissible_rejected(torus_ops):
    with pytest.raises(InadmissibleTarget):
        CurvatureTarget(0.0, 0.0)
    with pytest.raises(InadmissibleTarget):
        solve(torus_ops, CurvatureTarget(-1.0, 1.0, strict=False))


def test_positive_chi_rejected():
    ops = build_operators(generate_flat_disk())
    with pytest.raises(InadmissibleTarget, match="chi"):
        solve(ops, CurvatureTarget(-1, -1))


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(line_search="gradient")
    with pytest.raises(ValueError):
        SolverOptions(tol_residual=0.0)
    with pytest.raises(ValueError):
        SolverOptions(continuation_step_c=0.0)


# ---- solutions ------------------------------------------------------------


@pytest.mark.parametrize("k, c", [(-1, -1), (-1, 0), (-0.25, -3), (-4, 0.5), (0, -2), (-1, 0.5)])
def test_solution_gauss_bonnet(torus_ops, k, c):
    rep = solve(torus_ops, CurvatureTarget(k, c))
    assert rep.converged
    assert rep.residual_inf_norm <= SolverOptions().tolerance(torus_ops)
    assert gb_gap(torus_ops, rep) < 1e-9


def test_flat_length_is_two_pi(torus_ops):
    rep = solve(torus_ops, CurvatureTarget(0, -1))
    assert math.isclose(rep.boundary_length, 2 * math.pi, rel_tol=1e-10)
    assert rep.area > 0


@pytest.mark.parametrize("lam", [2.0, 0.5, 3.0])
def test_scaling_identity(torus_ops, lam):
    t = CurvatureTarget(-1.0, -0.7)
    a = solve(torus_ops, t)
    b = solve(torus_ops, t.scaled(lam))
    assert np.abs(b.state.u - a.state.u - math.log(lam)).max() < 1e-9
    assert math.isclose(b.boundary_length, lam * a.boundary_length, rel_tol=1e-10)
    assert math.isclose(b.area, lam ** 2 * a.area, rel_tol=1e-10)


def test_scaling_reaches_positive_c(torus_ops):
    # (-4, 1) is the lambda = 1/2 image of (-1, 0.5)
    a = solve(torus_ops, CurvatureTarget(-1.0, 0.5))
    b = solve(torus_ops, CurvatureTarget(-4.0, 1.0))
    assert math.isclose(b.boundary_length, 0.5 * a.boundary_length, rel_tol=1e-9)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 2.0))
def test_uniqueness_random_starts(coarse_ops, seed, scale):
    t = CurvatureTarget(-1.0, -1.5)
    ref = solve(coarse_ops, t)
    init = np.random.default_rng(seed).uniform(-scale, scale, coarse_ops.mesh.vertex_count)
    assert np.abs(solve(coarse_ops, t, init).state.u - ref.state.u).max() < 1e-9


def test_warm_start_positive_c(torus_ops):
    cold = solve(torus_ops, CurvatureTarget(-1.0, 0.6))
    assert cold.continuation_steps > 0
    warm = solve(torus_ops, CurvatureTarget(-1.0, 0.62), cold.state)
    assert warm.continuation_steps == 0
    assert warm.boundary_length > cold.boundary_length


def test_pointwise_monotone_in_c(torus_ops):
    lo = solve(torus_ops, CurvatureTarget(-1.0, -0.5))
    hi = solve(torus_ops, CurvatureTarget(-1.0, 0.2))
    assert np.all(hi.state.u > lo.state.u)


@pytest.mark.parametrize("c", [-2.0, 0.0, 0.3])
def test_length_derivative_matches_fd(torus_ops, c):
    base = solve(torus_ops, CurvatureTarget(-1.0, c))
    w = solve_linearized(torus_ops, base)
    assert np.all(w > 0)
    dL = length_derivative(torus_ops, base, w)
    d = 1e-4
    Lp = solve(torus_ops, CurvatureTarget(-1.0, c + d), base.state).boundary_length
    Lm = solve(torus_ops, CurvatureTarget(-1.0, c - d), base.state).boundary_length
    assert dL > 0
    assert math.isclose(dL, (Lp - Lm) / (2 * d), rel_tol=1e-6)


def test_continuation_close_to_critical(torus_ops):
    rep = continuation_solve(torus_ops, CurvatureTarget(-1.0, 0.99))
    assert rep.converged
    assert gb_gap(torus_ops, rep) < 1e-8
    assert rep.boundary_length > solve(torus_ops, CurvatureTarget(-1.0, 0.5)).boundary_length


def test_continuation_rejects_nonpositive_c(torus_ops):
    with pytest.raises(InadmissibleTarget):
        continuation_solve(torus_ops, CurvatureTarget(-1.0, -0.5))


def test_nonconvergence_carries_report(torus_ops):
    with pytest.raises(NonConvergence) as info:
        solve(torus_ops, CurvatureTarget(-1, -1), None, SolverOptions(max_newton_iters=1, tol_residual=1e-300))
    assert info.value.report is not None
    assert not info.value.report.converged


def test_blowup_guard_trips(torus_ops):
    opts = SolverOptions(blowup_factor=1.5)
    with pytest.raises((NearBlowup, NonConvergence)):
        solve(torus_ops, CurvatureTarget(-1.0, 0.9), None, opts)


def test_report_json_schema(coarse_ops):
    rep = solve(coarse_ops, CurvatureTarget(-1, -1))
    data = json.loads(rep.to_json())
    assert set(data) == {"k", "c", "iterations", "residual", "area", "length", "converged",
                         "continuation_steps", "u"}
    assert len(data["u"]) == coarse_ops.mesh.vertex_count
    assert data["length"] == rep.boundary_length  # 17 significant digits round-trip exactly
    assert json.loads(dumps({"x": 0.1})) == {"x": 0.1}
