"""Direct transcription: adjoint exactness, baselines, solver agreement."""

import math
from functools import lru_cache

import numpy as np
import pytest

from cruiseopt.direct import (
    DirectProblem,
    solve_direct,
    compare,
    _DirectContext,
    _bow_start,
    _lagrangian,
)
from cruiseopt.hazards import EllipseHazard
from cruiseopt.ocp import solve
from cruiseopt.performance import B767_300ER, CruiseAero
from cruiseopt.scenario import Scenario, Weights, load_scenario
from cruiseopt.windfield import Uniform, Vortex, WindField


@lru_cache(maxsize=None)
def vortex_case():
    scenario = load_scenario("vortex_pair")
    return scenario, solve(scenario), solve_direct(DirectProblem(scenario,
                                                                 nodes=120))


# -- problem validation ---------------------------------------------------------


def test_problem_rejects_bad_setup():
    scenario = load_scenario("vortex_pair")
    with pytest.raises(ValueError):
        DirectProblem(scenario, nodes=9)
    with pytest.raises(ValueError):
        DirectProblem(scenario, coarse_nodes=5)
    with pytest.raises(ValueError):
        DirectProblem(scenario, constraint_tolerance=0.0)
    with pytest.raises(ValueError):
        DirectProblem(scenario, outer_iterations=0)


# -- gradient exactness ---------------------------------------------------------


def test_adjoint_matches_finite_differences():
    scenario = Scenario(
        B767_300ER, altitude=10000.0, initial_mass=130000.0,
        start=(0.0, 0.0), goal=(8.0e5, 3.0e5), weights=Weights(1.0, -0.001),
        wind=WindField([Vortex(1.5e7, 3.0e5, 2.0e5, 1.0e5), Uniform(8.0, -3.0)]),
        hazards=(EllipseHazard((4.0e5, 1.5e5), (9.0e4, 5.0e4), 0.25, 0.8,
                               "soft"),))
    ctx = _DirectContext(scenario)
    n = 25
    u = _bow_start(ctx, n, 0.15)
    rng = np.random.default_rng(3)
    u[:n] *= rng.uniform(0.93, 1.0, n)
    u[n:2 * n] += rng.uniform(-0.08, 0.08, n)
    mu = np.array([0.4, -0.7])
    eta = rng.uniform(0.0, 0.5, 2 * n)
    rho = 25.0
    _, grad = _lagrangian(ctx, u, n, mu, eta, rho)
    for i in list(range(0, 2 * n, 5)) + [2 * n]:
        h = 3e-7 * max(1.0, abs(u[i]))
        up, um = u.copy(), u.copy()
        up[i] += h
        um[i] -= h
        fd = (_lagrangian(ctx, up, n, mu, eta, rho)[0]
              - _lagrangian(ctx, um, n, mu, eta, rho)[0]) / (2.0 * h)
        assert math.isclose(grad[i], fd, rel_tol=1e-5, abs_tol=1e-10)


# -- analytic baseline ----------------------------------------------------------


def test_zero_wind_minimum_time_is_analytic():
    scenario = Scenario(B767_300ER, altitude=10000.0, initial_mass=115000.0,
                        start=(0.0, 0.0), goal=(8.0e5, 0.0),
                        weights=Weights(1.0, 0.0), wind=WindField([]))
    aero = CruiseAero(B767_300ER, scenario.altitude)
    v_max = scenario.bounds.mach_max * aero.sound_speed
    result = solve_direct(DirectProblem(scenario, nodes=60))
    tf_star = 8.0e5 / v_max
    assert result.converged
    assert abs(result.objective - tf_star) / tf_star <= 5e-3
    assert result.max_violation <= 1e-6
    assert result.violation_history[-1] <= 1e-6
    assert len(result.violation_history) >= 2


# -- mesh refinement ------------------------------------------------------------


def test_mesh_refinement_is_self_consistent():
    scenario, _, fine = vortex_case()
    coarse = solve_direct(DirectProblem(scenario, nodes=60))
    assert coarse.converged and fine.converged
    gap = abs(coarse.objective - fine.objective) / abs(fine.objective)
    assert gap <= 5e-4


# -- throttle path bound --------------------------------------------------------


def test_heavy_route_rides_the_throttle_cap():
    scenario = Scenario(B767_300ER, altitude=10000.0, initial_mass=150000.0,
                        start=(0.0, 0.0), goal=(8.0e5, 3.0e5),
                        weights=Weights(1.0, -0.001), wind=WindField([]))
    result = solve_direct(DirectProblem(scenario, nodes=60))
    assert result.converged
    pi = result.trajectory.throttle
    cap = scenario.bounds.throttle_max
    assert np.max(pi) <= cap + 1e-6
    assert np.mean(pi > cap - 1e-3) > 0.9
    # capped cruise cannot reach the Mach ceiling
    v_max = (scenario.bounds.mach_max
             * CruiseAero(B767_300ER, scenario.altitude).sound_speed)
    assert np.max(result.trajectory.v) < v_max - 1.0


# -- agreement with the indirect solver ------------------------------------------


def test_matches_the_indirect_solver_on_interior_arcs():
    _, surrogate, direct = vortex_case()
    assert surrogate.converged and direct.converged
    report = compare(surrogate, direct)
    assert report.relative_objective_error <= 1e-3
    assert report.rms_speed_gap <= 1.0
    assert report.rms_heading_gap <= 0.01


def test_compare_report_serializes():
    _, surrogate, direct = vortex_case()
    report = compare(surrogate, direct)
    doc = report.to_dict()
    assert doc["direct_objective"] == direct.objective
    assert doc["surrogate_objective"] == surrogate.objective
    assert doc["relative_objective_error"] == report.relative_objective_error
    assert doc["time_ratio"] > 0.0
    assert set(doc) == {"relative_objective_error", "time_ratio",
                        "rms_speed_gap_mps", "rms_heading_gap_rad",
                        "surrogate_objective", "direct_objective",
                        "surrogate_elapsed_s", "direct_elapsed_s"}


def test_solution_summary_reports_the_run():
    _, _, direct = vortex_case()
    doc = direct.summary()
    assert doc["objective"] == direct.objective
    assert doc["converged"] is True
    assert doc["evaluations"] > 0
    assert doc["elapsed_s"] > 0.0
    tr = direct.trajectory
    assert set(tr.arc) == {"direct"}
    assert np.all(np.isnan(tr.lam_x))
    assert tr.n_nodes == 121
