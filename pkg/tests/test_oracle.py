import numpy as np
import pytest

from platoon_nash import _kernels, oracle
from platoon_nash.closed_form import solve_pf
from platoon_nash.general_game import build_info_matrix, solve_general
from platoon_nash.oracle import (
    OracleDivergence,
    certify_nash,
    corrupted,
    integrate_forward,
    player_cost,
    shoot_lambda0,
    solve_oracle,
    tent_basis,
)
from platoon_nash.solve import solve

TANH10 = 0.9999999958776927


def test_equilibrium_is_constant():
    A = np.array([[1.0, 0.0], [0.5, 2.0]])
    d = np.array([-0.2, -0.3])
    run = integrate_forward(A, -d, np.zeros(2), 10.0, omega=A @ d)
    np.testing.assert_allclose(run.y, np.tile(-d, (run.t.size, 1)), atol=1e-15)
    np.testing.assert_allclose(run.lambda_tf, 0.0, atol=1e-15)


def test_scalar_analytic_solution():
    t_f = 10.0
    run = integrate_forward(np.eye(1), [1.0], [np.tanh(t_f)], t_f)
    np.testing.assert_allclose(run.y[:, 0], np.cosh(t_f - run.t) / np.cosh(t_f), atol=1e-9)
    assert abs(run.lambda_tf[0]) < 1e-9
    assert run.steps == 2000 and run.order == 4


def test_scalar_shooting():
    assert shoot_lambda0(np.eye(1), [1.0], [0.0], 10.0)[0] == pytest.approx(TANH10, abs=1e-12)


def test_formation_shooting():
    A = np.array([[1.0, 0.0], [0.5, 2.0]])
    d = np.array([-0.2, -0.3])
    np.testing.assert_allclose(shoot_lambda0(A, -d, d, 10.0), 0.0, atol=1e-14)


def test_pf_forward_run_matches_closed_form(scenarios):
    sc = scenarios["pf_s1"]
    info = build_info_matrix(sc)
    run = integrate_forward(info, sc.y0, solve_general(sc).lambda0, sc.t_f)
    y = solve_pf(sc).evaluate(run.t)[0]
    assert np.max(np.abs(run.y - y)) < 1e-7
    assert run.residual < 1e-10


@pytest.mark.parametrize("name", ["pf_s1", "pf_s2", "tpf_s3", "tpf_s4", "apf", "lf"])
def test_shooting_matches_general(scenarios, name):
    sc = scenarios[name]
    lam = shoot_lambda0(build_info_matrix(sc).A, sc.y0, sc.d, sc.t_f)
    np.testing.assert_allclose(lam, solve_general(sc).lambda0, atol=1e-7)


def test_oracle_solution(scenarios):
    sc = scenarios["apf"]
    orc = solve_oracle(sc)
    assert orc.segments > 1
    assert np.max(np.abs(orc.run.lambda_tf)) < 1e-8
    np.testing.assert_array_equal(orc.y0, sc.y0)
    t = np.linspace(0, sc.t_f, 997)
    y, u = orc.evaluate(t)
    yg, ug = solve_general(sc).evaluate(t)
    assert np.max(np.abs(y - yg)) < 1e-7 and np.max(np.abs(u - ug)) < 1e-7
    assert orc.sample(5).t[-1] == sc.t_f


def test_rk4_fourth_order(scenarios):
    sc = scenarios["pf_s1"]
    t = np.linspace(0, sc.t_f, 1000)
    ref = solve_pf(sc).evaluate(t)[0]
    errs = [np.max(np.abs(solve_oracle(sc, steps=s, segments=1).evaluate(t)[0] - ref)) for s in (120, 240)]
    assert errs[0] / errs[1] >= 8.0


def test_too_few_steps():
    with pytest.raises(ValueError):
        integrate_forward(np.eye(1), [1.0], [0.0], 1.0, steps=50)


def test_step_refinement_on_nonfinite(monkeypatch):
    real = _kernels.rk4_affine
    calls = []

    def flaky(M, c, z0, h, steps):
        calls.append(steps)
        out = real(M, c, z0, h, steps)
        if len(calls) == 1:
            out[-1] = np.nan
        return out

    monkeypatch.setattr(_kernels, "rk4_affine", flaky)
    run = integrate_forward(np.eye(1), [1.0], [0.0], 1.0, steps=200)
    assert calls == [200, 400]
    assert run.steps == 400 and np.all(np.isfinite(run.y))


def test_divergence_raises(monkeypatch):
    monkeypatch.setattr(_kernels, "rk4_affine", lambda M, c, z0, h, steps: np.full((steps + 1, M.shape[0]), np.inf))
    with pytest.raises(OracleDivergence):
        integrate_forward(np.eye(1), [1.0], [0.0], 1.0)


def test_plan_keeps_steps_divisible(scenarios):
    steps, K = oracle._plan(build_info_matrix(scenarios["apf"]), 10.0, 2001, None)
    assert steps % K == 0 and steps >= 2001


# -- Nash certification ----------------------------------------------------------


def test_tent_basis():
    t = np.linspace(0, 10, 2101)
    B = tent_basis(t, 10.0, 20)
    assert B.shape == (20, 2101)
    np.testing.assert_allclose(B.max(axis=1), 1.0)
    assert np.all(B[:, 0] == 0) and np.all(B[:, -1] == 0)


def test_zero_bump_changes_nothing(scenarios):
    sc = scenarios["pf_s1"]
    rep = certify_nash(sc, solve_pf(sc), 2, n_bumps=4, eps=0.0)
    np.testing.assert_array_equal(rep.deltas, 0.0)


@pytest.mark.parametrize("i", [1, 2, 3, 4, 5])
def test_pf_scenario_one_is_nash(scenarios, i):
    sc = scenarios["pf_s1"]
    rep = certify_nash(sc, solve_pf(sc), i)
    assert rep.deltas.size == 40
    assert rep.passed, rep.min_delta


@pytest.mark.parametrize("name", ["tpf_s3", "apf", "lf"])
def test_corrupted_solution_rejected(scenarios, name):
    sc = scenarios[name]
    bad = corrupted(solve_general(sc))
    worst = min(certify_nash(sc, bad, i).min_delta for i in range(1, sc.n + 1))
    assert worst < -1e-4


def test_quadrature_converged(scenarios):
    """Richardson check of the 1e-6 budget: deviations barely move when M doubles."""
    sc = scenarios["tpf_s3"]
    sol, _ = solve(sc)
    coarse = certify_nash(sc, sol, 3, M=4001)
    fine = certify_nash(sc, sol, 3, M=8001)
    assert np.max(np.abs(coarse.deltas - fine.deltas)) < 1e-2 * coarse.tolerance
