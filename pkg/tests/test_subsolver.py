import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance
from hybridcran import model, optimizer, wmmse
from hybridcran.exceptions import InfeasibleStartError, InvalidParameterError
from hybridcran.model import DigitalDesign, RfDesign, SystemConfig
from hybridcran.subproblems import DigitalProblem, RfProblem
from hybridcran.subsolver import (BlockDiagonal, SmoothProblem, SolveOptions, finite_difference_gradient,
                                  gradient_error, maximize, split_constraints)


def ball_problem(c, with_hessian=True):
    c = np.asarray(c, dtype=float)
    return SmoothProblem(
        objective=lambda x: (-np.sum((x - c) ** 2), -2.0 * (x - c)),
        constraints=[lambda x: (x @ x - 1.0, 2.0 * x)],
        x0=np.zeros_like(c),
        hessian=(lambda x, a, w: -2.0 * a * np.eye(c.size) + 2.0 * w[0] * np.eye(c.size)) if with_hessian else None,
    )


def log_problem(x0=5.0):
    def objective(x):
        if x[0] <= 0:
            return -np.inf, np.array([np.nan])
        return float(np.log(x[0]) - x[0]), np.array([1.0 / x[0] - 1.0])

    return SmoothProblem(objective, [lambda x: (-x[0], np.array([-1.0])), lambda x: (x[0] - 10.0, np.array([1.0]))],
                         np.array([x0]), hessian=lambda x, a, w: np.array([[-a / x[0] ** 2]]))


# -- textbook problems -------------------------------------------------------------------

@pytest.mark.parametrize("with_hessian", [True, False])
def test_projection_onto_ball(with_hessian):
    c = np.array([3.0, -4.0, 1.0])
    res = maximize(ball_problem(c, with_hessian))
    assert np.allclose(res.x, c / np.linalg.norm(c), atol=1e-6)
    assert res.max_constraint <= 1e-9
    assert res.gap < SolveOptions().kkt_tol


def test_interior_maximizer():
    res = maximize(log_problem())
    assert res.x[0] == pytest.approx(1.0, abs=1e-6)


def test_infeasible_start_raises():
    with pytest.raises(InfeasibleStartError):
        maximize(log_problem(x0=11.0))
    p = ball_problem([2.0, 0.0])
    p.x0 = np.array([1.0, 0.0])  # on the boundary, not strictly inside
    with pytest.raises(InfeasibleStartError):
        maximize(p)


def test_unconstrained_problem_single_stage():
    p = SmoothProblem(lambda x: (-np.sum((x - 1) ** 2), -2 * (x - 1)), [], np.zeros(2),
                      hessian=lambda x, a, w: -2 * a * np.eye(2))
    res = maximize(p)
    assert res.stages == 1 and res.gap == 0.0
    assert np.allclose(res.x, 1.0, atol=1e-8)


@pytest.mark.parametrize("kwargs", [dict(kkt_tol=0.0), dict(barrier_mu=1.0), dict(barrier_t0=-1.0),
                                    dict(max_newton_iters=0)])
def test_options_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        SolveOptions(**kwargs)


# -- BlockDiagonal ------------------------------------------------------------------------

def test_block_diagonal_matches_dense(rng):
    a = rng.standard_normal((3, 3))
    a = a @ a.T + np.eye(3)
    b = np.array([[2.0]])
    bd = BlockDiagonal([(0, a, 2), (6, b, 3)], 9)
    dense = bd.toarray()
    assert np.array_equal(dense[:3, :3], a) and np.array_equal(dense[3:6, 3:6], a)
    assert np.all(dense[:3, 3:] == 0) and np.all(np.diag(dense)[6:] == 2.0)
    rhs = rng.standard_normal((9, 4))
    factors = bd.factor()
    assert np.allclose(BlockDiagonal.solve(factors, rhs), np.linalg.solve(dense, rhs), atol=1e-12)
    assert np.allclose(BlockDiagonal.solve(factors, rhs[:, 0]), np.linalg.solve(dense, rhs[:, 0]), atol=1e-12)


def test_block_diagonal_coverage_checked():
    with pytest.raises(InvalidParameterError):
        BlockDiagonal([(0, np.eye(2), 1)], 3)


# -- subproblem instances --------------------------------------------------------------------

def feasible_digital(seed, rho=0.0, **kw):
    r = np.random.default_rng(seed)
    cfg, h, rf, _ = random_instance(r, **kw)
    dig = optimizer.init_digital(rf, h, cfg)
    state = wmmse.tight_state(rf, dig, h, rho=rho)
    return cfg, h, rf, dig, DigitalProblem(rf, h, state, cfg)


def feasible_rf(seed):
    r = np.random.default_rng(seed)
    cfg, h, rf, _ = random_instance(r)
    dig = optimizer.init_digital(rf, h, cfg)
    state = wmmse.tight_state(rf, dig, h, with_sigma=False)
    start = optimizer._interior_start(rf, dig, cfg)
    return RfProblem(dig, h, state, cfg), start


def lagrangian_hessian_error(problem, x, a, w, step=1e-6):
    def lag_grad(y):
        _, g = problem.objective(y)
        _, jac = problem.constraints(y)
        return a * g + jac.T @ w

    hess = problem.hessian(x, a, w)
    hess = hess.toarray() if isinstance(hess, BlockDiagonal) else hess
    fd = np.array([(lag_grad(x + step * e) - lag_grad(x - step * e)) / (2 * step) for e in np.eye(x.size)]).T
    return np.abs(hess - fd).max() / max(np.abs(hess).max(), 1.0)


@pytest.mark.parametrize("rho", [0.0, 0.3])
def test_digital_derivatives(rho):
    _, _, _, dig, problem = feasible_digital(1, rho)
    x = problem.pack(dig) * 1.05
    assert gradient_error(problem.objective, x) < 1e-5
    for j, con in enumerate(split_constraints(problem.problem(x), x)):
        assert gradient_error(con, x) < 1e-5, j
    w = np.random.default_rng(2).uniform(0.1, 1.0, 4)
    assert lagrangian_hessian_error(problem, x, -1.3, w) < 1e-6


def test_rf_derivatives():
    problem, start = feasible_rf(3)
    x = problem.pack(start)
    assert gradient_error(problem.objective, x) < 1e-5
    for con in split_constraints(problem.problem(x), x)[:4]:
        assert gradient_error(con, x) < 1e-5
    w = np.random.default_rng(4).uniform(0.1, 1.0, 2 + problem.nc)
    assert lagrangian_hessian_error(problem, x, -0.7, w) < 1e-6


def test_digital_objective_is_surrogate():
    cfg, h, rf, dig, problem = feasible_digital(5, rho=0.2)
    state = wmmse.tight_state(rf, dig, h, rho=0.2)
    state.sigma = state.sigma * 1.1
    problem = DigitalProblem(rf, h, state, cfg)
    assert problem.objective(problem.pack(dig))[0] == pytest.approx(
        wmmse.surrogate_objective(rf, dig, h, state, cfg), abs=1e-11)
    f, g = problem.values(problem.pack(dig))
    assert f == pytest.approx(problem.objective(problem.pack(dig))[0], abs=1e-12)
    assert np.allclose(g[:2] + cfg.power, model.transmit_powers(rf, dig))


def test_finite_difference_helper():
    grad = finite_difference_gradient(lambda x: float(np.sum(np.sin(x))), np.array([0.1, 1.0, 2.0]))
    assert np.allclose(grad, np.cos([0.1, 1.0, 2.0]), atol=1e-9)


# -- solver properties on subproblems ----------------------------------------------------------------

@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_stage_values_nondecreasing_and_iterates_feasible(seed):
    _, _, _, dig, problem = feasible_digital(seed)
    p = problem.problem(problem.pack(dig))
    worst = []

    def audit(x, t):
        g, _ = p.constraint_values(x)
        worst.append(g.max())

    res = maximize(p, callback=audit)
    assert max(worst) < 0
    assert np.all(np.diff(res.stage_values) >= -1e-12)
    assert res.value >= p.objective(p.x0)[0] - 1e-12
    assert res.max_constraint <= 1e-9
    assert res.gap < SolveOptions().kkt_tol


def test_dense_and_block_hessians_agree():
    _, _, _, dig, problem = feasible_digital(9)
    p = problem.problem(problem.pack(dig))
    dense = SmoothProblem(p.objective, p.constraints, p.x0,
                          lambda x, a, w: problem.hessian(x, a, w).toarray(), p.values)
    assert isinstance(problem.hessian(p.x0, -1.0, np.ones(4)), BlockDiagonal)
    a, b = maximize(p), maximize(dense)
    assert a.value == pytest.approx(b.value, abs=1e-8)


def test_difference_hessian_fallback_matches_analytic():
    _, _, _, dig, problem = feasible_digital(11, n_rrh=1, n_ue=1, n_ant=2, n_rf=1)
    p = problem.problem(problem.pack(dig))
    newton = maximize(p)
    p.hessian = None
    fallback = maximize(p)
    assert fallback.value == pytest.approx(newton.value, abs=1e-8)


def test_scalar_digital_problem_grid_oracle():
    """One RRH, UE, antenna and RF chain: compare with a 10^4-point grid over omega.

    For each omega the objective is a concave quadratic in |v| (the phase
    is aligned with the linear term), maximized in closed form under the
    |v|^2 bounds implied by the power and fronthaul constraints.
    """
    cfg = SystemConfig(n_rrh=1, n_ue=1, n_ant=1, n_rf=1, power=3.0, capacity=1.5)
    h = np.array([[[0.8 - 0.6j]]])
    rf = RfDesign(np.array([[[np.exp(0.4j)]]]))
    dig = DigitalDesign(np.array([[0.5 + 0.2j]]), np.array([[[0.9]]], dtype=complex))
    state = wmmse.tight_state(rf, dig, h)
    problem = DigitalProblem(rf, h, state, cfg)
    res = maximize(problem.problem(problem.pack(dig)))

    a, b, const = problem.a[0, 0].real, abs(problem.b[0, 0]), problem.const
    sigma = state.sigma[0, 0, 0].real
    omegas = np.linspace(1e-4, cfg.power[0], 10_000)
    cap_bound = sigma * np.log(2) * (cfg.capacity[0] + 1 / np.log(2) + np.log2(omegas) - np.log2(sigma)) - omegas
    bound = np.minimum(cfg.power[0] - omegas, cap_bound)
    ok = bound >= 0
    mag = np.minimum(b / a, np.sqrt(bound[ok]))
    values = const + 2 * b * mag - a * mag ** 2 - a * omegas[ok]
    assert res.value == pytest.approx(values.max(), abs=1e-3)
    assert res.value >= values.max() - 10 * res.gap
