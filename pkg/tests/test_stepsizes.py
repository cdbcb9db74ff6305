import math

import numpy as np
import pytest

from tgpopt.directions import Rgd, build_direction
from tgpopt.manifolds import ManifoldPoint, Stiefel
from tgpopt.problems import EigenvalueProblem
from tgpopt.stepsizes import (
    ArmijoParams,
    NonDescentError,
    NonmonotoneState,
    adapt_trial,
    armijo_search,
    fixed_stepsize_bound,
    nonmonotone_eta_bound,
    nonmonotone_search,
)


def _sphere_setup():
    problem = EigenvalueProblem(np.diag([3.0, 3.0, 2.0]))
    x = ManifoldPoint(problem.manifold, np.full((3, 1), 1.0 / np.sqrt(3.0)))
    egrad = problem.egrad(x.value)
    rgrad = problem.manifold.riemannian_gradient(x.value, egrad)
    direction = build_direction(Rgd(), x, egrad)
    return problem, x, egrad, rgrad, direction


def test_armijo_params_validation():
    with pytest.raises(ValueError):
        ArmijoParams(gamma=0.0)
    with pytest.raises(ValueError):
        ArmijoParams(beta=1.0)
    with pytest.raises(ValueError):
        ArmijoParams(trial_lo=2.0, trial_hi=1.0)
    p = ArmijoParams(trial0=0.5)
    assert p.trial_hi == 0.5


def test_armijo_rejects_non_descent():
    problem, x, egrad, rgrad, direction = _sphere_setup()
    params = ArmijoParams()
    with pytest.raises(NonDescentError):
        armijo_search(x, problem.cost(x.value), direction, -rgrad, problem.cost,
                      params, 1.0)


def test_armijo_stationary_precondition_fails():
    # at an exact eigenvector the gradient vanishes and the slope is zero
    problem = EigenvalueProblem(np.diag([2.0, 1.0]))
    x = ManifoldPoint(problem.manifold, np.array([[0.0], [1.0]]))
    egrad = problem.egrad(x.value)
    rgrad = problem.manifold.riemannian_gradient(x.value, egrad)
    direction = build_direction(Rgd(), x, egrad)
    with pytest.raises(NonDescentError):
        armijo_search(x, problem.cost(x.value), direction, rgrad, problem.cost,
                      ArmijoParams(), 1.0)


def test_armijo_tiny_trial_accepts_immediately():
    problem, x, egrad, rgrad, direction = _sphere_setup()
    params = ArmijoParams(trial_lo=1e-12)
    out = armijo_search(x, problem.cost(x.value), direction, rgrad, problem.cost,
                        params, 1e-6)
    assert out.backtracks == 0
    assert out.tau == 1e-6
    assert not out.exhausted


def test_armijo_matches_exhaustive_candidate_oracle():
    # oracle: evaluate f(P(x - tau H)) over tau in {1, 1/2, 1/4, ...} directly
    problem, x, egrad, rgrad, direction = _sphere_setup()
    params = ArmijoParams(gamma=0.5, beta=0.5)
    f0 = problem.cost(x.value)
    slope = float(np.sum(rgrad * direction.tangent))

    expected_tau = None
    expected_backtracks = None
    for i in range(params.max_backtracks + 1):
        tau = params.beta**i
        z = problem.manifold.project(x.value - tau * direction.full).point.value
        if problem.cost(z) - f0 <= -params.gamma * tau * slope:
            expected_tau, expected_backtracks = tau, i
            break

    out = armijo_search(x, f0, direction, rgrad, problem.cost, params, 1.0)
    assert out.tau == expected_tau
    assert out.backtracks == expected_backtracks
    # sufficient decrease holds as evaluated
    assert out.f_next - f0 <= -params.gamma * out.tau * slope


def test_armijo_exhaustion_flag():
    from tgpopt.directions import Direction

    problem, x, egrad, rgrad, _ = _sphere_setup()
    # an over-scaled direction demands more decrease than the cost can give,
    # so every candidate fails and the last one is returned flagged
    big = Direction(x, 1e3 * rgrad, 1e3 * rgrad, np.zeros_like(rgrad))
    params = ArmijoParams(gamma=0.5, beta=0.5, trial0=1.0, max_backtracks=2)
    out = armijo_search(x, problem.cost(x.value), big, rgrad, problem.cost,
                        params, 1.0)
    assert out.exhausted
    assert out.backtracks == 2
    assert out.tau == pytest.approx(0.25)


def test_armijo_trial_outside_bounds_rejected():
    problem, x, egrad, rgrad, direction = _sphere_setup()
    with pytest.raises(ValueError):
        armijo_search(x, problem.cost(x.value), direction, rgrad, problem.cost,
                      ArmijoParams(), 2.0)


def test_nonmonotone_recursion_hand_rolled_oracle():
    # f-sequence (10, 8, 9) with eta = 0.5:
    # q = (1, 1.5, 1.75), c = (10, 26/3, (0.75 * 26/3 + 9) / 1.75)
    state = NonmonotoneState.start(10.0, 0.5)
    assert (state.q, state.c) == (1.0, 10.0)
    state = state.advance(8.0)
    assert state.q == pytest.approx(1.5)
    assert state.c == pytest.approx(26.0 / 3.0)
    state = state.advance(9.0)
    assert state.q == pytest.approx(1.75)
    assert state.c == pytest.approx((0.75 * 26.0 / 3.0 + 9.0) / 1.75)


def test_nonmonotone_eta_zero_reference_is_cost():
    state = NonmonotoneState.start(4.0, 0.0)
    for f in (3.0, 2.5, 2.9):
        state = state.advance(f)
        assert state.c == f
        assert state.q == 1.0


def test_nonmonotone_matches_armijo_at_eta_zero():
    problem, x, egrad, rgrad, direction = _sphere_setup()
    params = ArmijoParams()
    f0 = problem.cost(x.value)
    out_a = armijo_search(x, f0, direction, rgrad, problem.cost, params, 1.0)
    out_n, _ = nonmonotone_search(x, direction, rgrad, problem.cost, params, 1.0,
                                  NonmonotoneState.start(f0, 0.0))
    assert out_a.tau == out_n.tau
    assert out_a.f_next == out_n.f_next
    assert np.array_equal(out_a.next_point.value, out_n.next_point.value)


def test_fixed_stepsize_bound_formula():
    assert fixed_stepsize_bound(1.0, 1.0, 2.0, 1.0, 0.0, 1.0, 0.5) == (0.0, 0.5)
    lo, hi = fixed_stepsize_bound(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5)
    assert (lo, hi) == (0.0, 0.5)
    with pytest.raises(ValueError):
        fixed_stepsize_bound(-1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        fixed_stepsize_bound(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.5)


def test_adapt_trial_rule():
    assert adapt_trial(1.0, False, 1.0) == 1.0       # min(1.1, 1.0)
    assert adapt_trial(1.0, True, 1.0) == pytest.approx(0.9)
    assert adapt_trial(0.5, False, 1.0) == pytest.approx(0.55)
    # clamped to [trial_lo, trial_hi]
    assert adapt_trial(1e-11, True, 1.0, trial_lo=1e-10) == 1e-10
    with pytest.raises(ValueError):
        adapt_trial(0.0, False, 1.0)


def test_nonmonotone_eta_bound_diagnostic():
    # vacuous when the reference gap is too small
    assert nonmonotone_eta_bound(1.0, 1.0, 1.0, 0) == math.inf
    # finite when (c - f_next)(k+1)^4 > 1
    val = nonmonotone_eta_bound(1.0, 2.0, 1.0, 1)
    assert val == pytest.approx(1.0 / (1.0 * (1.0 * 16.0 - 1.0)))
