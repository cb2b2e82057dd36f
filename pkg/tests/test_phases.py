import numpy as np
import pytest

from starmec.harness.instances import random_instance
from starmec.harness.oracles import fd_gradient_oracle
from starmec.phases import TWO_PI, grad_theta, phase_objective, solve_phases


def test_zero_amplitudes_leave_phases_alone():
    ch, params, state = random_instance(0, 4, 3, 2, 2)
    st = state.with_(amplitudes=np.zeros(8))
    np.testing.assert_array_equal(grad_theta(st.star.phases, st, ch, params), 0.0)
    res = solve_phases(st.star.phases, st, ch, params)
    np.testing.assert_allclose(res.theta, st.star.phases)


def test_periodic_in_each_angle():
    ch, params, state = random_instance(1)
    th = state.star.phases
    shift = np.zeros_like(th)
    shift[2] = TWO_PI
    assert phase_objective(th + shift, state, ch, params) == pytest.approx(
        phase_objective(th, state, ch, params), rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_gradient_against_finite_differences(seed):
    ch, params, state = random_instance(seed, 5, 3, 2, 2)
    th = state.star.phases
    fd = fd_gradient_oracle(lambda x: phase_objective(x, state, ch, params), th, h=1e-6)
    np.testing.assert_allclose(grad_theta(th, state, ch, params), fd, rtol=1e-5, atol=1e-9)


def test_single_element_single_user_grid_oracle():
    ch, params, state = random_instance(5, 1, 3, 1, 0)
    state = state.with_(amplitudes=np.array([1.0, 0.0]))
    grid = np.linspace(0, TWO_PI, 100_000, endpoint=False)
    best = max(phase_objective(np.array([t]), state, ch, params) for t in grid)
    res = solve_phases(np.array([0.3]), state, ch, params, tol=1e-14, max_iter=5000)
    assert res.value >= best - 1e-9 * abs(best)


def test_ascent_is_monotone_and_wrapped():
    ch, params, state = random_instance(6, 8, 4, 2, 2)
    res = solve_phases(state.star.phases + 7.0, state, ch, params)
    assert np.all(np.diff(res.trajectory) >= 0)
    assert np.all((res.theta >= 0) & (res.theta < TWO_PI))
    assert res.value >= phase_objective(state.star.phases, state, ch, params)
