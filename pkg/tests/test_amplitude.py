import numpy as np
import pytest

from starmec.amplitude import (ArmijoParams, SmoothingSchedule, grad_rho, project_pair,
                               project_rho, round_binary, smoothed_objective, solve_amplitudes,
                               solve_relaxed_amplitudes)
from starmec.harness.instances import random_instance
from starmec.harness.oracles import fd_gradient_oracle, qp_projection_oracle
from starmec.model import (Beamformers, ChannelSet, DecisionState, EnergyPartition, ModelError,
                           StarConfig, SystemParams)


@pytest.mark.parametrize("pair,expect", [((0.8, 0.8), (0.5, 0.5)), ((0.7, 0.3), (0.7, 0.3)),
                                         ((1.4, -0.2), (1.0, 0.0)), ((-3.0, 0.2), (0.0, 1.0))])
def test_project_pair_examples(pair, expect):
    t, r, _ = project_pair(np.array([pair[0]]), np.array([pair[1]]))
    assert (t[0], r[0]) == pytest.approx(expect, abs=1e-12)
    assert t[0] + r[0] == 1.0


def test_projection_matches_closed_form_and_is_idempotent():
    rng = np.random.default_rng(0)
    x = rng.uniform(-2, 3, 40)
    p = project_rho(x)
    ref = np.concatenate([qp_projection_oracle(pr) for pr in zip(x[:20], x[20:])]).reshape(20, 2)
    np.testing.assert_allclose(p[:20], ref[:, 0], atol=1e-12)
    np.testing.assert_allclose(project_rho(p), p, atol=1e-15)


def test_projection_rejects_bad_input():
    with pytest.raises(ModelError):
        project_rho(np.ones(3))
    with pytest.raises(ModelError):
        project_rho(np.array([np.inf, 0.0]))


def _silent_instance():
    """One element, one transmission user with zero energy: rate is 0."""
    ch = ChannelSet(np.ones((2, 1), complex), np.ones((1, 1), complex), np.ones((1, 2), complex),
                    [False])
    params = SystemParams(2, 1, 0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    state = DecisionState(StarConfig([0.0], [0.5, 0.5]), Beamformers(np.ones((2, 1))),
                          EnergyPartition([0.0]))
    return ch, params, state


def test_smoothed_objective_terms_at_half():
    ch, params, state = _silent_instance()
    rho = np.array([0.5, 0.5])
    assert smoothed_objective(rho, state, ch, params, 1.0, 0.0) == pytest.approx(-4 * np.log(2))
    assert smoothed_objective(rho, state, ch, params, 0.0, 3.0) == pytest.approx(-2 * 3.0 * 0.25)
    assert smoothed_objective(np.array([1.0, 0.0]), state, ch, params, 0.0, 3.0) == 0.0


def test_barrier_domain_error():
    ch, params, state = _silent_instance()
    with pytest.raises(ModelError):
        smoothed_objective(np.array([1.0, 0.0]), state, ch, params, 0.1, 1.0)


def test_zero_cascade_gives_zero_rate_gradient():
    ch, params, state = random_instance(3, 4, 3, 2, 2)
    ch0 = ChannelSet(ch.direct, ch.user_to_ris, np.zeros_like(ch.ris_to_ap), ch.is_reflection)
    g = grad_rho(state.star.amplitudes, state, ch0, params, 0.0, 0.0)
    np.testing.assert_array_equal(g, 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_against_finite_differences(seed):
    ch, params, state = random_instance(seed, 4, 3, 2, 2)
    rho = state.star.amplitudes
    f = lambda x: smoothed_objective(x, state, ch, params, 0.05, 0.3)
    fd = fd_gradient_oracle(f, rho, h=1e-6)
    np.testing.assert_allclose(grad_rho(rho, state, ch, params, 0.05, 0.3), fd,
                               rtol=1e-5, atol=1e-7)


def test_single_transmission_user_picks_transmission():
    rng = np.random.default_rng(4)
    g = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
    ch = ChannelSet(np.zeros((2, 1), complex), np.ones((1, 1), complex), g, [False])
    params = SystemParams(2, 1, 0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    state = DecisionState(StarConfig([0.0], [0.5, 0.5]), Beamformers(g.conj().T),
                          EnergyPartition([0.8]))
    res = solve_amplitudes(np.array([0.5, 0.5]), state, ch, params)
    np.testing.assert_array_equal(res.rho_binary, [1.0, 0.0])


def test_stage_trajectories_are_monotone():
    ch, params, state = random_instance(6, 6, 3, 2, 2)
    res = solve_amplitudes(np.full(12, 0.5), state, ch, params)
    for traj in res.trajectory:
        assert np.all(np.diff(traj) >= -1e-12 * np.maximum(np.abs(traj[1:]), 1.0))
    assert set(np.unique(res.rho_binary)) <= {0.0, 1.0}
    np.testing.assert_array_equal(res.rho_binary[:6] + res.rho_binary[6:], 1.0)
    assert res.rounding_gap < 1e-3


def test_solver_input_validation():
    ch, params, state = random_instance(7, 3, 3, 1, 1)
    with pytest.raises(ModelError):
        solve_amplitudes(np.full(4, 0.5), state, ch, params)
    with pytest.raises(ModelError):
        solve_amplitudes(np.full(6, 0.7), state, ch, params)
    with pytest.raises(ModelError):
        solve_amplitudes(np.r_[np.ones(3), np.zeros(3)], state, ch, params)


def test_relaxed_solver_improves_objective():
    ch, params, state = random_instance(8, 5, 3, 2, 2)
    rho0 = np.full(10, 0.5)
    res = solve_relaxed_amplitudes(rho0, state, ch, params)
    assert res.value >= smoothed_objective(rho0, state, ch, params, 0, 0)
    np.testing.assert_allclose(res.x[:5] + res.x[5:], 1.0, atol=1e-12)


def test_schedule_validation():
    with pytest.raises(ValueError):
        SmoothingSchedule(mu0=-1.0, gamma0=1.0)
    with pytest.raises(ValueError):
        SmoothingSchedule(mu0=1.0, gamma0=1.0, eta_mu=1.5)
    with pytest.raises(ValueError):
        SmoothingSchedule(mu0=1.0, gamma0=1.0, eps_obj=0.0)
    with pytest.raises(ValueError):
        ArmijoParams(shrink=1.0)
    s = SmoothingSchedule.for_scale(200.0)
    assert s.mu0 == pytest.approx(20.0) and s.gamma0 == pytest.approx(20.0)
    assert SmoothingSchedule.for_scale(200.0, penalty_only=True).mu0 == 0.0


def test_round_binary_ties_go_to_transmission():
    np.testing.assert_array_equal(round_binary([0.5, 0.2, 0.5, 0.8]), [1, 0, 0, 1])
