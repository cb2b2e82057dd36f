import numpy as np
import pytest
from scipy.optimize import brentq

from starmec.beamforming import optimal_beamformers
from starmec.energy import (EnergySolverState, a_equation, dual_objective, energy_gradient,
                            energy_objective, energy_problem, qt_objective, solve_a_scalar,
                            solve_energy, update_eta, update_yz)
from starmec.harness.instances import random_instance
from starmec.harness.oracles import energy_pg_oracle, fd_gradient_oracle
from starmec.model import (ChannelSet, ModelError, sinr_all, total_objective)


def _prob(seed=0, **kw):
    ch, params, state = random_instance(seed, **kw)
    return energy_problem(state, ch, params), ch, params, state


def test_eta_is_the_sinr():
    prob, ch, params, state = _prob(1)
    np.testing.assert_allclose(update_eta(prob, state.energy.a), sinr_all(state, ch, params),
                               rtol=1e-12)


def test_eta_vanishes_without_power():
    prob, *_ = _prob(2)
    np.testing.assert_array_equal(update_eta(prob, np.zeros(4)), 0.0)


def test_single_user_unit_channel_eta():
    prob, *_ = _prob(3, m_elements=2, n_antennas=1, n_transmission=1, n_reflection=0)
    # SINR = p |v^H g|^2 / (sigma^2 |v|^2); check against the explicit ratio
    a = np.array([0.4])
    expect = prob.S[0, 0] * prob.powers(a)[0] / prob.noise[0]
    assert update_eta(prob, a)[0] == pytest.approx(expect, rel=1e-12)


def test_auxiliaries_at_the_box_ends():
    prob, *_ = _prob(4)
    eta = np.full(4, 0.5)
    _, z = update_yz(prob, np.ones(4), eta)
    np.testing.assert_array_equal(z, 0.0)
    y, _ = update_yz(prob, np.zeros(4), eta)
    np.testing.assert_array_equal(y, 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_transforms_are_tight(seed):
    prob, ch, params, state = _prob(seed)
    a = state.energy.a
    f = energy_objective(prob, a)
    eta = update_eta(prob, a)
    d = dual_objective(prob, a, eta)
    assert d == pytest.approx(f, rel=1e-10)
    y, z = update_yz(prob, a, eta)
    assert qt_objective(prob, a, eta, y, z) == pytest.approx(d, rel=1e-10)
    # any other eta or y gives a lower bound
    assert dual_objective(prob, a, 1.3 * eta) <= d + 1e-12
    assert qt_objective(prob, a, eta, 0.9 * y, z) <= d + 1e-12


def test_energy_objective_matches_model():
    prob, ch, params, state = _prob(5)
    assert energy_objective(prob, state.energy.a) == pytest.approx(
        total_objective(state, ch, params), rel=1e-12)


def test_energy_gradient_finite_differences():
    prob, _, _, state = _prob(6)
    a = state.energy.a
    fd = fd_gradient_oracle(lambda x: energy_objective(prob, x), a, h=1e-6)
    np.testing.assert_allclose(energy_gradient(prob, a), fd, rtol=1e-6)


def test_scalar_root_examples():
    assert solve_a_scalar(-1.0, 1.0, 1.0) == pytest.approx(0.208238, abs=1e-6)
    ref = brentq(a_equation, 1e-12, 1 - 1e-12, args=(-1.0, 1.0, 1.0), xtol=1e-15)
    assert solve_a_scalar(-1.0, 1.0, 1.0) == pytest.approx(ref, abs=1e-10)
    roots = [solve_a_scalar(-1.0, o, 1.0) for o in (1.0, 10.0, 100.0)]
    assert roots[0] < roots[1] < roots[2] < 1.0


def test_scalar_root_is_bracketed_and_clamped():
    a = solve_a_scalar(-0.3, 2.0, 5.0)
    assert 0.0 < a < 1.0
    assert abs(a_equation(a, -0.3, 2.0, 5.0)) < 1e-8
    assert solve_a_scalar(-1e-9, 1e9, 1e-9) == 1.0
    assert solve_a_scalar(-1e9, 1e-9, 1e9) == 0.0


@pytest.mark.parametrize("bad", [(1.0, 1.0, 1.0), (-1.0, 0.0, 1.0), (-1.0, 1.0, 0.0)])
def test_scalar_root_sign_errors(bad):
    with pytest.raises(ModelError):
        solve_a_scalar(*bad)


def test_zero_channel_keeps_everything_local():
    _, ch, params, state = _prob(7)
    zero = ChannelSet(np.zeros_like(ch.direct), ch.user_to_ris, np.zeros_like(ch.ris_to_ap),
                      ch.is_reflection)
    res = solve_energy(state.energy.a, state, zero, params)
    np.testing.assert_array_equal(res.a, 0.0)


def test_costly_local_computing_pushes_offloading():
    _, ch, params, state = _prob(8, n_transmission=1, n_reflection=0)
    a_means = []
    for kappa in (1.0, 1e2, 1e4):
        p = params.__class__(**{**params.__dict__, "capacitance_coeff": kappa})
        a_means.append(np.mean(solve_energy(state.energy.a, state, ch, p).a))
    assert a_means[0] < a_means[1] < a_means[2]
    assert a_means[2] > 0.9


@pytest.mark.parametrize("seed", range(5))
def test_solver_matches_projected_gradient_oracle(seed):
    # receive beamformers are MMSE, as inside the block iteration
    _, ch, params, state = _prob(seed)
    state = state.with_(v=optimal_beamformers(state, ch, params))
    prob = energy_problem(state, ch, params)
    res = solve_energy(state.energy.a, state, ch, params, tol=1e-12, max_outer=500)
    ref = energy_pg_oracle(prob, state.energy.a)
    assert res.objective >= ref.objective * (1 - 1e-4)
    assert np.all(np.diff(res.dual_trajectory) >= -1e-9 * np.abs(res.dual_trajectory[1:]))
    assert res.objective >= energy_objective(prob, state.energy.a)


def test_solver_state_validation():
    with pytest.raises(ModelError):
        EnergySolverState(np.array([1.2]), np.zeros(1), np.zeros(1), np.zeros(1))
    with pytest.raises(ModelError):
        EnergySolverState(np.array([0.2]), np.array([-1.0]), np.zeros(1), np.zeros(1))
    _, ch, params, state = _prob(9)
    with pytest.raises(ModelError):
        solve_energy(np.full(4, 1.5), state, ch, params)
