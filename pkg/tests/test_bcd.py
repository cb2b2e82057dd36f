import numpy as np
import pytest

from starmec.bcd import BcdConfig, BcdError, dof_feasibility, initial_state, run_bcd
from starmec.harness.instances import random_channels, random_instance, random_params
from starmec.model import ChannelSet, total_objective


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def test_dof_zero_direct_needs_one_element_per_user():
    rng = np.random.default_rng(0)
    ch = ChannelSet(np.zeros((6, 6)), _cn(rng, (4, 6)), _cn(rng, (4, 6)), [False] * 3 + [True] * 3)
    rep = dof_feasibility(ch)
    assert (rep.rank_direct_t, rep.rank_direct_r, rep.elements_needed) == (0, 0, 6)
    assert not rep.feasible and rep.antennas_cover_users


def test_dof_full_rank_direct_is_always_feasible():
    rng = np.random.default_rng(1)
    ch = ChannelSet(_cn(rng, (8, 6)), _cn(rng, (0, 6)), _cn(rng, (0, 8)), [False] * 3 + [True] * 3)
    rep = dof_feasibility(ch)
    assert rep.elements_needed == 0 and rep.feasible


def test_dof_detects_rank_one_block():
    rng = np.random.default_rng(2)
    hd = _cn(rng, (6, 6))
    hd[:, :3] = np.outer(_cn(rng, 6), _cn(rng, 3))
    ch = ChannelSet(hd, _cn(rng, (2, 6)), _cn(rng, (2, 6)), [False] * 3 + [True] * 3)
    rep = dof_feasibility(ch)
    assert (rep.rank_direct_t, rep.rank_direct_r, rep.elements_needed) == (1, 3, 2)
    assert rep.feasible


def test_zero_channel_converges_to_all_local():
    rng = np.random.default_rng(3)
    ch = ChannelSet(np.zeros((3, 4)), _cn(rng, (4, 4)), np.zeros((4, 3)), [False, False, True, True])
    params = random_params(3, 2, 2)
    res = run_bcd(ch, params)
    np.testing.assert_array_equal(res.state.energy.a, 0.0)
    assert res.converged and res.n_outer <= 2
    assert res.trace.objective[0] == pytest.approx(res.objective)


@pytest.mark.parametrize("seed", range(3))
def test_output_invariants(seed):
    ch, params, _ = random_instance(seed, 6, 4, 2, 2)
    res = run_bcd(ch, params, BcdConfig(seed=seed))
    st = res.state
    assert st.star.binary and st.star.pair_feasible
    assert np.all((st.star.phases >= 0) & (st.star.phases < 2 * np.pi))
    assert np.all((st.energy.a >= 0) & (st.energy.a <= 1))
    assert res.objective == pytest.approx(total_objective(st, ch, params), rel=1e-12)
    assert not res.trace.violations
    assert res.objective >= max(res.trace.objective) * (1 - 1e-12)


def test_trace_records_blocks_in_order():
    ch, params, _ = random_instance(4, 4, 3, 1, 1)
    res = run_bcd(ch, params, BcdConfig(max_outer=2, tol=0.0))
    names = [b for it, b, _, _ in res.trace.blocks if it == 1]
    assert names == ["V", "theta", "rho", "a"]
    assert "bcd_not_converged" in res.trace.flags
    assert all(sec >= 0 for *_, sec in res.trace.blocks)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_block_failure_reports_block():
    ch, params, _ = random_instance(5, 4, 3, 1, 1)
    bad = params.__class__(**{**params.__dict__, "noise_power_w": 1.0})
    object.__setattr__(bad, "noise_power_w", -1.0)
    with pytest.raises(BcdError) as err:
        run_bcd(ch, bad)
    assert err.value.block == "V" and err.value.trace is not None


def test_config_validation():
    with pytest.raises(ValueError):
        BcdConfig(rho_mode="greedy")
    with pytest.raises(ValueError):
        BcdConfig(beam_mode="mrc")


def test_initial_state_is_reproducible():
    ch, params, _ = random_instance(6)
    a, b = initial_state(ch, params, 7), initial_state(ch, params, 7)
    np.testing.assert_array_equal(a.star.phases, b.star.phases)
    assert not np.allclose(a.star.phases, initial_state(ch, params, 8).star.phases)


@pytest.mark.slow
def test_partial_enumeration_oracle():
    """Against enumerating the surface split and running BCD on the rest."""
    wins = 0
    for trial in range(20):
        rng = np.random.default_rng(1000 + trial)
        M = 4
        ch = random_channels(rng, M, 3, 1, 1)
        params = random_params(3, 1, 1, rng)
        got = run_bcd(ch, params, BcdConfig(seed=trial)).objective
        best = -np.inf
        for bits in range(2 ** M):
            t = np.array([(bits >> m) & 1 for m in range(M)], float)
            init = initial_state(ch, params, trial, amplitudes=np.r_[t, 1 - t])
            best = max(best, run_bcd(ch, params, BcdConfig(rho_mode="fixed", seed=trial),
                                     init).objective)
        wins += got >= 0.95 * best
    assert wins >= 16
