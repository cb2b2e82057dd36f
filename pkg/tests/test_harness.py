import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starmec.amplitude import project_rho, solve_amplitudes
from starmec.baselines import Scheme
from starmec.harness.cli import main
from starmec.harness.config import ScenarioError, load_scenario, parse_scenario
from starmec.harness.experiment import run_experiment
from starmec.harness.instances import random_channels, random_instance, random_params, random_state
from starmec.harness.oracles import (OracleError, exhaustive_binary_oracle, fd_gradient_oracle,
                                     qp_projection_oracle)
from starmec.harness.verify import load_check_file
from starmec.model import (Beamformers, ChannelSet, DecisionState, EnergyPartition, StarConfig,
                           SystemParams)

SMALL = """
seed = 3
trials = 2
schemes = ["ProposedMs"]

[system]
n_antennas = 4
n_transmission_users = 1
n_reflection_users = 1
m_elements = 10

[solver]
max_outer = 5
"""


def _small(tmp_path, text=SMALL):
    p = tmp_path / "s.toml"
    p.write_text(text)
    return p


# --- oracles -----------------------------------------------------------------

def test_fd_oracle_examples():
    g = fd_gradient_oracle(lambda x: float(x[0] ** 2), np.array([3.0]), h=1e-5)
    assert g[0] == pytest.approx(6.0, abs=1e-9)
    np.testing.assert_array_equal(fd_gradient_oracle(lambda x: 4.0, np.zeros(3)), 0.0)
    with pytest.raises(OracleError):
        fd_gradient_oracle(lambda x: np.nan, np.zeros(2))


@pytest.mark.parametrize("pair,expect", [((0.8, 0.8), (0.5, 0.5)), ((0.7, 0.3), (0.7, 0.3)),
                                         ((1.4, -0.2), (1.0, 0.0))])
def test_qp_oracle_examples(pair, expect):
    np.testing.assert_allclose(qp_projection_oracle(pair), expect, atol=1e-15)


def test_exhaustive_single_element_prefers_transmission():
    g = np.array([[1.0 + 0.5j, -0.3j]])
    ch = ChannelSet(np.zeros((2, 1), complex), np.array([[2.0 + 0j]]), g, [False])
    params = SystemParams(2, 1, 0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    state = DecisionState(StarConfig([0.0], [0.5, 0.5]), Beamformers(g.conj().T),
                          EnergyPartition([0.7]))
    rho, val = exhaustive_binary_oracle(ch, params, state)
    np.testing.assert_array_equal(rho, [1.0, 0.0])
    assert val > 0


def test_exhaustive_dominates_continuation_at_two_elements():
    ch, params, state = random_instance(11, 2, 3, 1, 1)
    rho, best = exhaustive_binary_oracle(ch, params, state)
    res = solve_amplitudes(np.full(4, 0.5), state, ch, params)
    from starmec.model import sum_offload_rate
    got = sum_offload_rate(state.star.phases, res.rho_binary, state.beams.v, state.energy.a,
                           ch, params)
    assert best >= got


def test_exhaustive_refuses_large_surfaces_and_is_fast_at_eight():
    rng = np.random.default_rng(0)
    big = random_channels(rng, 13, 3, 1, 1)
    params = random_params(3, 1, 1)
    with pytest.raises(OracleError):
        exhaustive_binary_oracle(big, params, random_state(rng, big))
    ch = random_channels(rng, 8, 6, 2, 2)
    params = random_params(6, 2, 2)
    t0 = time.perf_counter()
    exhaustive_binary_oracle(ch, params, random_state(rng, ch))
    assert time.perf_counter() - t0 < 10.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=2))
def test_projection_property(pair):
    p = project_rho(np.array(pair))
    np.testing.assert_allclose(p, qp_projection_oracle(pair), atol=1e-8 * max(1.0, max(map(abs, pair))))
    assert p[0] + p[1] == 1.0 and 0 <= p[0] <= 1


# --- configuration ------------------------------------------------------------

def test_db_fields_are_converted():
    sc = parse_scenario({"system": {"noise_power_dbm": -90},
                         "fading": {"kappa_ap_ris_db": 10, "pathloss_ref_db": -30}})
    assert sc.params.noise_power_w == pytest.approx(1e-12)
    assert sc.fading.kappa_ap_ris == pytest.approx(10.0)
    sc = parse_scenario({"system": {"noise_power_w": 2e-12}})
    assert sc.params.noise_power_w == 2e-12


@pytest.mark.parametrize("doc", [{"colour": 1}, {"system": {"n_antenas": 4}},
                                 {"system": {"noise_power_dbm": -90, "noise_power_w": 1e-12}},
                                 {"schemes": ["Sdr"]}, {"sweep": {"axis": "M", "values": [1.5]}},
                                 {"sweep": {"axis": "distance", "values": [5.0]}}])
def test_bad_scenarios_rejected(doc):
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_scenario_files_in_repo_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "scenarios"
    for path in root.glob("*.toml"):
        load_scenario(path)
    for path in (root / "acceptance").glob("*.toml"):
        assert load_check_file(path)


def test_digest_tracks_content(tmp_path):
    a = load_scenario(_small(tmp_path))
    assert a.digest() == load_scenario(_small(tmp_path)).digest()
    assert a.replace(seed=4).digest() != a.digest()


# --- experiments --------------------------------------------------------------

def test_row_count_and_deterministic_output(tmp_path):
    sc = load_scenario(_small(tmp_path)).replace(sweep_axis="M", sweep_values=(10,))
    first = run_experiment(sc)
    assert len(first.rows) == 2
    first.write(tmp_path / "a")
    run_experiment(sc).write(tmp_path / "b")
    for name in ("results.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_matches_serial(tmp_path):
    sc = load_scenario(_small(tmp_path)).replace(schemes=(Scheme.PROPOSED_MS, Scheme.RANDOM_PHASE))
    assert run_experiment(sc).rows == run_experiment(sc, threads=2).rows


def test_k_sweep_and_distance_axis(tmp_path):
    sc = load_scenario(_small(tmp_path)).replace(sweep_axis="K", sweep_values=(1, 3), n_trials=1)
    res = run_experiment(sc)
    assert [len(r["a"].split(";")) for r in res.rows] == [1, 3]
    text = SMALL.replace("n_transmission_users = 1", "n_transmission_users = 0").replace(
        "trials = 2", "trials = 1") + '\n[sweep]\naxis = "distance"\nvalues = [5, 40]\n'
    res = run_experiment(load_scenario(_small(tmp_path, text)))
    assert len(res.rows) == 2 and all(not r["error"] for r in res.rows)


# --- command line -------------------------------------------------------------

def test_cli_run_writes_outputs(tmp_path, capsys):
    code = main(["run", "--scenario", str(_small(tmp_path)), "--out", str(tmp_path / "o"),
                 "--trials", "1"])
    assert code in (0, 1)
    assert (tmp_path / "o" / "results.csv").read_text().count("\n") == 2
    assert "ProposedMs" in capsys.readouterr().out


def test_cli_usage_errors(tmp_path):
    assert main(["run"]) == 2
    assert main(["run", "--scenario", str(_small(tmp_path, "bogus = 1\n"))]) == 2
    assert main(["sweep", "--scenario", str(_small(tmp_path)), "--axis", "M"]) == 2
    assert main(["verify", "--only", "nonsense"]) == 2


def test_cli_environment_defaults(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("STARMEC_SCENARIO", str(_small(tmp_path)))
    monkeypatch.setenv("STARMEC_TRIALS", "1")
    monkeypatch.setenv("STARMEC_SCHEMES", "ProposedMs")
    main(["run"])
    assert "1 rows" in capsys.readouterr().out
    main(["run", "--trials", "2"])
    assert "2 rows" in capsys.readouterr().out


def test_cli_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--only", "dof,projection"]) == 0
    p = tmp_path / "c.toml"
    p.write_text('[[check]]\nname = "small-m"\nn_trials = 2\nm_max = 4\nratio = 1.5\n')
    assert main(["verify", "--scenario", str(p)]) == 1
    assert "FAIL" in capsys.readouterr().out
