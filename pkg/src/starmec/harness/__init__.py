"""Scenario files, Monte Carlo runs, oracles and the command line."""
from .config import GeometrySpec, Scenario, ScenarioError, load_scenario, parse_scenario
from .experiment import ExperimentResult, run_experiment, trial_inputs
from .oracles import (OracleError, energy_pg_oracle, exhaustive_binary_oracle,
                      fd_gradient_oracle, qp_projection_oracle)

__all__ = ["GeometrySpec", "Scenario", "ScenarioError", "load_scenario", "parse_scenario",
           "ExperimentResult", "run_experiment", "trial_inputs", "OracleError",
           "energy_pg_oracle", "exhaustive_binary_oracle", "fd_gradient_oracle",
           "qp_projection_oracle"]
