"""Sum computation rate maximisation for STAR-RIS assisted edge computing.

Submodules
----------
model        domain types, channels, SINR and rate evaluation
channels     geometry-based Rician channel synthesis
amplitude    binary transmit/reflect amplitudes (smoothing + penalty continuation)
energy       offloading/local energy partition (dual + quadratic transform)
beamforming  max-SINR receive beamformers
phases       surface phase shifts (gradient ascent)
bcd          block coordinate ascent over all variables
baselines    comparison schemes
harness      scenarios, Monte Carlo sweeps, oracles, command line
"""
__version__ = "0.1.0"

from .model import (Beamformers, ChannelSet, DecisionState, EnergyPartition, ModelError,
                    Space, StarConfig, SystemParams, effective_channel, local_rate,
                    offload_rate, sinr, total_objective)
from .bcd import BcdConfig, BcdError, BcdResult, dof_feasibility, run_bcd
from .baselines import Scheme, SchemeResult, run_scheme

__all__ = ["Beamformers", "ChannelSet", "DecisionState", "EnergyPartition", "ModelError",
           "Space", "StarConfig", "SystemParams", "effective_channel", "local_rate",
           "offload_rate", "sinr", "total_objective", "BcdConfig", "BcdError", "BcdResult",
           "dof_feasibility", "run_bcd", "Scheme", "SchemeResult", "run_scheme"]
