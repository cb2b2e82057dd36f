"""Small well-scaled random instances for oracle checks.

Simulation-scale channels have entries around 1e-5 and rates around 1e6 to
1e11, which hides errors behind absolute tolerances. These instances use
unit-variance channels, unit noise and constants chosen so that offloading
and local computing are of the same order.
"""
from __future__ import annotations

import numpy as np

from ..model import (Beamformers, ChannelSet, DecisionState, EnergyPartition, StarConfig,
                     SystemParams)

__all__ = ["random_channels", "random_params", "random_state", "random_instance"]


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_params(n_antennas, n_transmission, n_reflection, rng=None, **overrides):
    kw = dict(bandwidth_hz=1.0, slot_seconds=1.0, noise_power_w=1.0, energy_budget_j=1.0,
              cycles_per_bit=1.0, capacitance_coeff=1.0)
    if rng is not None:
        K = n_transmission + n_reflection
        kw["energy_budget_j"] = rng.uniform(0.5, 2.0, K)
        kw["capacitance_coeff"] = rng.uniform(0.5, 4.0, K)
    kw.update(overrides)
    return SystemParams(n_antennas=n_antennas, n_transmission_users=n_transmission,
                        n_reflection_users=n_reflection, **kw)


def random_channels(rng, m_elements, n_antennas, n_transmission, n_reflection,
                    direct_scale=1.0) -> ChannelSet:
    K = n_transmission + n_reflection
    refl = np.r_[np.zeros(n_transmission, bool), np.ones(n_reflection, bool)]
    return ChannelSet(direct_scale * _cn(rng, (n_antennas, K)), _cn(rng, (m_elements, K)),
                      _cn(rng, (m_elements, n_antennas)) / np.sqrt(max(m_elements, 1)), refl)


def random_state(rng, ch: ChannelSet, interior=True, a_range=(0.1, 0.9)) -> DecisionState:
    M, N, K = ch.n_elements, ch.n_antennas, ch.n_users
    theta = rng.uniform(0.0, 2.0 * np.pi, M)
    t = rng.uniform(0.05, 0.95, M) if interior else rng.integers(0, 2, M).astype(float)
    v = _cn(rng, (N, K))
    a = rng.uniform(*a_range, K)
    return DecisionState(StarConfig(theta, np.r_[t, 1.0 - t]), Beamformers(v), EnergyPartition(a))


def random_instance(seed, m_elements=4, n_antennas=3, n_transmission=2, n_reflection=2,
                    interior=True):
    """(channels, params, state) drawn from ``numpy.random.default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, m_elements, n_antennas, n_transmission, n_reflection)
    params = random_params(n_antennas, n_transmission, n_reflection, rng)
    return ch, params, random_state(rng, ch, interior)
