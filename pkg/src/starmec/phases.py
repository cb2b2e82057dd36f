"""Gradient ascent on the STAR-RIS phase shifts.

The unit-modulus constraint is removed by optimising the angles directly;
the sum rate is 2*pi periodic in each angle, so the result is simply wrapped
into [0, 2*pi) at the end.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .amplitude import ArmijoParams, projected_ascent
from .model import sum_offload_rate_and_grads

__all__ = ["phase_objective", "grad_theta", "solve_phases", "PhaseResult"]

log = logging.getLogger(__name__)
TWO_PI = 2.0 * np.pi


def phase_objective(theta, state, ch, params) -> float:
    """Sum offloading rate as a function of the phases."""
    return sum_offload_rate_and_grads(theta, state.star.amplitudes, state.beams.v,
                                      state.energy.a, ch, params)[0]


def grad_theta(theta, state, ch, params) -> np.ndarray:
    return sum_offload_rate_and_grads(theta, state.star.amplitudes, state.beams.v,
                                      state.energy.a, ch, params)[2]


@dataclass
class PhaseResult:
    theta: np.ndarray
    value: float
    trajectory: list
    converged: bool


def solve_phases(theta_init, state, ch, params, armijo: ArmijoParams = ArmijoParams(),
                 tol: float = 1e-8, max_iter: int = 500) -> PhaseResult:
    """Armijo gradient ascent from ``theta_init``; returns wrapped angles."""
    theta0 = np.asarray(theta_init, float)

    def fun(theta):
        r, _, g = sum_offload_rate_and_grads(theta, state.star.amplitudes, state.beams.v,
                                             state.energy.a, ch, params)
        return r, g

    res = projected_ascent(fun, theta0, lambda x: x, armijo, tol, max_iter)
    if not res.converged:
        log.warning("phase ascent stopped at the iteration cap (%d)", max_iter)
    theta = np.mod(res.x, TWO_PI)
    theta[theta >= TWO_PI] = 0.0
    return PhaseResult(theta, res.value, res.trajectory, res.converged)
