"""Independent reference computations used by the tests and ``verify``.

None of these share code paths with the solvers they check beyond the
objective evaluation itself.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..energy import EnergyProblem, energy_gradient, energy_objective
from ..model import ChannelSet, DecisionState, SystemParams, sum_offload_rate

__all__ = ["OracleError", "fd_gradient_oracle", "qp_projection_oracle",
           "exhaustive_binary_oracle", "energy_pg_oracle", "EnergyOracleResult"]


class OracleError(RuntimeError):
    pass


def _central(f, x, h):
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp, fm = f(x + e), f(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OracleError(f"non-finite evaluation along coordinate {i}")
        g[i] = (fp - fm) / (2.0 * h)
    return g


def fd_gradient_oracle(f, x, h=1e-5, rtol=1e-4, return_error=False):
    """Central-difference gradient with a Richardson consistency check.

    The estimates at ``h`` and ``h/2`` are combined as ``(4 D(h/2) - D(h)) / 3``.
    If the two raw estimates disagree by more than ``rtol`` (relative to the
    gradient scale) an ``OracleError`` is raised: the step is then too large
    for the local curvature or too small for the rounding noise.
    """
    x = np.asarray(x, float).ravel()
    d1 = _central(f, x, h)
    d2 = _central(f, x, h / 2.0)
    est = (4.0 * d2 - d1) / 3.0
    scale = max(np.max(np.abs(est)) if est.size else 0.0, 1e-300)
    err = float(np.max(np.abs(d1 - d2))) / scale if est.size else 0.0
    if err > rtol and np.max(np.abs(d1 - d2)) > 1e-12:
        raise OracleError(f"finite differences inconsistent between h and h/2 "
                          f"(relative gap {err:.2e})")
    return (est, err) if return_error else est


def qp_projection_oracle(pair):
    """Euclidean projection of ``(x_t, x_r)`` onto ``{t + r = 1, 0 <= t, r <= 1}``.

    On the segment ``(t, 1 - t)`` the squared distance is a convex quadratic
    in ``t`` minimised at ``(x_t - x_r + 1) / 2``; clamping to ``[0, 1]``
    gives the constrained minimiser.
    """
    xt, xr = (float(v) for v in pair)
    if not (np.isfinite(xt) and np.isfinite(xr)):
        raise OracleError("pair must be finite")
    t = min(max((xt - xr + 1.0) / 2.0, 0.0), 1.0)
    return np.array([t, 1.0 - t])


def exhaustive_binary_oracle(ch: ChannelSet, params: SystemParams, state: DecisionState,
                             m_limit: int = 12):
    """Best pair-feasible binary amplitude vector by enumeration.

    Phases, beamformers and energies are taken from ``state``; the score is
    the sum offloading rate (the only term the amplitudes affect). Returns
    ``(rho, value)``.
    """
    M = ch.n_elements
    if M > m_limit:
        raise OracleError(f"M = {M} exceeds the enumeration limit {m_limit}")
    th, v, a = state.star.phases, state.beams.v, state.energy.a
    best, best_val = None, -np.inf
    for bits in itertools.product((1.0, 0.0), repeat=M):
        t = np.array(bits)
        rho = np.r_[t, 1.0 - t]
        val = sum_offload_rate(th, rho, v, a, ch, params)
        if val > best_val:
            best, best_val = rho, val
    return best, float(best_val)


@dataclass
class EnergyOracleResult:
    a: np.ndarray
    objective: float
    n_iter: int


def energy_pg_oracle(prob: EnergyProblem, a0=None, tol=1e-13, max_iter=20000,
                     starts=3, seed=0) -> EnergyOracleResult:
    """Projected gradient ascent with Armijo backtracking on the energy
    subproblem, best of ``starts`` starting points (the given one, the box
    centre and random points).

    The box is ``[0, 1 - 1e-12]`` since the local-computing term has an
    infinite slope at ``a = 1``.
    """
    K = prob.S.shape[0]
    hi = 1.0 - 1e-12
    rng = np.random.default_rng(seed)
    inits = [np.full(K, 0.5)] if a0 is None else [np.asarray(a0, float), np.full(K, 0.5)]
    while len(inits) < starts:
        inits.append(rng.uniform(0.0, 1.0, K))
    best = None
    total = 0
    for x in inits:
        x = np.clip(x, 0.0, hi)
        f = energy_objective(prob, x)
        step = 1.0
        for it in range(max_iter):
            g = energy_gradient(prob, x)
            # scale-free first trial step: move the most sensitive coordinate by `step`
            gmax = np.max(np.abs(g))
            if gmax == 0:
                break
            tau = step / gmax
            while True:
                xn = np.clip(x + tau * g, 0.0, hi)
                d = xn - x
                fn = energy_objective(prob, xn)
                if fn >= f + 1e-4 * (g @ d) or np.max(np.abs(d)) < 1e-16:
                    break
                tau *= 0.5
            gain = fn - f
            step = min(1.0, 2.0 * tau * gmax)
            if fn >= f:
                x, f = xn, fn
            total += 1
            if gain <= tol * abs(f) or np.max(np.abs(d)) < 1e-15:
                break
        if best is None or f > best.objective:
            best = EnergyOracleResult(x.copy(), float(f), total)
    best.n_iter = total
    return best
