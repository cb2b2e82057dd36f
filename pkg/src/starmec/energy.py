"""Energy partition between offloading and local computing.

With beamformers and the surface fixed, the subproblem

    max_a  sum_k B log2(1 + SINR_k(a)) + sum_k R_loc,k(a_k),   a in [0,1]^K

is rewritten through the Lagrangian dual transform (auxiliary ``eta``, the
SINR moved out of the logarithm) and then the quadratic transform
(auxiliaries ``y`` for the offloading ratios and ``z`` for the square-root
local terms). Every update is closed form except ``a``, which is a
per-user bisection on a strictly decreasing scalar equation.

All quantities are written with transmit powers ``p_k = a_k E_k / L_tx`` and
with the bandwidth ``B`` kept in front of every offloading term, so that the
dual objective equals the true objective when ``eta`` is at its optimum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .model import ModelError, effective_channels, link_matrix, local_rates

__all__ = [
    "EnergyProblem", "EnergySolverState", "EnergyResult", "energy_problem",
    "update_eta", "update_yz", "dual_objective", "qt_objective",
    "energy_objective", "energy_gradient", "a_equation", "solve_a_scalar", "solve_energy",
]

log = logging.getLogger(__name__)

A_GUARD = 1e-12
A_LIFT = 1e-6


@dataclass(frozen=True)
class EnergyProblem:
    """Everything the energy subproblem needs once V, theta, rho are fixed.

    ``S[k, l] = |v_k^H g_l|^2``; ``noise[k] = sigma^2 ||v_k||^2``.
    """

    S: np.ndarray
    noise: np.ndarray
    energy: np.ndarray
    tx_seconds: float
    slot_seconds: float
    bandwidth: float
    cycles: np.ndarray
    kappa: np.ndarray

    @property
    def n_users(self):
        return self.S.shape[0]

    @property
    def c(self):
        return self.bandwidth / np.log(2.0)

    def powers(self, a):
        return np.asarray(a, float) * self.energy / self.tx_seconds

    def received(self, a):
        """Total received power plus noise after each user's beamformer."""
        return self.S @ self.powers(a) + self.noise

    def signal(self, a):
        return np.diag(self.S) * self.powers(a)

    def local(self, a):
        x = np.maximum(1.0 - np.asarray(a, float), 0.0) * self.energy
        return np.sqrt(x / (self.slot_seconds * self.kappa)) / self.cycles


def energy_problem(state, ch, params) -> EnergyProblem:
    g = effective_channels(state.star.phases, state.star.amplitudes, ch)
    v = state.beams.v
    S = np.abs(link_matrix(v, g)) ** 2
    noise = params.noise_power_w * np.sum(np.abs(v) ** 2, axis=0)
    return EnergyProblem(S, noise, params.energy_budget_j, params.tx_seconds,
                         params.slot_seconds, params.bandwidth_hz,
                         params.cycles_per_bit, params.capacitance_coeff)


@dataclass
class EnergySolverState:
    a: np.ndarray
    eta: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        if np.any(self.a < 0) or np.any(self.a > 1):
            raise ModelError("a must lie in [0, 1]")
        if np.any(self.eta < 0) or np.any(self.z < 0):
            raise ModelError("eta and z must be non-negative")


def energy_objective(prob: EnergyProblem, a) -> float:
    """True subproblem objective: offloading plus local rates."""
    a = np.asarray(a, float)
    T = prob.received(a)
    sig = prob.signal(a)
    return float(prob.bandwidth * np.sum(np.log2(T / (T - sig))) + np.sum(prob.local(a)))


def energy_gradient(prob: EnergyProblem, a) -> np.ndarray:
    """Gradient of ``energy_objective``; the local term is evaluated at
    ``min(a, 1 - 1e-12)`` to stay finite."""
    a = np.asarray(a, float)
    T = prob.received(a)
    interf = T - prob.signal(a)
    dp = prob.energy / prob.tx_seconds
    S_off = prob.S - np.diag(np.diag(prob.S))
    # d/dp_l sum_k [ln T_k - ln I_k]
    d_off = prob.S.T @ (1.0 / T) - S_off.T @ (1.0 / interf)
    ac = np.minimum(a, 1.0 - A_GUARD)
    d_loc = -np.sqrt(prob.energy / (prob.slot_seconds * prob.kappa)) / (
        2.0 * prob.cycles * np.sqrt(1.0 - ac))
    return prob.c * d_off * dp + d_loc


def update_eta(prob: EnergyProblem, a) -> np.ndarray:
    """Optimal dual auxiliary: the SINR at the current partition."""
    T = prob.received(a)
    sig = prob.signal(a)
    return sig / (T - sig)


def dual_objective(prob: EnergyProblem, a, eta) -> float:
    """Lagrangian-dual objective; maximal over ``eta`` at ``update_eta``."""
    eta = np.asarray(eta, float)
    ratio = prob.signal(a) / prob.received(a)
    return float(prob.bandwidth * np.sum(np.log2(1.0 + eta)) - prob.c * np.sum(eta)
                 + prob.c * np.sum((1.0 + eta) * ratio) + np.sum(prob.local(a)))


def update_yz(prob: EnergyProblem, a, eta):
    a = np.asarray(a, float)
    y = np.sqrt(prob.c * (1.0 + eta) * prob.signal(a)) / prob.received(a)
    x = np.maximum(1.0 - a, 0.0) * prob.energy / (prob.slot_seconds * prob.kappa)
    z = x ** 0.25 / np.sqrt(prob.cycles)
    return y, z


def qt_objective(prob: EnergyProblem, a, eta, y, z) -> float:
    a = np.asarray(a, float)
    x = np.maximum(1.0 - a, 0.0) * prob.energy / (prob.slot_seconds * prob.kappa)
    offload = (2.0 * y * np.sqrt(prob.c * (1.0 + eta) * prob.signal(a))
               - y ** 2 * prob.received(a))
    local = 2.0 * z * x ** 0.25 / np.sqrt(prob.cycles) - z ** 2
    return float(prob.bandwidth * np.sum(np.log2(1.0 + eta)) - prob.c * np.sum(eta)
                 + np.sum(offload) + np.sum(local))


def _equation_coeffs(prob: EnergyProblem, eta, y, z):
    """Coefficients (s, o, w) of the stationarity equation of each a_k."""
    dp = prob.energy / prob.tx_seconds
    o = y * np.sqrt(prob.c * (1.0 + eta) * np.diag(prob.S) * dp)
    w = dp * (prob.S.T @ y ** 2)
    s = -(z / (2.0 * np.sqrt(prob.cycles))) * (
        prob.energy / (prob.slot_seconds * prob.kappa)) ** 0.25
    return s, o, w


def a_equation(a, s, o, w):
    """``s (1-a)^(-3/4) + o a^(-1/2) - w``; strictly decreasing on (0, 1)."""
    return s * (1.0 - a) ** -0.75 + o * a ** -0.5 - w


def _a_equation_slope(a, s, o):
    return 0.75 * s * (1.0 - a) ** -1.75 - 0.5 * o * a ** -1.5


def _bisect(s, o, w, xtol=1e-12, ftol=1e-10, max_iter=200):
    """Bracketing root search on ``[A_GUARD, 1 - A_GUARD]``.

    Each step keeps the sign-change bracket; the trial point is the Newton
    point when it falls strictly inside the bracket and the midpoint
    otherwise, so the bracket shrinks monotonically as in plain bisection.
    """
    s, o, w = (np.atleast_1d(np.asarray(x, float)) for x in (s, o, w))
    lo = np.full(s.shape, A_GUARD)
    hi = np.full(s.shape, 1.0 - A_GUARD)
    out = np.where(a_equation(lo, s, o, w) <= 0, 0.0,
                   np.where(a_equation(hi, s, o, w) >= 0, 1.0, np.nan))
    active = np.isnan(out)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        if not active.any():
            break
        fx = a_equation(x, s, o, w)
        done = active & ((np.abs(fx) < ftol) | (hi - lo < xtol))
        out[done] = x[done]
        active &= ~done
        pos = fx > 0
        lo = np.where(active & pos, x, lo)
        hi = np.where(active & ~pos, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - fx / _a_equation_slope(x, s, o)
        inside = (newton > lo) & (newton < hi)
        x_next = np.where(inside, newton, 0.5 * (lo + hi))
        stalled = active & (np.abs(x_next - x) < xtol)
        out[stalled] = x_next[stalled]
        active &= ~stalled
        x = x_next
    return np.where(np.isnan(out), x, out)


def solve_a_scalar(s_k: float, o_k: float, w_k: float) -> float:
    """Unique root in (0, 1) of the per-user stationarity equation.

    Requires ``s_k < 0``, ``o_k > 0`` and ``w_k > 0``. The search runs on
    ``[1e-12, 1 - 1e-12]``; if the sign at a guard shows the root lies
    beyond it, the boundary value 0 or 1 is returned exactly.
    """
    if not (s_k < 0 and o_k > 0 and w_k > 0):
        raise ModelError(f"need s < 0, o > 0, w > 0; got s={s_k}, o={o_k}, w={w_k}")
    return float(_bisect(s_k, o_k, w_k)[0])


def _argmax_a(prob, eta, y, z):
    s, o, w = _equation_coeffs(prob, eta, y, z)
    a = np.zeros(prob.n_users)
    regular = (s < 0) & (o > 0) & (w > 0)
    if np.any(regular):
        a[regular] = _bisect(s[regular], o[regular], w[regular])
    # local term vanished from the surrogate (z = 0): maximise o*2sqrt(a) - w*a
    flat_local = (s == 0) & (o > 0)
    with np.errstate(divide="ignore"):
        a[flat_local] = np.where(w[flat_local] > 0,
                                 np.minimum((o[flat_local] / w[flat_local]) ** 2, 1.0), 1.0)
    # o == 0: offloading contributes nothing, keep all energy local (a = 0)
    return a


@dataclass
class EnergyResult:
    a: np.ndarray
    objective: float
    dual_trajectory: list = field(default_factory=list)
    objective_trajectory: list = field(default_factory=list)
    converged: bool = True
    n_outer: int = 0


def solve_energy(init, state, ch, params, tol: float = 1e-8, max_outer: int = 100,
                 max_inner: int = 500) -> EnergyResult:
    """Alternating dual/quadratic-transform ascent for the energy partition.

    ``init`` is an ``EnergySolverState`` or a plain partition vector. The
    dual objective is recorded after every update and never decreases; the
    best partition seen (by the true objective) is returned.
    """
    a = np.array(init.a if isinstance(init, EnergySolverState) else init, float)
    if np.any(a < 0) or np.any(a > 1):
        raise ModelError("initial partition outside [0, 1]")
    prob = energy_problem(state, ch, params)
    best_a, best_f = a.copy(), energy_objective(prob, a)
    # a_k = 0 zeroes y_k and freezes user k in the transform; restart it
    # slightly inside, the best-iterate memory still covers the given point
    a = np.where(a <= 0.0, A_LIFT, a)
    f = energy_objective(prob, a)
    if f > best_f:
        best_a, best_f = a.copy(), f
    dual_traj, obj_traj = [], [f]
    converged = False
    outer = 0
    for outer in range(1, max_outer + 1):
        eta = update_eta(prob, a)
        d_prev = dual_objective(prob, a, eta)
        dual_traj.append(d_prev)
        for _ in range(max_inner):
            y, z = update_yz(prob, a, eta)
            a = _argmax_a(prob, eta, y, z)
            d = dual_objective(prob, a, eta)
            dual_traj.append(d)
            if d - d_prev <= tol * max(abs(d), 1.0):
                break
            d_prev = d
        f_new = energy_objective(prob, a)
        obj_traj.append(f_new)
        if f_new > best_f:
            best_a, best_f = a.copy(), f_new
        if abs(f_new - f) <= tol * max(abs(f_new), 1.0):
            converged = True
            break
        f = f_new
    if not converged:
        log.warning("energy partition solver hit the outer iteration cap (%d)", max_outer)
    return EnergyResult(best_a, best_f, dual_traj, obj_traj, converged, outer)
