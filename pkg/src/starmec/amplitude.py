"""Binary transmission/reflection amplitude design.

The binary constraint ``rho in {0,1}`` is replaced by the exact penalty
``-gamma * sum(rho - rho^2)`` on the box, and a logarithmic barrier
``-mu * Phi(rho)`` with ``Phi = -sum(ln rho) - sum(ln(1 - rho))`` smooths the
early subproblems. Each (mu, gamma) stage is solved by projected gradient
ascent with Armijo backtracking; ``mu`` is annealed down while ``gamma``
grows, and the near-binary result is rounded at the end.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .model import DecisionState, ChannelSet, SystemParams, ModelError, sum_offload_rate_and_grads

__all__ = [
    "SmoothingSchedule", "ArmijoParams", "AmplitudeResult", "AmplitudeSolverError",
    "smoothed_objective", "grad_rho", "project_rho", "project_pair",
    "round_binary", "solve_amplitudes", "solve_relaxed_amplitudes", "projected_ascent",
]

log = logging.getLogger(__name__)

BARRIER_GUARD = 1e-9


class AmplitudeSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArmijoParams:
    """Backtracking constants. ``step0`` is the largest coordinate move tried
    on the first iteration; later iterations start from the previous
    accepted step enlarged by ``1 / shrink``."""

    step0: float = 1.0
    shrink: float = 0.5
    slope_coeff: float = 1e-4
    max_backtracks: int = 40

    def __post_init__(self):
        if not (self.step0 > 0 and 0 < self.shrink < 1 and 0 < self.slope_coeff < 1
                and self.max_backtracks >= 1):
            raise ValueError(f"invalid Armijo parameters {self}")


@dataclass(frozen=True)
class SmoothingSchedule:
    """Barrier/penalty continuation. ``eps_obj`` is relative to the stage
    objective magnitude; the others are absolute."""

    mu0: float
    gamma0: float
    eta_mu: float = 0.5
    eta_gamma: float = 2.0
    eps_obj: float = 1e-6
    eps_mu: float = 1e-6
    eps_gamma: float = 1e4
    max_inner: int = 500
    max_stages: int = 200

    def __post_init__(self):
        if self.mu0 < 0 or self.gamma0 <= 0:
            raise ValueError("mu0 must be >= 0 and gamma0 > 0")
        if not (0 < self.eta_mu < 1 and self.eta_gamma > 1):
            raise ValueError("need eta_mu in (0,1) and eta_gamma > 1")
        if min(self.eps_obj, self.eps_mu, self.eps_gamma) <= 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def for_scale(cls, scale: float, *, mu_rel=0.1, gamma_rel=1.0, eta_mu=0.5,
                  eta_gamma=2.0, eps_obj=1e-6, eps_mu_rel=1e-6, eps_gamma_rel=1e4,
                  penalty_only=False, **kw) -> "SmoothingSchedule":
        """Schedule proportional to the objective magnitude ``scale``:
        ``mu0 = mu_rel * scale``, ``gamma0 = gamma_rel * mu0``, and the end
        points ``eps_mu``/``eps_gamma`` relative to ``mu0``/``gamma0``.
        ``penalty_only`` drops the barrier (``mu = 0`` throughout)."""
        scale = max(abs(float(scale)), np.finfo(float).tiny)
        mu0 = mu_rel * scale
        gamma0 = gamma_rel * mu0
        return cls(mu0=0.0 if penalty_only else mu0, gamma0=gamma0, eta_mu=eta_mu,
                   eta_gamma=eta_gamma, eps_obj=eps_obj, eps_mu=eps_mu_rel * mu0,
                   eps_gamma=eps_gamma_rel * gamma0, **kw)


# ---------------------------------------------------------------------------
# objective, gradient, projection
# ---------------------------------------------------------------------------

def _check_domain(rho, mu):
    if mu > 0 and (np.any(rho <= 0) or np.any(rho >= 1)):
        raise ModelError("barrier evaluated outside the open unit box")
    if mu == 0 and (np.any(rho < 0) or np.any(rho > 1)):
        raise ModelError("amplitudes outside [0, 1]")


def _value_and_grad(rho, state, ch, params, mu, gamma):
    rho = np.asarray(rho, float)
    _check_domain(rho, mu)
    rate, g_rate, _ = sum_offload_rate_and_grads(
        state.star.phases, rho, state.beams.v, state.energy.a, ch, params)
    val = rate - gamma * np.sum(rho - rho ** 2)
    grad = g_rate - gamma * (1.0 - 2.0 * rho)
    if mu > 0:
        val += mu * np.sum(np.log(rho) + np.log1p(-rho))
        grad = grad + mu * (1.0 / rho - 1.0 / (1.0 - rho))
    return float(val), grad


def smoothed_objective(rho, state: DecisionState, ch: ChannelSet, params: SystemParams,
                       mu: float, gamma: float) -> float:
    """Sum offloading rate minus the binary penalty and barrier terms."""
    return _value_and_grad(rho, state, ch, params, mu, gamma)[0]


def grad_rho(rho, state, ch, params, mu, gamma) -> np.ndarray:
    return _value_and_grad(rho, state, ch, params, mu, gamma)[1]


def project_pair(x_t, x_r, tol=1e-14, max_iter=200):
    """Project pairs onto ``{t + r = 1, 0 <= t, r <= 1}`` by bisection on the
    shift ``lam`` in ``clip(x_t - lam) + clip(x_r - lam) = 1``.

    Vectorised over pairs. The bracket ``[min - 1, max]`` is valid because
    the clipped sum is non-increasing in ``lam``, at least 1 at the left end
    and at most 1 at the right end.
    """
    x_t = np.asarray(x_t, float)
    x_r = np.asarray(x_r, float)
    lo = np.minimum(x_t, x_r) - 1.0
    hi = np.maximum(x_t, x_r)
    for _ in range(max_iter):
        lam = 0.5 * (lo + hi)
        s = np.clip(x_t - lam, 0, 1) + np.clip(x_r - lam, 0, 1)
        above = s > 1
        lo = np.where(above, lam, lo)
        hi = np.where(above, hi, lam)
        if np.all(hi - lo <= tol):
            break
    lam = 0.5 * (lo + hi)
    t = np.clip(x_t - lam, 0, 1)
    r = np.clip(x_r - lam, 0, 1)
    # remove the bisection residual from the pair sum; clip returns exact
    # 0/1 for a saturated coordinate, so it determines its partner
    r_sat = (r == 0) | (r == 1)
    t = np.where(r_sat, 1.0 - r, t)
    r = np.where(r_sat, r, 1.0 - t)
    return t, r, lam


def project_rho(rho_half) -> np.ndarray:
    """Euclidean projection of a length-2M vector onto the pair-sum/box set."""
    rho_half = np.asarray(rho_half, float)
    if rho_half.ndim != 1 or rho_half.size % 2:
        raise ModelError("amplitude vector must have even length")
    if not np.all(np.isfinite(rho_half)):
        raise ModelError("cannot project a non-finite vector")
    M = rho_half.size // 2
    t, r, _ = project_pair(rho_half[:M], rho_half[M:])
    return np.concatenate([t, r])


def round_binary(rho) -> np.ndarray:
    """Larger coordinate of each pair becomes 1 (ties go to transmission)."""
    rho = np.asarray(rho, float)
    M = rho.size // 2
    t = (rho[:M] >= rho[M:]).astype(float)
    return np.concatenate([t, 1.0 - t])


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

_MAX_STEP = 1e300


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    trajectory: list
    converged: bool
    step: float


def projected_ascent(fun, x0, project, armijo: ArmijoParams, rel_tol: float,
                     max_iter: int, step=None) -> AscentResult:
    """Projected gradient ascent with Armijo backtracking.

    ``fun(x) -> (value, grad)``. Stops when the accepted improvement falls
    below ``rel_tol * max(|value|, 1)``, when no step passes the Armijo test,
    or after ``max_iter`` accepted steps (``converged`` is then False).
    """
    x = project(np.asarray(x0, float))
    f, g = fun(x)
    if not np.isfinite(f):
        raise AmplitudeSolverError(f"non-finite objective {f} at the start point")
    traj = [f]
    if step is None:
        gmax = np.max(np.abs(g)) if g.size else 0.0
        # a vanishing gradient (e.g. zero transmit power) would overflow the step
        step = armijo.step0 / gmax if gmax > armijo.step0 / _MAX_STEP else armijo.step0
    for _ in range(max_iter):
        if g.size == 0 or np.max(np.abs(g)) * min(step / armijo.shrink, _MAX_STEP) == 0.0:
            return AscentResult(x, f, traj, True, step)
        tau = min(step / armijo.shrink, _MAX_STEP)
        for _ in range(armijo.max_backtracks):
            x_new = project(x + tau * g)
            d = x_new - x
            slope = float(g @ d)
            if slope <= 0:
                tau *= armijo.shrink
                continue
            f_new, g_new = fun(x_new)
            if not np.isfinite(f_new):
                raise AmplitudeSolverError(f"non-finite objective {f_new} during line search")
            if f_new >= f + armijo.slope_coeff * slope:
                break
            tau *= armijo.shrink
        else:
            return AscentResult(x, f, traj, True, step)
        gain = f_new - f
        x, f, g, step = x_new, f_new, g_new, tau
        traj.append(f)
        if gain <= rel_tol * max(abs(f), 1.0):
            return AscentResult(x, f, traj, True, step)
    return AscentResult(x, f, traj, False, step)


@dataclass
class AmplitudeResult:
    rho_binary: np.ndarray
    rho_relaxed: np.ndarray
    rounding_gap: float
    trajectory: list = field(default_factory=list)   # one array per stage
    converged: bool = True
    n_stages: int = 0


def _stage_projector(mu):
    if mu > 0:
        return lambda x: np.clip(project_rho(x), BARRIER_GUARD, 1.0 - BARRIER_GUARD)
    return project_rho


def solve_amplitudes(init_rho, state: DecisionState, ch: ChannelSet, params: SystemParams,
                     sched: SmoothingSchedule | None = None,
                     armijo: ArmijoParams = ArmijoParams(), *,
                     penalty_only: bool = False) -> AmplitudeResult:
    """Smoothing-based continuation for the binary amplitude subproblem.

    ``init_rho`` must be pair-feasible and strictly interior. Without an
    explicit schedule one is built from the rate at ``init_rho``
    (see ``SmoothingSchedule.for_scale``); ``penalty_only`` then removes the
    barrier. Phases, beamformers and energies are taken from ``state``.
    """
    rho = np.asarray(init_rho, float)
    M = ch.n_elements
    if rho.shape != (2 * M,):
        raise ModelError("initial amplitude vector has the wrong length")
    if M == 0:
        return AmplitudeResult(rho.copy(), rho.copy(), 0.0)
    if not np.allclose(rho[:M] + rho[M:], 1.0, atol=1e-9):
        raise ModelError("initial amplitudes are not pair-feasible")
    if sched is None:
        scale = smoothed_objective(rho, state, ch, params, 0.0, 0.0)
        sched = SmoothingSchedule.for_scale(scale, penalty_only=penalty_only)
    if sched.mu0 > 0 and (np.any(rho <= 0) or np.any(rho >= 1)):
        raise ModelError("initial amplitudes must be strictly interior")

    mu, gamma = sched.mu0, sched.gamma0
    traj = []
    converged = True
    stages = 0
    step = None
    while gamma < sched.eps_gamma or mu > sched.eps_mu:
        if stages >= sched.max_stages:
            converged = False
            log.warning("amplitude continuation hit the stage cap (%d)", stages)
            break
        fun = (lambda x, mu=mu, gamma=gamma:
               _value_and_grad(x, state, ch, params, mu, gamma))
        res = projected_ascent(fun, rho, _stage_projector(mu), armijo,
                               sched.eps_obj, sched.max_inner, step=step)
        rho, step = res.x, res.step
        traj.append(np.asarray(res.trajectory))
        converged &= res.converged
        gamma *= sched.eta_gamma
        mu *= sched.eta_mu
        stages += 1
    if not converged:
        log.warning("amplitude solver returned before inner convergence")
    gap = float(np.max(np.minimum(rho, 1.0 - rho)))
    return AmplitudeResult(round_binary(rho), rho, gap, traj, converged, stages)


def solve_relaxed_amplitudes(init_rho, state, ch, params, armijo=ArmijoParams(),
                             rel_tol=1e-8, max_iter=2000) -> AscentResult:
    """Continuous amplitudes on the pair-sum/box set (no penalty, no barrier)."""
    if ch.n_elements == 0:
        rho = np.asarray(init_rho, float)
        return AscentResult(rho, smoothed_objective(rho, state, ch, params, 0, 0), [], True, 1.0)
    fun = lambda x: _value_and_grad(x, state, ch, params, 0.0, 0.0)
    return projected_ascent(fun, init_rho, project_rho, armijo, rel_tol, max_iter)
