"""Block coordinate ascent over (V, theta, rho, a) and the DoF check.

One outer iteration updates, in order, the receive beamformers (closed form),
the phases (Armijo gradient ascent), the amplitudes (binary continuation
solver, or a variant selected by ``BcdConfig.rho_mode``) and the energy
partition (dual/quadratic-transform solver). The amplitude block optimises a
penalised surrogate, so the true objective can dip on that block; the best
state ever observed is what gets returned.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .amplitude import ArmijoParams, SmoothingSchedule, solve_amplitudes, solve_relaxed_amplitudes
from .beamforming import optimal_beamformers, zero_forcing
from .channels import make_rng
from .energy import solve_energy
from .model import (Beamformers, ChannelSet, DecisionState, EnergyPartition, StarConfig,
                    SystemParams, effective_channels, total_objective)
from .phases import solve_phases

__all__ = ["DofReport", "dof_feasibility", "BcdConfig", "BcdTrace", "BcdResult",
           "BcdError", "initial_state", "run_bcd"]

log = logging.getLogger(__name__)

RHO_MODES = ("smoothing", "penalty", "relaxed", "fixed")
BEAM_MODES = ("optimal", "zf")


@dataclass(frozen=True)
class DofReport:
    rank_direct_t: int
    rank_direct_r: int
    elements_needed: int
    n_elements: int
    antennas_cover_users: bool

    @property
    def feasible(self) -> bool:
        return self.n_elements >= self.elements_needed


def _numerical_rank(A, rel=1e-10) -> int:
    if A.size == 0:
        return 0
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rel * sv[0]))


def dof_feasibility(ch: ChannelSet, params: SystemParams | None = None) -> DofReport:
    """Necessary element count ``M >= K - b - j`` for serving all users, where
    ``b``/``j`` are the ranks of the direct channels of the transmission and
    reflection users. The bound assumes ``N >= K``; whether that holds is
    recorded in ``antennas_cover_users``."""
    T = ch.n_transmission_users
    b = _numerical_rank(ch.direct[:, :T])
    j = _numerical_rank(ch.direct[:, T:])
    K = ch.n_users
    return DofReport(b, j, max(0, K - b - j), ch.n_elements, ch.n_antennas >= K)


class BcdError(RuntimeError):
    def __init__(self, block, trace, cause):
        super().__init__(f"block '{block}' failed: {cause}")
        self.block = block
        self.trace = trace


@dataclass(frozen=True)
class BcdConfig:
    max_outer: int = 50
    tol: float = 1e-4
    rho_mode: str = "smoothing"
    update_theta: bool = True
    update_energy: bool = True
    beam_mode: str = "optimal"
    armijo: ArmijoParams = ArmijoParams()
    smoothing: dict = field(default_factory=dict)   # SmoothingSchedule.for_scale keywords
    phase_tol: float = 1e-8
    phase_max_iter: int = 500
    energy_tol: float = 1e-8
    monotone_slack: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.rho_mode not in RHO_MODES:
            raise ValueError(f"rho_mode must be one of {RHO_MODES}")
        if self.beam_mode not in BEAM_MODES:
            raise ValueError(f"beam_mode must be one of {BEAM_MODES}")


@dataclass
class BcdTrace:
    objective: list = field(default_factory=list)       # after each outer iteration
    blocks: list = field(default_factory=list)          # (iteration, block, objective, seconds)
    violations: list = field(default_factory=list)      # (iteration, block, before, after)
    rounding_gaps: list = field(default_factory=list)
    flags: set = field(default_factory=set)

    def block_objectives(self, name):
        return [obj for _, b, obj, _ in self.blocks if b == name]


@dataclass
class BcdResult:
    state: DecisionState
    objective: float
    trace: BcdTrace
    converged: bool
    n_outer: int


def initial_state(ch: ChannelSet, params: SystemParams, seed=0, phases=None,
                  amplitudes=None, a=None) -> DecisionState:
    """Random phases, barycentric amplitudes, a = 1/2 and matched beamformers."""
    M = ch.n_elements
    if phases is None:
        phases = make_rng(seed, 0x7e7a).uniform(0.0, 2.0 * np.pi, size=M)
    if amplitudes is None:
        amplitudes = np.full(2 * M, 0.5)
    if a is None:
        a = np.full(params.n_users, 0.5)
    g = effective_channels(phases, amplitudes, ch)
    v = np.where(np.abs(g) > 0, g, 1.0)
    return DecisionState(StarConfig(phases, amplitudes), Beamformers(v), EnergyPartition(a))


def _update_beams(state, ch, params, cfg, trace):
    if cfg.beam_mode == "optimal":
        return state.with_(v=optimal_beamformers(state, ch, params))
    g = effective_channels(state.star.phases, state.star.amplitudes, ch)
    v, exact = zero_forcing(g)
    if not exact:
        trace.flags.add("zf_degraded")
    return state.with_(v=v)


def _update_rho(state, ch, params, cfg, trace):
    M = ch.n_elements
    if cfg.rho_mode == "relaxed":
        res = solve_relaxed_amplitudes(state.star.amplitudes, state, ch, params, cfg.armijo)
        return state.with_(amplitudes=res.x)
    init = np.full(2 * M, 0.5)
    sched = None
    if cfg.smoothing:
        from .amplitude import smoothed_objective
        scale = smoothed_objective(init, state, ch, params, 0.0, 0.0)
        sched = SmoothingSchedule.for_scale(scale, penalty_only=cfg.rho_mode == "penalty",
                                            **cfg.smoothing)
    res = solve_amplitudes(init, state, ch, params, sched, cfg.armijo,
                           penalty_only=cfg.rho_mode == "penalty")
    trace.rounding_gaps.append(res.rounding_gap)
    if not res.converged:
        trace.flags.add("rho_not_converged")
    return state.with_(amplitudes=res.rho_binary)


def _update_theta(state, ch, params, cfg, trace):
    res = solve_phases(state.star.phases, state, ch, params, cfg.armijo,
                       cfg.phase_tol, cfg.phase_max_iter)
    if not res.converged:
        trace.flags.add("theta_not_converged")
    return state.with_(phases=res.theta)


def _update_energy(state, ch, params, cfg, trace):
    res = solve_energy(state.energy.a, state, ch, params, tol=cfg.energy_tol)
    if not res.converged:
        trace.flags.add("energy_not_converged")
    return state.with_(a=res.a)


def run_bcd(ch: ChannelSet, params: SystemParams, config: BcdConfig = BcdConfig(),
            init: DecisionState | None = None) -> BcdResult:
    """Cyclic block updates until the relative gain of the joint objective
    drops below ``config.tol`` or ``config.max_outer`` is reached."""
    ch.check(params)
    cfg = config
    state = init if init is not None else initial_state(ch, params, cfg.seed)
    trace = BcdTrace()
    blocks = [("V", _update_beams)]
    if cfg.update_theta and ch.n_elements:
        blocks.append(("theta", _update_theta))
    if cfg.rho_mode != "fixed" and ch.n_elements:
        blocks.append(("rho", _update_rho))
    if cfg.update_energy:
        blocks.append(("a", _update_energy))
    monotone = {"V", "theta", "a"} if cfg.beam_mode == "optimal" else {"theta", "a"}

    obj = total_objective(state, ch, params)
    best_state, best_obj = state, obj
    prev = None
    converged = False
    it = 0
    for it in range(1, cfg.max_outer + 1):
        for name, update in blocks:
            t0 = time.perf_counter()
            try:
                new_state = update(state, ch, params, cfg, trace)
                new_obj = total_objective(new_state, ch, params)
            except Exception as exc:
                raise BcdError(name, trace, exc) from exc
            trace.blocks.append((it, name, new_obj, time.perf_counter() - t0))
            if name in monotone and new_obj < obj - cfg.monotone_slack * abs(obj):
                trace.violations.append((it, name, obj, new_obj))
                log.warning("block %s decreased the objective: %g -> %g", name, obj, new_obj)
            state, obj = new_state, new_obj
            if obj > best_obj and _valid_output(state, cfg):
                best_state, best_obj = state, obj
        trace.objective.append(obj)
        if prev is not None and abs(obj - prev) <= cfg.tol * max(abs(obj), 1.0):
            converged = True
            break
        prev = obj
    if not converged:
        trace.flags.add("bcd_not_converged")
    if not _valid_output(best_state, cfg):
        best_state, best_obj = state, obj
    return BcdResult(best_state, best_obj, trace, converged, it)


def _valid_output(state, cfg):
    # binary modes only report binary surfaces
    if cfg.rho_mode in ("smoothing", "penalty"):
        return state.star.binary
    return True
