"""Comparison schemes built from the core block solvers.

Every scheme is the BCD loop with some blocks pinned or swapped:

============== ===========================================================
ProposedMs     full BCD, binary mode switching
ConventionalRis half the elements transmit-only, half reflect-only
RandomPhase    phases drawn uniformly and kept fixed
EsUpperBound   amplitudes relaxed to [0, 1] with the pair-sum constraint
EqualTime      whole surface transmits for L/2, then reflects for L/2
ZfEqualEnergy  zero-forcing receiver with a_k = 1/2
============== ===========================================================
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bcd import BcdConfig, initial_state, run_bcd
from .channels import make_rng
from .model import (ChannelSet, DecisionState, ModelError, SystemParams, local_rates,
                    offload_rates)

__all__ = ["Scheme", "SchemeResult", "run_scheme", "conventional_amplitudes"]


class Scheme(str, Enum):
    PROPOSED_MS = "ProposedMs"
    CONVENTIONAL_RIS = "ConventionalRis"
    RANDOM_PHASE = "RandomPhase"
    ES_UPPER_BOUND = "EsUpperBound"
    EQUAL_TIME = "EqualTime"
    ZF_EQUAL_ENERGY = "ZfEqualEnergy"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        for s in cls:
            if s.value.lower() == name.strip().lower():
                return s
        raise ValueError(f"unknown scheme '{name}'; choose from {[s.value for s in cls]}")


@dataclass
class SchemeResult:
    scheme: Scheme
    objective: float
    offload: np.ndarray          # per-user offloading rate, bit/s
    local: np.ndarray            # per-user local rate, bit/s
    a: np.ndarray
    states: list                 # one DecisionState, two for EqualTime
    converged: bool
    flags: set = field(default_factory=set)
    n_outer: int = 0


def conventional_amplitudes(m_elements: int) -> np.ndarray:
    """First half transmit-only, second half reflect-only."""
    if m_elements % 2:
        raise ModelError("the conventional-RIS baseline needs an even element count")
    half = m_elements // 2
    t = np.r_[np.ones(half), np.zeros(half)]
    return np.r_[t, 1.0 - t]


def _from_bcd(scheme, res, ch, params, extra_flags=()):
    st = res.state
    return SchemeResult(scheme, res.objective, offload_rates(st, ch, params),
                        local_rates(st.energy.a, params), st.energy.a.copy(), [st],
                        res.converged and not res.trace.violations,
                        set(res.trace.flags) | set(extra_flags), res.n_outer)


def _half_problem(ch, params, users, reflect):
    users = np.asarray(users, int)
    n = len(users)
    sub_ch = ch.subset(users)
    sub = SystemParams(
        n_antennas=params.n_antennas,
        n_transmission_users=0 if reflect else n,
        n_reflection_users=n if reflect else 0,
        bandwidth_hz=params.bandwidth_hz / 2.0,   # active for half the slot
        slot_seconds=params.slot_seconds,
        noise_power_w=params.noise_power_w,
        energy_budget_j=params.energy_budget_j[users],
        cycles_per_bit=params.cycles_per_bit[users],
        capacitance_coeff=params.capacitance_coeff[users],
        offload_seconds=params.tx_seconds / 2.0)
    return sub_ch, sub


def _equal_time(ch, params, config):
    K, T, M = params.n_users, params.n_transmission_users, ch.n_elements
    offload, local, a = np.zeros(K), np.zeros(K), np.zeros(K)
    states, flags, converged, n_outer = [], set(), True, 0
    for users, reflect in ((np.arange(T), False), (np.arange(T, K), True)):
        if users.size == 0:
            continue
        sub_ch, sub = _half_problem(ch, params, users, reflect)
        side = np.r_[np.zeros(M), np.ones(M)] if reflect else np.r_[np.ones(M), np.zeros(M)]
        init = initial_state(sub_ch, sub, config.seed, amplitudes=side)
        res = run_bcd(sub_ch, sub, dataclasses.replace(config, rho_mode="fixed"), init)
        st = res.state
        offload[users] = offload_rates(st, sub_ch, sub)
        local[users] = local_rates(st.energy.a, sub)
        a[users] = st.energy.a
        states.append(st)
        flags |= res.trace.flags
        converged &= res.converged and not res.trace.violations
        n_outer = max(n_outer, res.n_outer)
    return SchemeResult(Scheme.EQUAL_TIME, float(offload.sum() + local.sum()), offload,
                        local, a, states, converged, flags, n_outer)


def run_scheme(scheme, ch: ChannelSet, params: SystemParams,
               config: BcdConfig = BcdConfig(), ms_result: SchemeResult | None = None
               ) -> SchemeResult:
    """Run one comparison scheme on a channel realization.

    ``EsUpperBound`` starts from the mode-switching solution (``ms_result``,
    computed here if not given), so its objective is never below it.
    """
    scheme = Scheme.parse(scheme) if isinstance(scheme, str) else scheme
    ch.check(params)
    M = ch.n_elements
    cfg = config
    if scheme is Scheme.PROPOSED_MS:
        return _from_bcd(scheme, run_bcd(ch, params, cfg), ch, params)
    if scheme is Scheme.CONVENTIONAL_RIS:
        init = initial_state(ch, params, cfg.seed, amplitudes=conventional_amplitudes(M))
        res = run_bcd(ch, params, dataclasses.replace(cfg, rho_mode="fixed"), init)
        return _from_bcd(scheme, res, ch, params)
    if scheme is Scheme.RANDOM_PHASE:
        phases = make_rng(cfg.seed, 0x9a5e).uniform(0.0, 2.0 * np.pi, size=M)
        init = initial_state(ch, params, cfg.seed, phases=phases)
        res = run_bcd(ch, params, dataclasses.replace(cfg, update_theta=False), init)
        return _from_bcd(scheme, res, ch, params)
    if scheme is Scheme.ES_UPPER_BOUND:
        if ms_result is None:
            ms_result = run_scheme(Scheme.PROPOSED_MS, ch, params, cfg)
        init: DecisionState = ms_result.states[0]
        res = run_bcd(ch, params, dataclasses.replace(cfg, rho_mode="relaxed"), init)
        return _from_bcd(scheme, res, ch, params)
    if scheme is Scheme.EQUAL_TIME:
        return _equal_time(ch, params, cfg)
    if scheme is Scheme.ZF_EQUAL_ENERGY:
        init = initial_state(ch, params, cfg.seed, a=np.full(params.n_users, 0.5))
        res = run_bcd(ch, params, dataclasses.replace(cfg, beam_mode="zf", update_energy=False), init)
        extra = {"zf_degraded"} if params.n_antennas < params.n_users else set()
        return _from_bcd(scheme, res, ch, params, extra)
    raise ValueError(f"unhandled scheme {scheme}")
