"""System model of the STAR-RIS assisted MEC uplink.

Domain value types plus exact evaluation of the effective channels, the
per-user SINR, offloading and local computation rates, and the joint
computation-rate objective.

Amplitude vectors always use the layout ``[rho_t(1..M), rho_r(1..M)]`` so
that the transmission/reflection pair of element ``m`` sits at indices
``m`` and ``m + M``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

__all__ = [
    "Space", "ModelError", "SystemParams", "ChannelSet", "StarConfig",
    "Beamformers", "EnergyPartition", "DecisionState",
    "effective_channel", "effective_channels", "side_amplitudes",
    "transmit_powers", "link_matrix", "sinr", "sinr_all", "offload_rate",
    "offload_rates", "local_rate", "local_rates", "sum_offload_rate",
    "sum_offload_rate_and_grads", "total_objective",
]


class ModelError(ValueError):
    """Raised on dimension mismatches and out-of-domain inputs."""


class Space(str, Enum):
    TRANSMISSION = "transmission"
    REFLECTION = "reflection"


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SystemParams:
    """Static scenario constants.

    ``offload_seconds`` is the transmission duration used to turn offloading
    energy into power (``p = a E / offload_seconds``); it defaults to the slot
    length and only differs for time-split baselines.
    """

    n_antennas: int
    n_transmission_users: int
    n_reflection_users: int
    bandwidth_hz: float
    slot_seconds: float
    noise_power_w: float
    energy_budget_j: np.ndarray
    cycles_per_bit: np.ndarray
    capacitance_coeff: np.ndarray
    offload_seconds: float | None = None

    def __post_init__(self):
        K = self.n_transmission_users + self.n_reflection_users
        if self.n_antennas <= 0:
            raise ModelError("n_antennas must be positive")
        if self.n_transmission_users < 0 or self.n_reflection_users < 0:
            raise ModelError("user counts must be non-negative")
        if K <= 0:
            raise ModelError("at least one user is required")
        for name in ("bandwidth_hz", "slot_seconds", "noise_power_w"):
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be strictly positive")
        if self.offload_seconds is not None and not self.offload_seconds > 0:
            raise ModelError("offload_seconds must be strictly positive")
        for name in ("energy_budget_j", "cycles_per_bit", "capacitance_coeff"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), float), (K,))
            if not np.all(arr > 0):
                raise ModelError(f"{name} must be strictly positive")
            object.__setattr__(self, name, _frozen(arr))

    @property
    def n_users(self) -> int:
        return self.n_transmission_users + self.n_reflection_users

    @property
    def tx_seconds(self) -> float:
        return self.slot_seconds if self.offload_seconds is None else self.offload_seconds

    @classmethod
    def default(cls, n_antennas=10, n_transmission_users=4, n_reflection_users=4,
                **overrides) -> "SystemParams":
        """Simulation defaults: B = 1 MHz, L = 1 s, noise -90 dBm,
        E = 10 J, C = 200 cycles/bit, kappa = 1e-25."""
        kw = dict(bandwidth_hz=1e6, slot_seconds=1.0, noise_power_w=1e-12,
                  energy_budget_j=10.0, cycles_per_bit=200.0,
                  capacitance_coeff=1e-25)
        kw.update(overrides)
        return cls(n_antennas=n_antennas,
                   n_transmission_users=n_transmission_users,
                   n_reflection_users=n_reflection_users, **kw)


@dataclass(frozen=True)
class ChannelSet:
    """All channel matrices of one realization.

    direct : (N, K) columns ``h_d,k``
    user_to_ris : (M, K) columns ``h_s,k``
    ris_to_ap : (M, N) matrix ``G``
    is_reflection : (K,) bool, True for reflection-space users
    """

    direct: np.ndarray
    user_to_ris: np.ndarray
    ris_to_ap: np.ndarray
    is_reflection: np.ndarray

    def __post_init__(self):
        hd = _frozen(self.direct, complex)
        hs = _frozen(self.user_to_ris, complex)
        G = _frozen(self.ris_to_ap, complex)
        refl = _frozen(self.is_reflection, bool)
        if hd.ndim != 2 or hs.ndim != 2 or G.ndim != 2 or refl.ndim != 1:
            raise ModelError("channel arrays have wrong rank")
        N, K = hd.shape
        M = hs.shape[0]
        if hs.shape != (M, K) or G.shape != (M, N) or refl.shape != (K,):
            raise ModelError(
                f"inconsistent channel shapes: direct {hd.shape}, "
                f"user_to_ris {hs.shape}, ris_to_ap {G.shape}, labels {refl.shape}")
        T = int(np.sum(~refl))
        if np.any(refl[:T]) or not np.all(refl[T:]):
            raise ModelError("transmission users must precede reflection users")
        for a in (hd, hs, G):
            if not np.all(np.isfinite(a)):
                raise ModelError("channels must be finite")
        object.__setattr__(self, "direct", hd)
        object.__setattr__(self, "user_to_ris", hs)
        object.__setattr__(self, "ris_to_ap", G)
        object.__setattr__(self, "is_reflection", refl)

    @property
    def n_elements(self) -> int:
        return self.user_to_ris.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.direct.shape[0]

    @property
    def n_users(self) -> int:
        return self.direct.shape[1]

    @property
    def n_transmission_users(self) -> int:
        return int(np.sum(~self.is_reflection))

    @property
    def space_label(self) -> list[Space]:
        return [Space.REFLECTION if r else Space.TRANSMISSION for r in self.is_reflection]

    def check(self, params: SystemParams) -> None:
        if (self.n_antennas != params.n_antennas or self.n_users != params.n_users
                or self.n_transmission_users != params.n_transmission_users):
            raise ModelError("channel set does not match system parameters")

    def subset(self, users) -> "ChannelSet":
        """Channels restricted to the given user indices (order kept)."""
        users = np.asarray(users, dtype=int)
        return ChannelSet(self.direct[:, users], self.user_to_ris[:, users],
                          self.ris_to_ap, self.is_reflection[users])


@dataclass(frozen=True)
class StarConfig:
    phases: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        th = _frozen(self.phases)
        rho = _frozen(self.amplitudes)
        if th.ndim != 1 or rho.shape != (2 * th.size,):
            raise ModelError("amplitudes must have length 2M for M phases")
        if np.any(rho < 0) or np.any(rho > 1):
            raise ModelError("amplitudes must lie in [0, 1]")
        object.__setattr__(self, "phases", th)
        object.__setattr__(self, "amplitudes", rho)

    @property
    def n_elements(self) -> int:
        return self.phases.size

    @property
    def pair_feasible(self) -> bool:
        M = self.n_elements
        return bool(np.allclose(self.amplitudes[:M] + self.amplitudes[M:], 1.0,
                                rtol=0, atol=1e-12))

    @property
    def binary(self) -> bool:
        return bool(np.all((self.amplitudes == 0) | (self.amplitudes == 1)))

    @classmethod
    def barycenter(cls, phases) -> "StarConfig":
        phases = np.asarray(phases, float)
        return cls(phases, np.full(2 * phases.size, 0.5))


@dataclass(frozen=True)
class Beamformers:
    v: np.ndarray

    def __post_init__(self):
        v = _frozen(self.v, complex)
        if v.ndim != 2:
            raise ModelError("beamformer matrix must be N x K")
        if np.any(np.linalg.norm(v, axis=0) <= 0):
            raise ModelError("every beamformer column needs a positive norm")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class EnergyPartition:
    a: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a)
        if a.ndim != 1 or np.any(a < 0) or np.any(a > 1) or not np.all(np.isfinite(a)):
            raise ModelError("energy partition must lie in [0, 1]^K")
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class DecisionState:
    star: StarConfig
    beams: Beamformers
    energy: EnergyPartition

    def with_(self, *, phases=None, amplitudes=None, v=None, a=None) -> "DecisionState":
        """Copy with some blocks replaced."""
        star = self.star
        if phases is not None or amplitudes is not None:
            star = StarConfig(star.phases if phases is None else phases,
                              star.amplitudes if amplitudes is None else amplitudes)
        beams = self.beams if v is None else Beamformers(v)
        energy = self.energy if a is None else EnergyPartition(a)
        return replace(self, star=star, beams=beams, energy=energy)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def side_amplitudes(rho, ch: ChannelSet) -> np.ndarray:
    """(M, K) matrix whose column ``k`` holds the amplitudes seen by user k."""
    rho = np.asarray(rho, float)
    M = ch.n_elements
    if rho.shape != (2 * M,):
        raise ModelError(f"amplitude vector has length {rho.shape}, expected {2 * M}")
    return np.where(ch.is_reflection[None, :], rho[M:, None], rho[:M, None])


def effective_channels(phases, rho, ch: ChannelSet) -> np.ndarray:
    """All effective channels ``g_k`` as the columns of an (N, K) matrix."""
    phases = np.asarray(phases, float)
    if phases.shape != (ch.n_elements,):
        raise ModelError("phase vector length does not match the surface")
    omega = side_amplitudes(rho, ch)
    cascade = omega * np.exp(1j * phases)[:, None] * ch.user_to_ris
    return ch.direct + ch.ris_to_ap.conj().T @ cascade


def effective_channel(k: int, star: StarConfig, ch: ChannelSet) -> np.ndarray:
    if not 0 <= k < ch.n_users:
        raise ModelError(f"user index {k} out of range")
    if star.n_elements != ch.n_elements:
        raise ModelError("surface configuration does not match the channel set")
    return effective_channels(star.phases, star.amplitudes, ch)[:, k]


def transmit_powers(a, params: SystemParams) -> np.ndarray:
    return np.asarray(a, float) * params.energy_budget_j / params.tx_seconds


def link_matrix(v, g) -> np.ndarray:
    """``U[k, l] = v_k^H g_l``."""
    return np.asarray(v).conj().T @ np.asarray(g)


def _sinr_from_links(U, p, vnorm2, noise):
    gain = np.abs(U) ** 2 * p[None, :]
    signal = np.diag(gain).copy()
    interference = gain.sum(axis=1) - signal + noise * vnorm2
    return signal / interference


def sinr_all(state: DecisionState, ch: ChannelSet, params: SystemParams) -> np.ndarray:
    ch.check(params)
    v = state.beams.v
    if v.shape != (params.n_antennas, params.n_users):
        raise ModelError("beamformer shape does not match the system")
    g = effective_channels(state.star.phases, state.star.amplitudes, ch)
    p = transmit_powers(state.energy.a, params)
    return _sinr_from_links(link_matrix(v, g), p, np.sum(np.abs(v) ** 2, axis=0),
                            params.noise_power_w)


def sinr(k: int, state: DecisionState, ch: ChannelSet, params: SystemParams) -> float:
    if not 0 <= k < params.n_users:
        raise ModelError(f"user index {k} out of range")
    return float(sinr_all(state, ch, params)[k])


def offload_rates(state, ch, params) -> np.ndarray:
    return params.bandwidth_hz * np.log2(1.0 + sinr_all(state, ch, params))


def offload_rate(k, state, ch, params) -> float:
    return float(params.bandwidth_hz * np.log2(1.0 + sinr(k, state, ch, params)))


def local_rates(a, params: SystemParams) -> np.ndarray:
    a = np.asarray(a, float)
    if np.any(a < 0) or np.any(a > 1):
        raise ModelError("energy partition outside [0, 1]")
    energy = np.maximum(1.0 - a, 0.0) * params.energy_budget_j
    return np.sqrt(energy / (params.slot_seconds * params.capacitance_coeff)) / params.cycles_per_bit


def local_rate(k: int, a_k: float, params: SystemParams) -> float:
    if not 0.0 <= a_k <= 1.0:
        raise ModelError(f"a_k = {a_k} outside [0, 1]")
    return float(local_rates(np.full(params.n_users, a_k), params)[k])


def sum_offload_rate(phases, rho, v, a, ch, params) -> float:
    """Sum of offloading rates for raw block values (no validation)."""
    g = effective_channels(phases, rho, ch)
    p = transmit_powers(a, params)
    s = _sinr_from_links(link_matrix(v, g), p, np.sum(np.abs(v) ** 2, axis=0),
                         params.noise_power_w)
    return float(params.bandwidth_hz * np.sum(np.log2(1.0 + s)))


def total_objective(state: DecisionState, ch: ChannelSet, params: SystemParams) -> float:
    """Sum computation rate (offloading + local) in bit/s."""
    return float(np.sum(offload_rates(state, ch, params))
                 + np.sum(local_rates(state.energy.a, params)))


def sum_offload_rate_and_grads(phases, rho, v, a, ch, params):
    """Sum offloading rate with its gradients w.r.t. the amplitudes and phases.

    With ``U[k, l] = v_k^H g_l`` the rate depends on the surface only through
    ``|U[k, l]|^2``; ``W[k, l]`` below is the partial derivative of the rate
    with respect to that squared magnitude. Every ``U[k, l]`` is affine in
    ``rho_{x(l), m} e^{j theta_m}`` with coefficient
    ``conj((G v_k)_m) h_s,l[m]``, which gives both gradients in O(K^2 M).

    Returns
    -------
    rate : float
    grad_rho : (2M,) array, layout [t-block, r-block]
    grad_theta : (M,) array
    """
    phases = np.asarray(phases, float)
    M = ch.n_elements
    omega = side_amplitudes(rho, ch)
    phi = np.exp(1j * phases)
    g = ch.direct + ch.ris_to_ap.conj().T @ (omega * phi[:, None] * ch.user_to_ris)
    U = link_matrix(v, g)
    p = transmit_powers(a, params)
    noise = params.noise_power_w * np.sum(np.abs(v) ** 2, axis=0)

    gain = np.abs(U) ** 2 * p[None, :]
    signal = np.diag(gain).copy()
    total = gain.sum(axis=1) + noise
    interf = total - signal
    scale = params.bandwidth_hz / np.log(2.0)
    rate = float(params.bandwidth_hz * np.sum(np.log2(total / interf)))

    # d rate / d |U[k,l]|^2
    W = -scale * (signal / (interf * total))[:, None] * p[None, :]
    np.fill_diagonal(W, scale * np.diag(p[None, :] / total[:, None]))
    Z = W * U.conj()
    C = (ch.ris_to_ap @ v).conj()          # (M, K): C[m, k] = conj((G v_k)_m)
    Y = C @ Z                              # Y[m, l] = sum_k C[m,k] Z[k,l]
    terms = phi[:, None] * ch.user_to_ris * Y  # (M, K)

    refl = ch.is_reflection
    grad_rho = np.empty(2 * M)
    grad_rho[:M] = 2.0 * np.real(terms[:, ~refl].sum(axis=1))
    grad_rho[M:] = 2.0 * np.real(terms[:, refl].sum(axis=1))
    grad_theta = -2.0 * np.imag((omega * terms).sum(axis=1))
    return rate, grad_rho, grad_theta
