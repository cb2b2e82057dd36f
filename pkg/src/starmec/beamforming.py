"""Max-SINR receive beamforming.

For user ``k`` the SINR is the generalized Rayleigh quotient
``v^H A_k v / v^H B_k v`` with the rank-one ``A_k = p_k g_k g_k^H`` and
``B_k = sum_{i != k} p_i g_i g_i^H + sigma^2 I``. The dominant generalized
eigenvector is therefore ``B_k^{-1} g_k`` up to scale, computed here with a
Cholesky solve.
"""
import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .model import DecisionState, ModelError, effective_channels, transmit_powers

__all__ = ["optimal_beamformer", "optimal_beamformers", "mmse_beamformers",
           "zero_forcing", "fix_phase"]


def fix_phase(v):
    """Scale each column to unit norm with its first nonzero entry real-positive."""
    v = np.asarray(v, dtype=complex)
    squeeze = v.ndim == 1
    if squeeze:
        v = v[:, None]
    out = np.empty_like(v)
    for k in range(v.shape[1]):
        col = v[:, k]
        nz = np.flatnonzero(np.abs(col) > 0)
        if nz.size == 0:
            raise ModelError("cannot normalise a zero beamformer")
        col = col * np.exp(-1j * np.angle(col[nz[0]]))
        out[:, k] = col / np.linalg.norm(col)
    return out[:, 0] if squeeze else out


def mmse_beamformers(g, p, noise_power):
    """Columns ``B_k^{-1} g_k`` normalised, for an (N, K) channel matrix."""
    g = np.asarray(g, complex)
    p = np.asarray(p, float)
    N, K = g.shape
    if noise_power <= 0:
        raise ModelError("noise power must be positive for the interference-plus-noise matrix")
    total = (g * p) @ g.conj().T + noise_power * np.eye(N)
    v = np.empty((N, K), complex)
    for k in range(K):
        Bk = total - p[k] * np.outer(g[:, k], g[:, k].conj())
        Bk = 0.5 * (Bk + Bk.conj().T)
        if not np.any(g[:, k]):
            v[:, k] = np.eye(N)[:, 0]
            continue
        try:
            v[:, k] = cho_solve(cho_factor(Bk, lower=True), g[:, k])
        except LinAlgError as exc:
            raise ModelError(f"interference-plus-noise matrix of user {k} is not positive definite") from exc
    return fix_phase(v)


def optimal_beamformers(state: DecisionState, ch, params) -> np.ndarray:
    g = effective_channels(state.star.phases, state.star.amplitudes, ch)
    p = transmit_powers(state.energy.a, params)
    return mmse_beamformers(g, p, params.noise_power_w)


def optimal_beamformer(k: int, state: DecisionState, ch, params) -> np.ndarray:
    if not 0 <= k < params.n_users:
        raise ModelError(f"user index {k} out of range")
    return optimal_beamformers(state, ch, params)[:, k]


def zero_forcing(g):
    """Zero-forcing receiver from the pseudo-inverse of the channel matrix.

    Returns ``(v, exact)``; ``exact`` is False when the channel does not have
    full column rank (e.g. fewer antennas than users) and the columns are then
    the least-squares receiver ``pinv(g)^H``.
    """
    g = np.asarray(g, complex)
    N, K = g.shape
    rank = np.linalg.matrix_rank(g)
    v = np.linalg.pinv(g).conj().T
    norms = np.linalg.norm(v, axis=0)
    # a null column means the user is unresolvable; fall back to its matched filter
    for k in np.flatnonzero(norms <= 1e-300):
        v[:, k] = g[:, k] if np.any(g[:, k]) else np.eye(N)[:, 0]
    return fix_phase(v), bool(rank == K)
