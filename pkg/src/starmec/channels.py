"""Random channel synthesis: geometry, distance path loss and Rician fading.

Every link is ``sqrt(PL(d)) * (sqrt(k/(1+k)) * LoS + sqrt(1/(1+k)) * NLoS)``
with unit-modulus LoS entries built from uniform linear array responses
(half-wavelength spacing, arrays along the y axis) and i.i.d. CN(0, 1) NLoS
entries.

Random draws are organised so that a realization is *nested* in the array
sizes: with the same seed, the channel for ``M`` elements (or ``N``
antennas) is a leading sub-block of the one for any larger size. Sweeps over
``M`` and ``N`` therefore compare the same propagation environment.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ChannelSet, ModelError, SystemParams

__all__ = ["Geometry", "FadingParams", "path_loss", "db_to_linear", "ula_response",
           "rician", "synthesize", "drop_users", "make_rng"]


def db_to_linear(db) -> float:
    return float(10.0 ** (np.asarray(db, float) / 10.0))


def make_rng(*key) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a tuple of non-negative ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


@dataclass(frozen=True)
class Geometry:
    """Node positions in metres. ``user_positions`` is (K, 3), transmission
    users first."""

    ap_pos: tuple = (0.0, 0.0, 15.0)
    ris_pos: tuple = (75.0, 0.0, 15.0)
    user_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        pos = np.array(self.user_positions, float).reshape(-1, 3)
        pos.setflags(write=False)
        object.__setattr__(self, "user_positions", pos)
        for p in (self.ap_pos, self.ris_pos):
            if len(p) != 3 or not np.all(np.isfinite(p)):
                raise ModelError("positions must be finite 3-D coordinates")
        if not np.all(np.isfinite(pos)):
            raise ModelError("user positions must be finite")


@dataclass(frozen=True)
class FadingParams:
    """Large- and small-scale fading constants (Rician factors linear)."""

    pathloss_ref_db: float = -30.0
    ref_distance_m: float = 1.0
    alpha_ap_ris: float = 2.0
    alpha_ap_user: float = 3.5
    alpha_ris_user: float = 2.5
    kappa_ap_ris: float = 1000.0  # 30 dB
    kappa_ap_user: float = 0.0
    kappa_ris_user: float = 3.0

    def __post_init__(self):
        for a in (self.alpha_ap_ris, self.alpha_ap_user, self.alpha_ris_user):
            if a < 2:
                raise ModelError("path-loss exponents must be >= 2")
        for k in (self.kappa_ap_ris, self.kappa_ap_user, self.kappa_ris_user):
            if k < 0:
                raise ModelError("Rician factors must be non-negative")
        if self.ref_distance_m <= 0:
            raise ModelError("reference distance must be positive")


def path_loss(d, alpha, fp: FadingParams = FadingParams()) -> float:
    """Linear power gain ``T0 (d / d0)^-alpha``."""
    if not d > 0:
        raise ModelError(f"distance must be positive, got {d}")
    return db_to_linear(fp.pathloss_ref_db) * (d / fp.ref_distance_m) ** (-alpha)


def ula_response(n: int, direction) -> np.ndarray:
    """Unit-modulus response of an ``n``-element half-wavelength ULA along y
    for a plane wave travelling along ``direction``."""
    u = np.asarray(direction, float)
    u = u / np.linalg.norm(u)
    return np.exp(1j * np.pi * np.arange(n) * u[1])


def rician(los, nlos, kappa, pl) -> np.ndarray:
    if np.isinf(kappa):
        w_los, w_nlos = 1.0, 0.0
    else:
        w_los, w_nlos = np.sqrt(kappa / (1 + kappa)), np.sqrt(1 / (1 + kappa))
    return np.sqrt(pl) * (w_los * los + w_nlos * nlos)


def _cn(rng, shape):
    # real/imag drawn interleaved, so leading-axis prefixes are nested across sizes
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2)


def drop_users(n_transmission, n_reflection, rng, side=50.0,
               tx_center=(45.0, 0.0, 0.0), rx_center=(95.0, 0.0, 0.0)) -> np.ndarray:
    """Uniform user drop in two ``side`` x ``side`` squares (z fixed)."""
    out = []
    for count, c in ((n_transmission, tx_center), (n_reflection, rx_center)):
        xy = rng.uniform(-side / 2, side / 2, size=(count, 2))
        pos = np.column_stack([xy[:, 0] + c[0], xy[:, 1] + c[1],
                               np.full(count, float(c[2]))])
        out.append(pos)
    return np.vstack(out)


def synthesize(geom: Geometry, fp: FadingParams, params: SystemParams,
               m_elements: int, seed: int) -> ChannelSet:
    """Draw one channel realization.

    Identical arguments give bitwise identical output. NLoS draws use
    independent Philox streams per link (and per surface element for the
    surface-to-AP matrix) so the result is nested in ``m_elements`` and
    ``params.n_antennas``.
    """
    K, N, M = params.n_users, params.n_antennas, int(m_elements)
    if M < 0:
        raise ModelError("m_elements must be non-negative")
    users = geom.user_positions
    if users.shape != (K, 3):
        raise ModelError(f"geometry has {users.shape[0]} users, params expect {K}")
    ap, ris = np.asarray(geom.ap_pos, float), np.asarray(geom.ris_pos, float)

    # direct AP-user links, drawn antenna-major so rows nest in N
    hd_nlos = _cn(make_rng(seed, 1), (N, K)) if N else np.zeros((0, K))
    direct = np.empty((N, K), complex)
    for k in range(K):
        d = np.linalg.norm(users[k] - ap)
        los = ula_response(N, users[k] - ap)
        direct[:, k] = rician(los, hd_nlos[:, k], fp.kappa_ap_user,
                              path_loss(d, fp.alpha_ap_user, fp))

    hs_nlos = _cn(make_rng(seed, 2), (M, K))
    user_to_ris = np.empty((M, K), complex)
    for k in range(K):
        d = np.linalg.norm(users[k] - ris)
        los = ula_response(M, users[k] - ris)
        user_to_ris[:, k] = rician(los, hs_nlos[:, k], fp.kappa_ris_user,
                                   path_loss(d, fp.alpha_ris_user, fp))

    G_nlos = np.empty((M, N), complex)
    for m in range(M):
        G_nlos[m] = _cn(make_rng(seed, 3, m), (N,))
    d = np.linalg.norm(ris - ap)
    G_los = np.outer(ula_response(M, ap - ris), ula_response(N, ris - ap).conj())
    G = rician(G_los, G_nlos, fp.kappa_ap_ris, path_loss(d, fp.alpha_ap_ris, fp))

    is_refl = np.arange(K) >= params.n_transmission_users
    return ChannelSet(direct, user_to_ris, G, is_refl)
