"""Scenario files.

A scenario is a TOML document. Every section is optional and falls back to
the simulation defaults; fields ending in ``_db``/``_dbm`` are converted to
linear units when parsed. Example::

    seed = 7
    trials = 20
    schemes = ["ProposedMs", "ConventionalRis", "EsUpperBound"]

    [system]
    n_antennas = 10            # N
    n_transmission_users = 4   # T
    n_reflection_users = 4     # R
    m_elements = 30            # M
    bandwidth_hz = 1e6
    slot_seconds = 1.0
    noise_power_dbm = -90
    energy_budget_j = 10.0     # scalar or one value per user
    cycles_per_bit = 200
    capacitance_coeff = 1e-25

    [geometry]
    ap = [0, 0, 15]
    ris = [75, 0, 15]
    transmission_center = [45, 0, 0]
    reflection_center = [95, 0, 0]
    square_side_m = 50
    distance_direction = [1, 0, 0]   # used by the distance sweep

    [fading]
    pathloss_ref_db = -30
    alpha_ap_ris = 2.0
    kappa_ap_ris_db = 30

    [solver]
    max_outer = 50
    tol = 1e-4
    rho_mode = "smoothing"

    [sweep]
    axis = "M"                 # M, K, N or distance
    values = [10, 20, 30]
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
try:
    import tomllib
except ImportError:          # Python < 3.11
    import tomli as tomllib

from ..amplitude import ArmijoParams
from ..baselines import Scheme
from ..bcd import BcdConfig
from ..channels import FadingParams, db_to_linear
from ..model import SystemParams

__all__ = ["ScenarioError", "GeometrySpec", "Scenario", "load_scenario", "parse_scenario",
           "SWEEP_AXES"]

SWEEP_AXES = ("M", "K", "N", "distance")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class GeometrySpec:
    """How users are placed. Either random drops in two squares or explicit
    ``user_positions`` (K x 3, transmission users first)."""

    ap: tuple = (0.0, 0.0, 15.0)
    ris: tuple = (75.0, 0.0, 15.0)
    transmission_center: tuple = (45.0, 0.0, 0.0)
    reflection_center: tuple = (95.0, 0.0, 0.0)
    square_side_m: float = 50.0
    user_positions: tuple | None = None
    distance_direction: tuple = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    m_elements: int = 30
    geometry: GeometrySpec = GeometrySpec()
    fading: FadingParams = FadingParams()
    solver: BcdConfig = BcdConfig()
    seed: int = 0
    n_trials: int = 1
    schemes: tuple = (Scheme.PROPOSED_MS,)
    sweep_axis: str | None = None
    sweep_values: tuple = ()
    source: str = ""          # canonical text the hash is computed from

    def __post_init__(self):
        if self.n_trials < 1:
            raise ScenarioError("trials must be at least 1")
        if not self.schemes:
            raise ScenarioError("at least one scheme is required")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ScenarioError(f"sweep axis must be one of {SWEEP_AXES}")
            if not self.sweep_values:
                raise ScenarioError("sweep grid is empty")
            if self.sweep_axis == "distance" and self.params.n_users != 1:
                raise ScenarioError("the distance sweep places a single user; set K = 1")

    @property
    def grid(self) -> tuple:
        """Grid values, ``(None,)`` when there is no sweep."""
        return tuple(self.sweep_values) if self.sweep_axis else (None,)

    def digest(self) -> str:
        return hashlib.sha256(self.source.encode()).hexdigest()

    def replace(self, **kw) -> "Scenario":
        sc = dataclasses.replace(self, **kw)
        return dataclasses.replace(sc, source=_canonical(sc))


def _vec3(x, name):
    arr = np.asarray(x, float)
    if arr.shape != (3,):
        raise ScenarioError(f"{name} must be a 3-vector")
    return tuple(float(v) for v in arr)


def _take(section: dict, key, default):
    return section.pop(key, default)


def _db_or_linear(section, stem, default, unit="db"):
    """``stem`` (linear) or ``stem_db`` / ``stem_dbm``; the noise power uses
    ``noise_power_w`` for its linear spelling."""
    lin = section.pop(stem + ("_w" if unit == "dbm" else ""), None)
    db = section.pop(f"{stem}_{unit}", None)
    if lin is not None and db is not None:
        raise ScenarioError(f"give either {stem} or {stem}_{unit}, not both")
    if db is not None:
        val = db_to_linear(db)
        return val * 1e-3 if unit == "dbm" else val
    return default if lin is None else float(lin)


def _system(sec: dict):
    d = SystemParams.default()
    noise = _db_or_linear(sec, "noise_power", d.noise_power_w, unit="dbm")
    kw = dict(
        n_antennas=int(_take(sec, "n_antennas", d.n_antennas)),
        n_transmission_users=int(_take(sec, "n_transmission_users", d.n_transmission_users)),
        n_reflection_users=int(_take(sec, "n_reflection_users", d.n_reflection_users)),
        bandwidth_hz=float(_take(sec, "bandwidth_hz", d.bandwidth_hz)),
        slot_seconds=float(_take(sec, "slot_seconds", d.slot_seconds)),
        noise_power_w=noise,
        energy_budget_j=_take(sec, "energy_budget_j", 10.0),
        cycles_per_bit=_take(sec, "cycles_per_bit", 200.0),
        capacitance_coeff=_take(sec, "capacitance_coeff", 1e-25),
    )
    m = int(_take(sec, "m_elements", 30))
    return SystemParams(**kw), m


def _geometry(sec: dict) -> GeometrySpec:
    g = GeometrySpec()
    users = sec.pop("user_positions", None)
    if users is not None:
        arr = np.asarray(users, float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ScenarioError("user_positions must be a list of 3-vectors")
        users = tuple(tuple(map(float, row)) for row in arr)
    direction = np.asarray(_vec3(sec.pop("distance_direction", g.distance_direction),
                                 "distance_direction"))
    if not np.linalg.norm(direction) > 0:
        raise ScenarioError("distance_direction must be nonzero")
    return GeometrySpec(
        ap=_vec3(sec.pop("ap", g.ap), "ap"),
        ris=_vec3(sec.pop("ris", g.ris), "ris"),
        transmission_center=_vec3(sec.pop("transmission_center", g.transmission_center),
                                  "transmission_center"),
        reflection_center=_vec3(sec.pop("reflection_center", g.reflection_center),
                                "reflection_center"),
        square_side_m=float(sec.pop("square_side_m", g.square_side_m)),
        user_positions=users,
        distance_direction=tuple(direction / np.linalg.norm(direction)),
    )


def _fading(sec: dict) -> FadingParams:
    f = FadingParams()
    kw = dict(
        pathloss_ref_db=float(sec.pop("pathloss_ref_db", f.pathloss_ref_db)),
        ref_distance_m=float(sec.pop("ref_distance_m", f.ref_distance_m)),
        alpha_ap_ris=float(sec.pop("alpha_ap_ris", f.alpha_ap_ris)),
        alpha_ap_user=float(sec.pop("alpha_ap_user", f.alpha_ap_user)),
        alpha_ris_user=float(sec.pop("alpha_ris_user", f.alpha_ris_user)),
    )
    for link in ("ap_ris", "ap_user", "ris_user"):
        kw[f"kappa_{link}"] = _db_or_linear(sec, f"kappa_{link}", getattr(f, f"kappa_{link}"))
    return FadingParams(**kw)


_ARMIJO_KEYS = {"step0", "shrink", "slope_coeff", "max_backtracks"}
_SMOOTHING_KEYS = {"mu_rel", "gamma_rel", "eta_mu", "eta_gamma", "eps_obj", "eps_mu_rel",
                   "eps_gamma_rel", "max_inner", "max_stages"}


def _solver(sec: dict, seed: int) -> BcdConfig:
    armijo = ArmijoParams(**{k: sec.pop(k) for k in list(sec) if k in _ARMIJO_KEYS})
    smoothing = {k: sec.pop(k) for k in list(sec) if k in _SMOOTHING_KEYS}
    names = {f.name for f in dataclasses.fields(BcdConfig)} - {"armijo", "smoothing", "seed"}
    kw = {k: sec.pop(k) for k in list(sec) if k in names}
    return BcdConfig(armijo=armijo, smoothing=smoothing, seed=seed, **kw)


def _sweep(sec: dict):
    axis = sec.pop("axis", None)
    values = tuple(sec.pop("values", ()))
    if axis is None:
        return None, ()
    if axis in ("M", "K", "N"):
        if not all(float(v).is_integer() and v >= 0 for v in values):
            raise ScenarioError(f"sweep values for {axis} must be non-negative integers")
        values = tuple(int(v) for v in values)
    else:
        values = tuple(float(v) for v in values)
    return axis, values


def parse_scenario(doc: dict) -> Scenario:
    """Build a scenario from a parsed TOML mapping; unknown keys are errors."""
    doc = json.loads(json.dumps(doc))            # deep copy, plain types
    seed = int(doc.pop("seed", 0))
    trials = int(doc.pop("trials", 1))
    try:
        schemes = tuple(Scheme.parse(s) for s in doc.pop("schemes", ["ProposedMs"]))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    sections = {name: doc.pop(name, {}) for name in ("system", "geometry", "fading", "solver", "sweep")}
    if doc:
        raise ScenarioError(f"unknown top-level keys: {sorted(doc)}")
    try:
        params, m = _system(sections["system"])
        geometry = _geometry(sections["geometry"])
        fading = _fading(sections["fading"])
        solver = _solver(sections["solver"], seed)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc
    axis, values = _sweep(sections["sweep"])
    for name, rest in sections.items():
        if rest:
            raise ScenarioError(f"unknown keys in [{name}]: {sorted(rest)}")
    if geometry.user_positions is not None and len(geometry.user_positions) != params.n_users:
        raise ScenarioError("user_positions does not match the number of users")
    sc = Scenario(params=params, m_elements=m, geometry=geometry, fading=fading,
                  solver=solver, seed=seed, n_trials=trials, schemes=schemes,
                  sweep_axis=axis, sweep_values=values)
    return dataclasses.replace(sc, source=_canonical(sc))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return parse_scenario(doc)


def _plain(x):
    if dataclasses.is_dataclass(x):
        return {f.name: _plain(getattr(x, f.name)) for f in dataclasses.fields(x)
                if f.name != "source"}
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in sorted(x.items())}
    if isinstance(x, Scheme):
        return x.value
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


def _canonical(sc: Scenario) -> str:
    return json.dumps(_plain(sc), sort_keys=True)


def scenario_dict(sc: Scenario) -> dict:
    return json.loads(sc.source or _canonical(sc))
