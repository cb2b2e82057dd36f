"""Measurement routines behind ``verify`` and the acceptance tests.

Each ``measure_*`` function runs one check on a seeded instance family and
returns a ``Check`` holding the measured quantities; the pass/fail rule is
applied by ``Check.passed``. Sizes are arguments so the CLI can run reduced
versions quickly.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np
try:
    import tomllib
except ImportError:          # Python < 3.11
    import tomli as tomllib
from scipy.linalg import eigh

from ..amplitude import SmoothingSchedule, grad_rho, project_rho, smoothed_objective, solve_amplitudes
from ..baselines import Scheme
from ..bcd import BcdConfig, dof_feasibility, run_bcd
from ..beamforming import mmse_beamformers, optimal_beamformers
from ..channels import FadingParams, Geometry, drop_users, make_rng, synthesize
from ..energy import energy_problem, solve_energy
from ..model import ChannelSet, SystemParams, effective_channels, transmit_powers
from ..phases import grad_theta, phase_objective
from .config import GeometrySpec, Scenario, ScenarioError
from .experiment import run_experiment
from .instances import random_channels, random_instance, random_params, random_state
from .oracles import energy_pg_oracle, exhaustive_binary_oracle, fd_gradient_oracle, qp_projection_oracle

__all__ = ["Check", "measure_gradients", "measure_projection", "measure_binary_feasibility",
           "measure_small_m", "measure_smoothing_vs_penalty", "measure_energy",
           "measure_beamforming", "measure_bcd_monotonicity", "measure_scheme_ordering",
           "measure_trends", "measure_energy_distance", "measure_dof", "desk_instance",
           "CHECKS", "QUICK", "ACCEPTANCE", "load_check_file", "run_check"]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        chk = fn(*args, **kw)
        chk.seconds = time.perf_counter() - t0
        return chk
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def desk_instance(seed, m_elements=30, n_antennas=10, n_transmission=4, n_reflection=4,
                  **param_overrides):
    """Simulation-geometry channels for one seed (defaults of the simulation
    section: B = 1 MHz, noise -90 dBm, E = 10 J, ...)."""
    params = SystemParams.default(n_antennas, n_transmission, n_reflection, **param_overrides)
    users = drop_users(n_transmission, n_reflection, make_rng(seed, 0xd409))
    ch = synthesize(Geometry(user_positions=users), FadingParams(), params, m_elements, seed)
    return ch, params


def _rel_err(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


# ---------------------------------------------------------------------------
# 1. gradients
# ---------------------------------------------------------------------------

@_timed
def measure_gradients(n_instances=100, seed=0, tol=1e-6) -> Check:
    """Analytic amplitude and phase gradients against central differences."""
    rng = np.random.default_rng(seed)
    worst_rho = worst_theta = 0.0
    for i in range(n_instances):
        M, K, N = int(rng.integers(1, 9)), int(rng.integers(1, 5)), int(rng.integers(1, 7))
        T = int(rng.integers(0, K + 1))
        ch, params, st = random_instance(int(rng.integers(2**31)), M, N, T, K - T)
        mu, gamma = rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0)
        rho = st.star.amplitudes
        g_an = grad_rho(rho, st, ch, params, mu, gamma)
        g_fd = fd_gradient_oracle(lambda x: smoothed_objective(x, st, ch, params, mu, gamma),
                                  rho, h=1e-5)
        worst_rho = max(worst_rho, _rel_err(g_an, g_fd))
        th = st.star.phases
        g_an = grad_theta(th, st, ch, params)
        g_fd = fd_gradient_oracle(lambda x: phase_objective(x, st, ch, params), th, h=1e-5)
        worst_theta = max(worst_theta, _rel_err(g_an, g_fd))
    ok = worst_rho < tol and worst_theta < tol
    return Check("gradients", ok, f"max rel err amplitude {worst_rho:.2e}, phases "
                 f"{worst_theta:.2e} over {n_instances} instances (tol {tol:g})",
                 data=dict(rho=worst_rho, theta=worst_theta))


# ---------------------------------------------------------------------------
# 2. projection
# ---------------------------------------------------------------------------

@_timed
def measure_projection(n_pairs=1000, seed=0, tol=1e-8) -> Check:
    rng = np.random.default_rng(seed)
    pairs = rng.uniform(-3.0, 4.0, (n_pairs, 2))
    extremes = np.array([[1e6, -1e6], [-1e6, 1e6], [1e6, 1e6], [-1e6, -1e6], [0.8, 0.8],
                         [0.7, 0.3], [1.4, -0.2], [0.0, 0.0], [1.0, 1.0], [-5e3, 2.0]])
    pairs[:len(extremes)] = extremes
    out = project_rho(np.r_[pairs[:, 0], pairs[:, 1]])
    got = np.column_stack([out[:n_pairs], out[n_pairs:]])
    ref = np.array([qp_projection_oracle(p) for p in pairs])
    err = float(np.max(np.abs(got - ref)))
    return Check("projection", err < tol, f"max inf-norm gap {err:.2e} over {n_pairs} pairs "
                 f"(tol {tol:g})", data=dict(err=err))


# ---------------------------------------------------------------------------
# 3./4./5. amplitude solver
# ---------------------------------------------------------------------------

def _amp_instance(seed, M, N=4, T=2, R=2, direct_scale=0.3):
    """Unit-scale instance where the surface path matters, with matched
    (max-SINR) beamformers."""
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, M, N, T, R, direct_scale=direct_scale)
    params = random_params(N, T, R, rng)
    st = random_state(rng, ch)
    st = st.with_(v=optimal_beamformers(st, ch, params))
    return ch, params, st


@_timed
def measure_binary_feasibility(n_instances=50, m_elements=16, seed=0, tol=1e-3) -> Check:
    worst_gap, exact = 0.0, True
    for i in range(n_instances):
        ch, params, st = _amp_instance(seed * 100003 + i, m_elements)
        res = solve_amplitudes(np.full(2 * m_elements, 0.5), st, ch, params)
        worst_gap = max(worst_gap, res.rounding_gap)
        rb = res.rho_binary
        exact &= bool(np.all((rb == 0) | (rb == 1))
                      and np.all(rb[:m_elements] + rb[m_elements:] == 1.0))
    ok = worst_gap < tol and exact
    return Check("binary feasibility", ok, f"max pre-rounding gap {worst_gap:.2e} (tol {tol:g}), "
                 f"rounded pairs exact: {exact}", data=dict(gap=worst_gap, exact=exact))


@_timed
def measure_small_m(n_trials=30, m_max=10, seed=0, ratio=0.98, share=0.8) -> Check:
    ratios = []
    for i in range(n_trials):
        M = 4 + i % (m_max - 3)
        ch, params, st = _amp_instance(seed * 100003 + i, M)
        res = solve_amplitudes(np.full(2 * M, 0.5), st, ch, params)
        ours = smoothed_objective(res.rho_binary, st, ch, params, 0.0, 0.0)
        _, best = exhaustive_binary_oracle(ch, params, st)
        ratios.append(ours / best)
    ratios = np.array(ratios)
    frac = float(np.mean(ratios >= ratio))
    return Check("small-M optimality", frac >= share,
                 f"{frac:.0%} of {n_trials} trials reach {ratio:.0%} of the enumerated optimum "
                 f"(need {share:.0%}); min ratio {ratios.min():.4f}",
                 data=dict(ratios=ratios, frac=frac))


@_timed
def measure_smoothing_vs_penalty(n_trials=50, m_elements=30, seed=0, share=0.5) -> Check:
    """Amplitude subproblem on simulation channels (random phases, matched
    beamformers, a = 1/2): smoothing schedule against the same schedule with
    the barrier removed."""
    sm, pen = [], []
    for i in range(n_trials):
        ch, params = desk_instance(seed * 100003 + i, m_elements)
        st = _desk_state(ch, params, seed * 100003 + i)
        init = np.full(2 * m_elements, 0.5)
        scale = smoothed_objective(init, st, ch, params, 0.0, 0.0)
        out = []
        for penalty_only in (False, True):
            sched = SmoothingSchedule.for_scale(scale, penalty_only=penalty_only)
            res = solve_amplitudes(init, st, ch, params, sched, penalty_only=penalty_only)
            out.append(smoothed_objective(res.rho_binary, st, ch, params, 0.0, 0.0))
        sm.append(out[0])
        pen.append(out[1])
    sm, pen = np.array(sm), np.array(pen)
    wins = float(np.mean(sm > pen))
    ok = sm.mean() >= pen.mean() and wins >= share
    return Check("smoothing vs penalty", ok,
                 f"mean {sm.mean():.6g} vs {pen.mean():.6g} (ratio {sm.mean() / pen.mean():.5f}); "
                 f"strict wins {wins:.0%} (need {share:.0%})",
                 data=dict(smoothing=sm, penalty=pen, wins=wins))


def _desk_state(ch, params, seed):
    from ..bcd import initial_state
    st = initial_state(ch, params, seed)
    return st.with_(v=optimal_beamformers(st, ch, params))


# ---------------------------------------------------------------------------
# 6. energy partition
# ---------------------------------------------------------------------------

@_timed
def measure_energy(n_instances=20, seed=0, tol=1e-3, slack=1e-9) -> Check:
    """Unit-scale instances where offloading and local computing are
    comparable; the oracle is multi-start projected gradient ascent."""
    worst, monotone, worst_drop = -np.inf, True, 0.0
    for i in range(n_instances):
        rng = np.random.default_rng(seed * 100003 + i)
        K = int(rng.integers(2, 6))
        T = int(rng.integers(0, K + 1))
        ch, params, st = random_instance(int(rng.integers(2**31)), 4, 4, T, K - T)
        st = st.with_(v=optimal_beamformers(st, ch, params))
        res = solve_energy(st.energy.a, st, ch, params)
        orc = energy_pg_oracle(energy_problem(st, ch, params), st.energy.a, seed=i)
        worst = max(worst, (orc.objective - res.objective) / abs(orc.objective))
        d = np.asarray(res.dual_trajectory)
        drops = d[:-1] - d[1:] - slack * np.abs(d[1:])
        if d.size > 1 and np.max(drops) > 0:
            monotone = False
            worst_drop = max(worst_drop, float(np.max((d[:-1] - d[1:]) / np.abs(d[1:]))))
    ok = worst <= tol and monotone
    return Check("energy partition", ok,
                 f"worst shortfall vs oracle {max(worst, 0):.2e} (tol {tol:g}); dual trajectory "
                 f"non-decreasing: {monotone}" + ("" if monotone else f" (worst rel drop {worst_drop:.1e})"),
                 data=dict(shortfall=worst, monotone=monotone))


# ---------------------------------------------------------------------------
# 7. beamforming
# ---------------------------------------------------------------------------

@_timed
def measure_beamforming(n_instances=50, n_probes=200, seed=0, tol=1e-10) -> Check:
    rng = np.random.default_rng(seed)
    worst_res, dominated = 0.0, True
    for _ in range(n_instances):
        N, K = int(rng.integers(1, 9)), int(rng.integers(1, 7))
        g = (rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))) / np.sqrt(2)
        p = rng.uniform(0.1, 2.0, K)
        noise = rng.uniform(0.1, 2.0)
        V = mmse_beamformers(g, p, noise)
        total = (g * p) @ g.conj().T + noise * np.eye(N)
        for k in range(K):
            A = p[k] * np.outer(g[:, k], g[:, k].conj())
            B = total - A
            lam = eigh(A, B, eigvals_only=True)[-1]
            v = V[:, k]
            worst_res = max(worst_res, float(np.linalg.norm(A @ v - lam * (B @ v))))
            ours = np.real(v.conj() @ A @ v) / np.real(v.conj() @ B @ v)
            probes = rng.standard_normal((N, n_probes)) + 1j * rng.standard_normal((N, n_probes))
            probes /= np.linalg.norm(probes, axis=0)
            num = np.real(np.sum(probes.conj() * (A @ probes), axis=0))
            den = np.real(np.sum(probes.conj() * (B @ probes), axis=0))
            dominated &= bool(np.all(num / den <= ours * (1 + 1e-12)))
    ok = worst_res < tol and dominated
    return Check("beamforming", ok, f"max eigen-residual {worst_res:.2e} (tol {tol:g}); "
                 f"beats all {n_probes} probes on every instance: {dominated}",
                 data=dict(residual=worst_res, dominated=dominated))


# ---------------------------------------------------------------------------
# 8. BCD monotonicity
# ---------------------------------------------------------------------------

@_timed
def measure_bcd_monotonicity(n_runs=10, m_elements=30, seed=0, slack=1e-9) -> Check:
    n_viol, flags = 0, set()
    for i in range(n_runs):
        ch, params = desk_instance(seed * 100003 + i, m_elements)
        res = run_bcd(ch, params, BcdConfig(seed=i, monotone_slack=slack))
        n_viol += len(res.trace.violations)
        flags |= res.trace.flags
    return Check("BCD block monotonicity", n_viol == 0,
                 f"{n_viol} decreases on blocks V/theta/a over {n_runs} runs "
                 f"(slack {slack:g}); solver flags: {sorted(flags) or 'none'}",
                 data=dict(violations=n_viol))


# ---------------------------------------------------------------------------
# 9./10./11. Monte Carlo studies
# ---------------------------------------------------------------------------

def desk_scenario(seed=0, trials=20, schemes=(Scheme.PROPOSED_MS,), **kw) -> Scenario:
    sc = Scenario(params=SystemParams.default(), m_elements=30, seed=seed, n_trials=trials,
                  schemes=tuple(schemes))
    return sc.replace(**kw) if kw else sc.replace()


@_timed
def measure_scheme_ordering(trials=20, seed=0, threads=1, gain=1.05, es_cap=1.25) -> Check:
    sc = desk_scenario(seed, trials, (Scheme.PROPOSED_MS, Scheme.CONVENTIONAL_RIS,
                                      Scheme.ES_UPPER_BOUND))
    res = run_experiment(sc, threads=threads)
    ms = res.objectives(Scheme.PROPOSED_MS)
    conv = res.objectives(Scheme.CONVENTIONAL_RIS)
    es = res.objectives(Scheme.ES_UPPER_BOUND)
    per_trial = bool(np.all(es >= ms))
    r_conv = ms.mean() / conv.mean()
    r_es = es.mean() / ms.mean()
    ok = per_trial and r_conv >= gain and 1.0 <= r_es <= es_cap
    return Check("scheme ordering", ok,
                 f"ES >= MS every trial: {per_trial}; mean MS / mean Conventional = {r_conv:.6f} "
                 f"(need >= {gain}); mean ES / mean MS = {r_es:.6f} (need in [1, {es_cap}])",
                 data=dict(ms=ms, conv=conv, es=es, r_conv=r_conv, r_es=r_es))


@_timed
def measure_trends(trials=20, seed=0, threads=1, m_grid=(10, 20, 30), n_grid=(6, 8, 10)) -> Check:
    means = {}
    for axis, grid in (("M", m_grid), ("N", n_grid)):
        sc = desk_scenario(seed, trials, sweep_axis=axis, sweep_values=tuple(grid))
        res = run_experiment(sc, threads=threads)
        means[axis] = np.array([res.mean(Scheme.PROPOSED_MS, v) for v in grid])
    ok = all(bool(np.all(np.diff(m) >= 0)) for m in means.values())
    fmt = lambda m: ", ".join(f"{x:.8g}" for x in m)
    return Check("monotone trends", ok, f"mean objective over M {m_grid}: [{fmt(means['M'])}]; "
                 f"over N {n_grid}: [{fmt(means['N'])}]", data=means)


def energy_distance_curve(energy_j, distances, seed=0, trials=1, side_reflection=True,
                          **param_overrides):
    """Mean optimal partition of a single user placed ``d`` metres from the
    surface along the scenario's distance direction."""
    T, R = (0, 1) if side_reflection else (1, 0)
    params = SystemParams.default(10, T, R, energy_budget_j=energy_j, **param_overrides)
    sc = Scenario(params=params, m_elements=30, seed=seed, n_trials=trials,
                  sweep_axis="distance", sweep_values=tuple(float(d) for d in distances),
                  geometry=GeometrySpec(distance_direction=(1.0, 0.0, 0.0) if side_reflection
                                        else (-1.0, 0.0, 0.0))).replace()
    res = run_experiment(sc)
    a = []
    for d in sc.sweep_values:
        rows = [r for r in res.rows if r["value"] == repr(d)]
        a.append(np.mean([float(r["a"]) for r in rows]))
    return np.array(a)


@_timed
def measure_energy_distance(distances=tuple(range(5, 101, 5)), seed=0, trials=1,
                            attain_tol=1e-3, **param_overrides) -> Check:
    """Single user on the reflection side. E = 5 J must give a non-decreasing
    partition over the nearer half of the sweep; the partition reaches 1
    (within ``attain_tol``) at a shorter distance for E = 0.1 J than for 1 J."""
    d = np.asarray(distances, float)
    curves = {e: energy_distance_curve(e, d, seed, trials, **param_overrides) for e in (5.0, 1.0, 0.1)}
    half = curves[5.0][: (len(d) + 1) // 2]
    rising = bool(np.all(np.diff(half) >= 0))

    def first_hit(a):
        idx = np.flatnonzero(a >= 1.0 - attain_tol)
        return float(d[idx[0]]) if idx.size else np.inf

    hit01, hit1 = first_hit(curves[0.1]), first_hit(curves[1.0])
    earlier = bool(np.isfinite(hit01) and hit01 < hit1)
    fmt = lambda a: ", ".join(f"{x:.3g}" for x in a)
    return Check("energy partition vs distance", rising and earlier,
                 f"E=5 J near half non-decreasing: {rising} [{fmt(half)}]; a reaches 1 at "
                 f"{hit01} m (E=0.1 J) vs {hit1} m (E=1 J); max a: E=0.1 {curves[0.1].max():.3g}, "
                 f"E=1 {curves[1.0].max():.3g}",
                 data=dict(curves=curves, distances=d))


# ---------------------------------------------------------------------------
# 12. DoF check
# ---------------------------------------------------------------------------

def _dof_cases(seed=0):
    rng = np.random.default_rng(seed)

    def cn(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def build(direct, T, M=6):
        N, K = direct.shape
        refl = np.r_[np.zeros(T, bool), np.ones(K - T, bool)]
        return ChannelSet(direct, cn(M, K), cn(M, N), refl)

    cases = []
    # zeroed direct links: M >= K
    cases.append(("zero direct", build(np.zeros((6, 6), complex), 3), (0, 0, 6)))
    # full rank, N >= K
    cases.append(("full rank", build(cn(6, 6), 3), (3, 3, 0)))
    # rank-1 transmission block
    ht = np.outer(cn(6), cn(3))
    cases.append(("rank-1 transmission", build(np.c_[ht, cn(6, 3)], 3), (1, 3, 2)))
    # rank-1 reflection block and a zero transmission column
    hr = np.outer(cn(6), cn(3))
    ht = cn(6, 3)
    ht[:, 1] = 0
    cases.append(("rank-1 reflection, zero column", build(np.c_[ht, hr], 3), (2, 1, 3)))
    # rank-2 transmission block of four users, N = 8, K = 6
    ht = cn(8, 2) @ cn(2, 4)
    cases.append(("rank-2 of 4", build(np.c_[ht, cn(8, 2)], 4, M=2), (2, 2, 2)))
    return cases


@_timed
def measure_dof(seed=0) -> Check:
    bad = []
    for name, ch, (b, j, need) in _dof_cases(seed):
        rep = dof_feasibility(ch)
        if (rep.rank_direct_t, rep.rank_direct_r, rep.elements_needed) != (b, j, need):
            bad.append(f"{name}: got {(rep.rank_direct_t, rep.rank_direct_r, rep.elements_needed)}")
        if rep.feasible != (ch.n_elements >= need):
            bad.append(f"{name}: feasibility flag")
    return Check("DoF check", not bad, "5 constructed cases exact" if not bad else "; ".join(bad))


CHECKS = {
    "gradients": measure_gradients,
    "projection": measure_projection,
    "binary": measure_binary_feasibility,
    "small-m": measure_small_m,
    "smoothing": measure_smoothing_vs_penalty,
    "energy": measure_energy,
    "beamforming": measure_beamforming,
    "monotonicity": measure_bcd_monotonicity,
    "ordering": measure_scheme_ordering,
    "trends": measure_trends,
    "distance": measure_energy_distance,
    "dof": measure_dof,
}

# reduced sizes for a quick ``starmec verify`` (the long Monte Carlo checks are left out)
QUICK = {
    "gradients": dict(n_instances=20),
    "projection": dict(),
    "binary": dict(n_instances=5),
    "small-m": dict(n_trials=5, m_max=8),
    "energy": dict(n_instances=5),
    "beamforming": dict(n_instances=10),
    "dof": dict(),
}

# acceptance criteria in order; the function defaults are the full sizes
ACCEPTANCE = tuple((name, {}) for name in CHECKS)


def load_check_file(path):
    """Read ``[[check]]`` tables (``name`` plus keyword arguments) from a TOML file."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    extra = set(doc) - {"check"}
    if extra:
        raise ScenarioError(f"{path}: unknown top-level keys {sorted(extra)}")
    out = []
    for entry in doc.get("check", []):
        entry = dict(entry)
        name = entry.pop("name", None)
        if name not in CHECKS:
            raise ScenarioError(f"{path}: unknown check {name!r}; choose from {list(CHECKS)}")
        for k, v in entry.items():
            if isinstance(v, list):
                entry[k] = tuple(v)
        out.append((name, entry))
    if not out:
        raise ScenarioError(f"{path}: no [[check]] tables")
    return out


def run_check(name, **kw) -> Check:
    try:
        return CHECKS[name](**kw)
    except TypeError as exc:
        raise ScenarioError(f"bad arguments for check {name!r}: {exc}") from exc
