"""Monte Carlo runs over a scenario grid with deterministic CSV output.

Seeding: the channel realization of trial ``t`` depends only on
``(seed, t)`` (and is nested in M and N, so sweeps over those axes use common
random numbers); the solver seed of a scheme depends on ``(seed, t, scheme)``.
Rows are written in (trial, scheme, grid value) order whatever the worker
completion order, and timings go to a separate file so that ``results.csv``
is byte-identical across reruns.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import platform
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines import Scheme, SchemeResult, run_scheme
from ..channels import Geometry, drop_users, make_rng, synthesize
from .config import Scenario, scenario_dict

__all__ = ["ExperimentResult", "run_experiment", "trial_inputs", "RESULT_FIELDS",
           "CLEAN_FLAGS"]

log = logging.getLogger(__name__)

RESULT_FIELDS = ("axis", "value", "trial", "scheme", "objective", "offload_sum", "local_sum",
                 "offload_per_user", "local_per_user", "a", "n_outer", "converged", "flags",
                 "error")
# informational flags that do not make a run "unclean"
CLEAN_FLAGS = frozenset()


def _seed_int(*key) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1, np.uint64)[0] >> 1)


def trial_inputs(sc: Scenario, value, trial: int):
    """(params, channels, solver config base) for one grid point and trial."""
    params, m = sc.params, sc.m_elements
    axis = sc.sweep_axis
    if axis == "M":
        m = int(value)
    elif axis == "N":
        params = dataclasses.replace(params, n_antennas=int(value))
    elif axis == "K":
        K = int(value)
        T = (K + 1) // 2
        params = dataclasses.replace(
            params, n_transmission_users=T, n_reflection_users=K - T,
            energy_budget_j=_resize(params.energy_budget_j, K),
            cycles_per_bit=_resize(params.cycles_per_bit, K),
            capacitance_coeff=_resize(params.capacitance_coeff, K))
    geo = sc.geometry
    if axis == "distance":
        users = np.asarray(geo.ris) + float(value) * np.asarray(geo.distance_direction)
        users = users[None, :]
    elif geo.user_positions is not None:
        users = np.asarray(geo.user_positions, float)
    else:
        users = drop_users(params.n_transmission_users, params.n_reflection_users,
                           make_rng(sc.seed, trial, 0xd409), side=geo.square_side_m,
                           tx_center=geo.transmission_center, rx_center=geo.reflection_center)
    ch = synthesize(Geometry(geo.ap, geo.ris, users), sc.fading, params, m,
                    _seed_int(sc.seed, trial))
    return params, ch


def _resize(arr, K):
    arr = np.asarray(arr, float)
    if np.all(arr == arr[0]):
        return np.full(K, arr[0])
    if K > arr.size:
        raise ValueError("per-user parameters cannot be extended for a K sweep; use scalars")
    return arr[:K]


def _fmt(x) -> str:
    return repr(float(x))


def _vec(x) -> str:
    return ";".join(_fmt(v) for v in np.asarray(x, float))


def _row(sc, value, trial, scheme, res: SchemeResult | None, error=""):
    base = dict(axis=sc.sweep_axis or "", value="" if value is None else repr(value),
                trial=trial, scheme=scheme.value)
    if res is None:
        return {**base, "objective": "nan", "offload_sum": "nan", "local_sum": "nan",
                "offload_per_user": "", "local_per_user": "", "a": "", "n_outer": 0,
                "converged": False, "flags": "failed", "error": error}
    return {**base, "objective": _fmt(res.objective), "offload_sum": _fmt(res.offload.sum()),
            "local_sum": _fmt(res.local.sum()), "offload_per_user": _vec(res.offload),
            "local_per_user": _vec(res.local), "a": _vec(res.a), "n_outer": res.n_outer,
            "converged": bool(res.converged), "flags": ";".join(sorted(res.flags)),
            "error": error}


def _scheme_config(sc, trial, scheme):
    tag = list(Scheme).index(scheme) + 1
    return dataclasses.replace(sc.solver, seed=_seed_int(sc.seed, trial, tag))


def _run_unit(args):
    """All schemes for one (grid value, trial). Returns rows, timings and the
    raw results (the latter only when running in-process)."""
    sc, gi, trial, keep = args
    value = sc.grid[gi]
    rows, timings, results = [], [], {}
    try:
        params, ch = trial_inputs(sc, value, trial)
    except Exception as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return [(gi, trial, i, _row(sc, value, trial, s, None, msg))
                for i, s in enumerate(sc.schemes)], [], {}
    ms = None
    order = sorted(range(len(sc.schemes)),
                   key=lambda i: sc.schemes[i] is not Scheme.PROPOSED_MS)
    for i in order:
        scheme = sc.schemes[i]
        cfg = _scheme_config(sc, trial, scheme)
        t0 = time.perf_counter()
        try:
            if scheme is Scheme.ES_UPPER_BOUND and ms is None:
                # the relaxation is warm-started from the mode-switching solution
                ms = run_scheme(Scheme.PROPOSED_MS, ch, params,
                                _scheme_config(sc, trial, Scheme.PROPOSED_MS))
            res = run_scheme(scheme, ch, params, cfg, ms_result=ms)
            if scheme is Scheme.PROPOSED_MS:
                ms = res
            row = _row(sc, value, trial, scheme, res)
        except Exception as exc:
            log.error("trial %d, %s failed: %s", trial, scheme.value, exc)
            res = None
            row = _row(sc, value, trial, scheme, None,
                       f"{type(exc).__name__}: {exc}".replace("\n", " "))
            log.debug("%s", traceback.format_exc())
        timings.append((gi, trial, i, time.perf_counter() - t0))
        rows.append((gi, trial, i, row))
        if keep:
            results[scheme] = res
    return rows, timings, results


@dataclass
class ExperimentResult:
    scenario: Scenario
    rows: list                      # dicts keyed by RESULT_FIELDS, in canonical order
    timings: list                   # (value, trial, scheme, seconds)
    results: dict = field(default_factory=dict)   # (grid index, trial, Scheme) -> SchemeResult

    def objectives(self, scheme, value=None) -> np.ndarray:
        scheme = Scheme.parse(scheme) if isinstance(scheme, str) else scheme
        want = "" if value is None else repr(value)
        return np.array([float(r["objective"]) for r in self.rows
                         if r["scheme"] == scheme.value and r["value"] == want])

    def mean(self, scheme, value=None) -> float:
        return float(np.mean(self.objectives(scheme, value)))

    @property
    def clean(self) -> bool:
        """True when every row converged without flags or errors."""
        for r in self.rows:
            flags = {f for f in r["flags"].split(";") if f} - CLEAN_FLAGS
            if r["error"] or not r["converged"] or flags:
                return False
        return True

    def write(self, out_dir) -> dict:
        """Write ``results.csv``, ``timings.csv`` and ``manifest.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "results.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(self.rows)
        with (out / "timings.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("value", "trial", "scheme", "seconds"))
            w.writerows(self.timings)
        sc = self.scenario
        manifest = {
            "scenario_sha256": sc.digest(),
            "scenario": scenario_dict(sc),
            "seed": sc.seed,
            "trials": sc.n_trials,
            "channel_seeds": {str(t): _seed_int(sc.seed, t) for t in range(sc.n_trials)},
            "rows": len(self.rows),
            "clean": self.clean,
            "versions": _versions(),
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest


def _versions():
    import scipy
    from .. import __version__
    return {"starmec": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run_experiment(sc: Scenario, threads: int = 1, keep_results: bool = False) -> ExperimentResult:
    """Run every scheme on every (grid value, trial) of the scenario.

    ``threads > 1`` distributes (grid value, trial) units over worker
    processes. Failures become flagged rows; the run continues.
    """
    units = [(sc, gi, t, keep_results) for gi in range(len(sc.grid)) for t in range(sc.n_trials)]
    if threads > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(_run_unit, units))
    else:
        outs = [_run_unit(u) for u in units]
    rows, timings, results = [], [], {}
    for (_, gi, t, _), (r, tm, res) in zip(units, outs):
        rows.extend(r)
        timings.extend(tm)
        for scheme, val in res.items():
            results[(gi, t, scheme)] = val
    # canonical order: trial, then scheme (scenario order), then grid value
    order = lambda x: (x[1], x[2], x[0])
    rows.sort(key=order)
    timings.sort(key=order)
    grid = sc.grid
    timing_rows = [("" if grid[gi] is None else repr(grid[gi]), t, sc.schemes[i].value,
                    f"{sec:.6f}") for gi, t, i, sec in timings]
    return ExperimentResult(sc, [r for *_, r in rows], timing_rows, results)
