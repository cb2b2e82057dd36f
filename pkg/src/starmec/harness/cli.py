"""Command line: ``starmec run | sweep | verify``.

Every option can also be given through an environment variable named
``STARMEC_<OPTION>`` (``STARMEC_TRIALS=20``, ``STARMEC_SCHEMES=ProposedMs,EqualTime``);
an explicit flag wins over the environment. Exit status is 0 only when every
row converged without flags (``run``/``sweep``) or every check passed
(``verify``); 1 otherwise, 2 for usage or scenario errors.

``verify`` runs the quick oracle checks by default, every named check at full
size with ``--only NAME --full``, or the checks listed in a ``[[check]]`` file
with ``--scenario``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from ..baselines import Scheme
from ..model import SystemParams
from .config import SWEEP_AXES, Scenario, ScenarioError, load_scenario
from .experiment import run_experiment

ENV_PREFIX = "STARMEC_"


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def _int_env(name):
    val = _env(name)
    return None if val is None else int(val)


def _common(p):
    p.add_argument("--scenario", default=_env("scenario"), help="TOML scenario file")
    p.add_argument("--out", default=_env("out"), help="output directory")
    p.add_argument("--schemes", default=_env("schemes"),
                   help="comma-separated scheme names: " + ", ".join(s.value for s in Scheme))
    p.add_argument("--trials", type=int, default=_int_env("trials"))
    p.add_argument("--seed", type=int, default=_int_env("seed"))
    p.add_argument("--threads", type=int, default=_int_env("threads") or 1,
                   help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="starmec", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    _common(run)

    sweep = sub.add_parser("sweep", help="sweep one axis of a scenario")
    _common(sweep)
    sweep.add_argument("--axis", choices=SWEEP_AXES, default=_env("axis"))
    sweep.add_argument("--values", default=_env("values"), help="comma-separated grid, e.g. 10,20,30")

    ver = sub.add_parser("verify", help="run the oracle and acceptance checks")
    ver.add_argument("--scenario", default=_env("scenario"),
                     help="TOML file of [[check]] tables (see scenarios/acceptance)")
    ver.add_argument("--only", default=_env("only"), help="comma-separated subset of checks")
    ver.add_argument("--full", action="store_true", default=_env("full") in ("1", "true"),
                     help="full acceptance sizes instead of the quick ones")
    ver.add_argument("--seed", type=int, default=_int_env("seed"))
    return ap


def _scenario(args) -> Scenario:
    sc = (load_scenario(args.scenario) if args.scenario
          else Scenario(params=SystemParams.default()).replace())
    kw = {}
    if args.schemes:
        kw["schemes"] = tuple(Scheme.parse(s) for s in args.schemes.split(",") if s.strip())
    if args.trials is not None:
        kw["n_trials"] = args.trials
    if args.seed is not None:
        kw["seed"] = args.seed
    if getattr(args, "axis", None):
        if not args.values:
            raise ScenarioError("--axis needs --values")
        vals = [v.strip() for v in args.values.split(",") if v.strip()]
        kw["sweep_axis"] = args.axis
        kw["sweep_values"] = tuple(int(v) if args.axis in ("M", "K", "N") else float(v)
                                   for v in vals)
    return sc.replace(**kw)


def _run(args) -> int:
    sc = _scenario(args)
    if args.command == "run" and not args.scenario:
        raise ScenarioError("run needs --scenario (or STARMEC_SCENARIO)")
    res = run_experiment(sc, threads=max(1, args.threads))
    if args.out:
        res.write(args.out)
    grid = sc.grid
    for v in grid:
        label = "" if v is None else f"{sc.sweep_axis}={v}  "
        for s in sc.schemes:
            print(f"{label}{s.value:16s} mean {res.mean(s, v):.6g}")
    n_bad = sum(1 for r in res.rows if r["error"] or r["converged"] in (False, "False") or r["flags"])
    print(f"{len(res.rows)} rows, {n_bad} with convergence flags or errors"
          + (f"; written to {args.out}" if args.out else ""))
    return 0 if res.clean else 1


def _verify(args) -> int:
    from .verify import CHECKS, QUICK, load_check_file, run_check
    if args.scenario:
        plan = load_check_file(args.scenario)
    else:
        names = list(QUICK) if not args.only else [n.strip() for n in args.only.split(",")]
        unknown = set(names) - set(CHECKS)
        if unknown:
            raise ScenarioError(f"unknown checks {sorted(unknown)}; choose from {list(CHECKS)}")
        plan = [(n, {} if args.full else QUICK.get(n, {})) for n in names]
    ok = True
    for name, kw in plan:
        kw = dict(kw)
        if args.seed is not None:
            kw["seed"] = args.seed
        chk = run_check(name, **kw)
        print(chk.line(), flush=True)
        ok &= chk.passed
    return 0 if ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _verify(args) if args.command == "verify" else _run(args)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
