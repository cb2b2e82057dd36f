"""How the local-CPU constant decides whether the surface matters.

For a single realization, sweeps the effective capacitance coefficient and
reports the share of the objective that comes from offloading, the mean
energy partition and the gain of the proposed surface over the conventional
split. With the default 1e-25 the local rate alone is about 5e10 bit/s per
user, three orders above what the uplink carries, so the solver keeps almost
all energy local.

    python demos/regime_study.py [seed]
"""
import sys

from starmec.baselines import Scheme, run_scheme
from starmec.bcd import BcdConfig
from starmec.harness.verify import desk_instance

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
cfg = BcdConfig(seed=seed)
print(f"{'kappa':>8s} {'objective':>12s} {'offload share':>14s} {'mean a':>8s} {'MS/conv':>8s}")
for kappa in (1e-25, 1e-21, 1e-17):
    ch, params = desk_instance(seed, capacitance_coeff=kappa)
    ms = run_scheme(Scheme.PROPOSED_MS, ch, params, cfg)
    conv = run_scheme(Scheme.CONVENTIONAL_RIS, ch, params, cfg)
    share = ms.offload.sum() / ms.objective
    print(f"{kappa:8.0e} {ms.objective:12.4e} {share:14.3e} {ms.a.mean():8.4f} "
          f"{ms.objective / conv.objective:8.4f}")
