"""Compare all schemes on a few channel realizations.

At the default local-CPU constant (1e-25) local computing dominates the
objective and every scheme lands on nearly the same total; pass a larger
constant to see the surface matter.

    python demos/compare_schemes.py [trials] [capacitance_coeff]
"""
import sys

from starmec.baselines import Scheme
from starmec.harness.config import Scenario
from starmec.harness.experiment import run_experiment
from starmec.model import SystemParams

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 3
kappa = float(sys.argv[2]) if len(sys.argv) > 2 else 1e-17

sc = Scenario(params=SystemParams.default(capacitance_coeff=kappa), n_trials=trials,
              schemes=tuple(Scheme)).replace()
res = run_experiment(sc)
ms = res.mean(Scheme.PROPOSED_MS)
print(f"capacitance coefficient {kappa:g}, {trials} trials")
for s in Scheme:
    rows = [r for r in res.rows if r["scheme"] == s.value]
    off = sum(float(r["offload_sum"]) for r in rows) / len(rows)
    print(f"{s.value:16s} mean {res.mean(s):.6e}  offload {off:.4e}  ratio to MS {res.mean(s) / ms:.4f}")
