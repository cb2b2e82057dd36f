"""Solve one channel realization with the mode-switching surface.

Draws users and channels at the simulation defaults, runs the block
coordinate ascent and prints where the computation rate comes from.

    python demos/quickstart.py [seed]
"""
import sys

import numpy as np

from starmec import BcdConfig, run_bcd
from starmec.bcd import dof_feasibility
from starmec.harness.verify import desk_instance
from starmec.model import local_rates, offload_rates

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
ch, params = desk_instance(seed)
print("element-count condition:", dof_feasibility(ch))

res = run_bcd(ch, params, BcdConfig(seed=seed))
st = res.state
off = offload_rates(st, ch, params)
loc = local_rates(st.energy.a, params)
print(f"converged={res.converged} after {res.n_outer} outer iterations, flags={sorted(res.trace.flags)}")
print(f"objective  {res.objective:.6e} bit/s")
print(f"offloading {off.sum():.6e} bit/s   local {loc.sum():.6e} bit/s")
print("transmitting elements:", int(st.star.amplitudes[:ch.n_elements].sum()), "of", ch.n_elements)
print("energy partition a:", np.array2string(st.energy.a, precision=4))
print("objective per outer iteration:", ", ".join(f"{x:.8e}" for x in res.trace.objective))
