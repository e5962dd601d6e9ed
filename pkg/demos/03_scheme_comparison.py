# # Comparing schemes over random channels
#
# Every scheme sees the same channel draws, so differences can be judged per
# seed.  The direct BS-user link is weak here (path-loss exponent 4), which is
# where an IRS helps most.

import math

import numpy as np

from airis import Scenario, generate
from airis.baselines import run_fixed_beta, run_no_irs, run_passive_irs, run_random_phase
from airis.cffp import run_max_ar_cffp
from airis.max_snr_pa import run_max_snr_pa

scn = Scenario(n_elements=64)
seeds = range(20)
schemes = {
    "max_snr_pa": lambda ch, s: run_max_snr_pa(scn, ch)[1].ar[-1],
    "max_ar_cffp (standard_fp)": lambda ch, s: run_max_ar_cffp(scn, ch, variant="standard_fp")[1].ar[-1],
    "fixed beta 0.5": lambda ch, s: run_fixed_beta(scn, ch, 0.5)[1].ar[-1],
    "fixed beta 0.99": lambda ch, s: run_fixed_beta(scn, ch, 0.99)[1].ar[-1],
    "random phase": lambda ch, s: run_random_phase(scn, ch, s)[1].ar[-1],
    "passive IRS": lambda ch, s: run_passive_irs(scn, ch)[1].ar[-1],
    "no IRS": lambda ch, s: run_no_irs(scn, ch)[1].ar[-1],
}

rates = {name: [] for name in schemes}
for s in seeds:
    ch = generate(scn, s)
    for name, run in schemes.items():
        rates[name].append(run(ch, s))

ref = np.asarray(rates["max_snr_pa"])
print(f"{'scheme':28s} {'mean AR':>8s} {'gap to max_snr_pa':>18s}")
for name, vals in rates.items():
    d = ref - np.asarray(vals)
    se = d.std(ddof=1) / math.sqrt(d.size)
    print(f"{name:28s} {np.mean(vals):8.3f} {d.mean():9.3f} +- {2 * se:.3f}")
