# # Splitting one power budget between the BS and an active IRS
#
# An active IRS amplifies what it reflects, so it draws power from the same
# budget as the base station.  With a fixed beam ``v`` and IRS direction
# ``theta_dir``, the SNR is a one-dimensional function ``f(beta)`` of the
# fraction ``beta`` of the budget given to the BS.  This script draws one
# channel, evaluates ``f`` exactly, fits the polynomial surrogate used by the
# optimizer and compares the chosen ``beta`` with a brute-force grid.

import numpy as np

from airis import RegressionConfig, Scenario, generate
from airis.max_snr_pa import initial_pa_state
from airis.pa_beta import eval_f_beta, fit_polynomial, optimize_beta, pa_coefficients, sample_betas

scn = Scenario(n_elements=64)
ch = generate(scn, seed=7)
st0 = initial_pa_state(scn, ch)
co = pa_coefficients(scn, ch, st0.theta_dir, st0.v)

# ## The exact curve
#
# Both ends are poor: at ``beta = 0`` the BS is silent, at ``beta = 1`` the IRS
# has no power left and only the weak direct link remains.

grid = np.linspace(0.0, 1.0, 10_001)
f = eval_f_beta(co, grid)
print(f"grid maximum: beta = {grid[f.argmax()]:.4f}, rate = {np.log2(1 + f.max()):.4f} bit/s/Hz")
for b in (0.0, 0.25, 0.5, 0.75, 0.99, 1.0):
    print(f"  beta = {b:4.2f}  rate = {np.log2(1 + eval_f_beta(co, b)):7.4f}")

# ## The regression surrogate
#
# ``J`` samples of ``f`` are fitted by a degree-``Q`` polynomial whose
# stationary points have closed forms.  The final pick is always checked
# against the exact ``f``.

for j, q in ((101, 2), (201, 3)):
    betas = sample_betas(j)
    vals = eval_f_beta(co, betas)
    coeffs, _ = fit_polynomial(betas, vals / vals.max(), q)
    err = np.max(np.abs(np.polynomial.polynomial.polyval(grid, coeffs) * vals.max() - f)) / f.max()
    fit = optimize_beta(scn, ch, st0.theta_dir, st0.v, reg=RegressionConfig(q, j))
    share = eval_f_beta(co, fit.beta_opt) / f.max()
    print(f"J={j}, Q={q}: max fit error {err:.2%} of peak, beta = {fit.beta_opt:.4f} "
          f"reaches {share:.4%} of the grid maximum")
