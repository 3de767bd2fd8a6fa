"""How the eigenvalue ratio rule picks the number of latent factors.

Run with ``python3 demos/02_dimension_selection.py``.
"""
import numpy as np

from matfactor import SimulationConfig, generate
from matfactor.estimator import (
    EstimationOptions,
    build_m_matrix,
    compute_residuals,
    eigen_sorted,
    estimate_dim_ratio,
    fit_coefficient,
)

truth = generate(SimulationConfig(p=20, q=50, t_len=1000, seed=4))

# %% Strip the known-factor term first; the lag autocovariances of what is
# left only see the latent structure because the noise is white.
a_hat = fit_coefficient(truth.y, truth.x)
w = compute_residuals(truth.y, truth.x, a_hat)

for axis, dim in (("rows", 20), ("cols", 50)):
    spectrum = eigen_sorted(build_m_matrix(w, h0=1, axis=axis))
    lam = spectrum.eigenvalues[:8]
    ratios = lam[1:] / lam[:-1]
    print(f"\n{axis}: top eigenvalues  " + "  ".join(f"{v:9.3g}" for v in lam))
    print(f"{axis}: successive ratios " + "  ".join(f"{v:9.3g}" for v in ratios))
    # the estimate sits at the sharpest drop
    for rule in ("half", "third"):
        k_max = EstimationOptions(k_max_rule=rule).k_max(dim)
        print(f"  search up to {k_max:2d} ({rule}): chosen {estimate_dim_ratio(spectrum, k_max)}")

# %% More lags accumulate more autocovariance terms; with AR(1) factors the
# first lag already carries most of the signal.
for h0 in (1, 2, 3):
    spectrum = eigen_sorted(build_m_matrix(w, h0=h0))
    print(f"h0 = {h0}: k_hat = {estimate_dim_ratio(spectrum, 10)}, "
          f"lambda_3 / lambda_4 = {spectrum.eigenvalues[2] / spectrum.eigenvalues[3]:.1f}")
