"""Out-of-sample R^2 split by model part, and a varimax view of the loadings.

Run with ``python3 demos/04_evaluation_and_varimax.py``.
"""
import numpy as np

from matfactor import SimulationConfig, generate
from matfactor.cli import evaluate
from matfactor.core import KnownFactorSeries, MatrixSeries
from matfactor.estimator import EstimationOptions, fit
from matfactor.metrics import varimax_criterion, varimax_rotate

truth = generate(SimulationConfig(p=10, q=10, t_len=400, seed=2))
y, x = truth.y.data, truth.x.data
split = 300
train = MatrixSeries(y[:split]), KnownFactorSeries(x[:split])
test = MatrixSeries(y[split:]), KnownFactorSeries(x[split:])

# %% Each row fits on the training window and scores the test window. The
# known-factor share does not depend on the latent dimensions; the last
# column is a factor model fitted without the known factors at all.
print(f"{'(k,r)':>7} {'known':>7} {'latent':>7} {'total':>7} {'no X':>7}")
for row in evaluate(*train, *test, [(1, 1), (2, 2), (3, 3), (5, 5)]):
    print(f"{str((row['k'], row['r'])):>7} {row['r2_known']:7.3f} {row['r2_latent']:7.3f} "
          f"{row['r2_total']:7.3f} {row['r2_factor_model']:7.3f}")

# %% Loadings are identified only up to rotation. Varimax picks the rotation
# whose squared loadings are most spread out, which is easier to read.
est = fit(*train, EstimationOptions(fixed_dims=(3, 3)))
rotated = varimax_rotate(est.q1_hat)
print(f"\nvarimax criterion: {varimax_criterion(est.q1_hat.columns):.4f} -> {varimax_criterion(rotated):.4f}")
np.set_printoptions(precision=2, suppress=True)
print("rotated row loadings:\n", rotated)
