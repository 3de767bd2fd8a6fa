"""Seeded Monte Carlo replication of the estimator's accuracy.

Run with ``python3 demos/03_monte_carlo.py``. Takes a few seconds.
"""
import numpy as np

from matfactor import SimulationConfig, run_replication
from matfactor.tables import cells, replicate_cell

# %% One configuration, 100 runs. Run i uses seed (base seed + i), so any
# single run can be regenerated on its own.
summary = run_replication(SimulationConfig(p=10, q=10, t_len=100, delta1=0.5, delta2=0.5), 100)
for name, (mean, std) in summary.stats.items():
    print(f"{name:>10}: mean {mean:.4f}  std {std:.4f}")
print(f"dimension hit rate {summary.dim_accuracy_frequency:.2f}, failed runs {summary.failed_runs}")

# %% Errors should shrink like 1 / sqrt(T) for the coefficient matrix.
t_grid = np.array([100, 400, 1600])
errs = [run_replication(SimulationConfig(p=10, q=10, t_len=int(t)), 40).mean("coef_error") for t in t_grid]
slope = np.polyfit(np.log(t_grid), np.log(errs), 1)[0]
print(f"\ncoefficient error at T = {t_grid.tolist()}: {np.round(errs, 4)}; log-log slope {slope:.2f}")

# %% The benchmark grids come with reference values for comparison.
print("\nweak vs strong factors, 10 x 10:")
for cell in cells(1, max_dim=10):
    row = replicate_cell(cell, 1, n_runs=30)
    print(f"  delta = ({cell.delta1}, {cell.delta2}) T = {cell.t_len:3d}: "
          f"{row['coef_error_mean']:.3f} (reference {row['reference_coef_error']})")
