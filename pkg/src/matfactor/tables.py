"""Monte Carlo grids for the benchmark simulation tables.

Reference values are stored in true units; the benchmark tables for loading
distances and signal error print them multiplied by 10.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from .estimator import EstimationOptions
from .simulator import SimulationConfig, run_replication

DELTAS = ((0.5, 0.5), (0.5, 0.0), (0.0, 0.0))
SHAPES = ((10, 10), (20, 20), (20, 50), (50, 50))
T_MULTIPLIERS = (0.5, 1.0, 2.0)
SIGNAL_SHAPES = (10, 20, 50)
SIGNAL_T = (50, 200, 1000, 5000)

# (delta1, delta2, p, q) -> values at T = 0.5pq, pq, 2pq
COEF_ERROR = {
    (0.5, 0.5, 10, 10): (0.101, 0.073, 0.050),
    (0.5, 0.5, 20, 20): (0.034, 0.024, 0.017),
    (0.5, 0.5, 20, 50): (0.013, 0.009, 0.007),
    (0.5, 0.5, 50, 50): (0.008, 0.006, 0.004),
    (0.5, 0.0, 10, 10): (0.111, 0.082, 0.058),
    (0.5, 0.0, 20, 20): (0.038, 0.027, 0.019),
    (0.5, 0.0, 20, 50): (0.016, 0.011, 0.007),
    (0.5, 0.0, 50, 50): (0.009, 0.007, 0.005),
    (0.0, 0.0, 10, 10): (0.155, 0.113, 0.083),
    (0.0, 0.0, 20, 20): (0.051, 0.038, 0.028),
    (0.0, 0.0, 20, 50): (0.022, 0.016, 0.011),
    (0.0, 0.0, 50, 50): (0.013, 0.009, 0.007),
}

# (delta1, delta2, p, q) -> ((D1, D2) at 0.5pq, (D1, D2) at pq, (D1, D2) at 2pq)
LOADING_DISTANCE = {
    (0.5, 0.5, 10, 10): ((0.410, 0.574), (0.437, 0.473), (0.419, 0.568)),
    (0.5, 0.5, 20, 20): ((0.548, 0.562), (0.559, 0.575), (0.575, 0.462)),
    (0.5, 0.5, 20, 50): ((0.568, 0.584), (0.555, 0.576), (0.416, 0.572)),
    (0.5, 0.5, 50, 50): ((0.582, 0.559), (0.567, 0.557), (0.558, 0.577)),
    (0.5, 0.0, 10, 10): ((0.587, 0.406), (0.423, 0.408), (0.496, 0.149)),
    (0.5, 0.0, 20, 20): ((0.465, 0.439), (0.243, 0.232), (0.065, 0.076)),
    (0.5, 0.0, 20, 50): ((0.114, 0.109), (0.074, 0.063), (0.058, 0.052)),
    (0.5, 0.0, 50, 50): ((0.155, 0.088), (0.032, 0.028), (0.032, 0.035)),
    (0.0, 0.0, 10, 10): ((0.156, 0.338), (0.078, 0.094), (0.069, 0.059)),
    (0.0, 0.0, 20, 20): ((0.054, 0.069), (0.048, 0.040), (0.020, 0.029)),
    (0.0, 0.0, 20, 50): ((0.019, 0.028), (0.018, 0.020), (0.008, 0.013)),
    (0.0, 0.0, 50, 50): ((0.013, 0.013), (0.009, 0.009), (0.005, 0.005)),
}

DIM_FREQUENCY = {
    (0.5, 0.5, 10, 10): (0.0, 0.0, 0.005),
    (0.5, 0.5, 20, 20): (0.0, 0.0, 0.0),
    (0.5, 0.5, 20, 50): (0.0, 0.0, 0.0),
    (0.5, 0.5, 50, 50): (0.0, 0.0, 0.0),
    (0.5, 0.0, 10, 10): (0.0, 0.08, 0.0),
    (0.5, 0.0, 20, 20): (0.0, 0.0, 0.0),
    (0.5, 0.0, 20, 50): (0.0, 0.0, 0.0),
    (0.5, 0.0, 50, 50): (0.0, 0.0, 0.0),
    (0.0, 0.0, 10, 10): (0.0, 0.475, 0.15),
    (0.0, 0.0, 20, 20): (0.07, 0.765, 0.555),
    (0.0, 0.0, 20, 50): (1.0, 1.0, 1.0),
    (0.0, 0.0, 50, 50): (1.0, 1.0, 1.0),
}

# p = q -> values at T = 50, 200, 1000, 5000 with delta = (0, 0)
SIGNAL_ERROR = {
    10: (0.399, 0.312, 0.295, 0.302),
    20: (0.203, 0.144, 0.143, 0.121),
    50: (0.136, 0.083, 0.050, 0.055),
}


@dataclass(frozen=True)
class Cell:
    delta1: float
    delta2: float
    p: int
    q: int
    t_len: int
    reference: Tuple[float, ...]

    def config(self, seed: int = 0, m: int = 5) -> SimulationConfig:
        return SimulationConfig(
            p=self.p, q=self.q, m=m, k=3, r=3, t_len=self.t_len,
            delta1=self.delta1, delta2=self.delta2, seed=seed,
        )


def cells(table: int, max_dim: Optional[int] = None) -> Iterator[Cell]:
    """Grid cells of a table, optionally restricted to p, q <= ``max_dim``."""
    if table not in (1, 2, 3, 4):
        raise ValueError(f"table must be 1, 2, 3 or 4, got {table}")
    if table == 4:
        for n in SIGNAL_SHAPES:
            if max_dim is not None and n > max_dim:
                continue
            for t_len, ref in zip(SIGNAL_T, SIGNAL_ERROR[n]):
                yield Cell(0.0, 0.0, n, n, t_len, (ref,))
        return
    source = {1: COEF_ERROR, 2: LOADING_DISTANCE, 3: DIM_FREQUENCY}[table]
    for d1, d2 in DELTAS:
        for p, q in SHAPES:
            if max_dim is not None and max(p, q) > max_dim:
                continue
            for mult, ref in zip(T_MULTIPLIERS, source[(d1, d2, p, q)]):
                ref = ref if isinstance(ref, tuple) else (ref,)
                yield Cell(d1, d2, p, q, int(mult * p * q), ref)


COLUMNS = {
    1: ("coef_error_mean", "coef_error_std", "reference_coef_error"),
    2: ("d_q1_mean", "d_q1_std", "d_q2_mean", "d_q2_std", "reference_d_q1", "reference_d_q2"),
    3: ("dim_frequency", "reference_dim_frequency"),
    4: ("d_signal_mean", "d_signal_std", "reference_d_signal"),
}
KEY_COLUMNS = ("delta1", "delta2", "p", "q", "m", "T", "runs", "failed_runs")


def replicate_cell(cell: Cell, table: int, n_runs: int, seed: int = 0,
                   opts: Optional[EstimationOptions] = None, n_jobs: int = 1) -> Dict[str, float]:
    """Run one cell and return a table row (key columns plus table metrics)."""
    cfg = cell.config(seed)
    opts = opts or EstimationOptions(fixed_dims=(cfg.k, cfg.r))
    summary = run_replication(cfg, n_runs, opts, n_jobs=n_jobs)
    row = dict(zip(KEY_COLUMNS, (cell.delta1, cell.delta2, cell.p, cell.q, cfg.m,
                                 cell.t_len, n_runs, summary.failed_runs)))
    if table == 1:
        row.update(coef_error_mean=summary.mean("coef_error"), coef_error_std=summary.std("coef_error"),
                   reference_coef_error=cell.reference[0])
    elif table == 2:
        row.update(d_q1_mean=summary.mean("d_q1"), d_q1_std=summary.std("d_q1"),
                   d_q2_mean=summary.mean("d_q2"), d_q2_std=summary.std("d_q2"),
                   reference_d_q1=cell.reference[0], reference_d_q2=cell.reference[1])
    elif table == 3:
        row.update(dim_frequency=summary.dim_accuracy_frequency, reference_dim_frequency=cell.reference[0])
    else:
        row.update(d_signal_mean=summary.mean("d_signal"), d_signal_std=summary.std("d_signal"),
                   reference_d_signal=cell.reference[0])
    return row


def replicate_table(table: int, n_runs: int, seed: int = 0, max_dim: Optional[int] = None,
                    opts: Optional[EstimationOptions] = None, n_jobs: int = 1) -> List[Dict[str, float]]:
    return [replicate_cell(c, table, n_runs, seed, opts, n_jobs) for c in cells(table, max_dim)]
