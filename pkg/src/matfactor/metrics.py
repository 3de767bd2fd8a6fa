"""Evaluation quantities for fitted models and Monte Carlo runs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .core import DimensionMismatchError, LoadingBasis, MatfactorError, check_orthonormal


class ConstantSeriesError(MatfactorError, ValueError):
    pass


def _basis(o) -> np.ndarray:
    if isinstance(o, LoadingBasis):
        return o.columns
    arr = np.asarray(o, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"basis must be a 2-D array, got shape {arr.shape}")
    check_orthonormal(arr)
    return arr


def subspace_distance(o1, o2) -> float:
    """Distance between the column spaces of two orthonormal bases.

    D = sqrt(1 - tr(O1 O1' O2 O2') / max(k1, k2)); 0 for equal spaces and
    1 for orthogonal ones.
    """
    a, b = _basis(o1), _basis(o2)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError("ambient dimension", a.shape[0], b.shape[0])
    if a.shape[1] < b.shape[1]:
        a, b = b, a
    # With orthonormal columns, tr(A A' B B') = k_b - ||B - A A'B||_F^2, and the
    # residual form keeps full relative accuracy when the spaces nearly coincide.
    resid = b - a @ (a.T @ b)
    radicand = (np.sum(resid**2) + a.shape[1] - b.shape[1]) / a.shape[1]
    return float(np.sqrt(min(max(radicand, 0.0), 1.0)))


def coefficient_error(a, a_hat) -> float:
    """||A - A_hat||_F / sqrt(p)."""
    a, a_hat = np.asarray(a, dtype=float), np.asarray(a_hat, dtype=float)
    if a.shape != a_hat.shape:
        raise DimensionMismatchError("A", a.shape, a_hat.shape)
    return float(np.linalg.norm(a - a_hat) / np.sqrt(a.shape[0]))


def signal_recovery_error(s_hat, s) -> float:
    """Time average of the spectral norm of S_hat_t - S_t, over sqrt(pq)."""
    s_hat, s = np.asarray(s_hat, dtype=float), np.asarray(s, dtype=float)
    if s_hat.shape != s.shape:
        raise DimensionMismatchError("series", s.shape, s_hat.shape)
    _, p, q = s.shape
    norms = np.linalg.norm(s_hat - s, ord=2, axis=(1, 2))
    return float(norms.mean() / np.sqrt(p * q))


def out_of_sample_r2(y, y_hat) -> float:
    """1 - sum_t ||Y_t - Y_hat_t||_F^2 / sum_t ||Y_t - Y_bar||_F^2.

    Y_bar is the mean over the same evaluation window.
    """
    y, y_hat = np.asarray(y, dtype=float), np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise DimensionMismatchError("series", y.shape, y_hat.shape)
    total = np.sum((y - y.mean(axis=0)) ** 2)
    if total == 0:
        raise ConstantSeriesError("evaluation series is constant over time; R^2 undefined")
    return float(1.0 - np.sum((y - y_hat) ** 2) / total)


def dim_accuracy(truth: Tuple[int, int], estimate: Tuple[int, int]) -> bool:
    return tuple(truth) == tuple(estimate)


def varimax_criterion(loadings) -> float:
    """Sum over columns of the variance of the squared loadings."""
    sq = np.asarray(loadings, dtype=float) ** 2
    return float(np.sum(sq.var(axis=0)))


def varimax_rotate(q, tol: float = 1e-8, max_sweeps: int = 500, return_history: bool = False):
    """Orthogonal rotation maximizing the (raw) varimax criterion.

    Uses Kaiser's sweep of planar rotations over every column pair. No row
    normalization is applied.

    Parameters
    ----------
    q : LoadingBasis or (d, k) array
    tol : float
        Stop once a full sweep improves the criterion by less than this.
    max_sweeps : int
    return_history : bool
        Also return the criterion value after each sweep (first entry is
        the starting value).

    Returns
    -------
    rotated : (d, k) ndarray
    history : list of float, only if ``return_history``
    """
    b = np.array(q.columns if isinstance(q, LoadingBasis) else q, dtype=float)
    d, k = b.shape
    history = [varimax_criterion(b)]
    if k > 1:
        for _ in range(max_sweeps):
            for i in range(k - 1):
                for j in range(i + 1, k):
                    x, y = b[:, i], b[:, j]
                    u = x * x - y * y
                    v = 2 * x * y
                    num = 2 * (d * np.dot(u, v) - u.sum() * v.sum())
                    den = d * (np.dot(u, u) - np.dot(v, v)) - (u.sum() ** 2 - v.sum() ** 2)
                    theta = np.arctan2(num, den) / 4
                    c, s = np.cos(theta), np.sin(theta)
                    b[:, i], b[:, j] = c * x + s * y, -s * x + c * y
            history.append(varimax_criterion(b))
            if history[-1] - history[-2] < tol:
                break
    return (b, history) if return_history else b


@dataclass
class ReplicationSummary:
    """Means and standard deviations of per-run metrics.

    ``stats`` maps a metric name to ``(mean, std)``; std uses ddof=0 so a
    single run reports 0.
    """

    stats: Dict[str, Tuple[float, float]]
    dim_accuracy_frequency: float
    n_runs: int
    failed_runs: int = 0
    config: dict = field(default_factory=dict)
    per_run: Dict[str, list] = field(default_factory=dict, repr=False)

    def mean(self, name: str) -> float:
        return self.stats[name][0]

    def std(self, name: str) -> float:
        return self.stats[name][1]
