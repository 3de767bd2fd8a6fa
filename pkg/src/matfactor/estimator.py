"""Two-step estimation for Y_t = A X_t + R F_t C' + E_t.

Step one regresses Y_t on the known factors X_t by least squares. Step two
eigen-decomposes the lagged autocovariance statistics of the residuals to
recover the row and column loading spaces, their dimensions, the latent
factors and the signal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import (
    CoefficientMatrix,
    DimensionMismatchError,
    KnownFactorSeries,
    LatentFactorSeries,
    LoadingBasis,
    MatfactorError,
    MatrixSeries,
    ModelEstimate,
    Spectrum,
    apply_sign_convention,
    as_known_factors,
    as_matrix_series,
    validate_pair,
)

GRAM_RCOND = 1e-10
RATIO_FLOOR = 1e-12
SYMMETRY_TOL = 1e-10

K_MAX_RULES = {"half": 1 / 2, "third": 1 / 3}


class SingularGramError(MatfactorError, np.linalg.LinAlgError):
    def __init__(self, ratio: float):
        self.ratio = ratio
        super().__init__(
            f"known-factor Gram matrix is singular: smallest/largest singular value "
            f"= {ratio:.3e} (threshold {GRAM_RCOND:g})"
        )


class DegenerateSpectrumError(MatfactorError, ValueError):
    pass


@dataclass(frozen=True)
class EstimationOptions:
    """Tuning knobs for :func:`fit`.

    Parameters
    ----------
    h0 : int
        Number of lags accumulated into the M matrices.
    k_max_rule : float
        Fraction of the dimension searched by the ratio estimator; the
        strings ``"half"`` and ``"third"`` are accepted.
    fixed_dims : (int, int), optional
        Use these latent dimensions instead of estimating them.
    center : bool
        Demean the residuals over time before forming covariances.
    """

    h0: int = 1
    k_max_rule: float = 0.5
    fixed_dims: Optional[Tuple[int, int]] = None
    center: bool = False

    def __post_init__(self):
        rule = K_MAX_RULES.get(self.k_max_rule, self.k_max_rule)
        object.__setattr__(self, "k_max_rule", float(rule))
        if int(self.h0) != self.h0 or self.h0 < 1:
            raise ValueError(f"h0 must be a positive integer, got {self.h0}")
        object.__setattr__(self, "h0", int(self.h0))
        if not 0 < self.k_max_rule <= 1:
            raise ValueError(f"k_max_rule must lie in (0, 1], got {self.k_max_rule}")
        if self.fixed_dims is not None:
            k, r = (int(v) for v in self.fixed_dims)
            if k < 1 or r < 1:
                raise ValueError(f"fixed_dims must be positive, got {self.fixed_dims}")
            object.__setattr__(self, "fixed_dims", (k, r))

    def validate_for(self, T: int, p: int, q: int) -> None:
        if self.h0 >= T:
            raise ValueError(f"h0={self.h0} must be smaller than T={T}")
        if self.fixed_dims is not None:
            k, r = self.fixed_dims
            if k > p:
                raise ValueError(f"fixed k={k} exceeds p={p}")
            if r > q:
                raise ValueError(f"fixed r={r} exceeds q={q}")

    def k_max(self, dim: int) -> int:
        """Search range K for the ratio estimator on a ``dim``-sized spectrum."""
        return max(1, min(math.floor(dim * self.k_max_rule + 1e-9), dim - 1))


def fit_coefficient(y, x) -> CoefficientMatrix:
    """Least-squares estimate of A.

    Solves the normal equations (sum_t Y_t X_t')(sum_t X_t X_t')^{-1}; the
    1/T factors cancel.
    """
    validate_pair(y, x)
    ya, xa = np.asarray(y), np.asarray(x)
    cross = np.einsum("tiq,tjq->ij", ya, xa)
    gram = np.einsum("tiq,tjq->ij", xa, xa)
    sv = np.linalg.svd(gram, compute_uv=False)
    ratio = sv[-1] / sv[0] if sv[0] > 0 else 0.0
    if not ratio > GRAM_RCOND:
        raise SingularGramError(ratio)
    # gram is symmetric, so solve(gram, cross') = (cross gram^{-1})'.
    return CoefficientMatrix(np.linalg.solve(gram, cross.T).T)


def compute_residuals(y, x, a_hat) -> MatrixSeries:
    """W_t = Y_t - A_hat X_t for every slice."""
    ya, xa, a = np.asarray(y), np.asarray(x), np.asarray(a_hat)
    if a.shape != (ya.shape[1], xa.shape[1]):
        raise DimensionMismatchError("A", (ya.shape[1], xa.shape[1]), a.shape)
    validate_pair(ya, xa)
    return MatrixSeries(ya - a @ xa, "w")


def lag_cross_cov(w, h: int, i: int, j: int) -> np.ndarray:
    """Uncentered lag-h cross covariance of columns i and j (0-based).

    Returns (T-h)^{-1} sum_{t} w_{t,i} w_{t+h,j}'.
    """
    wa = np.asarray(w)
    T, p, q = wa.shape
    if not 1 <= h <= T - 1:
        raise ValueError(f"lag h={h} outside [1, {T - 1}]")
    for name, idx in (("i", i), ("j", j)):
        if not 0 <= idx < q:
            raise IndexError(f"column index {name}={idx} outside [0, {q - 1}]")
    return wa[: T - h, :, i].T @ wa[h:, :, j] / (T - h)


def _lag_covariance(wa: np.ndarray, h: int) -> np.ndarray:
    # All (i, j) blocks at once: result[a, i, b, j] = Omega_ij(h)[a, b].
    T, p, q = wa.shape
    flat = wa.reshape(T, p * q)
    return (flat[: T - h].T @ flat[h:] / (T - h)).reshape(p, q, p, q)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2


def build_m_matrices(w, h0: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column M matrices sharing one pass over the lag covariances."""
    wa = np.asarray(w)
    T, p, q = wa.shape
    if not 1 <= h0 <= T - 1:
        raise ValueError(f"h0={h0} outside [1, {T - 1}]")
    m_row = np.zeros((p, p))
    m_col = np.zeros((q, q))
    for h in range(1, h0 + 1):
        omega = _lag_covariance(wa, h)
        rows = omega.reshape(p, -1)
        m_row += rows @ rows.T
        cols = omega.transpose(1, 0, 2, 3).reshape(q, -1)
        m_col += cols @ cols.T
    return _symmetrize(m_row), _symmetrize(m_col)


def build_m_matrix(w, h0: int, axis: str = "rows") -> np.ndarray:
    """sum_{h<=h0} sum_{i,j} Omega_ij(h) Omega_ij(h)'.

    ``axis="cols"`` builds the same statistic on the transposed slices.
    """
    if axis not in ("rows", "cols"):
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")
    m_row, m_col = build_m_matrices(w, h0)
    return m_row if axis == "rows" else m_col


def eigen_sorted(m) -> Spectrum:
    """Full eigen-decomposition in nonincreasing order with signs fixed."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    norm = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > SYMMETRY_TOL * max(norm, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")
    lam, vec = np.linalg.eigh(m)
    return Spectrum(lam[::-1].copy(), apply_sign_convention(vec[:, ::-1]))


def estimate_dim_ratio(spectrum: Spectrum, k_max: int) -> int:
    """Ratio-based dimension estimate, argmin_{j<=K} lambda_{j+1} / lambda_j.

    Eigenvalues below 1e-12 * lambda_1 are clamped to that floor; ties go
    to the smallest index.
    """
    lam = np.asarray(spectrum.eigenvalues)
    if not 1 <= k_max <= lam.size - 1:
        raise ValueError(f"k_max={k_max} outside [1, {lam.size - 1}]")
    if not lam[0] > 0:
        raise DegenerateSpectrumError(f"leading eigenvalue {lam[0]:.3e} is not positive")
    lam = np.maximum(lam[: k_max + 1], RATIO_FLOOR * lam[0])
    return int(np.argmin(lam[1:] / lam[:-1])) + 1


def extract_loading(spectrum: Spectrum, k: int, kind: str = "row") -> LoadingBasis:
    if not 1 <= k <= spectrum.d:
        raise ValueError(f"k={k} outside [1, {spectrum.d}]")
    return LoadingBasis(spectrum.eigenvectors[:, :k], kind)


def estimate_latent(w, q1: LoadingBasis, q2: LoadingBasis) -> LatentFactorSeries:
    """Z_hat_t = Q1' W_t Q2."""
    wa = np.asarray(w)
    _check_bases(wa.shape[1:], q1, q2)
    return LatentFactorSeries(q1.columns.T @ wa @ q2.columns, "z")


def _check_bases(pq, q1: LoadingBasis, q2: LoadingBasis) -> None:
    p, q = pq
    if q1.d != p:
        raise DimensionMismatchError("p", p, q1.d)
    if q2.d != q:
        raise DimensionMismatchError("q", q, q2.d)


def project(w, q1: LoadingBasis, q2: LoadingBasis) -> np.ndarray:
    """Two-sided projection Q1 Q1' W_t Q2 Q2' of every slice."""
    wa = np.asarray(w)
    _check_bases(wa.shape[1:], q1, q2)
    u, v = q1.columns, q2.columns
    return u @ (u.T @ wa @ v) @ v.T


def reconstruct_signals(w, x, a_hat, q1: LoadingBasis, q2: LoadingBasis):
    """Factor signal L_hat and total signal S_hat = A_hat X_t + L_hat.

    Pass ``x=None`` and ``a_hat=None`` for a model without known factors.
    """
    l_hat = project(w, q1, q2)
    if a_hat is None:
        s_hat = l_hat
    else:
        xa, a = np.asarray(x), np.asarray(a_hat)
        if a.shape != (l_hat.shape[1], xa.shape[1]):
            raise DimensionMismatchError("A", (l_hat.shape[1], xa.shape[1]), a.shape)
        if xa.shape[0] != l_hat.shape[0]:
            raise DimensionMismatchError("T", l_hat.shape[0], xa.shape[0])
        s_hat = a @ xa + l_hat
    return MatrixSeries(l_hat, "l"), MatrixSeries(s_hat, "s")


def _choose_dim(spectrum: Spectrum, opts: EstimationOptions) -> int:
    if spectrum.d == 1:
        return 1
    return estimate_dim_ratio(spectrum, opts.k_max(spectrum.d))


def fit(y, x=None, opts: Optional[EstimationOptions] = None) -> ModelEstimate:
    """Run the full pipeline.

    Parameters
    ----------
    y : MatrixSeries or (T, p, q) array
    x : KnownFactorSeries or (T, m, q) array, optional
        Known factors. ``None`` fits a pure matrix factor model (W_t = Y_t).
    opts : EstimationOptions, optional

    Returns
    -------
    ModelEstimate
    """
    opts = opts or EstimationOptions()
    y = as_matrix_series(y, "y")
    opts.validate_for(y.T, y.p, y.q)
    if x is None:
        a_hat = None
        w = y.data
    else:
        x = as_known_factors(x)
        a_hat = fit_coefficient(y, x)
        w = compute_residuals(y, x, a_hat).data
    mean = None
    if opts.center:
        mean = w.mean(axis=0)
        w = w - mean
    m_row, m_col = build_m_matrices(w, opts.h0)
    spec_row, spec_col = eigen_sorted(m_row), eigen_sorted(m_col)
    if opts.fixed_dims is not None:
        k, r = opts.fixed_dims
    else:
        k, r = _choose_dim(spec_row, opts), _choose_dim(spec_col, opts)
    q1 = extract_loading(spec_row, k, "row")
    q2 = extract_loading(spec_col, r, "col")
    return ModelEstimate(
        a_hat=a_hat,
        q1_hat=q1,
        q2_hat=q2,
        spectrum_row=spec_row,
        spectrum_col=spec_col,
        z_hat=estimate_latent(w, q1, q2),
        h0=opts.h0,
        center=opts.center,
        mean=mean,
    )


def fitted_values(model: ModelEstimate, y_new, x_new=None, part: str = "total") -> MatrixSeries:
    """Fitted Y_t on (possibly out-of-sample) data using trained parameters.

    ``part`` selects ``"known"`` (A_hat X_t), ``"latent"`` (the two-sided
    projection of Y_t - A_hat X_t) or ``"total"`` (their sum).
    """
    if part not in ("total", "known", "latent"):
        raise ValueError(f"part must be total, known or latent, got {part!r}")
    ya = np.asarray(y_new, dtype=float)
    if ya.shape[1:] != (model.p, model.q):
        raise DimensionMismatchError("(p, q)", (model.p, model.q), ya.shape[1:])
    if model.a_hat is None:
        known = np.zeros_like(ya)
    else:
        if x_new is None:
            raise ValueError("model has known factors; x_new is required")
        xa = np.asarray(x_new, dtype=float)
        validate_pair(ya, xa)
        if xa.shape[1] != model.a_hat.shape[1]:
            raise DimensionMismatchError("m", model.a_hat.shape[1], xa.shape[1])
        known = model.a_hat.values @ xa
    if part == "known":
        return MatrixSeries(known, "y_hat")
    resid = ya - known
    if model.mean is not None:
        latent = project(resid - model.mean, model.q1_hat, model.q2_hat) + model.mean
    else:
        latent = project(resid, model.q1_hat, model.q2_hat)
    if part == "latent":
        return MatrixSeries(latent, "y_hat")
    return MatrixSeries(known + latent, "y_hat")
