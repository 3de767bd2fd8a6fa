"""Domain types shared by the estimator, simulator, metrics and I/O layers.

Every container wraps a float64 numpy array that is copied on construction
and marked read-only, so instances can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

ORTHONORMAL_TOL = 1e-10


class MatfactorError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatchError(MatfactorError, ValueError):
    def __init__(self, axis: str, expected, got):
        self.axis = axis
        self.expected = expected
        self.got = got
        super().__init__(f"dimension mismatch on axis {axis!r}: expected {expected}, got {got}")


class NonFiniteError(MatfactorError, ValueError):
    def __init__(self, location: tuple, what: str = "series"):
        self.location = location
        super().__init__(f"non-finite entry in {what} at index {location}")


class NotOrthonormalError(MatfactorError, ValueError):
    pass


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        raise NonFiniteError(tuple(int(i) for i in bad[0]), name)
    arr.flags.writeable = False
    return arr


def _stack_slices(data, name: str) -> np.ndarray:
    # Ragged lists of slices must fail loudly instead of becoming object arrays.
    if isinstance(data, np.ndarray):
        return data
    slices = [np.asarray(s, dtype=float) for s in data]
    if not slices:
        raise ValueError(f"{name} needs at least one slice")
    shape0 = slices[0].shape
    for t, s in enumerate(slices):
        if s.shape != shape0:
            raise DimensionMismatchError(f"slice {t}", shape0, s.shape)
    return np.stack(slices)


@dataclass(frozen=True)
class _Series:
    data: np.ndarray
    role: str = ""

    _name = "series"
    _min_len = 1

    def __post_init__(self):
        arr = _frozen(_stack_slices(self.data, self._name), 3, self._name)
        if arr.shape[0] < self._min_len:
            raise ValueError(f"{self._name} needs T >= {self._min_len}, got {arr.shape[0]}")
        if min(arr.shape[1:]) < 1:
            raise ValueError(f"{self._name} slices must be non-empty, got {arr.shape[1:]}")
        object.__setattr__(self, "data", arr)

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, t):
        return self.data[t]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __eq__(self, other):
        return type(self) is type(other) and np.array_equal(self.data, other.data)

    __hash__ = None


class MatrixSeries(_Series):
    """Length-T sequence of p x q matrices, stored as a (T, p, q) array.

    ``role`` is a free-form tag ("y", "w", "e", "s", "l", ...) used only for
    labelling files and messages.
    """

    _name = "MatrixSeries"
    _min_len = 2

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def q(self) -> int:
        return self.data.shape[2]

    def transpose(self) -> "MatrixSeries":
        """Series of transposed slices (T, q, p)."""
        return MatrixSeries(self.data.transpose(0, 2, 1), self.role)


class KnownFactorSeries(_Series):
    """Observed covariates X_t, shape (T, m, q)."""

    _name = "KnownFactorSeries"
    _min_len = 1

    @property
    def m(self) -> int:
        return self.data.shape[1]

    @property
    def q(self) -> int:
        return self.data.shape[2]


class LatentFactorSeries(_Series):
    """Latent factor matrices (F_t or Z_t), shape (T, k, r)."""

    _name = "LatentFactorSeries"
    _min_len = 1

    @property
    def k(self) -> int:
        return self.data.shape[1]

    @property
    def r(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class CoefficientMatrix:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, 2, "CoefficientMatrix"))

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def apply_sign_convention(v: np.ndarray) -> np.ndarray:
    """Flip columns so each has a positive entry sum.

    A column summing to exactly zero is oriented so that its first nonzero
    entry is positive. Returns a new array.
    """
    v = np.array(v, dtype=float, copy=True)
    sums = v.sum(axis=0)
    for j, s in enumerate(sums):
        if s < 0:
            v[:, j] = -v[:, j]
        elif s == 0:
            nz = np.flatnonzero(v[:, j])
            if nz.size and v[nz[0], j] < 0:
                v[:, j] = -v[:, j]
    return v


def check_orthonormal(columns: np.ndarray, tol: float = ORTHONORMAL_TOL) -> None:
    k = columns.shape[1]
    dev = np.max(np.abs(columns.T @ columns - np.eye(k))) if k else 0.0
    if dev > tol:
        raise NotOrthonormalError(f"columns are not orthonormal (max |V'V - I| = {dev:.3e} > {tol:g})")


@dataclass(frozen=True)
class LoadingBasis:
    """Semi-orthogonal d x k basis of a loading space.

    The sign convention is applied on construction; orthonormality is
    checked, not enforced.
    """

    columns: np.ndarray
    kind: str = "row"

    def __post_init__(self):
        if self.kind not in ("row", "col"):
            raise ValueError(f"kind must be 'row' or 'col', got {self.kind!r}")
        cols = _frozen(self.columns, 2, "LoadingBasis")
        d, k = cols.shape
        if not 1 <= k <= d:
            raise ValueError(f"LoadingBasis needs 1 <= k <= d, got d={d}, k={k}")
        check_orthonormal(cols)
        cols = apply_sign_convention(cols)
        cols.flags.writeable = False
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_span(cls, matrix, kind: str = "row") -> "LoadingBasis":
        """Orthonormal basis of the column space of a full-column-rank matrix."""
        q, _ = np.linalg.qr(np.asarray(matrix, dtype=float))
        return cls(q, kind)

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T

    def __array__(self, dtype=None, copy=None):
        return self.columns if dtype is None else self.columns.astype(dtype)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in nonincreasing order with matching unit eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = _frozen(self.eigenvalues, 1, "Spectrum.eigenvalues")
        vec = _frozen(self.eigenvectors, 2, "Spectrum.eigenvectors")
        if vec.shape != (lam.size, lam.size):
            raise DimensionMismatchError("eigenvectors", (lam.size, lam.size), vec.shape)
        scale = abs(lam[0]) if lam.size else 0.0
        if np.any(np.diff(lam) > 1e-12 * scale):
            raise ValueError("eigenvalues must be in nonincreasing order")
        if lam.size and lam.min() < -1e-10 * scale:
            raise ValueError(f"negative eigenvalue {lam.min():.3e} for a PSD source matrix")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vec)

    @property
    def d(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class ModelEstimate:
    """Everything the fitting pipeline produces.

    ``a_hat`` is None for a pure matrix factor model fitted without known
    factors.
    """

    a_hat: Optional[CoefficientMatrix]
    q1_hat: LoadingBasis
    q2_hat: LoadingBasis
    spectrum_row: Spectrum
    spectrum_col: Spectrum
    z_hat: LatentFactorSeries
    h0: int
    center: bool = False
    mean: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.h0 < 1:
            raise ValueError(f"h0 must be >= 1, got {self.h0}")

    @property
    def k_hat(self) -> int:
        return self.q1_hat.k

    @property
    def r_hat(self) -> int:
        return self.q2_hat.k

    @property
    def p(self) -> int:
        return self.q1_hat.d

    @property
    def q(self) -> int:
        return self.q2_hat.d


def validate_pair(y: MatrixSeries, x: KnownFactorSeries) -> None:
    """Check that ``y`` and ``x`` can be modelled together.

    Raises DimensionMismatchError naming the axis ("T" or "q") on a shape
    conflict. Finiteness is guaranteed by the series constructors; raw
    arrays are checked here too.
    """
    ya = np.asarray(y)
    xa = np.asarray(x)
    for arr, what in ((ya, "y"), (xa, "x")):
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            raise NonFiniteError(tuple(int(i) for i in bad[0]), what)
    if ya.ndim != 3 or xa.ndim != 3:
        raise ValueError("y and x must be (T, rows, cols) arrays")
    if ya.shape[0] != xa.shape[0]:
        raise DimensionMismatchError("T", ya.shape[0], xa.shape[0])
    if ya.shape[2] != xa.shape[2]:
        raise DimensionMismatchError("q", ya.shape[2], xa.shape[2])


def as_matrix_series(y, role: str = "") -> MatrixSeries:
    return y if isinstance(y, MatrixSeries) else MatrixSeries(y, role)


def as_known_factors(x) -> KnownFactorSeries:
    return x if isinstance(x, KnownFactorSeries) else KnownFactorSeries(x, "x")
