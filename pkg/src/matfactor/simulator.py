"""Synthetic data for the matrix regression model with latent factors.

The default design: known factors follow a VAR(1) in each column, latent
factors are independent AR(1) paths, loadings are uniform with a strength
exponent, and errors are matrix normal with equicorrelated row and column
covariances.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .core import (
    CoefficientMatrix,
    KnownFactorSeries,
    LatentFactorSeries,
    LoadingBasis,
    MatrixSeries,
)
from .estimator import EstimationOptions, estimate_dim_ratio, fit, reconstruct_signals
from .metrics import (
    ReplicationSummary,
    coefficient_error,
    signal_recovery_error,
    subspace_distance,
)

log = logging.getLogger(__name__)

BASE_TRANSITION = np.array(
    [
        [5 / 8, 1 / 8, 1 / 8],
        [1 / 8, 5 / 8, 1 / 8],
        [1 / 8, 1 / 8, 5 / 8],
    ]
)
BASE_AR_COEFFS = (-0.5, 0.6, 0.5, 0.8, -0.4, 0.6, 0.7, 0.3, 0.4)
METRICS = ("coef_error", "d_q1", "d_q2", "d_signal")


class ConfigError(ValueError):
    """Invalid simulation configuration; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def default_transition(m: int) -> np.ndarray:
    """m x m VAR(1) transition for the known factors.

    The 3 x 3 equicorrelated block sits in the top-left corner; any further
    known factors are white noise. For m < 3 this is a leading principal
    submatrix of the block, which keeps the spectral radius below one.
    """
    phi = np.zeros((m, m))
    n = min(m, 3)
    phi[:n, :n] = BASE_TRANSITION[:n, :n]
    return phi


def default_ar_coeffs(k: int, r: int) -> np.ndarray:
    """AR(1) coefficients for vec(F_t); the nine-entry base list is cycled."""
    return np.resize(np.array(BASE_AR_COEFFS), k * r)


def equicorrelation(n: int, rho: float = 0.2) -> np.ndarray:
    s = np.full((n, n), rho)
    np.fill_diagonal(s, 1.0)
    return s


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of one simulated design.

    Matrix-valued fields left as None take the default design values for
    the given dimensions. ``fixed_parameters`` keeps A, R and C drawn once
    from ``seed`` across replications instead of redrawing them per run.
    """

    p: int = 10
    q: int = 10
    m: int = 5
    k: int = 3
    r: int = 3
    t_len: int = 100
    delta1: float = 0.0
    delta2: float = 0.0
    x_transition: Optional[np.ndarray] = None
    f_ar_coeffs: Optional[np.ndarray] = None
    sigma1: Optional[np.ndarray] = None
    sigma2: Optional[np.ndarray] = None
    burn_in: int = 100
    seed: int = 0
    fixed_parameters: bool = False

    def __post_init__(self):
        for name in ("p", "q", "m", "k", "r", "t_len", "burn_in", "seed"):
            value = getattr(self, name)
            if int(value) != value:
                raise ConfigError(name, f"must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        for name in ("p", "q", "m", "k", "r"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.t_len < 2:
            raise ConfigError("t_len", "must be >= 2")
        if self.burn_in < 0:
            raise ConfigError("burn_in", "must be >= 0")
        if self.k > self.p:
            raise ConfigError("k", f"exceeds p={self.p}")
        if self.r > self.q:
            raise ConfigError("r", f"exceeds q={self.q}")
        for name in ("delta1", "delta2"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise ConfigError(name, f"must lie in [0, 1], got {value}")
            object.__setattr__(self, name, value)

        defaults = {
            "x_transition": lambda: default_transition(self.m),
            "f_ar_coeffs": lambda: default_ar_coeffs(self.k, self.r),
            "sigma1": lambda: equicorrelation(self.p),
            "sigma2": lambda: equicorrelation(self.q),
        }
        shapes = {
            "x_transition": (self.m, self.m),
            "f_ar_coeffs": (self.k * self.r,),
            "sigma1": (self.p, self.p),
            "sigma2": (self.q, self.q),
        }
        for name, make in defaults.items():
            value = getattr(self, name)
            arr = make() if value is None else np.array(value, dtype=float)
            if arr.shape != shapes[name]:
                raise ConfigError(name, f"expected shape {shapes[name]}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(name, "contains non-finite entries")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

        radius = np.max(np.abs(np.linalg.eigvals(self.x_transition)))
        if radius >= 1:
            raise ConfigError("x_transition", f"spectral radius {radius:.4g} >= 1 (non-stationary)")
        if np.any(np.abs(self.f_ar_coeffs) >= 1):
            raise ConfigError("f_ar_coeffs", "all coefficients need |phi| < 1 (non-stationary)")
        for name in ("sigma1", "sigma2"):
            s = getattr(self, name)
            if not np.allclose(s, s.T, rtol=0, atol=1e-12):
                raise ConfigError(name, "must be symmetric")
            try:
                np.linalg.cholesky(s)
            except np.linalg.LinAlgError:
                raise ConfigError(name, "must be positive definite") from None

    def replace(self, **changes) -> "SimulationConfig":
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(changes)
        return SimulationConfig(**kwargs)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.tolist() if isinstance(value, np.ndarray) else value
        return out


@dataclass(frozen=True)
class GroundTruth:
    """One simulated sample together with every hidden component."""

    a: CoefficientMatrix
    r_loading: np.ndarray
    c_loading: np.ndarray
    x: KnownFactorSeries
    f: LatentFactorSeries
    e: MatrixSeries
    y: MatrixSeries
    s: MatrixSeries
    l: MatrixSeries
    q1: LoadingBasis
    q2: LoadingBasis
    config: Optional[SimulationConfig] = field(default=None, repr=False)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _var1_paths(transition: np.ndarray, shape_tail: tuple, t_len: int, burn_in: int, rng) -> np.ndarray:
    # Zero initial state; innovations are drawn in one block for reproducibility.
    shocks = rng.standard_normal((burn_in + t_len,) + shape_tail)
    out = np.empty((t_len,) + shape_tail)
    state = np.zeros(shape_tail)
    for t in range(burn_in + t_len):
        state = transition @ state + shocks[t]
        if t >= burn_in:
            out[t - burn_in] = state
    return out


def gen_known_factors(cfg: SimulationConfig, rng) -> KnownFactorSeries:
    """Columns of X_t evolve as independent VAR(1) processes."""
    rng = _rng(rng)
    paths = _var1_paths(cfg.x_transition, (cfg.m, cfg.q), cfg.t_len, cfg.burn_in, rng)
    return KnownFactorSeries(paths, "x")


def gen_latent_factors(cfg: SimulationConfig, rng) -> LatentFactorSeries:
    """vec(F_t) follows a diagonal AR(1) with unit-variance Gaussian shocks."""
    rng = _rng(rng)
    kr = cfg.k * cfg.r
    shocks = rng.standard_normal((cfg.burn_in + cfg.t_len, kr))
    coeffs = np.asarray(cfg.f_ar_coeffs)
    state = np.zeros(kr)
    vec = np.empty((cfg.t_len, kr))
    for t in range(cfg.burn_in + cfg.t_len):
        state = coeffs * state + shocks[t]
        if t >= cfg.burn_in:
            vec[t - cfg.burn_in] = state
    # vec() stacks columns, so un-vectorize in column-major order.
    f = vec.reshape(cfg.t_len, cfg.r, cfg.k).transpose(0, 2, 1)
    return LatentFactorSeries(f, "f")


def gen_loading(dim: int, rank: int, delta: float, rng) -> np.ndarray:
    """dim x rank loadings, iid uniform on (-dim^{-delta/2}, dim^{-delta/2})."""
    if not 1 <= rank <= dim:
        raise ValueError(f"need 1 <= rank <= dim, got rank={rank}, dim={dim}")
    if not 0 <= delta <= 1:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    bound = dim ** (-delta / 2)
    return _rng(rng).uniform(-bound, bound, size=(dim, rank))


def gen_coefficient(p: int, m: int, rng) -> CoefficientMatrix:
    return CoefficientMatrix(_rng(rng).uniform(-1.0, 1.0, size=(p, m)))


def gen_errors(cfg: SimulationConfig, rng) -> MatrixSeries:
    """White-noise matrix normal errors with vec(E_t) ~ N(0, sigma2 kron sigma1)."""
    rng = _rng(rng)
    left = np.linalg.cholesky(cfg.sigma1)
    right = np.linalg.cholesky(cfg.sigma2)
    z = rng.standard_normal((cfg.t_len, cfg.p, cfg.q))
    return MatrixSeries(left @ z @ right.T, "e")


def assemble(a, r_loading, c_loading, x, f, e, config=None) -> GroundTruth:
    """Build Y_t = A X_t + R F_t C' + E_t and all derived truth objects."""
    a = a if isinstance(a, CoefficientMatrix) else CoefficientMatrix(a)
    r_loading = np.asarray(r_loading, dtype=float)
    c_loading = np.asarray(c_loading, dtype=float)
    x = x if isinstance(x, KnownFactorSeries) else KnownFactorSeries(x, "x")
    f = f if isinstance(f, LatentFactorSeries) else LatentFactorSeries(f, "f")
    e = e if isinstance(e, MatrixSeries) else MatrixSeries(e, "e")
    known = a.values @ x.data
    latent = r_loading @ f.data @ c_loading.T
    signal = known + latent
    return GroundTruth(
        a=a,
        r_loading=r_loading,
        c_loading=c_loading,
        x=x,
        f=f,
        e=e,
        y=MatrixSeries(signal + e.data, "y"),
        s=MatrixSeries(signal, "s"),
        l=MatrixSeries(latent, "l"),
        q1=LoadingBasis.from_span(r_loading, "row"),
        q2=LoadingBasis.from_span(c_loading, "col"),
        config=config,
    )


def draw_parameters(cfg: SimulationConfig, rng):
    """Draw (A, R, C) in a fixed order from ``rng``."""
    rng = _rng(rng)
    a = gen_coefficient(cfg.p, cfg.m, rng)
    r_loading = gen_loading(cfg.p, cfg.k, cfg.delta1, rng)
    c_loading = gen_loading(cfg.q, cfg.r, cfg.delta2, rng)
    return a, r_loading, c_loading


def generate(cfg: SimulationConfig, parameters=None) -> GroundTruth:
    """Simulate one sample from a single RNG stream seeded by ``cfg.seed``.

    ``parameters`` optionally supplies (A, R, C); otherwise they are drawn
    first from the same stream.
    """
    rng = np.random.default_rng(cfg.seed)
    if parameters is None:
        parameters = draw_parameters(cfg, rng)
    a, r_loading, c_loading = parameters
    x = gen_known_factors(cfg, rng)
    f = gen_latent_factors(cfg, rng)
    e = gen_errors(cfg, rng)
    return assemble(a, r_loading, c_loading, x, f, e, config=cfg)


def evaluate_run(truth: GroundTruth, opts: EstimationOptions) -> dict:
    """Fit one simulated sample and score it against the truth.

    The dimension hit is always judged with the ratio estimator, even when
    ``opts.fixed_dims`` forces the loading dimensions.
    """
    est = fit(truth.y, truth.x, opts)
    w = truth.y.data - est.a_hat.values @ truth.x.data
    if est.center:
        w = w - est.mean
    _, s_hat = reconstruct_signals(w, truth.x, est.a_hat, est.q1_hat, est.q2_hat)
    k_est = estimate_dim_ratio(est.spectrum_row, opts.k_max(truth.q1.d)) if truth.q1.d > 1 else 1
    r_est = estimate_dim_ratio(est.spectrum_col, opts.k_max(truth.q2.d)) if truth.q2.d > 1 else 1
    return {
        "coef_error": coefficient_error(truth.a, est.a_hat),
        "d_q1": subspace_distance(est.q1_hat, truth.q1),
        "d_q2": subspace_distance(est.q2_hat, truth.q2),
        "d_signal": signal_recovery_error(s_hat, truth.s),
        "k_hat": k_est,
        "r_hat": r_est,
        "dims_ok": (k_est, r_est) == (truth.q1.k, truth.q2.k),
    }


def _one_run(args):
    cfg, opts, index = args
    run_cfg = cfg.replace(seed=cfg.seed + index)
    params = None
    if cfg.fixed_parameters:
        params = draw_parameters(cfg, np.random.default_rng([cfg.seed, 2**32 - 1]))
    try:
        return evaluate_run(generate(run_cfg, params), opts)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("run %d failed: %s", index, exc)
        return None


def run_replication(
    cfg: SimulationConfig,
    n_runs: int,
    opts: Optional[EstimationOptions] = None,
    n_jobs: int = 1,
) -> ReplicationSummary:
    """Monte Carlo over ``n_runs`` independent samples.

    Run ``i`` uses seed ``cfg.seed + i``. Results are aggregated in run
    order, so the summary does not depend on ``n_jobs``.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    opts = opts or EstimationOptions(fixed_dims=(cfg.k, cfg.r))
    jobs = [(cfg, opts, i) for i in range(n_runs)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(job) for job in jobs]
    ok = [res for res in results if res is not None]
    per_run = {name: [res[name] for res in ok] for name in METRICS + ("k_hat", "r_hat")}
    stats = {}
    for name in METRICS:
        vals = np.array(per_run[name], dtype=float)
        stats[name] = (float(vals.mean()), float(vals.std())) if vals.size else (np.nan, np.nan)
    freq = float(np.mean([res["dims_ok"] for res in ok])) if ok else np.nan
    return ReplicationSummary(
        stats=stats,
        dim_accuracy_frequency=freq,
        n_runs=n_runs,
        failed_runs=n_runs - len(ok),
        config={**cfg.to_dict(), **{"estimation": asdict(opts)}},
        per_run=per_run,
    )
