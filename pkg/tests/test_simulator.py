import numpy as np
import pytest

import oracles
from matfactor.estimator import EstimationOptions, fit, reconstruct_signals
from matfactor.metrics import coefficient_error, signal_recovery_error, subspace_distance
from matfactor.simulator import (
    ConfigError,
    SimulationConfig,
    assemble,
    default_transition,
    evaluate_run,
    gen_coefficient,
    gen_errors,
    gen_known_factors,
    gen_latent_factors,
    gen_loading,
    generate,
    run_replication,
)


def lag1_autocorr(series):
    x = series - series.mean()
    return np.dot(x[:-1], x[1:]) / np.dot(x, x)


# -- configuration ---------------------------------------------------------------

def test_default_transition_is_stationary():
    lam = np.sort(np.linalg.eigvalsh(default_transition(3)))
    np.testing.assert_allclose(lam, [0.5, 0.5, 7 / 8], atol=1e-14)
    for m in range(1, 8):
        assert np.max(np.abs(np.linalg.eigvals(default_transition(m)))) < 1
    SimulationConfig(m=3)


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError) as info:
        SimulationConfig(m=2, x_transition=np.eye(2))
    assert info.value.field == "x_transition"
    with pytest.raises(ConfigError) as info:
        SimulationConfig(k=1, r=1, f_ar_coeffs=[1.0])
    assert info.value.field == "f_ar_coeffs"
    bad = np.eye(3)
    bad[0, 0] = -1
    with pytest.raises(ConfigError) as info:
        SimulationConfig(p=3, k=1, sigma1=bad)
    assert info.value.field == "sigma1"
    with pytest.raises(ConfigError) as info:
        SimulationConfig(delta1=1.5)
    assert info.value.field == "delta1"
    with pytest.raises(ConfigError):
        SimulationConfig(p=2, k=3)
    with pytest.raises(ConfigError):
        SimulationConfig(x_transition=np.eye(3))


def test_config_defaults_follow_design():
    cfg = SimulationConfig(p=4, q=3, k=3, r=3)
    np.testing.assert_array_equal(cfg.f_ar_coeffs, [-0.5, 0.6, 0.5, 0.8, -0.4, 0.6, 0.7, 0.3, 0.4])
    assert cfg.sigma1[0, 1] == 0.2 and cfg.sigma1[0, 0] == 1.0
    assert cfg.x_transition.shape == (5, 5)
    np.testing.assert_array_equal(cfg.x_transition[3:], 0.0)


# -- known factors ---------------------------------------------------------------

def test_known_factors_white_noise():
    cfg = SimulationConfig(m=3, q=2, k=1, r=1, t_len=5000, x_transition=np.zeros((3, 3)))
    x = gen_known_factors(cfg, 0).data
    for i in range(3):
        for j in range(2):
            assert abs(lag1_autocorr(x[:, i, j])) < 4 / np.sqrt(cfg.t_len)


def test_known_factors_lag_autocovariance_matches_lyapunov():
    phi = default_transition(3)
    cfg = SimulationConfig(m=3, q=10, t_len=10_000)
    x = gen_known_factors(cfg, 1).data
    target = phi @ oracles.lyapunov_fixed_point(phi, np.eye(3))
    np.testing.assert_allclose(target[0], [76 / 45, 46 / 45, 46 / 45], rtol=1e-10)
    # columns are independent copies of the same process, so pool them
    lag_cov = sum(x[1:, :, j].T @ x[:-1, :, j] for j in range(cfg.q)) / (cfg.q * (cfg.t_len - 1))
    assert np.linalg.norm(lag_cov - target) / np.linalg.norm(target) < 0.05


# -- latent factors --------------------------------------------------------------

def test_latent_factors_white_noise_and_ar():
    f = gen_latent_factors(SimulationConfig(k=1, r=1, t_len=5000, f_ar_coeffs=[0.0]), 2).data
    assert abs(lag1_autocorr(f[:, 0, 0])) < 4 / np.sqrt(5000)
    f = gen_latent_factors(SimulationConfig(k=1, r=1, t_len=10_000, f_ar_coeffs=[0.8]), 3).data
    assert lag1_autocorr(f[:, 0, 0]) == pytest.approx(0.8, abs=0.05)


def test_latent_factors_column_major_vec():
    cfg = SimulationConfig(k=3, r=3, t_len=10_000)
    f = gen_latent_factors(cfg, 4).data
    assert lag1_autocorr(f[:, 0, 0]) == pytest.approx(-0.5, abs=0.05)
    # vec index 3 is entry (0, 1) with coefficient 0.8
    assert lag1_autocorr(f[:, 0, 1]) == pytest.approx(0.8, abs=0.05)
    assert lag1_autocorr(f[:, 1, 0]) == pytest.approx(0.6, abs=0.05)


# -- loadings and coefficients -----------------------------------------------------

def test_loading_support():
    rng = np.random.default_rng(5)
    assert np.all(np.abs(gen_loading(50, 3, 0.0, rng)) < 1)
    assert np.all(np.abs(gen_loading(100, 3, 1.0, rng)) < 0.1)
    with pytest.raises(ValueError):
        gen_loading(3, 4, 0.0, rng)


def test_loading_column_norm():
    rng = np.random.default_rng(6)
    norms = np.array([np.sum(gen_loading(50, 3, 0.0, rng) ** 2, axis=0) for _ in range(300)])
    assert norms.mean() == pytest.approx(50 / 3, rel=0.10)


def test_coefficient_moments():
    a = gen_coefficient(100, 100, np.random.default_rng(7)).values
    assert np.all(np.abs(a) < 1)
    assert abs(a.mean()) < 0.02
    assert a.var() == pytest.approx(1 / 3, rel=0.05)


# -- errors ------------------------------------------------------------------------

def test_errors_identity_covariance():
    cfg = SimulationConfig(p=10, q=10, k=1, r=1, t_len=1000, sigma1=np.eye(10), sigma2=np.eye(10))
    e = gen_errors(cfg, 8).data
    assert e.size >= 10**5
    assert e.var() == pytest.approx(1.0, rel=0.05)


def test_errors_default_row_correlation():
    cfg = SimulationConfig(p=10, q=10, t_len=5000)
    e = gen_errors(cfg, 9).data
    assert np.mean(e[:, 0, 0] * e[:, 1, 0]) == pytest.approx(0.2, abs=0.05)


def test_errors_kronecker_covariance():
    rng = np.random.default_rng(10)
    g1, g2 = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    s1, s2 = g1 @ g1.T + np.eye(3), g2 @ g2.T + np.eye(3)
    cfg = SimulationConfig(p=3, q=3, k=1, r=1, t_len=20_000, sigma1=s1, sigma2=s2)
    e = gen_errors(cfg, 11).data
    vec = e.transpose(0, 2, 1).reshape(cfg.t_len, 9)  # column-major vec
    sample = vec.T @ vec / cfg.t_len
    target = np.kron(s2, s1)
    assert np.linalg.norm(sample - target) / np.linalg.norm(target) < 0.10


# -- assembly ------------------------------------------------------------------------

def test_generate_identity_and_truth_bases():
    truth = generate(SimulationConfig(p=6, q=5, t_len=30, seed=3))
    x, f, e = truth.x.data, truth.f.data, truth.e.data
    resid = truth.y.data - truth.a.values @ x - truth.r_loading @ f @ truth.c_loading.T - e
    assert np.max(np.abs(resid)) <= 1e-12
    np.testing.assert_allclose(truth.s.data, truth.a.values @ x + truth.l.data, atol=1e-12)
    assert subspace_distance(truth.q1, np.linalg.qr(truth.r_loading)[0]) < 1e-10
    cos = np.linalg.svd(truth.q2.columns.T @ np.linalg.qr(truth.c_loading)[0], compute_uv=False)
    assert np.all(np.arccos(np.clip(cos, -1, 1)) < 1e-7)


def test_generate_is_deterministic():
    cfg = SimulationConfig(p=5, q=4, t_len=20, seed=42)
    a, b = generate(cfg), generate(cfg)
    for name in ("y", "x", "f", "e", "s", "l"):
        np.testing.assert_array_equal(getattr(a, name).data, getattr(b, name).data)
    c = generate(cfg.replace(seed=43))
    assert not np.array_equal(a.y.data, c.y.data)


def test_zeroing_noise_and_factors_leaves_regression():
    truth = generate(SimulationConfig(p=5, q=4, t_len=20, seed=1))
    bare = assemble(truth.a, truth.r_loading, truth.c_loading, truth.x,
                    np.zeros_like(truth.f.data), np.zeros_like(truth.e.data))
    for t in range(20):
        np.testing.assert_array_equal(bare.y.data[t], truth.a.values @ truth.x.data[t])


# -- replication -----------------------------------------------------------------------

def test_single_run_matches_manual_pass():
    cfg = SimulationConfig(p=6, q=6, t_len=40, seed=5)
    opts = EstimationOptions(fixed_dims=(3, 3))
    summary = run_replication(cfg, 1, opts)
    truth = generate(cfg)
    est = fit(truth.y, truth.x, opts)
    w = truth.y.data - est.a_hat.values @ truth.x.data
    _, s_hat = reconstruct_signals(w, truth.x, est.a_hat, est.q1_hat, est.q2_hat)
    assert summary.mean("coef_error") == coefficient_error(truth.a, est.a_hat)
    assert summary.mean("d_q1") == subspace_distance(est.q1_hat, truth.q1)
    assert summary.mean("d_q2") == subspace_distance(est.q2_hat, truth.q2)
    assert summary.mean("d_signal") == signal_recovery_error(s_hat, truth.s)
    assert all(summary.std(name) == 0.0 for name in summary.stats)
    assert summary.failed_runs == 0


def test_replication_seeds_and_parallel_determinism():
    cfg = SimulationConfig(p=5, q=5, t_len=30, seed=10)
    serial = run_replication(cfg, 4)
    parallel = run_replication(cfg, 4, n_jobs=2)
    assert serial.per_run == parallel.per_run
    assert serial.stats == parallel.stats
    third = evaluate_run(generate(cfg.replace(seed=12)), EstimationOptions(fixed_dims=(3, 3)))
    assert serial.per_run["coef_error"][2] == third["coef_error"]
    assert 0.0 <= serial.dim_accuracy_frequency <= 1.0


def test_fixed_parameters_share_loadings():
    cfg = SimulationConfig(p=5, q=5, t_len=30, seed=3, fixed_parameters=True)
    summary = run_replication(cfg, 3)
    assert summary.failed_runs == 0
    assert len(set(summary.per_run["coef_error"])) == 3


def test_failed_runs_are_counted():
    cfg = SimulationConfig(p=2, q=1, m=3, k=1, r=1, t_len=2)
    summary = run_replication(cfg, 3, EstimationOptions(fixed_dims=(1, 1)))
    assert summary.failed_runs == 3
