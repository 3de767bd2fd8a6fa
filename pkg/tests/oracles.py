"""Brute-force reference implementations used as test oracles.

Everything here is deliberately loop-based and shares no code with the
package, so agreement is meaningful.
"""
import numpy as np


def normal_equations_scalar(y, x):
    """A for m = 1 by explicit division: sum_t Y_t x_t / sum_t x_t^2."""
    num = np.zeros((y.shape[1], 1))
    den = 0.0
    for t in range(y.shape[0]):
        for j in range(y.shape[2]):
            for i in range(y.shape[1]):
                num[i, 0] += y[t, i, j] * x[t, 0, j]
            den += x[t, 0, j] ** 2
    return num / den


def lag_cross_cov(w, h, i, j):
    T, p, _ = w.shape
    out = np.zeros((p, p))
    for t in range(T - h):
        for a in range(p):
            for b in range(p):
                out[a, b] += w[t, a, i] * w[t + h, b, j]
    return out / (T - h)


def m_matrix(w, h0):
    """Quadruple loop over (h, i, j, t) of the row M statistic."""
    T, p, q = w.shape
    m = np.zeros((p, p))
    for h in range(1, h0 + 1):
        for i in range(q):
            for j in range(q):
                omega = np.zeros((p, p))
                for t in range(T - h):
                    omega += np.outer(w[t, :, i], w[t + h, :, j])
                omega /= T - h
                m += omega @ omega.T
    return m


def lyapunov_fixed_point(phi, noise_cov, iters=5000):
    """Stationary covariance of x_t = phi x_{t-1} + eps by iterating V <- phi V phi' + S."""
    v = np.array(noise_cov, dtype=float)
    for _ in range(iters):
        v_next = phi @ v @ phi.T + noise_cov
        if np.max(np.abs(v_next - v)) < 1e-15:
            return v_next
        v = v_next
    return v


def orthonormal(rng, d, k):
    q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return q


def noiseless_sample(rng, p, q, m, k, r, T, rho=0.8):
    """Sample with E_t = 0 whose latent signal is sample-orthogonal to X.

    Each row of F is projected off the span of the stacked C' X_t', which
    makes sum_t R F_t C' X_t' = 0 so least squares returns A exactly and the
    residuals are exactly the latent signal. The latent rows are AR(1) with
    coefficient ``rho`` so lag autocovariances are nondegenerate.
    """
    A = rng.uniform(-1, 1, (p, m))
    R = rng.uniform(-1, 1, (p, k))
    C = rng.uniform(-1, 1, (q, r))
    X = rng.standard_normal((T, m, q))
    F = np.zeros((T, k, r))
    F[0] = rng.standard_normal((k, r))
    for t in range(1, T):
        F[t] = rho * F[t - 1] + rng.standard_normal((k, r))
    G = np.concatenate([C.T @ X[t].T for t in range(T)], axis=0)  # (T*r, m)
    basis, _ = np.linalg.qr(G)
    for a in range(k):
        phi = F[:, a, :].reshape(T * r)
        phi = phi - basis @ (basis.T @ phi)
        F[:, a, :] = phi.reshape(T, r)
    L = R @ F @ C.T
    Y = A @ X + L
    return dict(A=A, R=R, C=C, X=X, F=F, L=L, Y=Y)
