"""Independent reference computations used by several test modules."""

import numpy as np


def semiconjugate_mean_posterior(y, m0, s0, a, b, grid=801):
    """E[mu | y] and E[sigma^2 | y] for y_i ~ N(mu, sigma^2) with independent
    N(m0, s0^2) and InvGamma(a, b) priors, by 2-D grid quadrature."""
    y = np.asarray(y, dtype=float)
    n, ybar = y.size, y.mean()
    s = y.std() if n > 1 else 1.0
    mu = np.linspace(ybar - 10 * s / np.sqrt(n), ybar + 10 * s / np.sqrt(n), grid)
    ss_hat = max(np.sum((y - ybar) ** 2), 1e-8)
    lo, hi = (ss_hat + 2 * b) / (n + 2 * a + 2) / 8, (ss_hat + 2 * b) / (n + 2 * a + 2) * 8
    v = np.exp(np.linspace(np.log(lo), np.log(hi), grid))
    M, V = np.meshgrid(mu, v, indexing="ij")
    ss = ss_hat + n * (M - ybar) ** 2
    logp = (-0.5 * (M - m0) ** 2 / s0**2
            - (a + 1) * np.log(V) - b / V
            - 0.5 * n * np.log(V) - 0.5 * ss / V)
    w = np.exp(logp - logp.max()) * V  # Jacobian of the log-spaced variance grid
    z = np.trapezoid(np.trapezoid(w, np.log(v), axis=1), mu)
    e_mu = np.trapezoid(np.trapezoid(w * M, np.log(v), axis=1), mu) / z
    e_v = np.trapezoid(np.trapezoid(w * V, np.log(v), axis=1), mu) / z
    return float(e_mu), float(e_v)
