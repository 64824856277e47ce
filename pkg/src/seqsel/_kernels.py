"""Compiled inner loops for the forward filter and backward state sampling.

All randomness is drawn by the caller and passed in as uniforms so the
numpy generator remains the single source of entropy.
"""

import math

import numpy as np
from numba import njit

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@njit(cache=True)
def emission_logpdf(y, mu, sigma):
    n = y.shape[0]
    K = mu.shape[0]
    out = np.empty((n, K))
    for t in range(n):
        for j in range(K):
            z = (y[t] - mu[j]) / sigma[j]
            out[t, j] = -_HALF_LOG_2PI - math.log(sigma[j]) - 0.5 * z * z
    return out


@njit(cache=True)
def forward_filter(init, A, log_eta, alphas, cond_loglik):
    """Scaled forward recursion.

    ``init`` is the predicted state distribution for the first observation.
    Fills ``alphas`` (n x K filtered probabilities) and ``cond_loglik``.
    Returns -1 on success, otherwise the 0-based index of the first step
    whose marginal likelihood underflowed to zero.
    """
    n, K = log_eta.shape
    pred = init.copy()
    eta = np.empty(K)
    for t in range(n):
        if t > 0:
            for j in range(K):
                acc = 0.0
                for i in range(K):
                    acc += alphas[t - 1, i] * A[i, j]
                pred[j] = acc
        m = -np.inf
        for j in range(K):
            if pred[j] > 0.0 and log_eta[t, j] > m:
                m = log_eta[t, j]
        if m == -np.inf:
            return t
        c = 0.0
        for j in range(K):
            eta[j] = math.exp(log_eta[t, j] - m) * pred[j]
            c += eta[j]
        if not c > 0.0:
            return t
        cond_loglik[t] = m + math.log(c)
        for j in range(K):
            alphas[t, j] = eta[j] / c
    return -1


@njit(cache=True)
def backward_sample(alphas, A, uniforms, states):
    """Draw a state path from p(z | y, theta) given filtered probabilities."""
    n, K = alphas.shape
    w = np.empty(K)
    for t in range(n - 1, -1, -1):
        total = 0.0
        for i in range(K):
            if t == n - 1:
                w[i] = alphas[t, i]
            else:
                w[i] = alphas[t, i] * A[i, states[t + 1]]
            total += w[i]
        target = uniforms[t] * total
        acc = 0.0
        pick = K - 1
        for i in range(K):
            acc += w[i]
            if target < acc:
                pick = i
                break
        # never land on a zero-weight trailing state through rounding
        while w[pick] == 0.0 and pick > 0:
            pick -= 1
        states[t] = pick


@njit(cache=True)
def window_predictive(init, A, log_eta, start, stop):
    """log p(y_stop | y_start..y_{stop-1}) with the window started at ``init``.

    Returns nan if the predictive density underflows.
    """
    K = A.shape[0]
    pred = init.copy()
    alpha = np.empty(K)
    eta = np.empty(K)
    for t in range(start, stop + 1):
        m = -np.inf
        for j in range(K):
            if pred[j] > 0.0 and log_eta[t, j] > m:
                m = log_eta[t, j]
        if m == -np.inf:
            return np.nan
        c = 0.0
        for j in range(K):
            eta[j] = math.exp(log_eta[t, j] - m) * pred[j]
            c += eta[j]
        if not c > 0.0:
            return np.nan
        if t == stop:
            return m + math.log(c)
        for j in range(K):
            alpha[j] = eta[j] / c
        for j in range(K):
            acc = 0.0
            for i in range(K):
                acc += alpha[i] * A[i, j]
            pred[j] = acc
    return np.nan


@njit(cache=True)
def count_transitions(states, K):
    counts = np.zeros((K, K))
    for t in range(1, states.shape[0]):
        counts[states[t - 1], states[t]] += 1.0
    return counts


@njit(cache=True)
def blfo_row(init, A, log_eta, k, out):
    """Windowed predictive log densities for every t >= k (0-based)."""
    n = log_eta.shape[0]
    for t in range(k, n):
        out[t - k] = window_predictive(init, A, log_eta, t - k, t)
