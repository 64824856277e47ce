"""Gaussian-emission hidden Markov models: parameters, simulation and the
forward filter that yields one-step-ahead conditional log-likelihoods."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dist import RngState, SIMPLEX_TOL
from .errors import DomainError, NumericalDegeneracyError, SizeError

BRUTE_FORCE_MAX_PATHS = 10**7


@dataclass(frozen=True)
class HmmParams:
    """One parameter draw (pi, A, mu, sigma) of a K-state Gaussian HMM.

    ``sigma`` holds emission standard deviations, not variances.
    """

    pi: np.ndarray
    A: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        for name in ("pi", "A", "mu", "sigma"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        K = self.pi.shape[0] if self.pi.ndim == 1 else -1
        if K < 1:
            raise DomainError("pi must be a non-empty vector")
        if self.A.shape != (K, K) or self.mu.shape != (K,) or self.sigma.shape != (K,):
            raise DomainError(
                f"inconsistent shapes: pi {self.pi.shape}, A {self.A.shape}, "
                f"mu {self.mu.shape}, sigma {self.sigma.shape}"
            )
        if np.any(self.pi < 0) or abs(self.pi.sum() - 1.0) > SIMPLEX_TOL:
            raise DomainError(f"pi is not on the simplex: {self.pi}")
        if np.any(self.A < 0) or np.any(np.abs(self.A.sum(axis=1) - 1.0) > SIMPLEX_TOL):
            raise DomainError("rows of A must lie on the simplex")
        if not np.all(np.isfinite(self.mu)):
            raise DomainError("emission means must be finite")
        if np.any(~(self.sigma > 0)) or not np.all(np.isfinite(self.sigma)):
            raise DomainError("emission standard deviations must be positive and finite")

    @property
    def K(self) -> int:
        return self.pi.shape[0]

    def permuted(self, perm) -> "HmmParams":
        """Relabel states so that new state i is old state ``perm[i]``."""
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(self.K)):
            raise DomainError(f"not a permutation of 0..{self.K - 1}: {perm}")
        return HmmParams(
            pi=self.pi[perm],
            A=self.A[np.ix_(perm, perm)],
            mu=self.mu[perm],
            sigma=self.sigma[perm],
        )

    def to_dict(self) -> dict:
        return {
            "pi": self.pi.tolist(),
            "A": self.A.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HmmParams":
        return cls(pi=d["pi"], A=d["A"], mu=d["mu"], sigma=d["sigma"])


@dataclass(frozen=True)
class FilterOutput:
    cond_loglik: np.ndarray
    final_alpha: np.ndarray
    alphas: np.ndarray


def as_observations(obs) -> np.ndarray:
    y = np.ascontiguousarray(obs, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise DomainError("observations must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(y)):
        raise DomainError("observations must be finite")
    return y


def generate_sequence(params: HmmParams, T: int, rng: RngState):
    """Simulate ``T`` steps; returns (states, observations)."""
    if T < 1:
        raise DomainError(f"sequence length must be at least 1, got {T}")
    gen = rng.generator
    u = gen.random(T)
    noise = gen.standard_normal(T)
    cum_pi = np.cumsum(params.pi)
    cum_A = np.cumsum(params.A, axis=1)
    states = np.empty(T, dtype=np.int64)
    states[0] = _pick(cum_pi, params.pi, u[0])
    for t in range(1, T):
        row = states[t - 1]
        states[t] = _pick(cum_A[row], params.A[row], u[t])
    obs = params.mu[states] + params.sigma[states] * noise
    return states, obs


def _pick(cum, probs, u) -> int:
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    idx = min(idx, len(cum) - 1)
    while probs[idx] == 0.0 and idx > 0:
        idx -= 1
    return idx


def forward_conditional_loglik(params: HmmParams, obs) -> FilterOutput:
    """Run the scaled forward filter and return every log p(y_t | y_<t, theta).

    The first observation is predicted by ``pi`` directly; afterwards the
    prediction is alpha_{t-1} A.
    """
    y = as_observations(obs)
    log_eta = _kernels.emission_logpdf(y, params.mu, params.sigma)
    alphas = np.empty_like(log_eta)
    cond = np.empty(y.shape[0])
    bad = _kernels.forward_filter(np.ascontiguousarray(params.pi), np.ascontiguousarray(params.A),
                                  log_eta, alphas, cond)
    if bad >= 0:
        raise NumericalDegeneracyError(
            f"p(y_t | y_<t) underflowed to zero at t={bad + 1}", t=bad + 1
        )
    return FilterOutput(cond_loglik=cond, final_alpha=alphas[-1].copy(), alphas=alphas)


def joint_loglik(params: HmmParams, obs) -> float:
    return float(np.sum(forward_conditional_loglik(params, obs).cond_loglik))


def brute_force_loglik(params: HmmParams, obs) -> float:
    """Marginal log-likelihood by explicit enumeration of all K**n state paths."""
    y = as_observations(obs)
    K, n = params.K, y.shape[0]
    if K**n > BRUTE_FORCE_MAX_PATHS:
        raise SizeError(f"K**n = {K}**{n} exceeds the enumeration limit {BRUTE_FORCE_MAX_PATHS}")
    paths = np.array(list(itertools.product(range(K), repeat=n)), dtype=int).reshape(-1, n)
    with np.errstate(divide="ignore"):
        log_pi = np.log(params.pi)
        log_A = np.log(params.A)
    log_emis = (
        -0.5 * np.log(2.0 * np.pi)
        - np.log(params.sigma[paths])
        - 0.5 * ((y[None, :] - params.mu[paths]) / params.sigma[paths]) ** 2
    )
    terms = log_pi[paths[:, 0]] + log_emis.sum(axis=1)
    if n > 1:
        terms = terms + log_A[paths[:, :-1], paths[:, 1:]].sum(axis=1)
    m = terms.max()
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.sum(np.exp(terms - m))))


def stationary_distribution(A, tol=1e-8):
    """Left eigenvector of ``A`` for eigenvalue 1, or None when it is not unique."""
    A = np.asarray(A, dtype=float)
    vals, vecs = np.linalg.eig(A.T)
    unit = np.flatnonzero(np.abs(vals - 1.0) < tol)
    if unit.size != 1:
        return None
    v = np.real(vecs[:, unit[0]])
    v = v / v.sum()
    if np.any(v < -tol):
        return None
    v = np.clip(v, 0.0, None)
    return v / v.sum()
