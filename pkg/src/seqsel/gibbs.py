"""Conjugate Gibbs sampler for K-state Gaussian HMMs.

Each sweep draws the whole latent path by forward-filter backward-sampling,
then pi, the rows of A, the emission means and the emission variances from
their full conditionals.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .dist import RngState, sample_dirichlet, sample_inverse_gamma
from .errors import DomainError, NumericalDegeneracyError
from .hmm import HmmParams, as_observations


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters. ``mean_loc``/``mean_scale`` left as None are filled in
    from the data: the sample mean and ten times the sample sd."""

    dirichlet_conc: float = 1.0
    mean_loc: float | None = None
    mean_scale: float | None = None
    ig_shape: float = 1.0
    ig_rate: float = 1.0

    def __post_init__(self):
        for name in ("dirichlet_conc", "ig_shape", "ig_rate"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.mean_scale is not None and not self.mean_scale > 0:
            raise DomainError("mean_scale must be positive")

    def resolved(self, y) -> "PriorSpec":
        y = np.asarray(y, dtype=float)
        loc = float(np.mean(y)) if self.mean_loc is None else self.mean_loc
        scale = self.mean_scale
        if scale is None:
            sd = float(np.std(y, ddof=1)) if y.size > 1 else 0.0
            scale = 10.0 * sd if sd > 0 else 10.0
        return replace(self, mean_loc=loc, mean_scale=scale)


@dataclass
class PosteriorDraws:
    draws: list
    K: int
    n_iter: int
    burn_in: int
    seed: int
    chain_id: int = 0
    prior: PriorSpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.draws) < 2:
            raise DomainError("a posterior sample needs at least two retained draws")

    @property
    def S(self) -> int:
        return len(self.draws)

    def __len__(self):
        return len(self.draws)

    def __iter__(self):
        return iter(self.draws)

    def __getitem__(self, i):
        return self.draws[i]


def quantile_states(y, K: int) -> np.ndarray:
    """Split the sorted observations into K equal-sized groups."""
    n = y.shape[0]
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.argsort(y, kind="stable")] = np.arange(n)
    return (ranks * K) // n


def sample_states(params: HmmParams, y, rng: RngState) -> np.ndarray:
    log_eta = _kernels.emission_logpdf(y, params.mu, params.sigma)
    alphas = np.empty_like(log_eta)
    cond = np.empty(y.shape[0])
    bad = _kernels.forward_filter(np.ascontiguousarray(params.pi), np.ascontiguousarray(params.A),
                                  log_eta, alphas, cond)
    if bad >= 0:
        raise NumericalDegeneracyError(f"forward filter underflow at t={bad + 1}", t=bad + 1)
    states = np.empty(y.shape[0], dtype=np.int64)
    _kernels.backward_sample(alphas, np.ascontiguousarray(params.A), rng.generator.random(y.shape[0]), states)
    return states


def sample_pi(states, K, prior: PriorSpec, rng: RngState) -> np.ndarray:
    conc = np.full(K, prior.dirichlet_conc)
    conc[states[0]] += 1.0
    return sample_dirichlet(rng, conc)


def sample_transitions(states, K, prior: PriorSpec, rng: RngState) -> np.ndarray:
    counts = _kernels.count_transitions(states, K)
    return np.vstack([sample_dirichlet(rng, prior.dirichlet_conc + counts[i]) for i in range(K)])


def sample_means(y, states, K, sigma2, prior: PriorSpec, rng: RngState) -> np.ndarray:
    """mu_k | z, sigma_k^2, y under a N(mean_loc, mean_scale^2) prior."""
    n_k = np.bincount(states, minlength=K).astype(float)
    s_k = np.bincount(states, weights=y, minlength=K)
    prior_prec = 1.0 / prior.mean_scale**2
    post_prec = prior_prec + n_k / sigma2
    post_mean = (prior.mean_loc * prior_prec + s_k / sigma2) / post_prec
    return post_mean + rng.generator.standard_normal(K) / np.sqrt(post_prec)


def sample_variances(y, states, K, mu, prior: PriorSpec, rng: RngState) -> np.ndarray:
    """sigma_k^2 | z, mu_k, y under an InvGamma(ig_shape, ig_rate) prior."""
    n_k = np.bincount(states, minlength=K).astype(float)
    ss_k = np.bincount(states, weights=(y - mu[states]) ** 2, minlength=K)
    return np.array([
        sample_inverse_gamma(rng, prior.ig_shape + 0.5 * n_k[k], prior.ig_rate + 0.5 * ss_k[k])
        for k in range(K)
    ])


def update_params(y, states, K, sigma2, prior: PriorSpec, rng: RngState):
    """One pass of the parameter full conditionals with the path held fixed.

    Returns the new HmmParams and the new variance vector.
    """
    pi = sample_pi(states, K, prior, rng)
    A = sample_transitions(states, K, prior, rng)
    mu = sample_means(y, states, K, sigma2, prior, rng)
    sigma2 = sample_variances(y, states, K, mu, prior, rng)
    return HmmParams(pi=pi, A=A, mu=mu, sigma=np.sqrt(sigma2)), sigma2


def _initial_variances(y, states, K):
    overall = float(np.var(y)) if y.size > 1 else 1.0
    overall = overall if overall > 0 else 1.0
    out = np.full(K, overall)
    for k in range(K):
        grp = y[states == k]
        if grp.size > 1 and np.var(grp) > 0:
            out[k] = float(np.var(grp))
    return out


def gibbs_fit(obs, K: int, prior: PriorSpec | None = None, n_iter: int = 1000,
              burn_in: int = 500, rng: RngState | None = None, chain_id: int = 0) -> PosteriorDraws:
    """Run one chain and keep the ``n_iter - burn_in`` post-burn-in draws."""
    y = as_observations(obs)
    if K < 2:
        raise DomainError(f"K must be at least 2, got {K}")
    if y.shape[0] < K:
        raise DomainError(f"need at least K={K} observations, got {y.shape[0]}")
    if not 0 <= burn_in < n_iter:
        raise DomainError(f"burn_in must satisfy 0 <= burn_in < n_iter, got {burn_in}, {n_iter}")
    if n_iter - burn_in < 2:
        raise DomainError("need at least two retained iterations")
    if rng is None:
        rng = RngState(0)
    prior = (prior or PriorSpec()).resolved(y)

    states = quantile_states(y, K)
    params, sigma2 = update_params(y, states, K, _initial_variances(y, states, K), prior, rng)

    draws = []
    for it in range(n_iter):
        states = sample_states(params, y, rng)
        params, sigma2 = update_params(y, states, K, sigma2, prior, rng)
        if it >= burn_in:
            draws.append(params)
    return PosteriorDraws(draws=draws, K=K, n_iter=n_iter, burn_in=burn_in,
                          seed=rng.seed, chain_id=chain_id, prior=prior)


def sort_permutation(params: HmmParams) -> np.ndarray:
    """Order states by mean, then sd, then original index."""
    idx = np.arange(params.K)
    return np.lexsort((idx, params.sigma, params.mu))


def relabel(draws: PosteriorDraws) -> PosteriorDraws:
    """Canonicalize labels so every draw has ascending emission means."""
    new = [d.permuted(sort_permutation(d)) for d in draws.draws]
    return replace(draws, draws=new)


def posterior_summary(draws: PosteriorDraws) -> dict:
    """Posterior means of the relabelled parameters."""
    rl = relabel(draws)
    stack = lambda name: np.mean([getattr(d, name) for d in rl.draws], axis=0)
    return {"pi": stack("pi"), "A": stack("A"), "mu": stack("mu"), "sigma": stack("sigma")}

