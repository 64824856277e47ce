"""Information criteria computed from a matrix of conditional log-likelihoods.

Row ``s`` of the matrix holds log p(y_t | y_<t, theta_s) for every t. All
criteria are reported on the deviance scale (-2 x log score), so smaller is
better.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DomainError, NumericalDegeneracyError
from .hmm import as_observations, forward_conditional_loglik, stationary_distribution

log = logging.getLogger(__name__)

CRITERIA = ("ccwaic", "waic", "loo")


@dataclass(frozen=True)
class LogLikMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DomainError(f"log-likelihood matrix must be S x n with S, n >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("log-likelihood matrix contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def S(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CriterionReport:
    waic: float
    p_waic: float
    loo: float
    ccwaic: float
    p_cc_naive: float
    p_cc_corr: float
    tau: float
    n_eff: float
    lppd: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class WaicResult(NamedTuple):
    waic: float
    p_waic: float
    lppd: float


class AutocorrResult(NamedTuple):
    tau: float
    n_eff: float
    rho: np.ndarray


def _as_matrix(m) -> LogLikMatrix:
    return m if isinstance(m, LogLikMatrix) else LogLikMatrix(m)


def _require_draws(S, minimum, what):
    if S < minimum:
        raise DomainError(f"{what} needs at least {minimum} posterior draws, got {S}")


def log_mean_exp(values, axis=0):
    """log(mean(exp(values))) along ``axis`` without overflow."""
    v = np.asarray(values, dtype=float)
    m = np.max(v, axis=axis, keepdims=True)
    out = m + np.log(np.mean(np.exp(v - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def _shifted_var(x, axis=0):
    # subtracting the first draw keeps identical draws at exactly zero variance
    x = np.asarray(x, dtype=float)
    d = x - np.take(x, [0], axis=axis)
    return np.var(d, axis=axis, ddof=1)


def build_loglik_matrix(draws, obs) -> LogLikMatrix:
    y = as_observations(obs)
    rows = []
    for s, params in enumerate(draws):
        try:
            rows.append(forward_conditional_loglik(params, y).cond_loglik)
        except NumericalDegeneracyError as exc:
            raise NumericalDegeneracyError(f"draw s={s}: {exc}", t=exc.t, draw=s) from exc
    return LogLikMatrix(np.vstack(rows))


def lppd(m) -> float:
    m = _as_matrix(m)
    return float(np.sum(log_mean_exp(m.values, axis=0)))


def compute_waic(m) -> WaicResult:
    m = _as_matrix(m)
    _require_draws(m.S, 2, "WAIC")
    lp = lppd(m)
    p_waic = float(np.sum(_shifted_var(m.values, axis=0)))
    return WaicResult(-2.0 * (lp - p_waic), p_waic, lp)


def compute_loo(m) -> float:
    """Plain importance-sampling LOO (no Pareto smoothing) on the deviance scale."""
    m = _as_matrix(m)
    _require_draws(m.S, 2, "LOO")
    # elpd_t = log S - logsumexp_s(-l_st) = -log_mean_exp(-l_t)
    elpd = -log_mean_exp(-m.values, axis=0)
    return float(-2.0 * np.sum(elpd))


def joint_loglik_per_draw(m) -> np.ndarray:
    return _as_matrix(m).values.sum(axis=1)


def naive_pcc(L) -> float:
    """Sample variance (divisor S-1) of the per-draw joint log-likelihoods."""
    L = np.asarray(L, dtype=float)
    _require_draws(L.size, 2, "the naive CC penalty")
    return float(_shifted_var(L))


def autocorrelation(x, max_lag=None) -> np.ndarray:
    """Normalized autocorrelation using the biased (divide-by-S) autocovariance."""
    x = np.asarray(x, dtype=float)
    S = x.size
    d = x - x.mean()
    nfft = 1 << (2 * S - 1).bit_length()
    f = np.fft.rfft(d, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:S] / S
    max_lag = S - 1 if max_lag is None else min(max_lag, S - 1)
    if acov[0] <= 0:
        return np.concatenate([[1.0], np.zeros(max_lag)])
    return acov[: max_lag + 1] / acov[0]


def integrated_autocorr_time(L):
    """Unclamped tau and the truncation lag.

    The sum 1 + 2*sum(rho_k) stops before the first lag where |rho_k| falls
    below 2/sqrt(S), and never runs past lag S/4.
    """
    L = np.asarray(L, dtype=float)
    S = L.size
    _require_draws(S, 4, "autocorrelation time")
    if np.ptp(L) == 0.0:
        return 1.0, 0, np.concatenate([[1.0], np.zeros(S // 4)])
    max_lag = max(1, S // 4)
    rho = autocorrelation(L, max_lag)
    threshold = 2.0 / math.sqrt(S)
    total = 0.0
    cut = max_lag
    for k in range(1, max_lag + 1):
        if abs(rho[k]) < threshold:
            cut = k
            break
        total += rho[k]
    return 1.0 + 2.0 * total, cut, rho


def autocorr_time(L) -> AutocorrResult:
    L = np.asarray(L, dtype=float)
    S = L.size
    tau_raw, _, rho = integrated_autocorr_time(L)
    tau = min(max(tau_raw, 1.0), S / 2.0)
    return AutocorrResult(float(tau), float(S / tau), rho)


def corrected_pcc(p_naive: float, n_eff: float) -> float:
    if not n_eff > 1:
        raise DomainError(f"effective sample size must exceed 1, got {n_eff}")
    return float(n_eff / (n_eff - 1.0) * p_naive)


def variance_decomposition(m):
    """Split the joint-log-likelihood variance into per-observation variances
    and twice the sum of cross-observation covariances."""
    m = _as_matrix(m)
    _require_draws(m.S, 2, "the variance decomposition")
    sum_var = float(np.sum(_shifted_var(m.values, axis=0)))
    d = m.values - m.values.mean(axis=0)
    cov = d.T @ d / (m.S - 1)
    twice_sum_cov = float(2.0 * np.sum(np.triu(cov, k=1)))
    return sum_var, twice_sum_cov


def compute_ccwaic(m) -> CriterionReport:
    """Full report: WAIC, LOO and the autocorrelation-corrected CC-WAIC."""
    m = _as_matrix(m)
    _require_draws(m.S, 4, "CC-WAIC")
    waic, p_waic, lp = compute_waic(m)
    loo = compute_loo(m)
    L = joint_loglik_per_draw(m)
    p_naive = naive_pcc(L)
    tau, n_eff, _ = autocorr_time(L)
    p_corr = corrected_pcc(p_naive, n_eff)
    return CriterionReport(
        waic=waic,
        p_waic=p_waic,
        loo=loo,
        ccwaic=-2.0 * (lp - p_corr),
        p_cc_naive=p_naive,
        p_cc_corr=p_corr,
        tau=tau,
        n_eff=n_eff,
        lppd=lp,
    )


def blfo_diagnostic(draws, obs, k: int, init: str = "stationary") -> float:
    """Block leave-future-out score on the deviance scale.

    Each y_t with t > k is predicted from the k preceding observations only,
    the window filter starting from the stationary distribution of the draw's
    transition matrix (``init="pi"`` starts it from pi instead). Diagnostic
    only; not used for selection.
    """
    y = as_observations(obs)
    n = y.shape[0]
    if not 1 <= k < n:
        raise DomainError(f"block size must satisfy 1 <= k < n={n}, got {k}")
    if init not in ("stationary", "pi"):
        raise DomainError(f"unknown window initialization {init!r}")
    rows = []
    for s, params in enumerate(draws):
        if init == "pi":
            start = np.ascontiguousarray(params.pi)
        else:
            start = stationary_distribution(params.A)
            if start is None:
                log.warning("draw %d: no unique stationary distribution, using uniform start", s)
                start = np.full(params.K, 1.0 / params.K)
        log_eta = _kernels.emission_logpdf(y, params.mu, params.sigma)
        row = np.empty(n - k)
        _kernels.blfo_row(start, np.ascontiguousarray(params.A), log_eta, k, row)
        if not np.all(np.isfinite(row)):
            bad = int(np.flatnonzero(~np.isfinite(row))[0]) + k + 1
            raise NumericalDegeneracyError(f"draw s={s}: windowed predictive underflow at t={bad}",
                                           t=bad, draw=s)
        rows.append(row)
    return float(-2.0 * np.sum(log_mean_exp(np.vstack(rows), axis=0)))


def select_k(reports: dict) -> dict:
    """argmin-K per criterion; ties go to the smaller K."""
    out = {}
    for crit in CRITERIA:
        best = None
        for K in sorted(reports):
            value = getattr(reports[K], crit)
            if best is None or value < best[1]:
                best = (K, value)
        out[crit] = best[0] if best else None
    return out
