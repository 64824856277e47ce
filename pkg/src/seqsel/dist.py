"""Seeded sampling and log densities for the families the HMM sampler uses."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

LOG_2PI = math.log(2.0 * math.pi)
SIMPLEX_TOL = 1e-9


def _key_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise DomainError(f"stream key parts must be non-negative, got {part}")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


@dataclass
class RngState:
    """Single-owner random stream.

    Streams for different chains or purposes are derived from the root seed
    through ``numpy.random.SeedSequence`` spawn keys, so two streams with
    distinct keys never share state.
    """

    seed: int
    key: tuple = ()
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        self.seed = int(self.seed)
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(_key_int(p) for p in self.key))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def derive(self, *key) -> "RngState":
        """Independent child stream identified by ``key`` (ints or strings)."""
        return RngState(self.seed, self.key + tuple(_key_int(p) for p in key))


def normal_logpdf(x, mean, sd):
    """Log density of N(mean, sd**2); broadcasts over numpy arrays."""
    sd_arr = np.asarray(sd, dtype=float)
    if np.any(~(sd_arr > 0)):
        raise DomainError(f"normal sd must be positive, got {sd}")
    z = (np.asarray(x, dtype=float) - mean) / sd_arr
    out = -0.5 * LOG_2PI - np.log(sd_arr) - 0.5 * z * z
    return float(out) if np.ndim(out) == 0 else out


def inverse_gamma_logpdf(x: float, shape: float, rate: float) -> float:
    """Log density proportional to x**(-shape-1) * exp(-rate/x)."""
    if shape <= 0 or rate <= 0:
        raise DomainError("inverse-gamma shape and rate must be positive")
    if x <= 0:
        return -math.inf
    return shape * math.log(rate) - math.lgamma(shape) - (shape + 1.0) * math.log(x) - rate / x


def sample_dirichlet(rng: RngState, alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 1 or np.any(~(alpha > 0)):
        raise DomainError(f"Dirichlet concentrations must be a non-empty positive vector, got {alpha}")
    g = rng.generator.standard_gamma(alpha)
    total = g.sum()
    if total <= 0.0:
        # every gamma draw underflowed (tiny concentrations); put the mass on the largest
        out = np.zeros_like(alpha)
        out[int(np.argmax(alpha))] = 1.0
        return out
    p = g / total
    return p / p.sum()


def sample_inverse_gamma(rng: RngState, shape: float, rate: float) -> float:
    """Draw 1/X with X ~ Gamma(shape, rate), i.e. density ~ x^(-shape-1) exp(-rate/x)."""
    if not (shape > 0 and rate > 0):
        raise DomainError(f"inverse-gamma parameters must be positive, got shape={shape}, rate={rate}")
    g = rng.generator.gamma(shape, 1.0 / rate)
    # guard against a zero gamma draw for extremely small shapes
    return 1.0 / max(g, np.finfo(float).tiny)


def sample_normal(rng: RngState, mean: float, sd: float) -> float:
    if not sd > 0:
        raise DomainError(f"normal sd must be positive, got {sd}")
    return float(rng.generator.normal(mean, sd))


def check_simplex(probs, name="probability vector", tol=SIMPLEX_TOL) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError(f"{name} must be a non-empty vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)) or abs(p.sum() - 1.0) > tol:
        raise DomainError(f"{name} is not on the simplex: {p}")
    return p


def sample_categorical(rng: RngState, probs) -> int:
    p = check_simplex(probs)
    u = rng.generator.random()
    idx = int(np.searchsorted(np.cumsum(p), u * p.sum(), side="right"))
    # zero-probability trailing entries can never be returned
    nz = np.flatnonzero(p > 0)
    return int(min(idx, nz[-1]))
