"""Covariance-corrected WAIC, WAIC and IS-LOO for Gaussian hidden Markov models."""

__version__ = "0.1.0"

from .criteria import (
    CriterionReport,
    LogLikMatrix,
    autocorr_time,
    blfo_diagnostic,
    build_loglik_matrix,
    compute_ccwaic,
    compute_loo,
    compute_waic,
    corrected_pcc,
    joint_loglik_per_draw,
    naive_pcc,
    select_k,
    variance_decomposition,
)
from .dist import RngState
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    NumericalDegeneracyError,
    SeqselError,
    SizeError,
)
from .gibbs import PosteriorDraws, PriorSpec, gibbs_fit, relabel
from .hmm import (
    FilterOutput,
    HmmParams,
    brute_force_loglik,
    forward_conditional_loglik,
    generate_sequence,
    joint_loglik,
)
