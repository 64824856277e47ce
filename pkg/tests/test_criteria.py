import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqsel.criteria import (CriterionReport, LogLikMatrix, autocorr_time, blfo_diagnostic,
                             build_loglik_matrix, compute_ccwaic, compute_loo, compute_waic,
                             corrected_pcc, integrated_autocorr_time, joint_loglik_per_draw, lppd,
                             naive_pcc, select_k, variance_decomposition)
from seqsel.dist import RngState, normal_logpdf
from seqsel.errors import DomainError
from seqsel.hmm import HmmParams, generate_sequence, joint_loglik

from conftest import random_params


def two_pass_var(xs):
    xs = [float(x) for x in xs]
    m = sum(xs) / len(xs)
    return sum((x - m) ** 2 for x in xs) / (len(xs) - 1)


def pair_cov(a, b):
    ma, mb = sum(a) / len(a), sum(b) / len(b)
    return sum((x - ma) * (y - mb) for x, y in zip(a, b)) / (len(a) - 1)


def ar1(phi, S, seed):
    g = np.random.default_rng(seed)
    e = g.standard_normal(S + 1000)
    x = np.empty_like(e)
    x[0] = e[0]
    for i in range(1, e.size):
        x[i] = phi * x[i - 1] + e[i]
    return x[1000:]


def test_matrix_shape_contract():
    m = LogLikMatrix(np.zeros((1, 3)))
    assert (m.S, m.n) == (1, 3)
    with pytest.raises(DomainError):
        compute_waic(m)
    with pytest.raises(DomainError):
        LogLikMatrix([[0.0, np.inf]])


def test_identical_draws_give_identical_rows():
    p = HmmParams(pi=[0.5, 0.5], A=[[0.9, 0.1], [0.2, 0.8]], mu=[0, 3], sigma=[1, 1])
    y = np.array([0.1, 2.5, 3.3, -0.4])
    m = build_loglik_matrix([p, p, p], y)
    assert np.all(m.values == m.values[0])


def test_single_state_entries_are_normal_logpdfs():
    y = np.array([0.3, -1.2, 2.2])
    draws = [HmmParams(pi=[1.0], A=[[1.0]], mu=[mu], sigma=[sd]) for mu, sd in [(0.0, 1.0), (0.5, 2.0)]]
    m = build_loglik_matrix(draws, y)
    for s, d in enumerate(draws):
        np.testing.assert_allclose(m.values[s], normal_logpdf(y, d.mu[0], d.sigma[0]), atol=1e-14)


def test_identical_rows_zero_penalties():
    row = np.array([-1.3, -0.2, -2.7, -0.9])
    m = np.tile(row, (6, 1))
    waic, p_waic, lp = compute_waic(m)
    assert p_waic == 0.0
    assert waic == -2.0 * row.sum()
    assert compute_loo(m) == -2.0 * row.sum()


def test_p_waic_matches_two_pass_oracle(np_rng):
    m = np_rng.normal(size=(3, 4))
    expected = sum(two_pass_var(m[:, j]) for j in range(4))
    assert compute_waic(m).p_waic == pytest.approx(expected, abs=1e-12)


def test_lppd_matches_direct_average(np_rng):
    m = np_rng.normal(-1.0, 0.3, size=(7, 5))
    expected = sum(math.log(sum(math.exp(v) for v in m[:, j]) / 7) for j in range(5))
    assert lppd(m) == pytest.approx(expected, abs=1e-12)


def test_loo_two_draw_closed_form():
    a, b = -1.25, 0.5
    # log 2 - log(e^{-a} + e^{-b}) evaluated at 30 digits
    assert compute_loo([[a], [b]]) == pytest.approx(-2 * -0.717076969878141917469715, abs=1e-13)


def test_joint_loglik_per_draw_arithmetic():
    assert joint_loglik_per_draw([[1.0, 2.0], [3.0, 4.0]]).tolist() == [3.0, 7.0]
    col = np.array([[0.5], [-1.5], [2.0]])
    assert joint_loglik_per_draw(col).tolist() == [0.5, -1.5, 2.0]


def test_joint_loglik_per_draw_matches_filter(np_rng):
    y = np_rng.normal(0, 2, 25)
    draws = [random_params(np_rng, 3) for _ in range(5)]
    L = joint_loglik_per_draw(build_loglik_matrix(draws, y))
    for s, d in enumerate(draws):
        assert L[s] == pytest.approx(joint_loglik(d, y), abs=1e-12)


def test_naive_pcc():
    assert naive_pcc([4.2] * 10) == 0.0
    assert naive_pcc([0.0, 2.0]) == 2.0
    with pytest.raises(DomainError):
        naive_pcc([1.0])


def test_naive_pcc_matches_oracle(np_rng):
    L = np_rng.normal(-300, 5, 333)
    assert naive_pcc(L) == pytest.approx(statistics.variance(L.tolist()), abs=1e-12 * 25)
    assert naive_pcc(L) == pytest.approx(two_pass_var(L), rel=1e-12)


def test_autocorr_white_noise():
    x = np.random.default_rng(17).standard_normal(20_000)
    tau_raw, _, _ = integrated_autocorr_time(x)
    assert 0.85 <= tau_raw <= 1.3
    tau, n_eff, rho = autocorr_time(x)
    assert tau >= 1.0 and n_eff == pytest.approx(20_000 / tau)
    assert rho[0] == 1.0


def test_autocorr_ar1():
    tau, n_eff, _ = autocorr_time(ar1(0.6, 20_000, 23))
    assert abs(tau - 4.0) / 4.0 < 0.15


def test_autocorr_constant_series():
    tau, n_eff, _ = autocorr_time(np.full(50, 3.0))
    assert (tau, n_eff) == (1.0, 50.0)


def test_autocorr_clamped_to_half_length():
    # near-unit-root series: the raw sum exceeds S/2 before the lag cap
    x = np.cumsum(np.random.default_rng(3).standard_normal(40))
    tau, n_eff, _ = autocorr_time(x)
    assert 1.0 <= tau <= 20.0 and 2.0 <= n_eff <= 40.0


def test_autocorr_needs_four_draws():
    with pytest.raises(DomainError):
        autocorr_time([1.0, 2.0, 3.0])


def test_corrected_pcc():
    assert corrected_pcc(0.0, 7.0) == 0.0
    assert corrected_pcc(10.0, 2.0) == 20.0
    with pytest.raises(DomainError):
        corrected_pcc(1.0, 1.0)


def test_variance_decomposition_single_column(np_rng):
    _, cov = variance_decomposition(np_rng.normal(size=(20, 1)))
    assert cov == 0.0


def test_variance_decomposition_duplicated_column(np_rng):
    col = np_rng.normal(size=30)
    sum_var, twice_cov = variance_decomposition(np.column_stack([col, col]))
    assert twice_cov == pytest.approx(2 * two_pass_var(col), rel=1e-12)
    assert sum_var == pytest.approx(2 * two_pass_var(col), rel=1e-12)


def test_variance_decomposition_against_pairwise_oracle(np_rng):
    m = np_rng.normal(size=(12, 5)) + np_rng.normal(size=(12, 1))
    cols = [m[:, j].tolist() for j in range(5)]
    expected = 2 * sum(pair_cov(cols[i], cols[j]) for i in range(5) for j in range(i + 1, 5))
    assert variance_decomposition(m)[1] == pytest.approx(expected, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 200), st.integers(1, 50))
def test_decomposition_identity(seed, S, n):
    g = np.random.default_rng(seed)
    m = g.normal(size=(S, n)) + g.normal(size=(S, 1)) * g.uniform(0, 2)
    sum_var, twice_cov = variance_decomposition(m)
    p = naive_pcc(joint_loglik_per_draw(m))
    assert abs(p - (sum_var + twice_cov)) / max(1.0, abs(p)) < 1e-8


def test_report_exact_ties_and_serialization(np_rng):
    m = np_rng.normal(-1.0, 0.2, size=(40, 12))
    r = compute_ccwaic(m)
    assert r.waic == -2.0 * (r.lppd - r.p_waic)
    assert r.ccwaic == -2.0 * (r.lppd - r.p_cc_corr)
    assert set(r.to_dict()) == {"waic", "p_waic", "loo", "ccwaic", "p_cc_naive", "p_cc_corr",
                                "tau", "n_eff", "lppd"}
    assert 1.0 <= r.tau <= 20.0 and 2.0 <= r.n_eff <= 40.0
    assert r.p_cc_corr == pytest.approx(r.n_eff / (r.n_eff - 1) * r.p_cc_naive)


def test_identical_draws_collapse_all_criteria():
    row = np.array([-0.7, -1.9, -0.05, -3.2, -1.1])
    r = compute_ccwaic(np.tile(row, (8, 1)))
    assert r.p_waic == r.p_cc_naive == r.p_cc_corr == 0.0
    assert r.waic == r.loo == r.ccwaic == -2.0 * row.sum()


def test_ccwaic_naive_penalty_equals_variance_plus_covariance(np_rng):
    m = np_rng.normal(size=(60, 8)) + np_rng.normal(size=(60, 1))
    cols = [m[:, j].tolist() for j in range(8)]
    expected = sum(two_pass_var(c) for c in cols) + 2 * sum(
        pair_cov(cols[i], cols[j]) for i in range(8) for j in range(i + 1, 8))
    assert compute_ccwaic(m).p_cc_naive == pytest.approx(expected, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(4, 60), st.integers(1, 20), st.floats(-20, 20))
def test_constant_shift(seed, S, n, c):
    g = np.random.default_rng(seed)
    m = g.normal(-1, 0.5, size=(S, n))
    a, b = compute_ccwaic(m), compute_ccwaic(m + c)
    assert b.lppd == pytest.approx(a.lppd + n * c, abs=1e-9)
    assert b.p_waic == pytest.approx(a.p_waic, abs=1e-9)
    assert b.p_cc_naive == pytest.approx(a.p_cc_naive, abs=1e-9)
    for f in ("waic", "loo", "ccwaic"):
        assert getattr(b, f) == pytest.approx(getattr(a, f) - 2 * n * c, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(4, 60), st.integers(1, 20))
def test_row_permutation_invariance_and_nonnegativity(seed, S, n):
    g = np.random.default_rng(seed)
    m = g.normal(-1, 0.5, size=(S, n)) + g.normal(size=(S, 1))
    shuffled = m[g.permutation(S)]
    a, b = compute_ccwaic(m), compute_ccwaic(shuffled)
    assert b.waic == pytest.approx(a.waic, abs=1e-9)
    assert b.loo == pytest.approx(a.loo, abs=1e-9)
    assert b.lppd == pytest.approx(a.lppd, abs=1e-9)
    assert a.p_waic >= 0 and a.p_cc_naive >= 0 and a.p_cc_corr >= 0


def test_blfo_single_state_ignores_window():
    g = np.random.default_rng(5)
    y = g.normal(0, 1, 30)
    draws = [HmmParams(pi=[1.0], A=[[1.0]], mu=[g.normal(0, 0.1)], sigma=[g.uniform(0.8, 1.2)]) for _ in range(6)]
    m = build_loglik_matrix(draws, y)
    for k in (1, 4, 12):
        expected = -2.0 * lppd(m.values[:, k:])
        assert blfo_diagnostic(draws, y, k) == pytest.approx(expected, abs=1e-10)


def test_blfo_full_window_from_pi_is_last_predictive(np_rng):
    y = np_rng.normal(0, 2, 15)
    draws = [random_params(np_rng, 2) for _ in range(5)]
    m = build_loglik_matrix(draws, y)
    value = blfo_diagnostic(draws, y, k=len(y) - 1, init="pi")
    assert value == pytest.approx(-2.0 * lppd(m.values[:, -1:]), abs=1e-10)


def test_blfo_stationary_start_equals_pi_start_when_pi_is_stationary(np_rng):
    A = np.array([[0.9, 0.1], [0.2, 0.8]])
    p = HmmParams(pi=[2 / 3, 1 / 3], A=A, mu=[-1, 1], sigma=[0.5, 0.8])
    y = np_rng.normal(0, 1.5, 40)
    assert blfo_diagnostic([p, p], y, 5) == pytest.approx(blfo_diagnostic([p, p], y, 5, init="pi"), abs=1e-9)


def test_blfo_falls_back_for_reducible_chain(caplog):
    p = HmmParams(pi=[0.5, 0.5], A=np.eye(2), mu=[-1, 1], sigma=[1, 1])
    with caplog.at_level("WARNING"):
        v = blfo_diagnostic([p, p], [0.1, 0.3, -0.2, 0.5], 2)
    assert np.isfinite(v)
    assert "uniform" in caplog.text


def test_blfo_rejects_bad_window(np_rng):
    draws = [random_params(np_rng, 2) for _ in range(2)]
    with pytest.raises(DomainError):
        blfo_diagnostic(draws, [0.1, 0.2, 0.3], 3)


def test_blfo_finite_on_simulated_data(case2_high):
    _, y = generate_sequence(case2_high, 50, RngState(1))
    draws = [case2_high] * 3
    assert np.isfinite(blfo_diagnostic(draws, y, 5))


def _report(c):
    return CriterionReport(waic=c, p_waic=0, loo=c, ccwaic=c, p_cc_naive=0, p_cc_corr=0, tau=1, n_eff=2, lppd=0)


def test_select_k_breaks_ties_toward_smaller_k():
    chosen = select_k({4: _report(10.0), 2: _report(10.0), 3: _report(11.0)})
    assert chosen == {"ccwaic": 2, "waic": 2, "loo": 2}
    assert select_k({3: _report(5.0)}) == {"ccwaic": 3, "waic": 3, "loo": 3}
