import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subray_qfi.errors import DomainError, TruncationWarning
from subray_qfi.photostat import (
    SourceScenario,
    is_degenerate,
    mode_means,
    pmf,
    prob_fisher_term,
    series_oracle_fisher,
)
from subray_qfi.psf import OverlapFunctionals, PointSpreadFunction, functionals

GAUSS = PointSpreadFunction.gaussian()


def linearized_series(eta_n, epsilon, delta, gamma, n_max=500, ds=1e-6):
    """Truncated sum of p(n) (d log p / ds)^2 with delta(s) = delta + gamma (s - s0).

    Evaluates the geometric pmf directly (no log shortcut) and differentiates
    numerically; shares no code with the library.
    """
    total = 0.0
    for sign in (1, -1):
        def probs(shift):
            mu = (1 + sign * (delta + gamma * shift)) * eta_n + epsilon
            n = np.arange(n_max + 1, dtype=float)
            return (1 / (mu + 1)) * (mu / (mu + 1)) ** n

        p0, pp, pm = probs(0.0), probs(ds), probs(-ds)
        keep = p0 > 0
        dlog = (np.log(pp[keep]) - np.log(pm[keep])) / (2 * ds)
        total += float(np.sum(p0[keep] * dlog**2))
    return total


class TestModeMeans:
    def test_even_split(self):
        assert mode_means(1.0, 0.0) == (1.0, 1.0)

    def test_coincident(self):
        m = mode_means(0.01, 1.0)
        assert m.m_plus == pytest.approx(0.02)
        assert m.m_minus == 0.0

    def test_substitution(self):
        m = mode_means(0.5, 0.6)
        assert m.m_plus == pytest.approx(0.8)
        assert m.m_minus == pytest.approx(0.2)

    def test_rejects_overlap_above_one(self):
        with pytest.raises(DomainError):
            mode_means(1.0, 1.2)

    @given(st.floats(0, 50), st.floats(0, 1))
    def test_sum_and_order(self, eta_n, delta):
        m = mode_means(eta_n, delta)
        assert m.m_plus + m.m_minus == pytest.approx(2 * eta_n, abs=1e-12)
        assert m.m_plus >= m.m_minus >= 0


class TestPmf:
    def test_vacuum(self):
        assert pmf(0.0, 0) == 1.0
        assert pmf(0.0, 3) == 0.0

    def test_values(self):
        assert pmf(1.0, 1) == pytest.approx(0.25, rel=1e-15)
        assert pmf(0.11, 2) == pytest.approx((1 / 1.11) * (0.11 / 1.11) ** 2, rel=1e-14)
        assert pmf(0.11, 2) == pytest.approx(0.00884742, abs=1e-8)

    @pytest.mark.parametrize("mean", [0.0, 0.11, 1.0, 5.0])
    def test_normalization(self, mean):
        n = np.arange(201)
        total = np.sum(pmf(mean, n))
        tail = (mean / (mean + 1)) ** 201
        assert abs(1 - total) <= tail + 1e-14

    def test_mean(self):
        n = np.arange(2000)
        assert np.sum(n * pmf(2.5, n)) == pytest.approx(2.5, rel=1e-12)


class TestProbFisherTerm:
    def test_zero_drift(self):
        f = OverlapFunctionals(0.7, 0.0, 0.25)
        assert prob_fisher_term(0.3, 0.01, f) == 0.0
        assert prob_fisher_term(0.3, 0.01, functionals(GAUSS, 0.0)) == 0.0

    def test_orthogonal_modes(self):
        f = OverlapFunctionals(0.0, 1.0, 0.25)
        expected = 2 * 0.01**2 / (0.01 * 1.01)
        assert prob_fisher_term(0.01, 0.0, f) == pytest.approx(expected, rel=1e-14)
        assert prob_fisher_term(0.01, 0.0, f) == pytest.approx(0.0198020, abs=1e-7)
        assert linearized_series(0.01, 0.0, 0.0, 1.0) == pytest.approx(expected, rel=1e-6)

    def test_noisy_case_against_series(self):
        f = OverlapFunctionals(0.5, -0.2, 0.25)
        got = prob_fisher_term(0.01, 0.001, f)
        assert got == pytest.approx(linearized_series(0.01, 0.001, 0.5, -0.2), rel=1e-6)

    def test_noiseless_two_bracket_form(self):
        rng = np.random.default_rng(3)
        eta_n = 10 ** rng.uniform(-3, 1.5, 500)
        delta = rng.uniform(-0.99, 0.99, 500)
        gamma = rng.normal(size=500)
        bracket = gamma**2 / (2 * (1 + delta) * (1 + (1 + delta) * eta_n)) + gamma**2 / (
            2 * (1 - delta) * (1 + (1 - delta) * eta_n))
        got = prob_fisher_term(eta_n, 0.0, OverlapFunctionals(delta, gamma, 0.25))
        np.testing.assert_allclose(got, 2 * eta_n * bracket, rtol=1e-12)

    def test_coincident_limit_without_noise(self):
        f = functionals(GAUSS, 0.0)
        assert prob_fisher_term(0.01, 0.0, f) == pytest.approx(2 * 0.01 * 0.25)
        # continuity from s > 0
        assert prob_fisher_term(0.01, 0.0, functionals(GAUSS, 1e-4)) == pytest.approx(0.005, rel=1e-4)

    def test_degenerate_mode_is_infinite(self):
        f = OverlapFunctionals(1.0, -0.1, 0.25)
        assert prob_fisher_term(0.01, 0.0, f) == math.inf
        assert is_degenerate(0.01, 0.0, f)
        assert not is_degenerate(0.01, 1e-3, f)

    def test_no_signal(self):
        assert prob_fisher_term(0.0, 0.0, functionals(GAUSS, 0.0)) == 0.0
        assert prob_fisher_term(0.0, 0.1, functionals(GAUSS, 1.0)) == 0.0

    def test_negative_inputs(self):
        with pytest.raises(DomainError):
            prob_fisher_term(-1.0, 0.0, OverlapFunctionals(0.5, 0.1, 0.25))
        with pytest.raises(DomainError):
            prob_fisher_term(1.0, -0.1, OverlapFunctionals(0.5, 0.1, 0.25))

    @given(eta_n=st.floats(1e-3, 30), delta=st.floats(-0.99, 0.99), gamma=st.floats(1e-3, 3),
           eps=st.floats(0, 5), bump=st.floats(1e-3, 5))
    def test_noise_only_hurts(self, eta_n, delta, gamma, eps, bump):
        f = OverlapFunctionals(delta, gamma, 0.25)
        assert prob_fisher_term(eta_n, eps + bump, f) < prob_fisher_term(eta_n, eps, f)

    @given(eta_n=st.floats(0, 30), delta=st.floats(-1, 1), gamma=st.floats(-3, 3), eps=st.floats(1e-6, 5))
    def test_gamma_sign_symmetry(self, eta_n, delta, gamma, eps):
        a = prob_fisher_term(eta_n, eps, OverlapFunctionals(delta, gamma, 0.25))
        b = prob_fisher_term(eta_n, eps, OverlapFunctionals(delta, -gamma, 0.25))
        assert a == b


class TestSeriesOracle:
    def test_matches_closed_term(self):
        got = series_oracle_fisher(0.01, 0.0, GAUSS, 1.0)
        assert got == pytest.approx(prob_fisher_term(0.01, 0.0, functionals(GAUSS, 1.0)), rel=1e-6)

    def test_no_signal(self):
        assert series_oracle_fisher(0.0, 0.1, GAUSS, 1.0) == 0.0

    def test_stationary_point(self):
        # gamma ~ 1e-21 at s = 20 x_R
        assert abs(series_oracle_fisher(0.01, 0.01, GAUSS, 20.0)) < 1e-10

    def test_truncation_warning(self):
        with pytest.warns(TruncationWarning):
            series_oracle_fisher(50.0, 0.0, GAUSS, 1.0, n_max=100)

    def test_no_warning_when_converged(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", TruncationWarning)
            series_oracle_fisher(5.0, 0.01, GAUSS, 1.0)

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            series_oracle_fisher(0.01, 0.0, GAUSS, 1.0, n_max=10)
        with pytest.raises(ValueError):
            series_oracle_fisher(0.01, 0.0, GAUSS, 1.0, ds=0.0)

    @settings(max_examples=30, deadline=None)
    @given(eta_n=st.sampled_from([0.01, 0.1, 1.0, 5.0]), eps=st.sampled_from([0.0, 1e-4, 1e-2]),
           s=st.floats(0.2, 3.0))
    def test_oracle_equivalence(self, eta_n, eps, s):
        ref = series_oracle_fisher(eta_n, eps, GAUSS, s)
        assert prob_fisher_term(eta_n, eps, functionals(GAUSS, s)) == pytest.approx(ref, rel=1e-5)


def test_scenario():
    sc = SourceScenario(0.01, 1e-4, 0.5)
    assert sc.snr == pytest.approx(100)
    with pytest.raises(DomainError):
        SourceScenario(0.01, 0.0, 0.5).snr
    with pytest.raises(DomainError):
        SourceScenario(-1.0, 0.0, 0.5).validate()
    with pytest.raises(DomainError):
        SourceScenario(1.0, 0.0, 0.5, 0.0).validate()
