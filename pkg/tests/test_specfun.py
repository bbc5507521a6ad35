"""
Tests for Gamma law helpers, incomplete Gamma and the Gauss series.

scipy.special and scipy.stats serve as reference implementations.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from core.exceptions import DomainError, ErrorCodes
from core.specfun import (
    GammaParams,
    gamma_cdf,
    gamma_pdf,
    hyp2f1,
    log_gamma,
    reg_lower_gamma,
    reg_upper_gamma,
)


class TestGammaParams:
    def test_moments(self):
        p = GammaParams(shape=2.0, scale=3.0)
        assert p.mean == 6.0
        assert p.variance == 18.0
        assert p.to_dict() == {"shape": 2.0, "scale": 3.0}

    @pytest.mark.parametrize("shape,scale", [(0.0, 1.0), (1.0, -1.0), (float("inf"), 1.0), (1.0, float("nan"))])
    def test_invalid(self, shape, scale):
        with pytest.raises(ValueError):
            GammaParams(shape, scale)


class TestDensity:
    def test_log_gamma(self):
        assert log_gamma(5.0) == pytest.approx(math.log(24.0))

    @pytest.mark.parametrize("shape,scale", [(0.5, 2.0), (1.0, 1.0), (3.7, 0.2)])
    def test_pdf_matches_scipy(self, shape, scale):
        x = np.linspace(0.01, 5.0, 40)
        expected = stats.gamma.pdf(x, a=shape, scale=scale)
        assert gamma_pdf(x, GammaParams(shape, scale)) == pytest.approx(expected, rel=1e-10)

    def test_pdf_at_zero(self):
        assert gamma_pdf(0.0, GammaParams(2.0, 1.0)) == 0.0
        assert gamma_pdf(0.0, GammaParams(1.0, 2.0)) == pytest.approx(0.5)
        assert gamma_pdf(0.0, GammaParams(0.5, 1.0)) == math.inf

    def test_pdf_negative(self):
        with pytest.raises(DomainError) as info:
            gamma_pdf(-1.0, GammaParams(1.0, 1.0))
        assert info.value.error_code == ErrorCodes.SPECFUN_DOMAIN


class TestIncompleteGamma:
    @given(
        nu=st.floats(min_value=0.05, max_value=60.0),
        x=st.floats(min_value=0.0, max_value=200.0),
    )
    @settings(max_examples=150)
    def test_lower_matches_scipy(self, nu, x):
        assert reg_lower_gamma(nu, x) == pytest.approx(special.gammainc(nu, x), abs=1e-12)

    @given(
        nu=st.floats(min_value=0.05, max_value=60.0),
        x=st.floats(min_value=0.0, max_value=200.0),
    )
    @settings(max_examples=100)
    def test_lower_plus_upper_is_one(self, nu, x):
        assert reg_lower_gamma(nu, x) + reg_upper_gamma(nu, x) == pytest.approx(1.0, abs=1e-12)

    def test_upper_tail_relative_accuracy(self):
        assert reg_upper_gamma(2.0, 50.0) == pytest.approx(special.gammaincc(2.0, 50.0), rel=1e-10)

    def test_limits(self):
        assert reg_lower_gamma(2.0, 0.0) == 0.0
        assert reg_lower_gamma(2.0, math.inf) == 1.0
        assert reg_upper_gamma(2.0, 0.0) == 1.0

    @pytest.mark.parametrize("nu,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)])
    def test_domain(self, nu, x):
        with pytest.raises(DomainError):
            reg_lower_gamma(nu, x)

    def test_cdf_vectorized(self):
        p = GammaParams(2.5, 1.5)
        x = np.array([0.0, 0.5, 3.0, 10.0])
        assert gamma_cdf(x, p) == pytest.approx(stats.gamma.cdf(x, a=2.5, scale=1.5), abs=1e-12)
        assert isinstance(gamma_cdf(1.0, p), float)

    def test_cdf_negative(self):
        with pytest.raises(DomainError):
            gamma_cdf(np.array([1.0, -1.0]), GammaParams(1.0, 1.0))


class TestHyp2f1:
    @pytest.mark.parametrize(
        "a,b,c,x",
        [
            (1.0, 2.5, 3.0, 0.3),
            (1.0, 0.05, 1.02, 0.5),
            (0.5, 0.5, 1.5, 0.25),
            (1.0, 30.0, 20.5, 0.49),
            (2.0, 3.0, 4.5, 0.9),
            (1.0, 1.0, 2.0, 0.99),
        ],
    )
    def test_matches_scipy(self, a, b, c, x):
        assert hyp2f1(a, b, c, x) == pytest.approx(special.hyp2f1(a, b, c, x), rel=1e-10)

    def test_closed_form_log(self):
        x = 0.4
        assert hyp2f1(1.0, 1.0, 2.0, x) == pytest.approx(-math.log1p(-x) / x, rel=1e-12)

    def test_zero_argument(self):
        assert hyp2f1(3.0, 4.0, 5.0, 0.0) == 1.0

    @pytest.mark.parametrize("a,b,c,x", [(1.0, 1.0, 2.0, 1.0), (1.0, 1.0, 2.0, -0.1), (1.0, 1.0, -2.0, 0.5)])
    def test_domain(self, a, b, c, x):
        with pytest.raises(DomainError):
            hyp2f1(a, b, c, x)

    @given(
        b=st.floats(min_value=0.01, max_value=40.0),
        c_offset=st.floats(min_value=0.01, max_value=40.0),
        x=st.floats(min_value=0.0, max_value=0.5),
    )
    @settings(max_examples=100)
    def test_ratio_cdf_arguments(self, b, c_offset, x):
        # the argument family used by the ratio CDF: a = 1, x <= 1/2
        c = 1.0 + c_offset
        assert hyp2f1(1.0, b, c, x) == pytest.approx(special.hyp2f1(1.0, b, c, x), rel=1e-9)
