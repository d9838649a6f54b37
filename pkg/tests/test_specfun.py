"""Special-function accuracy against independent oracles.

Expected values marked as frozen were computed once with mpmath at 40
digits (scripts inline in comments); the implementation never sees
mpmath.
"""

import math

import numpy as np
import pytest

from wristband.errors import DomainError
from wristband.specfun import (
    chi2_cdf,
    chi2_cdf_array,
    chi2_pdf,
    chi2_pdf_array,
    gaussian_quantile_grid,
    inv_norm_cdf,
    log_gamma,
    norm_cdf,
    reg_lower_gamma,
    scaled_bessel_i,
)


class TestLogGamma:
    def test_gamma_one_is_zero(self):
        assert abs(log_gamma(1.0)) < 1e-14

    def test_gamma_half(self):
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-13)

    def test_factorial_oracle(self):
        # Gamma(10) = 9!
        fact = 1
        for k in range(1, 10):
            fact *= k
        assert log_gamma(10.0) == pytest.approx(math.log(fact), rel=1e-13)

    def test_accuracy_grid(self):
        # mpmath.loggamma at 40 digits, frozen.
        frozen = {
            1e-3: 6.907178885383853399,
            0.1: 2.252712651734205960,
            2.5: 0.2846828704729191596,
            123.4: 469.3360974421905549,
            1e6: 12815504.569147610555,
        }
        for a, ref in frozen.items():
            err = abs(log_gamma(a) - ref) / max(abs(ref), 1.0)
            assert err < 1e-12, (a, err)

    def test_domain_errors(self):
        for bad in (0.0, -1.0, math.nan, math.inf):
            with pytest.raises(DomainError):
                log_gamma(bad)


class TestRegLowerGamma:
    def test_exponential_special_case(self):
        # P(1, x) = 1 - exp(-x)
        res = reg_lower_gamma(1.0, math.log(2.0))
        assert res.converged
        assert res.value == pytest.approx(0.5, abs=1e-14)

    def test_zero_argument(self):
        assert reg_lower_gamma(3.7, 0.0).value == 0.0

    def test_limit_to_one(self):
        assert reg_lower_gamma(2.0, 200.0).value == pytest.approx(1.0, abs=1e-14)

    def test_series_oracle_value(self):
        # mpmath.gammainc(2.5, 0, 2.5, regularized=True) at 40 digits.
        assert reg_lower_gamma(2.5, 2.5).value == pytest.approx(
            0.5841198130044920797, abs=1e-13
        )

    def test_monotone_in_x(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = float(rng.uniform(0.2, 60.0))
            x1, x2 = sorted(rng.uniform(0.0, 100.0, size=2))
            assert reg_lower_gamma(a, x1).value <= reg_lower_gamma(a, x2).value + 1e-15

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            reg_lower_gamma(0.0, 1.0)
        with pytest.raises(DomainError):
            reg_lower_gamma(1.0, -0.5)
        with pytest.raises(DomainError):
            reg_lower_gamma(math.nan, 1.0)

    def test_iteration_budget(self):
        res = reg_lower_gamma(128.0, 127.0)
        assert res.converged and res.iterations <= 500


class TestChi2:
    def test_cdf_closed_form_d2(self):
        # d=2: F(s) = 1 - exp(-s/2)
        assert chi2_cdf(2, 2.0 * math.log(2.0)) == pytest.approx(0.5, abs=1e-14)

    def test_cdf_at_zero(self):
        assert chi2_cdf(4, 0.0) == 0.0

    def test_cdf_median_region_d10(self):
        # Simpson quadrature oracle of the chi-squared(10) density on [0, 10],
        # frozen: 0.5595067149347875.
        assert chi2_cdf(10, 10.0) == pytest.approx(0.5595067149347875, abs=1e-12)

    def test_cdf_monotone_random_pairs(self):
        rng = np.random.default_rng(1)
        for _ in range(10_000):
            d = int(rng.integers(1, 80))
            s1, s2 = sorted(rng.uniform(0.0, 4.0 * d, size=2))
            assert chi2_cdf(d, s1) <= chi2_cdf(d, s2) + 1e-15

    def test_pdf_closed_form_d2(self):
        assert chi2_pdf(2, 0.5) == pytest.approx(math.exp(-0.25) / 2.0, rel=1e-13)

    def test_pdf_closed_form_d1(self):
        assert chi2_pdf(1, 1.0) == pytest.approx(
            math.exp(-0.5) / math.sqrt(2.0 * math.pi), rel=1e-13
        )

    def test_pdf_matches_cdf_finite_differences(self):
        # Central differences are well conditioned only where the density
        # is not vanishingly small; probe the bulk of each distribution.
        h = 1e-6
        rng = np.random.default_rng(2)
        checked = 0
        while checked < 50:
            d = int(rng.integers(1, 40))
            s = float(rng.uniform(0.3 * d, 1.5 * d))
            if chi2_pdf(d, s) < 1e-4:
                continue
            fd = (chi2_cdf(d, s + h) - chi2_cdf(d, s - h)) / (2.0 * h)
            assert chi2_pdf(d, s) == pytest.approx(fd, rel=1e-6)
            checked += 1

    def test_pdf_integrates_to_cdf(self):
        # Simpson quadrature of the density reproduces the CDF to 1e-8.
        # The density is singular at 0 for d = 1 and finite for d = 2, so
        # those start away from the origin and compare CDF differences.
        # d = 3 has a sqrt cusp at the origin, so it also starts offset.
        cases = [(1, 1.0, 4.0), (2, 1e-12, 5.0), (3, 0.5, 7.5), (8, 1e-12, 20.0), (25, 1e-12, 62.5)]
        for d, lower, upper in cases:
            m = 40001
            grid = np.linspace(lower, upper, m)
            vals = chi2_pdf_array(d, grid)
            h = grid[1] - grid[0]
            simpson = (h / 3.0) * (
                vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-1:2].sum()
            )
            target = chi2_cdf(d, upper) - chi2_cdf(d, lower)
            assert simpson == pytest.approx(target, abs=1e-8), d

    def test_pdf_domain(self):
        with pytest.raises(DomainError):
            chi2_pdf(3, 0.0)

    def test_array_paths_match_scalars(self):
        rng = np.random.default_rng(3)
        for d in (1, 2, 8, 64):
            s = rng.uniform(0.0, 5.0 * d, size=200)
            cdf = chi2_cdf_array(d, s)
            for i in (0, 17, 199):
                assert cdf[i] == pytest.approx(chi2_cdf(d, float(s[i])), abs=1e-15)
            sp = np.maximum(s, 1e-9)
            pdf = chi2_pdf_array(d, sp)
            assert pdf[5] == pytest.approx(chi2_pdf(d, float(sp[5])), rel=1e-14)


class TestScaledBesselI:
    def test_at_zero(self):
        assert scaled_bessel_i(0.0, 0.0).value == 1.0
        assert scaled_bessel_i(1.0, 0.0).value == 0.0

    def test_series_oracle_nu0_c1(self):
        # exp(-1) * I_0(1); I_0(1) from the power series sum over
        # (1/2)^{2m} / (m!)^2, frozen at 40 digits.
        assert scaled_bessel_i(0.0, 1.0).value == pytest.approx(
            0.4657596075936404365, rel=1e-12
        )

    def test_frozen_grid(self):
        # mpmath: besseli(nu, c) * exp(-c), 40 digits, frozen.
        frozen = {
            (0.5, 4.0): 0.1994042250878339,
            (3.0, 16.0): 0.075255758377294705,
            (3.5, 81.92): 0.04094631034766749,
            (31.0, 1.3333333333333333): 1.1301094082456879e-40,
            (63.5, 100.0): 1.1812685630124056e-10,
            (127.0, 1000.0): 3.9952348884380187e-06,
            (0.0, 10000.0): 0.0039894726746047321,
        }
        for (nu, c), ref in frozen.items():
            got = scaled_bessel_i(nu, c).value
            assert got == pytest.approx(ref, rel=1e-10), (nu, c)

    def test_positive_and_decreasing_in_order(self):
        for c in (0.5, 8.0, 50.0, 300.0):
            values = [scaled_bessel_i(nu, c).value for nu in (0.0, 1.0, 2.5, 6.0)]
            assert all(v > 0.0 for v in values)
            assert all(a > b for a, b in zip(values, values[1:]))

    def test_three_term_recurrence(self):
        # I_{nu-1}(c) - I_{nu+1}(c) = (2 nu / c) I_nu(c), scaled form.
        rng = np.random.default_rng(4)
        for _ in range(100):
            nu = float(rng.uniform(1.0, 20.0))
            c = float(rng.uniform(0.1, 200.0))
            lo = scaled_bessel_i(nu - 1.0, c).value
            mid = scaled_bessel_i(nu, c).value
            hi = scaled_bessel_i(nu + 1.0, c).value
            lhs = lo - hi
            rhs = (2.0 * nu / c) * mid
            assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), abs(rhs), 1e-300)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            scaled_bessel_i(-0.5, 1.0)
        with pytest.raises(DomainError):
            scaled_bessel_i(1.0, -1.0)


class TestInvNormCdf:
    def test_median(self):
        assert inv_norm_cdf(0.5) == 0.0

    def test_round_trip_with_erf_oracle(self):
        # p = Phi(1) computed from the error function.
        p = 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))
        assert inv_norm_cdf(p) == pytest.approx(1.0, abs=1e-12)

    def test_upper_quantile(self):
        assert inv_norm_cdf(0.975) == pytest.approx(1.959963984540054, abs=1e-9)

    def test_accuracy_sweep(self):
        for p in np.concatenate(
            [np.geomspace(1e-12, 0.4, 50), 1.0 - np.geomspace(1e-12, 0.4, 50)]
        ):
            x = inv_norm_cdf(float(p))
            assert abs(norm_cdf(x) - p) <= 1e-10

    def test_domain(self):
        for bad in (0.0, 1.0, -0.1, 1.1, math.nan):
            with pytest.raises(DomainError):
                inv_norm_cdf(bad)

    def test_quantile_grid_matches_scalar_and_caches(self):
        g1 = gaussian_quantile_grid(37)
        g2 = gaussian_quantile_grid(37)
        assert g1 is g2
        assert g1[5] == inv_norm_cdf((5 + 0.5) / 37)
