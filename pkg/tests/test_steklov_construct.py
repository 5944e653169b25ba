import logging
import math

import numpy as np
import pytest

from steklov.coeff_extract import extract_verblunsky, generic_moments
from steklov.errors import ConfigError, SchemeError
from steklov.polynomial_core import eval_grid
from steklov.steklov_construct import (
    SteklovScheme,
    antipodal_caratheodory,
    asymptotic_descriptor,
    build_scheme,
    flag_trend,
    growth_report,
    l4_main_term,
    l4_main_terms,
    lemma_l1_suite,
    qq1_main_term,
    residual_report,
    steklov_weight,
)
from steklov.szego_engine import VerblunskyScheme, double_scheme, rotate_scheme, szego_forward

EPSILON = 0.1


class TestScheme:
    def test_small_examples(self):
        s = build_scheme(VerblunskyScheme([0.3]), 1)
        assert list(s.gamma.gamma) == [0.3, -0.3, 0.0, -0.3]
        s = build_scheme(VerblunskyScheme([0.3, 0.2, 0.9]), 2)
        assert list(s.gamma.gamma) == [0.3, 0.2, -0.2, -0.3, 0.0, -0.3, 0.2]

    def test_layout(self, fh_alpha):
        n = 10
        s = build_scheme(fh_alpha, n, EPSILON)
        g = s.gamma.gamma
        assert len(s.gamma) == 3 * n + 1
        assert g[2 * n] == 0
        assert s.gamma[: 2 * n].residual(double_scheme(fh_alpha[:n])) == 0.0
        np.testing.assert_array_equal(g[2 * n + 1 :], rotate_scheme(fh_alpha[:n], math.pi).gamma)
        assert len(s.head) == 2 * n + 1
        assert s.segments()["rotated"] == range(21, 31)

    def test_full_scheme_padding(self):
        s = build_scheme(VerblunskyScheme([0.3, 0.2]), 2)
        padded = s.full_scheme(12)
        assert len(padded) == 12
        assert np.all(padded.gamma[7:] == 0)
        assert len(s.full_scheme(3)) == 3

    def test_rejects_broken_layout(self):
        good = build_scheme(VerblunskyScheme([0.3, 0.2]), 2).gamma.gamma.copy()
        for index in (2, 4, 6):
            broken = good.copy()
            broken[index] += 0.01
            with pytest.raises(SchemeError):
                SteklovScheme(2, VerblunskyScheme(broken))
        with pytest.raises(SchemeError):
            SteklovScheme(2, VerblunskyScheme(good[:6]))

    def test_needs_real_block(self):
        with pytest.raises(SchemeError):
            build_scheme(VerblunskyScheme([0.3, 0.2j]), 2)
        with pytest.raises(SchemeError):
            build_scheme(VerblunskyScheme([0.3]), 2)
        with pytest.raises(ConfigError):
            build_scheme(VerblunskyScheme([0.3]), 0)

    def test_dict_form(self, fh_alpha):
        s = build_scheme(fh_alpha, 5, EPSILON)
        back = SteklovScheme.from_dict(s.to_dict())
        assert back.n == 5 and back.epsilon == EPSILON
        assert back.gamma.residual(s.gamma) == 0.0


class TestMainTerms:
    def test_main_terms_are_real(self):
        terms = l4_main_terms(10001, EPSILON)
        assert np.max(np.abs(terms.imag)) < 1e-12

    def test_modulus_bound(self):
        terms = l4_main_terms(10001, EPSILON)
        descriptor = asymptotic_descriptor(EPSILON)
        bounds = np.array([descriptor.modulus_bound(j) for j in range(len(terms))])
        assert np.all(np.abs(terms) <= bounds * (1 + 1e-9))

    def test_first_term_tracks_first_moment(self):
        assert abs(l4_main_term(0, EPSILON) - 2 * math.tanh(EPSILON) / math.pi) < 1e-3
        assert abs(l4_main_term(0, EPSILON) - 2 * EPSILON / math.pi) < 1e-3

    def test_vanishes_with_epsilon(self):
        assert abs(l4_main_term(3, 1e-4)) < abs(l4_main_term(3, 1e-2))
        assert abs(l4_main_term(3, 1e-4)) <= 1e-4

    def test_descriptor(self):
        d = asymptotic_descriptor(EPSILON)
        assert d.main_term(7) == l4_main_term(7, EPSILON)
        assert d.beta2 == -d.beta1 and (d.z1, d.z2) == (1j, -1j)

    def test_constructed_scheme_terms_by_segment(self):
        n = 5
        main = l4_main_terms(n, EPSILON)
        assert qq1_main_term(2 * n, n, EPSILON) == 0
        assert qq1_main_term(3 * n + 1, n, EPSILON) == 0
        assert qq1_main_term(n, n, EPSILON) == pytest.approx(-main[n - 1], abs=1e-15)
        expected = build_scheme(VerblunskyScheme(main.real), n).gamma.gamma.real
        actual = np.array([qq1_main_term(j, n, EPSILON).real for j in range(3 * n + 1)])
        np.testing.assert_allclose(actual, expected, rtol=0, atol=1e-15)
        with pytest.raises(ConfigError):
            qq1_main_term(-1, n, EPSILON)


class TestResiduals:
    def test_known_decay(self):
        N = 600
        j = np.arange(N)
        perturbation = 0.5 / (j + 1.0) ** 2
        perturbation[40] = 0.0
        extracted = VerblunskyScheme(l4_main_terms(N, EPSILON) + perturbation)
        report = residual_report(extracted, EPSILON, (32, 512))
        assert report.excluded == [40]
        assert report.slope_fit == pytest.approx(-2.0, abs=1e-6)
        assert report.C_fit == pytest.approx(0.5, rel=1e-9)
        assert (report.j_min, report.j_max) == (32, 512)

    def test_window_is_clipped(self, fh_alpha):
        report = residual_report(fh_alpha, EPSILON, (32, 512))
        assert report.j_max == 255
        assert report.to_dict()["window"] == [32, 255]

    def test_empty_window(self, fh_alpha):
        with pytest.raises(ConfigError):
            residual_report(fh_alpha[:20], EPSILON, (32, 512))

    def test_two_arc_residuals_decay(self, fh_alpha):
        r = np.abs(fh_alpha.gamma - l4_main_terms(len(fh_alpha), EPSILON))
        scaled = r * (np.arange(len(r)) + 1)
        assert np.max(scaled[128:256]) <= 0.5 * np.max(scaled[16:32])
        report = residual_report(fh_alpha, EPSILON, (32, 255))
        assert report.slope_fit < -1.0
        assert report.C_fit > 0


class TestConstruction:
    def test_antipodal_function(self, fh_alpha):
        n, m = 6, 512
        F_tilde, rotated = antipodal_caratheodory(fh_alpha, n, m)
        assert rotated.residual(rotate_scheme(fh_alpha[:n], math.pi)) == 0.0
        ps = szego_forward(rotated)
        expected = eval_grid(ps.psi_star, m).values / eval_grid(ps.phi_star, m).values
        np.testing.assert_allclose(F_tilde.values, expected, rtol=1e-12)
        assert np.mean(F_tilde.real) == pytest.approx(1.0, abs=1e-12)
        assert np.min(F_tilde.real) > 0

    @pytest.mark.parametrize("n", [2, 4, 8])
    def test_weight_is_positive_probability(self, fh_alpha, n):
        result = steklov_weight(build_scheme(fh_alpha, n, EPSILON), fh_alpha, 1024)
        assert result.integral == pytest.approx(1.0, abs=1e-9)
        assert result.steklov_min > 0
        assert result.caratheodory_mass == pytest.approx(1.0, abs=1e-10)
        assert result.report()["n"] == n

    @pytest.mark.parametrize("n", [2, 4])
    def test_weight_reproduces_scheme(self, fh_alpha, n):
        scheme = build_scheme(fh_alpha, n, EPSILON)
        result = steklov_weight(scheme, fh_alpha, 1024)
        count = 3 * n + 3
        recovered = extract_verblunsky(generic_moments(result.weight, count), count)
        assert recovered.residual(scheme.full_scheme(count)) < 1e-7

    def test_phi_sup_matches_growth(self, fh_alpha):
        n, m = 8, 1024
        result = steklov_weight(build_scheme(fh_alpha, n, EPSILON), fh_alpha, m)
        report = growth_report([n], EPSILON, m, alpha=fh_alpha)
        assert result.phi_sup == pytest.approx(report.rows[0].sup_phi, rel=1e-12)

    def test_grid_too_small(self, fh_alpha):
        with pytest.raises(ConfigError):
            steklov_weight(build_scheme(fh_alpha, 8, EPSILON), fh_alpha, 256)


class TestSuites:
    def test_growth_report(self, fh_alpha, caplog):
        with caplog.at_level(logging.WARNING):
            report = growth_report([8, 4, 4], EPSILON, 1024, alpha=fh_alpha)
        assert [r.n for r in report.rows] == [4, 8]
        assert "below 16" in caplog.text
        for row in report.rows:
            assert row.bound_margin >= -1e-9
            assert row.sup_phi > 0
            assert row.ratio == pytest.approx(row.sup_phi / math.log(row.n))
        frame = report.to_frame()
        assert list(frame.columns) == ["n", "sup_phi", "log_n", "ratio", "duo_sup", "bound_margin"]
        assert report.min_ratio == frame["ratio"].min()

    def test_sup_grows_against_log(self, fh_alpha):
        report = growth_report([16, 32, 64], EPSILON, 4096, alpha=fh_alpha)
        assert report.sup_slope > 0
        assert report.duo_slope > 0
        assert set(report.flagged) <= {16, 32}

    def test_slope_needs_two_block_sizes(self, fh_alpha):
        report = growth_report([16], EPSILON, 1024, alpha=fh_alpha)
        with pytest.raises(ConfigError, match="two block sizes"):
            report.sup_slope

    def test_growth_needs_log(self, fh_alpha):
        with pytest.raises(ConfigError):
            growth_report([1, 4], EPSILON, 1024, alpha=fh_alpha)

    def test_flag_trend(self):
        assert flag_trend([2, 4, 8, 16], [1.0, 0.9, 1.2, 1.19]) == [2]
        assert flag_trend([2, 4], [1.0, 0.96]) == []

    def test_l1_suite(self, fh_alpha):
        report = lemma_l1_suite(fh_alpha, [4, 8, 16], 1024, EPSILON)
        assert [r.n for r in report.rows] == [4, 8, 16]
        for row in report.rows:
            assert row.quatro <= 1e-10
            assert 0 < row.phi_star_min <= row.phi_star_max
            assert row.phi_star_spread >= 1
            assert np.isfinite(row.antipodal_sup)
            assert 0 <= row.szego_gap < 1
        assert "phi_star_spread" in report.to_frame().columns

    def test_l1_suite_needs_enough_parameters(self, fh_alpha):
        with pytest.raises(SchemeError):
            lemma_l1_suite(fh_alpha[:8], [4, 16], 1024, EPSILON)


@pytest.mark.slow
class TestDeskScale:
    @pytest.mark.parametrize("n", [16, 32, 64])
    def test_fine_grid_construction(self, fh_alpha, n):
        result = steklov_weight(build_scheme(fh_alpha, n, EPSILON), fh_alpha, 2 ** 16)
        assert result.integral == pytest.approx(1.0, abs=1e-6)
        assert result.steklov_min > 0

    def test_fine_grid_round_trip(self, fh_alpha):
        scheme = build_scheme(fh_alpha, 8, EPSILON)
        result = steklov_weight(scheme, fh_alpha, 2 ** 16)
        recovered = extract_verblunsky(generic_moments(result.weight, 40), 40)
        assert recovered.residual(scheme.full_scheme(40)) < 1e-5

    def test_growth_bound_margin(self, fh_alpha):
        report = growth_report([16, 32, 64, 128, 256], EPSILON, 2 ** 16, alpha=fh_alpha)
        assert min(r.bound_margin for r in report.rows) >= -1e-9
