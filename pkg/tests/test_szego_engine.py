import numpy as np
import pytest
from hypothesis import given, settings

from steklov.coeff_extract import extract_verblunsky, generic_moments
from steklov.errors import SchemeError, WeightError
from steklov.polynomial_core import ComplexPoly, GridFunction, star
from steklov.szego_engine import (
    PolySystem,
    VerblunskyScheme,
    bernstein_szego_grid,
    bernstein_szego_weight,
    concatenate_schemes,
    decouple_weight,
    double_scheme,
    idi_residuals,
    lemma2_residuals,
    norm_identity_residual,
    normalization_residual,
    quatro_residual,
    root_modulus,
    rotate_scheme,
    sum_rule_residual,
    szego_forward,
    transfer_residual,
    unit_phases,
    wronskian_residual,
)
from tests.strategies import complex_schemes, real_schemes


def coefficient_bound(s):
    """Upper bound for the coefficient sum of Phi_k and Psi_k"""
    return float(np.prod(1.0 + np.abs(s.gamma)))


EXAMPLES = [
    VerblunskyScheme([0.5]),
    VerblunskyScheme([0.3, -0.2j, 0.1 + 0.4j]),
    VerblunskyScheme([-0.6, 0.5, -0.4, 0.3, 0.2, 0.1]),
]


class TestScheme:
    def test_rejects_parameters_on_the_circle(self):
        with pytest.raises(SchemeError, match="gamma_1"):
            VerblunskyScheme([0.5, 1.0])
        with pytest.raises(SchemeError):
            VerblunskyScheme([np.nan])

    def test_norms(self):
        s = VerblunskyScheme([0.6, 0.8j * 0.5])
        assert s.norm_sq(1) == pytest.approx(0.64)
        assert s.norm_sq() == pytest.approx(0.64 * 0.84)
        assert s.rho_product() == pytest.approx(np.sqrt(0.64 * 0.84))

    def test_real_part(self):
        assert list(VerblunskyScheme([0.1, -0.2]).real_part()) == [0.1, -0.2]
        with pytest.raises(SchemeError):
            VerblunskyScheme([0.1j]).real_part()

    def test_residual_pads_with_zeros(self):
        a = VerblunskyScheme([0.1, 0.2])
        assert a.residual(VerblunskyScheme([0.1, 0.2, 0.0, 0.0])) == 0.0
        assert a.residual(VerblunskyScheme([0.1])) == pytest.approx(0.2)

    def test_slicing(self):
        s = EXAMPLES[2]
        assert isinstance(s[1:3], VerblunskyScheme)
        assert s[1] == 0.5
        assert len(concatenate_schemes(s, s[:2])) == 8


class TestRecursion:
    def test_first_step(self):
        g = 0.3 - 0.4j
        ps = szego_forward(VerblunskyScheme([g]))
        assert list(ps.phi.coeffs) == [-np.conj(g), 1]
        assert list(ps.phi_star.coeffs) == [1, -g]
        assert list(ps.psi.coeffs) == [np.conj(g), 1]
        assert list(ps.psi_star.coeffs) == [1, g]
        assert ps.norm_sq == pytest.approx(0.75)

    def test_zero_scheme_gives_monomials(self):
        ps = szego_forward(VerblunskyScheme.zeros(5))
        assert ps.phi.coeff_residual(ComplexPoly.monomial(5)) == 0.0
        assert ps.phi_star.coeff_residual(ComplexPoly.constant(1.0)) == 0.0

    def test_partial_advance(self):
        assert szego_forward(EXAMPLES[2], 3).k == 3
        with pytest.raises(SchemeError):
            szego_forward(EXAMPLES[0], 2)

    @given(complex_schemes)
    def test_star_relation(self, s):
        ps = szego_forward(s)
        bound = coefficient_bound(s)
        assert star(ps.phi, ps.k).coeff_residual(ps.phi_star) <= 1e-13 * bound
        assert star(ps.psi, ps.k).coeff_residual(ps.psi_star) <= 1e-13 * bound

    @given(complex_schemes)
    def test_wronskian(self, s):
        ps = szego_forward(s)
        assert wronskian_residual(ps) <= 1e-12 * coefficient_bound(s) ** 2

    @given(complex_schemes)
    def test_transfer_matrix(self, s):
        assert transfer_residual(s) <= 1e-12 * coefficient_bound(s)

    @given(real_schemes)
    def test_real_parameters_give_real_polynomials(self, s):
        ps = szego_forward(s)
        assert all(p.is_real() for p in (ps.phi, ps.phi_star, ps.psi, ps.psi_star))

    @given(complex_schemes)
    def test_orthonormal_scaling(self, s):
        ps = szego_forward(s)
        for monic, unit in zip((ps.phi, ps.phi_star, ps.psi, ps.psi_star), ps.orthonormal()):
            np.testing.assert_allclose(unit.coeffs * np.sqrt(ps.norm_sq), monic.coeffs, rtol=1e-13, atol=1e-15)

    def test_dict_form(self):
        ps = szego_forward(EXAMPLES[1])
        back = PolySystem.from_dict(ps.to_dict())
        assert back.k == 3
        assert back.norm_sq == ps.norm_sq
        assert back.psi_star.coeff_residual(ps.psi_star) == 0.0


class TestDoubling:
    @given(real_schemes)
    @settings(max_examples=50)
    def test_doubling_identities(self, alpha):
        scale = coefficient_bound(alpha) ** 2
        phi_res, star_res = lemma2_residuals(alpha)
        assert phi_res <= 1e-11 * scale
        assert star_res <= 1e-11 * scale

    @given(real_schemes)
    @settings(max_examples=50)
    def test_zero_extension(self, alpha):
        residuals = idi_residuals(alpha)
        assert set(residuals) == {
            "shift_phi", "shift_phi_star", "shift_psi", "shift_psi_star", "closed_phi", "closed_phi_star",
        }
        for key in ("shift_phi", "shift_phi_star", "shift_psi", "shift_psi_star"):
            assert residuals[key] == 0.0
        scale = coefficient_bound(alpha) ** 2
        assert residuals["closed_phi"] <= 1e-11 * scale
        assert residuals["closed_phi_star"] <= 1e-11 * scale

    def test_doubled_layout(self):
        doubled = double_scheme(VerblunskyScheme([0.1, 0.2, 0.3]))
        assert list(doubled.gamma) == [0.1, 0.2, 0.3, -0.3, -0.2, -0.1]

    def test_doubling_needs_real_parameters(self):
        with pytest.raises(SchemeError):
            double_scheme(VerblunskyScheme([0.1, 0.2j]))


class TestRotation:
    def test_quarter_turn_phases_are_exact(self):
        assert list(unit_phases(4, np.pi / 2)) == [-1j, -1, 1j, 1]
        assert list(unit_phases(3, np.pi)) == [-1, 1, -1]
        assert list(unit_phases(2, 0.0)) == [1, 1]

    def test_half_turn_alternates_signs(self):
        alpha = EXAMPLES[2]
        rotated = rotate_scheme(alpha, np.pi)
        signs = (-1.0) ** (np.arange(len(alpha)) + 1)
        np.testing.assert_array_equal(rotated.gamma, signs * alpha.gamma)

    @given(complex_schemes)
    def test_rotation_composes(self, s):
        back = rotate_scheme(rotate_scheme(s, 0.7), -0.7)
        assert back.residual(s) <= 1e-14
        assert rotate_scheme(s, 2 * np.pi).residual(s) <= 1e-12

    @pytest.mark.parametrize("s", EXAMPLES)
    def test_rotated_weight_is_translated(self, s):
        m, r = 256, 8
        beta = 2 * np.pi * r / m
        w = bernstein_szego_weight(szego_forward(s), m)
        w_rot = bernstein_szego_weight(szego_forward(rotate_scheme(s, beta)), m)
        np.testing.assert_allclose(w_rot.real, np.roll(w.real, r), rtol=1e-11)


class TestWeights:
    @pytest.mark.parametrize("s", EXAMPLES)
    def test_quatro_identity(self, s):
        ps = szego_forward(s)
        assert quatro_residual(ps, 512) <= 1e-12 * coefficient_bound(s) ** 2

    @pytest.mark.parametrize("s", EXAMPLES)
    def test_normalization(self, s):
        assert normalization_residual(szego_forward(s), 1024) <= 1e-10

    @pytest.mark.parametrize("s", EXAMPLES)
    def test_bernstein_szego_is_probability(self, s):
        ps = szego_forward(s)
        w = bernstein_szego_weight(ps, 1024)
        assert w.integral().real == pytest.approx(1.0, abs=1e-12)
        assert norm_identity_residual(ps, w) <= 1e-12
        assert sum_rule_residual(w, s) <= 1e-10

    def test_grid_for_lebesgue_is_the_minimum(self):
        ps = szego_forward(VerblunskyScheme.empty())
        assert root_modulus(ps) == 0.0
        assert bernstein_szego_grid(ps, 64) == 64
        assert bernstein_szego_grid(ps, 100) == 128

    def test_root_modulus(self):
        assert root_modulus(szego_forward(VerblunskyScheme([0.5]))) == pytest.approx(0.5)
        assert bernstein_szego_grid(szego_forward(VerblunskyScheme([0.5])), 16) == 64

    def test_grid_grows_with_zeros_near_the_circle(self):
        s = VerblunskyScheme([0, 0, 0, 0.5j, 0.5j, 0.5625j, 0.59375j])
        ps = szego_forward(s)
        assert root_modulus(ps) < 1.0
        m = bernstein_szego_grid(ps, 4096)
        assert m > 4096
        w = bernstein_szego_weight(ps, m)
        N = len(s) + 4
        assert extract_verblunsky(generic_moments(w, N), N).residual(s) < 1e-9

    def test_lebesgue_sum_rule(self):
        w = GridFunction.constant(1 / (2 * np.pi), 64)
        assert sum_rule_residual(w, VerblunskyScheme.empty()) <= 1e-15

    def test_sum_rule_rejects_nonpositive_weight(self):
        with pytest.raises(WeightError):
            sum_rule_residual(GridFunction.constant(0.0, 8), VerblunskyScheme.empty())

    @pytest.mark.parametrize("s", EXAMPLES)
    def test_free_continuation_decouples_to_bernstein_szego(self, s):
        m = 512
        ps = szego_forward(s)
        lebesgue = GridFunction.constant(1 / (2 * np.pi), m)
        w = decouple_weight(ps, GridFunction.constant(1.0, m), lebesgue)
        np.testing.assert_allclose(w.real, bernstein_szego_weight(ps, m).real, rtol=1e-12)

    def test_decoupling_needs_positive_real_part(self):
        ps = szego_forward(EXAMPLES[0])
        with pytest.raises(WeightError):
            decouple_weight(ps, GridFunction.constant(-1.0, 16), GridFunction.constant(0.1, 16))
