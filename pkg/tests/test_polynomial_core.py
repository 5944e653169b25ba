import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steklov.errors import PolynomialError
from steklov.polynomial_core import (
    ComplexPoly,
    GridFunction,
    PolyOp,
    default_grid_size,
    eval_grid,
    grid_points,
    grid_stats,
    poly_arith,
    read_grid_csv,
    star,
    sup_on_refined,
    write_grid_csv,
)

coefficients = st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=1, max_size=10)


class TestComplexPoly:
    def test_from_coeffs_pads_to_declared_degree(self):
        p = ComplexPoly.from_coeffs([1, 2], degree=4)
        assert p.degree == 4
        assert list(p.coeffs) == [1, 2, 0, 0, 0]
        assert p.actual_degree == 1

    def test_from_coeffs_rejects_nonzero_tail(self):
        with pytest.raises(PolynomialError):
            ComplexPoly.from_coeffs([1, 2, 3], degree=1)

    def test_mismatched_length_rejected(self):
        with pytest.raises(PolynomialError):
            ComplexPoly(coeffs=np.ones(3), degree=5)

    def test_coefficients_are_read_only(self):
        p = ComplexPoly.from_coeffs([1, 2])
        with pytest.raises(ValueError):
            p.coeffs[0] = 5

    def test_arithmetic(self):
        p = ComplexPoly.from_coeffs([1, 1])
        q = ComplexPoly.from_coeffs([1, -1])
        assert list((p * q).coeffs) == [1, 0, -1]
        assert list((p + q).coeffs) == [2, 0]
        assert list((p - q).coeffs) == [0, 2]
        assert list((-p).coeffs) == [-1, -1]
        assert list(p.shift_by_z().coeffs) == [0, 1, 1]

    def test_poly_arith_degree_override(self):
        p = ComplexPoly.from_coeffs([1, 1])
        result = poly_arith(p, p, PolyOp.SUB, degree=3)
        assert result.degree == 3
        assert result.actual_degree == 0

    def test_divide_by_z(self):
        p = ComplexPoly.from_coeffs([0, 2, 3])
        assert list(p.divide_by_z().coeffs) == [2, 3]
        with pytest.raises(PolynomialError):
            ComplexPoly.from_coeffs([1e-6, 1]).divide_by_z(tol=1e-12)
        assert ComplexPoly.from_coeffs([1e-14, 1]).divide_by_z(tol=1e-12).degree == 0

    @given(coefficients, st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False))
    def test_horner_matches_numpy(self, coeffs, z):
        p = ComplexPoly.from_coeffs(coeffs)
        expected = np.polyval(np.array(coeffs, dtype=complex)[::-1], z)
        assert p(z) == pytest.approx(expected, rel=1e-12, abs=1e-10)

    @given(coefficients, coefficients)
    @settings(max_examples=50)
    def test_product_values(self, a, b):
        p, q = ComplexPoly.from_coeffs(a), ComplexPoly.from_coeffs(b)
        z = grid_points(8) * 0.9
        np.testing.assert_allclose((p * q)(z), p(z) * q(z), rtol=1e-10, atol=1e-9)

    def test_dict_form(self):
        p = ComplexPoly.from_coeffs([1 + 2j, -0.5])
        data = p.to_dict()
        assert data["degree"] == 1
        assert data["coeffs"][0] == {"re": 1.0, "im": 2.0}
        assert ComplexPoly.from_dict(data).coeff_residual(p) == 0.0


class TestStar:
    @given(coefficients, st.integers(min_value=0, max_value=4))
    def test_involution_is_exact(self, coeffs, extra):
        p = ComplexPoly.from_coeffs(coeffs)
        n = p.degree + extra
        assert star(star(p, n), n).coeff_residual(p) == 0.0

    def test_monomial(self):
        assert list(star(ComplexPoly.monomial(2), 3).coeffs) == [0, 1, 0, 0]

    def test_conjugates(self):
        p = ComplexPoly.from_coeffs([1j, 2])
        assert list(star(p, 1).coeffs) == [2, -1j]

    def test_order_below_degree(self):
        with pytest.raises(PolynomialError):
            star(ComplexPoly.from_coeffs([1, 2, 3]), 1)

    def test_boundary_modulus(self):
        p = ComplexPoly.from_coeffs([0.3, -1j, 2])
        z = grid_points(64)
        np.testing.assert_allclose(np.abs(star(p, 2)(z)), np.abs(p(z)), rtol=1e-13)


class TestGridFunction:
    def test_integral_of_monomials(self):
        m = 64
        assert eval_grid(ComplexPoly.constant(1.0), m).integral() == pytest.approx(2 * np.pi)
        for k in range(1, m):
            assert abs(eval_grid(ComplexPoly.monomial(k), m).integral()) < 1e-12

    def test_reflect_is_antipodal(self):
        g = eval_grid(ComplexPoly.monomial(1), 16)
        np.testing.assert_allclose(g.reflect().values, -g.points, atol=1e-15)

    def test_reflect_needs_even_grid(self):
        with pytest.raises(PolynomialError):
            GridFunction.constant(1.0, 7).reflect()

    def test_mismatched_grids(self):
        with pytest.raises(PolynomialError):
            GridFunction.constant(1.0, 8) + GridFunction.constant(1.0, 16)

    def test_pointwise_operations(self):
        g = GridFunction.from_callable(lambda t: 2.0 + np.cos(t), 8)
        h = g * g / g - g
        assert np.all(np.abs(h.values) < 1e-15)
        assert np.all(abs(g).values.imag == 0)
        np.testing.assert_array_equal((2 * g).values, g.values * 2)

    def test_stats(self):
        g = eval_grid(ComplexPoly.from_coeffs([2, 1]), 256)
        stats = grid_stats(g)
        assert stats.sup_modulus == pytest.approx(3.0)
        assert stats.min_modulus == pytest.approx(1.0)
        assert stats.mean == pytest.approx(2.0)
        assert stats.integral_mod_sq == pytest.approx(2 * np.pi * 5)

    def test_refined_sup_is_nondecreasing(self):
        p = ComplexPoly.from_coeffs([1, -0.7j, 0.3, 0.9])
        sups = sup_on_refined(p, 16, doublings=4)
        assert all(b >= a for a, b in zip(sups, sups[1:]))

    def test_default_grid_size(self):
        assert default_grid_size(10) == 4096
        assert default_grid_size(1000) == 16000


def test_csv_keeps_full_precision(tmp_path):
    g = GridFunction.from_callable(lambda t: np.exp(1j * t) / 3.0 + 1e-17, 32)
    path = tmp_path / "grid.csv"
    write_grid_csv(g, path, {"config_hash": "abc", "n": "4"})
    text = path.read_text()
    assert text.startswith("# config_hash=abc\n# n=4\ntheta,re,im\n")
    back = read_grid_csv(path)
    np.testing.assert_array_equal(back.values, g.values)
