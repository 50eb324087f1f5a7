import numpy as np
import pytest
from jerk_planner_python.utilities import polyroots


class TestClosedForms:

    def test_linear(self):
        assert polyroots.linear_roots(2.0, -3.0) == [1.5]
        assert polyroots.linear_roots(0.0, 1.0) == []

    @pytest.mark.parametrize('coeffs, expected', [
        ((1.0, -3.0, 2.0), [1.0, 2.0]),
        ((1.0, 0.0, 1.0), []),
        ((1.0, -2.0, 1.0), [1.0]),
        ((0.0, 2.0, -4.0), [2.0]),
    ])
    def test_quadratic(self, coeffs, expected):
        assert polyroots.quadratic_roots(*coeffs) == pytest.approx(expected)

    def test_cubic_three_real_roots(self):
        assert polyroots.cubic_roots(1.0, -6.0, 11.0, -6.0) == pytest.approx([1.0, 2.0, 3.0])

    def test_cubic_one_real_root(self):
        assert polyroots.cubic_roots(1.0, 0.0, 1.0, -2.0) == pytest.approx([1.0])

    def test_quartic_four_real_roots(self):
        # (x - 1)(x - 2)(x + 3)(x - 4)
        assert polyroots.quartic_roots(1.0, -4.0, -7.0, 34.0, -24.0) == pytest.approx([-3.0, 1.0, 2.0, 4.0])

    def test_quartic_biquadratic(self):
        # x^4 - 5x^2 + 4
        assert polyroots.quartic_roots(1.0, 0.0, -5.0, 0.0, 4.0) == pytest.approx([-2.0, -1.0, 1.0, 2.0])

    def test_quartic_without_real_roots(self):
        assert polyroots.quartic_roots(1.0, 0.0, 0.0, 0.0, 1.0) == []

    def test_quartic_degrades_to_cubic(self):
        assert polyroots.quartic_roots(0.0, 1.0, -6.0, 11.0, -6.0) == pytest.approx([1.0, 2.0, 3.0])

    def test_agrees_with_numpy(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            roots = np.sort(rng.uniform(-5.0, 5.0, 4))
            if np.min(np.diff(roots)) < 0.2:
                continue
            coeffs = np.poly(roots)
            assert polyroots.quartic_roots(*coeffs) == pytest.approx(list(roots), abs=1e-6)


class TestInterval:

    def test_roots_restricted_to_interval(self):
        coeffs = np.poly([0.5, 1.5, 3.0])
        assert polyroots.real_roots_in(coeffs, 0.0, 2.0) == pytest.approx([0.5, 1.5])

    def test_zero_polynomial_has_no_roots(self):
        assert polyroots.real_roots_in([0.0, 0.0, 0.0], 0.0, 1.0) == []

    def test_degenerate_interval(self):
        assert polyroots.real_roots_in([1.0, -1.0], 1.0, 1.0) == [1.0]
        assert polyroots.real_roots_in([1.0, -1.0], 2.0, 2.0) == []

    def test_dedup(self):
        assert polyroots.dedup([1.0, 1.0 + 1e-12, 2.0]) == [1.0, 2.0]

    def test_is_identically_zero(self):
        assert polyroots.is_identically_zero([0.0, 1e-14])
        assert not polyroots.is_identically_zero([0.0, 1e-3])
