from __future__ import annotations

import math
import unittest

import numpy as np
from scipy import integrate

from kirchhoff_mp import closed_form_1d, solve_soliton


class ClosedFormTests(unittest.TestCase):
    def test_peak_and_decay(self):
        self.assertAlmostEqual(float(closed_form_1d(1.0, 12.0, 0.0)), 6.0**0.1, places=14)
        x = np.linspace(0.0, 5.0, 11)
        values = closed_form_1d(1.0, 12.0, x)
        self.assertTrue(bool(np.all(np.diff(values) < 0.0)))

    def test_rejects_nonpositive_b(self):
        with self.assertRaises(ValueError):
            closed_form_1d(0.0, 12.0, 1.0)


class OneDimensionalSolitonTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.profile = solve_soliton(1.0, 12.0, 1)

    def test_central_value(self):
        self.assertAlmostEqual(self.profile.U0, 6.0**0.1, delta=1e-8)

    def test_matches_closed_form(self):
        exact = closed_form_1d(1.0, 12.0, self.profile.r)
        self.assertLessEqual(float(np.max(np.abs(self.profile.U - exact))), 1e-8)

    def test_monotone_and_positive(self):
        U = self.profile.U
        self.assertTrue(bool(np.all(U > 0.0)))
        self.assertTrue(bool(np.all(np.diff(U) <= 1e-14)))
        self.assertLessEqual(float(U[-1]), 2e-7 * self.profile.U0)

    def test_b_scaling(self):
        wide = solve_soliton(4.0, 12.0, 1)
        self.assertEqual(wide.U0, self.profile.U0)
        np.testing.assert_allclose(wide(2.0 * self.profile.r[:500]), self.profile.U[:500], rtol=0.0, atol=1e-12)
        exact = closed_form_1d(4.0, 12.0, wide.r)
        self.assertLessEqual(float(np.max(np.abs(wide.U - exact))), 1e-8)

    def test_evaluation_past_the_samples(self):
        far = self.profile.r_max + 2.0
        value = float(self.profile(far))
        self.assertGreater(value, 0.0)
        self.assertLess(value, float(self.profile(self.profile.r_max)))
        self.assertEqual(self.profile(np.array([0.0, 1.0])).shape, (2,))

    def test_ball_integral(self):
        radius = 3.0
        exact, _ = integrate.quad(lambda x: float(closed_form_1d(1.0, 12.0, x)) ** 2, -radius, radius, epsabs=1e-13)
        self.assertAlmostEqual(self.profile.ball_integral(radius), exact, delta=1e-5 * exact)

    def test_rows(self):
        names, rows = self.profile.rows()
        self.assertEqual(names, ["r", "U"])
        self.assertEqual(len(rows), len(self.profile.r))
        self.assertEqual(rows[0][0], 0.0)


class HigherDimensionalSolitonTests(unittest.TestCase):
    def test_two_dimensions(self):
        profile = solve_soliton(1.0, 8.0, 2)
        self.assertLessEqual(profile.residual(), 1e-8)
        self.assertGreater(profile.U0, (8.0 / 2.0) ** (1.0 / 6.0))
        self.assertTrue(bool(np.all(np.diff(profile.U) <= 1e-14)))

    def test_three_dimensions(self):
        profile = solve_soliton(1.0, 5.0, 3)
        self.assertLessEqual(profile.residual(), 1e-8)
        stretched = profile.with_b(2.5)
        self.assertLessEqual(stretched.residual(), 1e-8 * math.sqrt(2.5) + 1e-8)


class SolitonArgumentTests(unittest.TestCase):
    def test_rejects_invalid_arguments(self):
        with self.assertRaises(ValueError):
            solve_soliton(0.0, 12.0, 1)
        with self.assertRaises(ValueError):
            solve_soliton(1.0, 12.0, 4)
        with self.assertRaises(ValueError):
            solve_soliton(1.0, 6.0, 2)
        with self.assertRaises(ValueError):
            solve_soliton(1.0, 6.5, 3)


if __name__ == "__main__":
    unittest.main()
