from __future__ import annotations

import math
import unittest

import numpy as np

from kirchhoff_mp import Field, Grid, ProblemParams, SphereOps, energy, gradient, inner_l2, norm_l2_sq
from kirchhoff_mp.errors import NotTangentError, OffSphereError, ZeroFieldError


class SphereOpsTests(unittest.TestCase):
    def setUp(self):
        self.g = Grid.interval(10.0, 255)
        self.params = ProblemParams(a=1.0, b=1.0, c=2.5, p=12.0, rho=1.0, grid=self.g)
        self.sphere = SphereOps(self.params)
        self.u = self.sphere.normalize(Field.from_function(self.g, lambda x: np.sin(math.pi * x / 10.0) ** 2))
        self.v = Field.from_function(self.g, lambda x: np.sin(3.0 * math.pi * x / 10.0) + 0.3 * x * (10.0 - x) / 25.0)

    def test_normalize_lands_on_sphere(self):
        self.assertAlmostEqual(norm_l2_sq(self.g, self.u), 2.5, places=12)
        self.assertTrue(self.sphere.on_sphere(self.u))
        with self.assertRaises(ZeroFieldError):
            self.sphere.normalize(Field.zeros(self.g))

    def test_tangent_projection(self):
        t = self.sphere.project_tangent(self.u, self.v)
        self.assertLessEqual(abs(inner_l2(self.g, self.u, t)), 1e-12 * math.sqrt(norm_l2_sq(self.g, self.v)))
        again = self.sphere.project_tangent(self.u, t)
        np.testing.assert_allclose(again.values, t.values, atol=1e-13)

    def test_off_sphere_is_rejected(self):
        off = self.u * 1.01
        with self.assertRaises(OffSphereError):
            self.sphere.project_tangent(off, self.v)
        with self.assertRaises(OffSphereError):
            self.sphere.constrained_gradient(off)

    def test_constrained_gradient_uses_rayleigh_multiplier(self):
        lam = self.sphere.rayleigh_multiplier(self.u)
        expected = gradient(self.params, self.u) + lam * self.u
        np.testing.assert_allclose(self.sphere.constrained_gradient(self.u).values, expected.values, atol=1e-10)
        tangent = self.sphere.constrained_gradient(self.u)
        self.assertLessEqual(abs(inner_l2(self.g, tangent, self.u)), 1e-9)
        self.assertAlmostEqual(self.sphere.residual(self.u), math.sqrt(norm_l2_sq(self.g, tangent)))

    def test_second_variation_needs_tangent_direction(self):
        with self.assertRaises(NotTangentError):
            self.sphere.d2_form(self.u, self.v)
        t = self.sphere.project_tangent(self.u, self.v)
        value = self.sphere.d2_form(self.u, t)
        self.assertTrue(math.isfinite(value))

    def test_second_variation_matches_curve_on_sphere(self):
        # u(s) = cos(s) u + sin(s) sqrt(c) t/|t| stays on the sphere
        t = self.sphere.project_tangent(self.u, self.v)
        t = t * (math.sqrt(self.params.c) / math.sqrt(norm_l2_sq(self.g, t)))

        def level(s: float) -> float:
            return energy(self.params, math.cos(s) * self.u + math.sin(s) * t).Jrho

        s = 1e-3
        second = (level(s) - 2.0 * level(0.0) + level(-s)) / s**2
        value = self.sphere.d2_form(self.u, t)
        self.assertAlmostEqual(second, value, delta=1e-4 * max(1.0, abs(value)))

    def test_nonpositive_mass_rejected(self):
        with self.assertRaises(ValueError):
            ProblemParams(a=1.0, b=1.0, c=-1.0, p=12.0, rho=1.0, grid=self.g)


if __name__ == "__main__":
    unittest.main()
