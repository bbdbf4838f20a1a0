from __future__ import annotations

import math
import unittest

import numpy as np

from kirchhoff_mp import Field, Grid, ProblemParams, energy, gradient, hessian_apply, inner_l2
from kirchhoff_mp.energy import check_exponent


def smooth_field(g: Grid, coeffs: list[float]) -> Field:
    if g.dim == 1:
        return Field.from_function(
            g, lambda x: sum(c * np.sin((k + 1) * math.pi * x / g.extents[0]) for k, c in enumerate(coeffs))
        )
    lx, ly = g.extents
    return Field.from_function(
        g,
        lambda x, y: sum(
            c * np.sin((k + 1) * math.pi * x / lx) * np.sin((k % 2 + 1) * math.pi * y / ly)
            for k, c in enumerate(coeffs)
        ),
    )


def unit(g: Grid, u: Field) -> Field:
    return u * (1.0 / math.sqrt(inner_l2(g, u, u)))


class ProblemParamsTests(unittest.TestCase):
    def test_validation(self):
        g = Grid.interval(1.0, 63)
        with self.assertRaises(ValueError):
            ProblemParams(a=0.0, b=1.0, c=1.0, p=12.0, rho=1.0, grid=g)
        with self.assertRaises(ValueError):
            ProblemParams(a=1.0, b=-1.0, c=1.0, p=12.0, rho=1.0, grid=g)
        with self.assertRaises(ValueError):
            ProblemParams(a=1.0, b=1.0, c=0.0, p=12.0, rho=1.0, grid=g)
        with self.assertRaises(ValueError):
            ProblemParams(a=1.0, b=1.0, c=1.0, p=12.0, rho=1.5, grid=g)
        with self.assertRaises(ValueError):
            ProblemParams(a=1.0, b=1.0, c=1.0, p=10.0, rho=1.0, grid=g)

    def test_exponent_window(self):
        check_exponent(10.5, 1)
        check_exponent(6.5, 2)
        check_exponent(5.0, 3)
        with self.assertRaises(ValueError):
            check_exponent(6.0, 2)
        with self.assertRaises(ValueError):
            check_exponent(6.0, 3)


class EnergyTests(unittest.TestCase):
    def setUp(self):
        self.g = Grid.interval(1.0, 1023)
        self.params = ProblemParams(a=1.0, b=1.0, c=1.0, p=12.0, rho=1.0, grid=self.g)

    def test_normalized_sine_energy(self):
        u = Field.from_function(self.g, lambda x: math.sqrt(2.0) * np.sin(math.pi * x))
        report = energy(self.params, u)
        # int_0^1 (sqrt(2) sin)^12 = 64 * 11!! / 12!!
        lp = 64.0 * 10395.0 / 46080.0
        self.assertAlmostEqual(report.lp, lp, places=10)
        self.assertAlmostEqual(report.e, math.pi**2, delta=1e-4)
        expected = 0.5 * math.pi**2 + 0.25 * math.pi**4 - lp / 12.0
        self.assertAlmostEqual(report.J, expected, delta=1e-5 * abs(expected) + 1e-3)
        self.assertEqual(report.J, report.Jrho)

    def test_terms_drop_out(self):
        u = unit(self.g, smooth_field(self.g, [1.0, 0.4, -0.2]))
        full = energy(self.params, u)
        no_b = energy(self.params.with_(b=0.0), u)
        no_rho = energy(self.params.with_(rho=0.0), u)
        self.assertAlmostEqual(full.Jrho - no_b.Jrho, 0.25 * full.e**2, places=9)
        self.assertAlmostEqual(no_rho.Jrho, 0.5 * full.e + 0.25 * full.e**2, places=9)
        half = energy(self.params.with_(rho=0.5), u)
        self.assertAlmostEqual(half.Jrho - full.Jrho, 0.5 * full.lp / 12.0, places=9)


class DerivativeTests(unittest.TestCase):
    def _check(self, params: ProblemParams, u: Field, v: Field):
        g = params.grid
        t = 1e-5
        fd = (energy(params, u + t * v).Jrho - energy(params, u - t * v).Jrho) / (2.0 * t)
        exact = inner_l2(g, gradient(params, u), v)
        self.assertLessEqual(abs(fd - exact), 1e-6 * max(1.0, abs(exact)))

        t = 1e-4
        fd_h = (gradient(params, u + t * v).values - gradient(params, u - t * v).values) / (2.0 * t)
        hv = hessian_apply(params, u, v).values
        err = math.sqrt(g.cell_volume * float(np.sum((fd_h - hv) ** 2)))
        scale = math.sqrt(g.cell_volume * float(np.sum(hv**2)))
        self.assertLessEqual(err, 1e-5 * max(1.0, scale))

    def random_pairs(self, g: Grid, seed: int, count: int = 20):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            u_coeffs = [1.0, *(rng.uniform(-0.5, 0.5, size=3) / np.arange(2, 5))]
            v_coeffs = list(rng.normal(size=5) / np.arange(1, 6))
            yield unit(g, smooth_field(g, u_coeffs)), unit(g, smooth_field(g, v_coeffs))

    def test_gradient_and_hessian_1d(self):
        g = Grid.interval(1.0, 1023)
        params = ProblemParams(a=1.0, b=0.7, c=1.0, p=12.0, rho=0.8, grid=g)
        for i, (u, v) in enumerate(self.random_pairs(g, seed=3)):
            with self.subTest(field=i):
                self._check(params, u, v)

    def test_gradient_and_hessian_2d(self):
        g = Grid.rectangle(1.0, 1.0, 127, 127)
        params = ProblemParams(a=1.0, b=0.5, c=1.0, p=8.0, rho=1.0, grid=g)
        for i, (u, v) in enumerate(self.random_pairs(g, seed=4)):
            with self.subTest(field=i):
                self._check(params, u, v)

    def test_hessian_is_symmetric(self):
        g = Grid.interval(1.0, 255)
        params = ProblemParams(a=1.0, b=1.0, c=1.0, p=12.0, rho=1.0, grid=g)
        u = unit(g, smooth_field(g, [1.0, 0.3]))
        v = smooth_field(g, [0.0, 1.0, 0.2])
        w = smooth_field(g, [0.5, 0.0, -0.3, 0.4])
        left = inner_l2(g, hessian_apply(params, u, v), w)
        right = inner_l2(g, v, hessian_apply(params, u, w))
        self.assertAlmostEqual(left, right, delta=1e-10 * max(1.0, abs(left)))


if __name__ == "__main__":
    unittest.main()
