from __future__ import annotations

import math
import unittest

import numpy as np

from kirchhoff_mp import Field, Grid, InvariantViolation, ProblemParams, blowup_diagnose, solve_soliton
from kirchhoff_mp.asymptotics import count_local_maxima
from kirchhoff_mp.grid import grad_values_sq
from kirchhoff_mp.solve import build_record


def concentrated(grid: Grid, p: float, soliton, width: float):
    """A u(x) = A U(|x - centre| / width) with lambda and A consistent with the rescaling.

    With scale = sqrt(e / lambda) = width and A = lambda^(1/(p-2)) the two
    conditions fix A^(p-4) = e(U(|x - centre| / width)) / width^2.
    """
    dist = np.sqrt(sum((x - x0) ** 2 for x, x0 in zip(grid.mesh(), grid.center)))
    shape = soliton(dist / width)
    e1 = grad_values_sq(shape, grid.h)
    amplitude = (e1 / width**2) ** (1.0 / (p - 4.0))
    u = amplitude * shape
    lam = amplitude ** (p - 2.0)
    mass = grid.cell_volume * float(np.sum(u**2))
    params = ProblemParams(a=1.0, b=1.0, c=mass, p=p, rho=1.0, grid=grid)
    return params, build_record(params, u, lam), amplitude


class BlowupOneDimensionTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.grid = Grid.interval(10.0, 1023)
        cls.soliton = solve_soliton(1.0, 12.0, 1)
        cls.params, cls.record, cls.amplitude = concentrated(cls.grid, 12.0, cls.soliton, 0.5)
        cls.profile = blowup_diagnose(cls.params, cls.record, cls.soliton, R=3.0)

    def test_rescaling_constants(self):
        profile = self.profile
        self.assertEqual(profile.P, (5.0,))
        self.assertAlmostEqual(profile.amplitude, self.amplitude, places=12)
        self.assertAlmostEqual(profile.scale, 0.5, places=12)
        self.assertAlmostEqual(profile.epsilon, self.record.lambda_**-0.5, places=14)
        self.assertAlmostEqual(profile.boundary_ratio, 0.1, places=12)
        self.assertFalse(profile.boundary_anomaly)

    def test_rescaled_profile_matches_soliton(self):
        self.assertLess(self.profile.sup_distance, 2e-3)
        self.assertGreater(self.profile.finite_e_distance, 0.0)
        self.assertEqual(self.profile.local_maxima, 1)
        self.assertAlmostEqual(self.profile.mass_ratio, 1.0, delta=1e-3)

    def test_max_point_inequality_holds(self):
        self.assertGreater(self.profile.max_point_margin, 0.0)

    def test_exponential_decay(self):
        self.assertAlmostEqual(self.profile.decay_rate, 1.0, delta=1e-3)
        self.assertGreater(self.profile.decay_constant, 0.0)
        self.assertAlmostEqual(self.profile.decay_band, 1.0 / (2.0 * math.sqrt(2.0)))

    def test_energy_balance_ratios(self):
        c, p = self.params.c, self.params.p
        profile = self.profile
        self.assertAlmostEqual(profile.e2_over_lambda, self.record.e**2 / self.record.lambda_)
        self.assertAlmostEqual(profile.predicted_ratio, 4.0 * c / (p - 4.0))
        gamma = (p - 2.0) / (2.0 * p)
        self.assertAlmostEqual(profile.virial_ratio, gamma * c / (1.0 - gamma))
        expected_gap = abs(profile.e2_over_lambda - profile.predicted_ratio) / profile.e2_over_lambda
        self.assertAlmostEqual(profile.ratio_gap, expected_gap)
        self.assertEqual(set(profile.bounds), {"lambda", "e", "lp", "level"})

    def test_rows_and_dict(self):
        names, rows = self.profile.rows()
        self.assertEqual(names, ["y", "u_rescaled", "u_soliton"])
        self.assertEqual(len(rows), 241)
        self.assertAlmostEqual(rows[120][0], 0.0)
        payload = self.profile.to_dict()
        self.assertEqual(payload["P_index"], [511])
        self.assertIn("ratio_gap", payload)

    def test_argument_checks(self):
        with self.assertRaises(ValueError):
            blowup_diagnose(self.params, self.record, self.soliton, R=0.0)
        negative = build_record(self.params, self.record.u.values, -1.0)
        with self.assertRaises(ValueError):
            blowup_diagnose(self.params, negative, self.soliton)


class MaxPointInequalityTests(unittest.TestCase):
    def test_violation_is_named(self):
        g = Grid.interval(10.0, 255)
        u = Field.from_function(g, lambda x: 0.5 * np.sin(math.pi * x / 10.0))
        mass = g.cell_volume * float(np.sum(u.values**2))
        params = ProblemParams(a=1.0, b=1.0, c=mass, p=12.0, rho=1.0, grid=g)
        record = build_record(params, u.values, 100.0)
        with self.assertRaises(InvariantViolation) as ctx:
            blowup_diagnose(params, record, solve_soliton(1.0, 12.0, 1))
        self.assertEqual(ctx.exception.names, ["max_point_inequality"])


class BlowupTwoDimensionTests(unittest.TestCase):
    def test_disc_samples(self):
        g = Grid.rectangle(10.0, 10.0, 127, 127)
        soliton = solve_soliton(1.0, 8.0, 2)
        params, record, _ = concentrated(g, 8.0, soliton, 1.0)
        profile = blowup_diagnose(params, record, soliton, R=2.0)
        self.assertEqual(profile.P, (5.0, 5.0))
        self.assertTrue(bool(np.all(np.linalg.norm(profile.y, axis=1) <= 2.0)))
        names, _ = profile.rows()
        self.assertEqual(names, ["y", "y2", "u_rescaled", "u_soliton"])
        self.assertLess(profile.sup_distance, 5e-2)
        self.assertEqual(profile.local_maxima, 1)


class LocalMaximaTests(unittest.TestCase):
    def test_counts_separated_peaks(self):
        x = np.linspace(0.0, 10.0, 401)
        one = np.exp(-((x - 5.0) ** 2))
        two = np.exp(-((x - 3.0) ** 2)) + 0.8 * np.exp(-((x - 7.0) ** 2))
        self.assertEqual(count_local_maxima(one), 1)
        self.assertEqual(count_local_maxima(two), 2)

    def test_ignores_ripples_below_the_floor(self):
        x = np.linspace(0.0, 10.0, 401)
        values = np.exp(-((x - 5.0) ** 2)) + 1e-6 * np.exp(-((x - 9.5) ** 2) * 50.0)
        self.assertEqual(count_local_maxima(values), 1)

    def test_plateau_counts_once(self):
        values = np.zeros((20, 20))
        values[8:11, 8:11] = 1.0
        self.assertEqual(count_local_maxima(values), 1)


if __name__ == "__main__":
    unittest.main()
