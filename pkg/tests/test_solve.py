from __future__ import annotations

import unittest

import numpy as np
from scipy import linalg

from kirchhoff_mp import (
    CertificateViolation,
    ConvergenceError,
    Field,
    Grid,
    PathState,
    ProblemParams,
    SolverConfig,
    SphereOps,
    certify_geometry,
    deform_path,
    descend_to_minimum,
    dirichlet_eigs,
    energy,
    h1_norm_sq,
    initial_path,
    morse_index,
    mountain_pass_solve,
    mountain_pass_violations,
    quadratic_constant,
    refine_newton,
)
from kirchhoff_mp.geometry import estimate_gn_constant, mass_threshold
from kirchhoff_mp.solve import NEWTON_QUADRATIC_BOUND


def reference_problem() -> ProblemParams:
    """a = b = rho = 1, p = 12 on (0, 10) at 0.9 c*."""
    g = Grid.interval(10.0, 511)
    unit = ProblemParams(a=1.0, b=1.0, c=1.0, p=12.0, rho=1.0, grid=g)
    eig = dirichlet_eigs(g, 1)[0]
    gn = estimate_gn_constant(unit, phi1=eig.vector)
    return unit.with_(c=0.9 * mass_threshold(unit, eig.value, gn.Cp))


class MountainPassSolveTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.params = reference_problem()
        cls.cert = certify_geometry(cls.params)
        cls.cfg = SolverConfig()
        cls.record, cls.path = mountain_pass_solve(cls.params, cls.cert, cls.cfg)

    def test_record_passes_its_invariants(self):
        record = self.record
        self.assertIs(record.check(), record)
        self.assertEqual(record.violations(), [])
        self.assertLessEqual(record.residual, 1e-8 * max(1.0, record.gradient_norm))
        self.assertAlmostEqual(record.mass, self.params.c, delta=1e-10 * self.params.c)
        self.assertLessEqual(record.defects["multiplier_identity"], 1e-8)
        self.assertLessEqual(record.defects["energy_identity"], 1e-8)
        self.assertLessEqual(record.defects["lambda_consistency"], 1e-8)

    def test_solution_is_positive(self):
        self.assertTrue(self.record.positivity_ok)
        self.assertTrue(bool(np.all(self.record.u.values > 0.0)))

    def test_level_sits_above_the_separating_level(self):
        self.assertGreaterEqual(self.record.level, self.cert.c_beta)

    def test_path_maximum_never_rises_between_resets(self):
        history = self.path.max_history
        resets = set(self.path.resets)
        for i in range(1, len(history)):
            if i in resets:
                continue
            slack = 1e-9 * max(1.0, abs(history[i - 1]))
            self.assertLessEqual(history[i], history[i - 1] + slack, f"sweep {i}")

    def test_argmax_sample_converged(self):
        self.assertGreaterEqual(len(self.path.samples), self.cfg.path_samples)
        sample = self.path.samples[self.path.argmax]
        sphere = SphereOps(self.params)
        self.assertTrue(sphere.on_sphere(sample))
        # absolute constrained residual, not scaled by the gradient norm
        self.assertLessEqual(sphere.residual(sample), self.cfg.residual_target)

    def test_no_mountain_pass_violation(self):
        self.assertEqual(mountain_pass_violations(self.record, self.cert), [])
        self.assertEqual(self.cert.level_floor(self.params), self.cert.c_beta)

    def test_newton_tail_is_quadratic(self):
        start = self.record.u * 0.999 + self.cert.w1 * 0.001
        again = refine_newton(self.params, SphereOps(self.params).normalize(start), None, self.cfg)
        history = again.newton_history
        self.assertLessEqual(history[-1], self.cfg.newton_tol)
        self.assertLessEqual(len(history), 10)
        tail = history[-4:]
        for before, after in zip(tail[:-1], tail[1:]):
            if after > self.cfg.newton_tol:
                self.assertLessEqual(after, NEWTON_QUADRATIC_BOUND * before**2)
        if again.newton_constant is not None:
            self.assertLessEqual(again.newton_constant, NEWTON_QUADRATIC_BOUND)

    def test_second_variation_on_random_tangents_interlaces_the_morse_spectrum(self):
        sphere = SphereOps(self.params)
        u = self.record.u
        g = self.params.grid
        x = g.axes()[0]
        rng = np.random.default_rng(11)
        basis = []
        for _ in range(8):
            coeffs = rng.normal(size=12) / np.arange(1, 13) ** 2
            values = sum(a * np.sin((k + 1) * np.pi * x / g.extents[0]) for k, a in enumerate(coeffs))
            basis.append(sphere.project_tangent(u, Field(g, values)))
        # the path crosses the saddle along its unstable direction
        i = self.path.argmax
        across = self.path.samples[i + 1] - self.path.samples[i - 1]
        basis.append(sphere.project_tangent(u, across))

        def bilinear(quadratic, v, w):
            return 0.25 * (quadratic(v + w) - quadratic(v - w))

        def form(v):
            return sphere.d2_form(u, v)

        def h1(v):
            return h1_norm_sq(g, v)

        k = len(basis)
        a = np.array([[bilinear(form, basis[i], basis[j]) for j in range(k)] for i in range(k)])
        m = np.array([[bilinear(h1, basis[i], basis[j]) for j in range(k)] for i in range(k)])
        ritz = linalg.eigh(0.5 * (a + a.T), 0.5 * (m + m.T), eigvals_only=True)

        report = morse_index(self.params, self.record)
        scale = max(1.0, abs(report.eigenvalues[0]))
        self.assertGreaterEqual(ritz[0], report.eigenvalues[0] - 1e-6 * scale)
        self.assertLessEqual(int(np.sum(ritz < 0.0)), report.index)
        self.assertLess(ritz[0], 0.0)

    def test_morse_index_bound(self):
        report = morse_index(self.params, self.record)
        self.assertLessEqual(report.index, 2)
        self.assertFalse(report.saturated)
        self.assertEqual(report.eigenvalues, sorted(report.eigenvalues))

    def test_newton_warm_start_is_a_fixed_point(self):
        again = refine_newton(self.params, self.record.u, self.record.lambda_, self.cfg)
        self.assertLessEqual(len(again.newton_history), 2)
        self.assertAlmostEqual(again.level, self.record.level, delta=1e-9 * abs(self.record.level))
        self.assertAlmostEqual(again.lambda_, self.record.lambda_, delta=1e-8 * abs(self.record.lambda_))

    def test_descent_from_w1_reaches_the_local_minimizer(self):
        start = energy(self.params, self.cert.w1).Jrho
        u = descend_to_minimum(self.params, self.cert.w1, self.cfg)
        self.assertTrue(SphereOps(self.params).on_sphere(u))
        self.assertLessEqual(energy(self.params, u).Jrho, start + 1e-12 * abs(start))
        minimum = refine_newton(self.params, u, None, self.cfg).check()
        self.assertLess(minimum.level, self.record.level)
        self.assertLess(minimum.level, self.cert.c_beta)
        self.assertEqual(mountain_pass_violations(minimum, self.cert), ["level_below_c_beta"])
        self.assertEqual(morse_index(self.params, minimum).index, 0)


class QuadraticConstantTests(unittest.TestCase):
    def test_quadratic_tail(self):
        self.assertAlmostEqual(quadratic_constant([1e-2, 1e-4, 1e-8, 1e-16], 1e-10), 1.0)

    def test_linear_tail_exceeds_the_bound(self):
        history = [1e-6, 5e-7, 2.5e-7, 1.25e-7]
        self.assertGreater(quadratic_constant(history, 1e-10), NEWTON_QUADRATIC_BOUND)

    def test_steps_at_the_floor_are_skipped(self):
        self.assertIsNone(quadratic_constant([1e-3], 1e-10))
        self.assertIsNone(quadratic_constant([1e-3, 1e-11], 1e-10))
        # only the last three steps count
        self.assertAlmostEqual(quadratic_constant([1e-3, 0.9, 1e-2, 1e-4, 1e-8], 1e-10), 1.0)


class SolverErrorTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.params = reference_problem()
        cls.cert = certify_geometry(cls.params)

    def test_newton_iteration_cap(self):
        cfg = SolverConfig(newton_max_iters=1)
        with self.assertRaises(ConvergenceError):
            refine_newton(self.params, self.cert.w1, None, cfg)

    def test_path_maximum_at_an_endpoint(self):
        path = initial_path(self.cert, 17)
        energies = list(path.energies)
        energies[-1] = max(energies) + 1.0
        broken = PathState.from_samples(path.samples, energies)
        with self.assertRaises(CertificateViolation) as ctx:
            deform_path(self.params, broken, SolverConfig())
        self.assertEqual(ctx.exception.names, ["path_endpoints"])


if __name__ == "__main__":
    unittest.main()
