from __future__ import annotations

import unittest

import kirchhoff_mp
from kirchhoff_mp import asymptotics, experiments


class PublicApiTests(unittest.TestCase):
    def test_exported_names_resolve(self):
        for module in (kirchhoff_mp, asymptotics, experiments):
            for name in module.__all__:
                with self.subTest(module=module.__name__, name=name):
                    self.assertTrue(hasattr(module, name))

    def test_error_exit_codes(self):
        self.assertEqual(kirchhoff_mp.ConfigError.exit_code, 2)
        self.assertEqual(kirchhoff_mp.ConvergenceError.exit_code, 3)
        self.assertEqual(kirchhoff_mp.SingularJacobianError.exit_code, 3)
        self.assertEqual(kirchhoff_mp.GeometryNotCertified.exit_code, 1)
        self.assertTrue(issubclass(kirchhoff_mp.CertificateViolation, kirchhoff_mp.InvariantViolation))


if __name__ == "__main__":
    unittest.main()
