# matmi long running reconstruction checks
# To run:
# export MATMI_FULL_TESTS=1
# python -m unittest matmi.tests.test_acceptance

import os
import unittest

import numpy as np

from matmi import experiments, verify
from matmi.forward import ForwardProblem
from matmi.reconstruct import (H1, LANDWEBER, ReconstructionConfig,
                               reconstruct)

FULL = os.environ.get("MATMI_FULL_TESTS", "") not in ("", "0")


@unittest.skipUnless(FULL, "set MATMI_FULL_TESTS=1 to run")
class TestAcceptance(unittest.TestCase):

    def run_phantom(self, n, cfg, diagonal="right", delta=0.0,
                    phantom="inclusion"):
        ph, g = experiments.synthesize_data(phantom, n, diagonal=diagonal)
        g = experiments.add_noise(g, delta, seed=0)
        sigma, log = reconstruct(ForwardProblem(ph.mesh, ph.D), g,
                                 ph.admissible_set(),
                                 cfg.updated(noise_level=delta),
                                 sigma_true=ph.sigma)
        return ph, sigma, log

    def test_quasi_newton_inclusion_phantom(self):
        for diagonal in ("right", "left"):
            _, _, log = self.run_phantom(64, ReconstructionConfig(),
                                         diagonal)
            self.assertLess(log.errors[-1], 5e-3, msg=diagonal)
            self.assertLess(np.nanmax(log.ratios[1:]), 1.0, msg=diagonal)

    def test_quasi_newton_fine_mesh(self):
        _, _, log = self.run_phantom(128, ReconstructionConfig())
        self.assertLess(log.errors[-1], 5e-3)
        self.assertLess(np.nanmax(log.ratios[1:]), 1.0)

    def test_diffusion_scale_insensitive(self):
        for c_eps in (0.25, 1.0):
            _, _, log = self.run_phantom(
                64, ReconstructionConfig(c_eps=c_eps))
            self.assertLess(log.errors[-1], 5e-3, msg=f"c_eps {c_eps}")

    def test_noisy_run_completes(self):
        _, sigma, log = self.run_phantom(64, ReconstructionConfig(),
                                         delta=0.24)
        self.assertTrue(np.all(np.isfinite(sigma.values)))
        self.assertIn(log.stop_reason, ("discrepancy", "max_iter",
                                        "stalled"))

    def test_error_grows_with_noise(self):
        ph, g = experiments.synthesize_data("inclusion", 64, oracle_n=128)
        table = experiments.noise_sweep(ph, g, ReconstructionConfig())
        errors = table["error"].values
        self.assertEqual(list(table["delta"].values),
                         list(experiments.NOISE_LEVELS))
        self.assertTrue(np.all(np.diff(errors) >= 0), msg=str(errors))
        self.assertTrue(np.all(np.isfinite(errors)))
        self.assertLess(errors[-1], 5e-2)

    def test_landweber_error_decreases_monotonically(self):
        cfg = ReconstructionConfig(algorithm=LANDWEBER, max_iter=20)
        _, _, log = self.run_phantom(32, cfg, phantom="smooth-bump")
        self.assertEqual(len(log), 20)
        self.assertTrue(np.all(np.diff(log.errors) < 0))

    def test_drivers_agree(self):
        ph, g = experiments.synthesize_data("inclusion", 64)
        fp = ForwardProblem(ph.mesh, ph.D)
        S = ph.admissible_set()
        sigma_qn, _ = reconstruct(fp, g, S, ReconstructionConfig())
        cfg = ReconstructionConfig(algorithm=LANDWEBER, landweber_metric=H1,
                                   accelerate=True, step_factor=0.8,
                                   max_iter=500)
        sigma_lw, log = reconstruct(fp, g, S, cfg, sigma_true=ph.sigma)
        self.assertLess(experiments.relative_l2_error(sigma_lw, sigma_qn),
                        5e-3, msg=f"Landweber error {log.errors[-1]:.3e}")

    def test_wrong_tensor_fine_mesh(self):
        ph, g = experiments.synthesize_data("inclusion", 128)
        errors = experiments.tensor_mismatch(ph, g, ReconstructionConfig())
        self.assertGreater(errors["data_difference"], 0.05)
        self.assertLess(errors["matched"], 5e-3)
        self.assertGreaterEqual(errors["identity"], 5 * errors["matched"])

    def test_full_verification_suite(self):
        results = verify.run_suite(verify.FULL)
        failed = [r.name for r in results if not r.passed]
        self.assertEqual(failed, [])


if __name__ == '__main__':
    unittest.main()
