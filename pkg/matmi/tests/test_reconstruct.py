# matmi reconstruction driver tests
# To run:
# python -m unittest discover -s matmi/tests

import unittest

import numpy as np

from matmi import derivative, experiments
from matmi.exceptions import ReconstructionError
from matmi.fields import ScalarField, lumped_inner, lumped_norm
from matmi.forward import ForwardProblem
from matmi.mesh import build_unit_square_mesh
from matmi.reconstruct import (H1, L2, LANDWEBER, QUASI_NEWTON,
                               AdmissibleSet, DomainMetric, IterationLog,
                               ReconstructionConfig,
                               estimate_step_size, landweber_run,
                               projected_ok, quasi_newton_run, reconstruct)


class TestAdmissibleSet(unittest.TestCase):

    def setUp(self):
        self.mesh = build_unit_square_mesh(8)
        self.sigma0 = ScalarField.constant(self.mesh, 0.2)
        self.S = AdmissibleSet(self.sigma0, c3=0.05)

    def test_validation(self):
        with self.assertRaises(ValueError):
            AdmissibleSet(self.sigma0, c1=0.5, c2=0.4)
        with self.assertRaises(ValueError):
            AdmissibleSet(self.sigma0, lam=0.3, eta=0.6)
        with self.assertRaises(ValueError):
            AdmissibleSet(self.sigma0, eta=1.0)
        with self.assertRaises(ValueError):
            AdmissibleSet(self.sigma0, K=0.0)

    def test_projection(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(-1, 2, self.mesh.n_vertices)
        sigma = ScalarField(self.mesh, values)
        projected = self.S.project(sigma)
        report = self.S.membership(projected)
        self.assertTrue(projected_ok(report))
        np.testing.assert_allclose(
            projected.values[self.mesh.boundary_nodes], 0.2)
        self.assertLessEqual(lumped_norm(projected - self.sigma0),
                             0.05 * (1 + 1e-10))

        again = self.S.project(projected)
        np.testing.assert_allclose(again.values, projected.values,
                                   atol=1e-14)

    def test_nonexpansive(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = ScalarField(self.mesh, rng.uniform(0, 1, self.mesh.n_vertices))
            b = ScalarField(self.mesh, rng.uniform(0, 1, self.mesh.n_vertices))
            self.assertLessEqual(
                lumped_norm(self.S.project(a) - self.S.project(b)),
                lumped_norm(a - b) + 1e-12)

    def test_membership_flags(self):
        report = self.S.membership(self.sigma0)
        self.assertTrue(all(report[:5]))

        values = self.sigma0.values.copy()
        values[self.mesh.boundary_nodes[0]] = 0.3
        report = self.S.membership(ScalarField(self.mesh, values))
        self.assertFalse(report.boundary)
        self.assertFalse(projected_ok(report))


class TestConfigAndLog(unittest.TestCase):

    def test_config(self):
        cfg = ReconstructionConfig()
        self.assertEqual(cfg.algorithm, QUASI_NEWTON)
        self.assertEqual(cfg.max_iter, 50)
        with self.assertRaises(ValueError):
            ReconstructionConfig(step=1.0)
        with self.assertRaises(ValueError):
            ReconstructionConfig(algorithm="newton")
        with self.assertRaises(ValueError):
            ReconstructionConfig(mu=-1.0)

        cfg = ReconstructionConfig.from_dict(
            {"algorithm": "landweber", "max_iter": "7", "mu": "none",
             "supg": "false", "unrelated": "x"})
        self.assertEqual(cfg.algorithm, LANDWEBER)
        self.assertEqual(cfg.max_iter, 7)
        self.assertIsNone(cfg.mu)
        self.assertFalse(cfg.supg)
        self.assertEqual(cfg.updated(mu=0.5).mu, 0.5)
        self.assertEqual(cfg.updated(mu=0.5).max_iter, 7)

    def test_landweber_settings(self):
        cfg = ReconstructionConfig()
        self.assertEqual(cfg.landweber_metric, L2)
        self.assertFalse(cfg.accelerate)
        self.assertEqual(cfg.step_factor, 1.0)
        for bad in ({"landweber_metric": "h2"}, {"sobolev_weight": 0.0},
                    {"step_factor": -1.0}):
            with self.assertRaises(ValueError):
                ReconstructionConfig(**bad)

        cfg = ReconstructionConfig.from_dict(
            {"landweber_metric": "h1", "accelerate": "yes",
             "step_factor": "0.8", "sobolev_weight": "0.1"})
        self.assertEqual(cfg.landweber_metric, H1)
        self.assertTrue(cfg.accelerate)
        self.assertEqual(cfg.step_factor, 0.8)
        self.assertEqual(cfg.sobolev_weight, 0.1)


class TestDomainMetric(unittest.TestCase):

    def setUp(self):
        self.mesh = build_unit_square_mesh(8)
        rng = np.random.default_rng(3)
        self.g = ScalarField(self.mesh, rng.uniform(-1, 1,
                                                    self.mesh.n_vertices))
        self.h = ScalarField(self.mesh, np.where(
            self.mesh.interior_mask,
            rng.uniform(-1, 1, self.mesh.n_vertices), 0.0))

    def test_l2(self):
        metric = DomainMetric(self.mesh)
        z = metric.riesz(self.g)
        np.testing.assert_array_equal(
            z.values, np.where(self.mesh.interior_mask, self.g.values, 0.0))
        self.assertAlmostEqual(metric.inner(self.g, self.h),
                               lumped_inner(self.g, self.h), places=12)

    def test_h1(self):
        metric = DomainMetric(self.mesh, H1, 0.05)
        z = metric.riesz(self.g)
        np.testing.assert_array_equal(z.values[self.mesh.boundary_nodes], 0.0)
        self.assertAlmostEqual(metric.inner(z, self.h),
                               lumped_inner(self.g, self.h), places=10)
        self.assertGreater(metric.norm(self.h), lumped_norm(self.h))

    def test_validation(self):
        with self.assertRaises(ValueError):
            DomainMetric(self.mesh, "h2")
        with self.assertRaises(ValueError):
            DomainMetric(self.mesh, H1, 0.0)

    def test_log(self):
        log = IterationLog(LANDWEBER, mu=0.1)
        log.append(1, 0.5, 1.0, np.nan, 0.01)
        log.append(2, 0.25, 0.5, 0.5, 0.02)
        with self.assertRaises(ValueError):
            log.append(2, 0.1, 0.1, 0.1, 0.03)
        log.stop_reason = "max_iter"

        ds = log.to_dataset()
        self.assertEqual(list(ds["iteration"].values), [1, 2])
        again = IterationLog.from_dataset(ds)
        self.assertEqual(again.algorithm, LANDWEBER)
        self.assertEqual(again.stop_reason, "max_iter")
        np.testing.assert_allclose(again.errors, [0.5, 0.25])
        self.assertEqual(again.attrs["mu"], 0.1)


class TestDrivers(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.phantom, cls.g = experiments.synthesize_data("smooth-bump", 8)
        cls.S = cls.phantom.admissible_set()
        cls.fp = ForwardProblem(cls.phantom.mesh, cls.phantom.D)

    def test_step_size(self):
        st = derivative.linearize(self.fp, self.phantom.background())
        mu, norm = estimate_step_size(st, n_iter=10)
        self.assertGreater(norm, 0)
        self.assertAlmostEqual(mu * norm, 1.0)

    def test_step_size_in_sobolev_metric(self):
        st = derivative.linearize(self.fp, self.phantom.background())
        _, norm = estimate_step_size(st, n_iter=10)
        mu, norm_h1 = estimate_step_size(
            st, n_iter=10, metric=DomainMetric(self.phantom.mesh, H1))
        self.assertAlmostEqual(mu * norm_h1, 1.0)
        self.assertGreater(norm_h1, 0)
        self.assertLess(norm_h1, norm)

    def test_zero_step_returns_projection(self):
        cfg = ReconstructionConfig(algorithm=LANDWEBER, mu=0.0, max_iter=5)
        initial = 1.5 * self.phantom.sigma
        sigma, log = landweber_run(self.fp, self.g, self.S, cfg,
                                   initial=initial)
        np.testing.assert_array_equal(sigma.values,
                                      self.S.project(initial).values)
        self.assertEqual(log.stop_reason, "stalled")
        self.assertEqual(len(log), 1)
        self.assertEqual(log.attrs["mu"], 0.0)

    def test_accelerated_sobolev_landweber(self):
        cfg = ReconstructionConfig(algorithm=LANDWEBER, max_iter=10,
                                   landweber_metric=H1, accelerate=True,
                                   step_factor=0.8)
        sigma, log = landweber_run(self.fp, self.g, self.S, cfg,
                                   sigma_true=self.phantom.sigma)
        self.assertEqual(len(log), 10)
        self.assertLess(log.residuals[-1], log.residuals[0])
        self.assertLess(log.errors[-1], log.errors[0])
        self.assertEqual(log.attrs["metric"], H1)
        self.assertEqual(log.attrs["accelerate"], 1)
        self.assertTrue(projected_ok(self.S.membership(sigma)))

    def test_fixed_point(self):
        for algorithm in (LANDWEBER, QUASI_NEWTON):
            cfg = ReconstructionConfig(algorithm=algorithm, max_iter=5,
                                       solver_rel_tol=1e-10)
            sigma, log = reconstruct(self.fp, self.g, self.S, cfg,
                                     sigma_true=self.phantom.sigma,
                                     initial=self.phantom.sigma)
            self.assertEqual(len(log), 1)
            self.assertEqual(log.stop_reason, "residual")
            np.testing.assert_allclose(sigma.values,
                                       self.phantom.sigma.values)

    def test_landweber_reduces_residual(self):
        cfg = ReconstructionConfig(algorithm=LANDWEBER, max_iter=10)
        sigma, log = landweber_run(self.fp, self.g, self.S, cfg,
                                   sigma_true=self.phantom.sigma)
        self.assertEqual(len(log), 10)
        self.assertEqual(log.stop_reason, "max_iter")
        self.assertLess(log.residuals[-1], log.residuals[0])
        self.assertGreater(log.attrs["mu"], 0)
        self.assertTrue(projected_ok(self.S.membership(sigma)))

    def test_quasi_newton_converges(self):
        cfg = ReconstructionConfig(max_iter=10)
        sigma, log = quasi_newton_run(self.fp, self.g, self.S, cfg,
                                      sigma_true=self.phantom.sigma)
        self.assertLess(log.errors[-1], 0.5 * log.errors[0])
        self.assertLess(log.residuals[-1], log.residuals[0])
        self.assertTrue(np.isnan(log.ratios[0]))
        self.assertIn("epsilon_used", log.attrs)
        boundary = self.phantom.mesh.boundary_nodes
        np.testing.assert_allclose(sigma.values[boundary],
                                   self.phantom.sigma0)

    def test_discrepancy_stop(self):
        cfg = ReconstructionConfig(max_iter=10, noise_level=1.0)
        _, log = reconstruct(self.fp, self.g, self.S, cfg)
        self.assertEqual(len(log), 1)
        self.assertEqual(log.stop_reason, "discrepancy")
        self.assertTrue(np.isnan(log.errors[0]))

    def test_solver_failure(self):
        cfg = ReconstructionConfig(max_iter=3, solver_rel_tol=0.0)
        with self.assertRaises(ReconstructionError) as ctx:
            reconstruct(self.fp, self.g, self.S, cfg)
        self.assertEqual(ctx.exception.iteration, 1)


if __name__ == '__main__':
    unittest.main()
