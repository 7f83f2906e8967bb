# matmi derivative and adjoint tests
# To run:
# python -m unittest discover -s matmi/tests

import unittest

import numpy as np

from matmi import derivative, verify
from matmi.fields import ScalarField, l2_inner, lumped_norm
from matmi.forward import ForwardProblem
from matmi.mesh import build_unit_square_mesh


class TestDerivative(unittest.TestCase):

    def setUp(self):
        self.mesh = build_unit_square_mesh(6)
        self.rng = np.random.default_rng(0)
        self.fp = ForwardProblem(self.mesh, rel_tol=1e-12)
        self.sigma = verify.sine_field(self.mesh, self.rng, 0.2, base=0.5)
        self.st = derivative.linearize(self.fp, self.sigma)

    def test_linearity(self):
        h = verify.sine_field(self.mesh, self.rng, 0.1)
        dF = derivative.df_apply(self.st, h)
        dF3 = derivative.df_apply(self.st, 3.0 * h)
        self.assertLessEqual(lumped_norm(dF3 - 3.0 * dF),
                             1e-9 * lumped_norm(dF3))

    def test_finite_difference(self):
        h = verify.sine_field(self.mesh, self.rng, 0.1)
        t = 1e-6
        F0 = self.fp.internal_data(self.sigma)
        Ft = self.fp.internal_data(self.sigma + t * h)
        dF = derivative.df_apply(self.st, h)
        fd = (Ft - F0) * (1.0 / t)
        self.assertLessEqual(lumped_norm(fd - dF), 1e-4 * lumped_norm(dF))

    def test_matrix_columns(self):
        nodes = np.flatnonzero(self.mesh.interior_mask)[:3]
        A = derivative.derivative_matrix(self.st, nodes)
        self.assertEqual(A.shape, (self.mesh.n_vertices, 3))
        e = np.zeros(self.mesh.n_vertices)
        e[nodes[1]] = 1.0
        column = derivative.df_apply(self.st, ScalarField(self.mesh, e))
        np.testing.assert_allclose(A[:, 1], column.values, atol=1e-12)

    def test_adjoint_identity(self):
        for _ in range(3):
            h = verify.sine_field(self.mesh, self.rng, 1.0)
            g = verify.sine_field(self.mesh, self.rng, 1.0)
            self.assertLessEqual(derivative.adjoint_mismatch(self.st, h, g),
                                 1e-6)
            consistent = derivative.adjoint_mismatch(self.st, h, g,
                                                     inner=l2_inner)
            self.assertLessEqual(consistent, 5 * self.mesh.h)

    def test_adjoint_of_constant(self):
        g = ScalarField.constant(self.mesh, 2.0)
        np.testing.assert_allclose(derivative.df_adjoint(self.st, g).values,
                                   0.0, atol=1e-10)

    def test_taylor_order(self):
        result = verify.check_taylor(n=8)
        self.assertTrue(result.passed, msg=f"slope {result.value}")

    def test_convergence_order(self):
        steps = np.array([1e-1, 1e-2, 1e-3])
        self.assertAlmostEqual(derivative.convergence_order(steps,
                                                            3 * steps**2),
                               2.0, places=10)


if __name__ == '__main__':
    unittest.main()
