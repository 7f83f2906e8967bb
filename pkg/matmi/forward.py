# -*- coding: utf-8 -*-
"""
Forward map sigma -> F(sigma) = div(sigma D E x B0) in the two dimensional
reduction, B0 = B1 = (0, 0, 1).

The electric field is split as E = E~ + grad(u), with E~ the rotational
gauge field of curl 1 and u the solution of the Neumann problem with flux
sigma D E~.
"""

import logging

from collections import namedtuple

import numpy as np

from matmi import elliptic
from matmi.fields import (Gauge, TensorField, VectorField, check_same_mesh,
                          p1_gradient, weak_divergence)

logger = logging.getLogger(__name__)

ForwardState = namedtuple("ForwardState", ["sigma", "u", "E", "system"])


def conductivity_flux(sigma, D, E):
    """sigma D E at the quadrature points, shape (n_triangles, 3, 2)"""
    return sigma.at_quadrature()[..., None] * D.apply_at_quadrature(
        E.at_quadrature())


class ForwardProblem:
    """Fixed ingredients of the forward map

    Parameters
    ----------
    mesh : :obj:`matmi.mesh.Mesh`
    D : :obj:`matmi.fields.TensorField`
        Diffusion tensor with eigenvalues in (0, 1]
    gauge : :obj:`matmi.fields.Gauge`, optional
        Defaults to the gauge centered at (0.5, 0.5)
    rel_tol : :obj:`float`
        Relative tolerance of the Neumann solves
    bounds : :obj:`matmi.elliptic.CoefficientBounds`, optional
        Bounds checked at every assembly
    """

    def __init__(self, mesh, D=None, gauge=None, rel_tol=1e-10, bounds=None):
        self.mesh = mesh
        self.D = TensorField.identity(mesh) if D is None else D
        check_same_mesh(self, self.D)

        lam_min, lam_max = self.D.eigenvalue_range()
        if lam_min <= 0 or lam_max > 1 + 1e-12:
            raise ValueError(f"Tensor eigenvalues [{lam_min:.4g}, "
                             f"{lam_max:.4g}] are not inside (0, 1]")

        self.gauge = Gauge() if gauge is None else gauge
        self.rel_tol = rel_tol
        self.bounds = bounds
        self.E_gauge = self.gauge.field(mesh)

    def __repr__(self):
        return "ForwardProblem(%r, gauge=%r, rel_tol=%r)" % (
            self.mesh, self.gauge, self.rel_tol)

    def with_tolerance(self, rel_tol):
        """Same problem, different solver tolerance"""
        return ForwardProblem(self.mesh, self.D, self.gauge, rel_tol,
                              self.bounds)

    def solve_state(self, sigma, x0=None):
        """Solve for the potential and the electric field

        Parameters
        ----------
        sigma : :obj:`matmi.fields.ScalarField`
        x0 : :obj:`matmi.fields.ScalarField`, optional
            Initial guess for the potential

        Returns
        -------
        state : :obj:`ForwardState`
            sigma, potential u, field E (``broken``) and the assembled system
        """
        flux = VectorField.from_quadrature(
            self.mesh, conductivity_flux(sigma, self.D, self.E_gauge))
        system = elliptic.assemble(sigma, self.D, flux, bounds=self.bounds)
        u = elliptic.solve(system, rel_tol=self.rel_tol, x0=x0)
        E = self.E_gauge + p1_gradient(u)
        return ForwardState(sigma, u, E, system)

    def compute_E(self, sigma, x0=None):
        """Electric field E = E~ + grad(u) for the conductivity sigma D"""
        return self.solve_state(sigma, x0=x0).E

    def internal_data(self, sigma, E=None):
        """Internal data F(sigma) = div(sigma D E x B0)

        Parameters
        ----------
        sigma : :obj:`matmi.fields.ScalarField`
        E : :obj:`matmi.fields.VectorField`, optional
            Electric field of sigma if already known

        Returns
        -------
        F : :obj:`matmi.fields.ScalarField`
        """
        if E is None:
            E = self.compute_E(sigma)
        w = VectorField.from_quadrature(
            self.mesh, conductivity_flux(sigma, self.D, E)).cross_b0()
        return weak_divergence(w)

    def l2_bound(self, sigma, c1, lam):
        """A priori bound ||E|| <= ||sigma D E~|| / (c1 lam) + ||E~||"""
        flux = VectorField.from_quadrature(
            self.mesh, conductivity_flux(sigma, self.D, self.E_gauge))
        return flux.l2_norm() / (c1 * lam) + self.E_gauge.l2_norm()


def field_diagnostics(E):
    """Finite-sample norms of an electric field

    Returns
    -------
    diagnostics : :obj:`dict`
        ``l2``, ``max`` and ``gradient_max``, the largest element-wise
        derivative of E
    """
    corners = E.corners()
    grads = np.einsum("tad,tae->tde", corners, E.mesh.grads)
    return {"l2": E.l2_norm(),
            "max": E.max_norm(),
            "gradient_max": float(np.max(np.abs(grads)))}
