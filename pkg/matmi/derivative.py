# -*- coding: utf-8 -*-
"""
Frechet derivative of the forward map and its adjoint.

    DF[sigma](h)  = div((sigma D grad(phi_h) + h D E) x B0)
    DF[sigma]*(g) = -D E . grad(Phi_g) - grad(g) . (D E x B0)

phi_h and Phi_g solve Neumann problems with the coefficient sigma D and the
fluxes h D E and sigma D (B0 x grad g). The adjoint is taken with respect to
the lumped L2 inner product, in which it is exact for g vanishing on the
boundary.
"""

import logging

from collections import namedtuple

import numpy as np

from matmi import elliptic
from matmi.fields import (ScalarField, VectorField, check_same_mesh,
                          lumped_inner, lumped_norm, lumped_project,
                          p1_gradient, weak_divergence)
from matmi.forward import conductivity_flux

logger = logging.getLogger(__name__)


class LinearizedState(namedtuple("LinearizedState",
                                 ["fp", "sigma", "E", "system", "u"])):
    """Forward problem linearised at sigma

    Attributes
    ----------
    fp : :obj:`matmi.forward.ForwardProblem`
    sigma : :obj:`matmi.fields.ScalarField`
        Base point
    E : :obj:`matmi.fields.VectorField`
        Electric field at the base point
    system : :obj:`matmi.elliptic.NeumannSystem`
        Neumann system with coefficient sigma D, reused by every solve
    u : :obj:`matmi.fields.ScalarField`
        Potential at the base point
    """

    __slots__ = ()

    @property
    def DE(self):
        """D E at the quadrature points"""
        return self.fp.D.apply_at_quadrature(self.E.at_quadrature())


def linearize(fp, sigma, state=None):
    """Linearise the forward map at sigma

    Parameters
    ----------
    fp : :obj:`matmi.forward.ForwardProblem`
    sigma : :obj:`matmi.fields.ScalarField`
    state : :obj:`matmi.forward.ForwardState`, optional
        Already solved state at sigma

    Returns
    -------
    st : :obj:`LinearizedState`
    """
    if state is None:
        state = fp.solve_state(sigma)
    return LinearizedState(fp, sigma, state.E, state.system, state.u)


def df_apply(st, h):
    """Directional derivative DF[sigma](h)

    Parameters
    ----------
    st : :obj:`LinearizedState`
    h : :obj:`matmi.fields.ScalarField`
        Increment, expected to vanish on the boundary

    Returns
    -------
    dF : :obj:`matmi.fields.ScalarField`
    """
    check_same_mesh(st.sigma, h)
    mesh = h.mesh
    hDE = h.at_quadrature()[..., None] * st.DE

    system = st.system.with_load(VectorField.from_quadrature(mesh, hDE))
    phi_h = elliptic.solve(system, rel_tol=st.fp.rel_tol)

    flux = conductivity_flux(st.sigma, st.fp.D, p1_gradient(phi_h)) + hDE
    return weak_divergence(VectorField.from_quadrature(mesh,
                                                       flux).cross_b0())


def df_adjoint(st, g):
    """Adjoint DF[sigma]*(g)

    Parameters
    ----------
    st : :obj:`LinearizedState`
    g : :obj:`matmi.fields.ScalarField`

    Returns
    -------
    dF_star : :obj:`matmi.fields.ScalarField`
        Element products projected to the nodes with the lumped mass
    """
    check_same_mesh(st.sigma, g)
    mesh = g.mesh
    grad_g = p1_gradient(g)

    E_in = conductivity_flux(st.sigma, st.fp.D, grad_g.b0_cross())
    system = st.system.with_load(VectorField.from_quadrature(mesh, E_in))
    Phi_g = elliptic.solve(system, rel_tol=st.fp.rel_tol)

    DE = st.DE
    grad_Phi = p1_gradient(Phi_g).values[:, None, :]
    gv = grad_g.values[:, None, :]
    DE_x_B0 = np.stack((DE[..., 1], -DE[..., 0]), axis=-1)

    products = -np.sum(DE * grad_Phi, axis=-1) - np.sum(gv * DE_x_B0, axis=-1)
    return lumped_project(mesh, products)


def derivative_matrix(st, nodes=None):
    """Dense matrix of DF[sigma] by columns, for small meshes

    Parameters
    ----------
    st : :obj:`LinearizedState`
    nodes : :obj:`numpy.ndarray`, optional
        Node indices spanning the increments, all interior nodes by default

    Returns
    -------
    A : :obj:`numpy.ndarray`
        Shape (n_vertices, len(nodes))
    """
    mesh = st.sigma.mesh
    if nodes is None:
        nodes = np.flatnonzero(mesh.interior_mask)

    columns = []
    for node in nodes:
        e = np.zeros(mesh.n_vertices)
        e[node] = 1.0
        columns.append(df_apply(st, ScalarField(mesh, e)).values)
    return np.column_stack(columns)


########################################################################
######################### Derivative checks ############################

def adjoint_mismatch(st, h, g, inner=lumped_inner):
    """Relative mismatch |<DF h, g> - <h, DF* g>| / (||h|| ||g||)"""
    lhs = inner(df_apply(st, h), g)
    rhs = inner(h, df_adjoint(st, g))
    scale = np.sqrt(inner(h, h) * inner(g, g))
    if scale == 0:
        return 0.0
    return abs(lhs - rhs) / scale


def taylor_remainders(fp, sigma, h, steps, norm=lumped_norm):
    """Remainders ||F(sigma + t h) - F(sigma) - t DF[sigma](h)|| for each t

    Parameters
    ----------
    fp : :obj:`matmi.forward.ForwardProblem`
    sigma, h : :obj:`matmi.fields.ScalarField`
    steps : iterable of :obj:`float`

    Returns
    -------
    remainders : :obj:`numpy.ndarray`
    """
    state = fp.solve_state(sigma)
    st = linearize(fp, sigma, state)
    F0 = fp.internal_data(sigma, E=state.E)
    dF = df_apply(st, h)

    remainders = []
    for t in steps:
        Ft = fp.internal_data(sigma + t * h)
        remainders.append(norm(Ft - F0 - t * dF))
        logger.debug(f"Taylor remainder at t = {t:.3g}: "
                     f"{remainders[-1]:.4e}")
    return np.array(remainders)


def convergence_order(steps, values):
    """Least squares slope of log(values) against log(steps)"""
    slope, _ = np.polyfit(np.log(np.asarray(steps, dtype=float)),
                          np.log(np.asarray(values, dtype=float)), 1)
    return float(slope)
