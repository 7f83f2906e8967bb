# -*- coding: utf-8 -*-
"""
Stationary transport solver for div(sigma v) = g with boundary data.

Galerkin P1 discretisation of the conservative form, optional artificial
diffusion eps and SUPG streamline stabilisation. With eps > 0 the boundary
data is imposed on the whole boundary, otherwise on the nodes of inflow
edges only.
"""

import logging

import numpy as np

from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from matmi.elliptic import assemble_stiffness
from matmi.exceptions import DegenerateTransportError, SolverError
from matmi.fields import ScalarField, VectorField, check_same_mesh
from matmi.mesh import EDGE_GAUSS, QUAD_BARY

logger = logging.getLogger(__name__)

TOL_FLUX = 1e-12
TOL_STAGNATION = 1e-12


class TransportProblem:
    """Description of one transport solve

    Parameters
    ----------
    velocity : :obj:`matmi.fields.VectorField`
        Transport velocity v
    source : :obj:`matmi.fields.ScalarField`
        Right-hand side g
    boundary_values : :obj:`matmi.fields.ScalarField`
        Dirichlet data, only its boundary values are used
    epsilon : :obj:`float`, optional
        Artificial diffusion. Defaults to c_eps * h * max|v|
    c_eps : :obj:`float`
        Scale of the default artificial diffusion
    supg : :obj:`bool`
        Add streamline upwind stabilisation
    reference : :obj:`matmi.fields.ScalarField`, optional
        If given, diffusion and streamline stabilisation act on
        sigma - reference instead of sigma, so that the unstabilised
        Galerkin solution is a fixed point when reference equals it
    rel_tol : :obj:`float`
        Accepted relative residual of the linear solve
    """

    def __init__(self, velocity, source, boundary_values, epsilon=None,
                 c_eps=0.5, supg=True, reference=None, rel_tol=1e-8):
        check_same_mesh(velocity, source, boundary_values)
        if reference is not None:
            check_same_mesh(source, reference)

        self.mesh = source.mesh
        self.velocity = velocity
        self.source = source
        self.boundary_values = boundary_values
        self.c_eps = c_eps
        self.supg = supg
        self.reference = reference
        self.rel_tol = rel_tol

        self.v_max = velocity.max_norm()
        if epsilon is None:
            epsilon = c_eps * self.mesh.h * self.v_max
        if epsilon < 0:
            raise ValueError(f"Artificial diffusion must be >= 0, "
                             f"got {epsilon}")
        self.epsilon = float(epsilon)

    def __repr__(self):
        return "TransportProblem(eps=%.3g, supg=%r, reference=%r)" % (
            self.epsilon, self.supg, self.reference is not None)


def classify_inflow(v, mesh, tol=TOL_FLUX):
    """Boundary edges through which v enters the domain

    Parameters
    ----------
    v : :obj:`matmi.fields.VectorField`
    mesh : :obj:`matmi.mesh.Mesh`
    tol : :obj:`float`
        Edges with |v.nu| <= tol at the midpoint count as non-inflow

    Returns
    -------
    edges : :obj:`numpy.ndarray`
        Indices into :attr:`mesh.boundary_edges`
    """
    corners = v.corners()
    tri = mesh.boundary_triangles
    la, lb = mesh.boundary_local[:, 0], mesh.boundary_local[:, 1]
    mid = 0.5 * (corners[tri, la] + corners[tri, lb])
    flux = np.einsum("ed,ed->e", mid, mesh.boundary_normals)
    return np.flatnonzero(flux < -tol)


def inflow_nodes(v, mesh, tol=TOL_FLUX):
    """Vertices of the inflow edges"""
    edges = classify_inflow(v, mesh, tol)
    return np.unique(mesh.boundary_edges[edges])


def _scatter(mesh, local):
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    return coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_advection(v):
    """Galerkin matrix of div(sigma v) tested with P1 functions

    A_ij = -int phi_j v.grad(phi_i) + int_bnd phi_j (v.nu) phi_i
    """
    mesh = v.mesh
    vq = v.at_quadrature()
    vg = np.einsum("tqd,tid->tqi", vq, mesh.grads)
    local = -(mesh.areas / 3.0)[:, None, None] * np.einsum("tqi,qj->tij",
                                                           vg, QUAD_BARY)
    A = _scatter(mesh, local)

    # boundary flux with the two point Gauss rule, exact for the cubic
    # integrand
    corners = v.corners()
    tri = mesh.boundary_triangles
    la, lb = mesh.boundary_local[:, 0], mesh.boundary_local[:, 1]
    fa = np.einsum("ed,ed->e", corners[tri, la], mesh.boundary_normals)
    fb = np.einsum("ed,ed->e", corners[tri, lb], mesh.boundary_normals)

    entries = np.zeros((len(tri), 2, 2))
    for s in EDGE_GAUSS:
        phi = np.array([1.0 - s, s])
        flux = (1.0 - s) * fa + s * fb
        entries += 0.5 * (mesh.boundary_lengths * flux)[:, None, None] * \
            np.outer(phi, phi)[None]

    edges = mesh.boundary_edges
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    n = mesh.n_vertices
    B = coo_matrix((entries.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return A + B


def supg_parameters(v, epsilon):
    """Element stabilisation parameters tau = h / (2|v| + eps / h)

    Zero on stagnant elements where |v| < 1e-12 max|v|
    """
    mesh = v.mesh
    speed = np.linalg.norm(v.element_means(), axis=1)
    v_max = speed.max() if speed.size else 0.0
    h = mesh.diameters
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = h / (2.0 * speed + epsilon / h)
    tau = np.where(speed < TOL_STAGNATION * max(v_max, 1e-300), 0.0, tau)
    return np.nan_to_num(tau)


def assemble_supg(v, epsilon):
    """Streamline stabilisation matrix and the per point test weights

    Returns
    -------
    S : :obj:`scipy.sparse.csr_matrix`
        sum_T tau int (v.grad(phi_i)) (v.grad(phi_j) + phi_j div v)
    weights : :obj:`numpy.ndarray`
        tau * area / 3 * v.grad(phi_i) per quadrature point, shape
        (n_triangles, 3, 3) indexed (t, q, i)
    """
    mesh = v.mesh
    tau = supg_parameters(v, epsilon)
    vq = v.at_quadrature()
    vg = np.einsum("tqd,tid->tqi", vq, mesh.grads)
    div_v = np.einsum("tad,tad->t", v.corners(), mesh.grads)

    weights = (tau * mesh.areas / 3.0)[:, None, None] * vg
    trial = vg + div_v[:, None, None] * QUAD_BARY[None]
    local = np.einsum("tqi,tqj->tij", weights, trial)
    return _scatter(mesh, local), weights


def solve_transport(tp):
    """Solve the stabilised transport problem

    Parameters
    ----------
    tp : :obj:`TransportProblem`

    Returns
    -------
    sigma : :obj:`matmi.fields.ScalarField`

    Raises
    ------
    DegenerateTransportError
        Without diffusion when the velocity vanishes or no inflow boundary
        exists, or if the system turns out singular
    SolverError
        If the residual of the solve exceeds the tolerance
    """
    mesh = tp.mesh
    v = tp.velocity
    eps = tp.epsilon

    if eps == 0:
        if tp.v_max == 0:
            raise DegenerateTransportError(
                "Zero velocity without artificial diffusion")
        fixed = inflow_nodes(v, mesh)
        if fixed.size == 0:
            raise DegenerateTransportError(
                "Empty inflow boundary without artificial diffusion")
    else:
        fixed = mesh.boundary_nodes

    matrix = assemble_advection(v)
    rhs = mesh.lumped_mass * tp.source.values
    stab = None

    if eps > 0:
        stab = eps * assemble_stiffness(
            mesh, np.tile([1.0, 0.0, 1.0], (mesh.n_triangles, 1)))

    if tp.supg:
        S, weights = assemble_supg(v, eps)
        stab = S if stab is None else stab + S
        if tp.reference is None:
            g_q = tp.source.at_quadrature()
            local = np.einsum("tqi,tq->ti", weights, g_q)
            rhs = rhs + np.bincount(mesh.triangles.ravel(),
                                    weights=local.ravel(),
                                    minlength=mesh.n_vertices)

    if stab is not None:
        matrix = matrix + stab
        if tp.reference is not None:
            rhs = rhs + stab @ tp.reference.values

    sigma = np.zeros(mesh.n_vertices)
    sigma[fixed] = tp.boundary_values.values[fixed]
    free = np.ones(mesh.n_vertices, dtype=bool)
    free[fixed] = False

    matrix = matrix.tocsr()
    A_ff = matrix[free][:, free].tocsc()
    b_f = rhs[free] - matrix[free][:, fixed] @ sigma[fixed]

    logger.debug(f"Transport solve: {free.sum()} unknowns, eps = {eps:.3g}, "
                 f"{fixed.size} Dirichlet nodes")

    with np.errstate(all="ignore"):
        x = spsolve(A_ff, b_f)
    x = np.atleast_1d(x)

    if not np.all(np.isfinite(x)):
        raise DegenerateTransportError("Singular transport system")

    norm_b = np.linalg.norm(b_f)
    res = np.linalg.norm(A_ff @ x - b_f)
    rel = res / norm_b if norm_b > 0 else res
    if rel > tp.rel_tol:
        raise SolverError(f"Transport residual {rel:.3e} exceeds "
                          f"{tp.rel_tol:.1e}", [rel])

    sigma[free] = x
    return ScalarField(mesh, sigma)


def transport_velocity(D, E):
    """Velocity v = D E x B0 as an element-wise linear field"""
    DE = D.apply_at_quadrature(E.at_quadrature())
    return VectorField.from_quadrature(E.mesh, DE).cross_b0()
