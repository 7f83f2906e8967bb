# -*- coding: utf-8 -*-
"""
Pure Neumann elliptic problem

    div(sigma D grad u) = -div(E_in),   (sigma D grad u + E_in).nu = 0

in its weak form, int sigma D grad u . grad phi = -int E_in . grad phi,
discretised with P1 elements and solved on the mean-zero subspace.
"""

import logging

from collections import namedtuple

import numpy as np

from scipy.sparse import coo_matrix

from matmi.exceptions import CoefficientBoundError, SolverError
from matmi.fields import ScalarField, check_same_mesh

logger = logging.getLogger(__name__)

CoefficientBounds = namedtuple("CoefficientBounds", ["c1", "c2", "lam"])
CoefficientBounds.__doc__ = """Admissible bounds c1 <= sigma <= c2 and
lam <= eig(D) <= 1 checked during assembly"""


def check_coefficients(sigma, D, bounds=None):
    """Check the nodal coefficient bounds

    Without :attr:`bounds` only positivity of sigma and of the tensor
    spectrum is required.

    Raises
    ------
    CoefficientBoundError
        Naming the first offending node
    """
    values = sigma.values
    if bounds is None:
        low, high, lam = 0.0, np.inf, 0.0
        strict = True
    else:
        low, high, lam = bounds
        strict = False

    bad = (values <= low) if strict else (values < low - 1e-12)
    bad |= values > high + 1e-12
    if np.any(bad):
        node = int(np.argmax(bad))
        raise CoefficientBoundError(
            node, f"sigma = {values[node]:.6g} outside [{low}, {high}]")

    eig = D.eigenvalues()
    bad = (eig[:, 0] <= lam) if strict else (eig[:, 0] < lam - 1e-12)
    bad |= eig[:, 1] > 1.0 + 1e-12
    if np.any(bad):
        node = int(np.argmax(bad))
        raise CoefficientBoundError(
            node, f"tensor eigenvalues {eig[node, 0]:.6g}, "
            f"{eig[node, 1]:.6g} outside [{lam}, 1]")


def element_coefficients(sigma, D):
    """Quadrature mean of sigma D on every triangle

    Returns
    -------
    coeffs : :obj:`numpy.ndarray`
        Entries (c11, c12, c22), shape (n_triangles, 3)
    """
    return np.mean(sigma.at_quadrature()[..., None] * D.at_quadrature(),
                   axis=1)


def assemble_stiffness(mesh, coeffs):
    """Sparse P1 stiffness matrix for element-wise constant symmetric
    coefficients

    Parameters
    ----------
    mesh : :obj:`matmi.mesh.Mesh`
    coeffs : :obj:`numpy.ndarray`
        Entries (c11, c12, c22) per triangle

    Returns
    -------
    K : :obj:`scipy.sparse.csr_matrix`
    """
    g = mesh.grads
    c11, c12, c22 = coeffs[:, 0], coeffs[:, 1], coeffs[:, 2]
    cg = np.stack((c11[:, None] * g[..., 0] + c12[:, None] * g[..., 1],
                   c12[:, None] * g[..., 0] + c22[:, None] * g[..., 1]),
                  axis=-1)
    local = mesh.areas[:, None, None] * np.einsum("tad,tbd->tab", g, cg)

    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    return coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_load(E_in):
    """Load vector b_i = -int E_in . grad(phi_i)

    Parameters
    ----------
    E_in : :obj:`matmi.fields.VectorField`

    Returns
    -------
    b : :obj:`numpy.ndarray`
    """
    mesh = E_in.mesh
    mean = E_in.at_quadrature().mean(axis=1)
    local = -mesh.areas[:, None] * np.einsum("td,tad->ta", mean, mesh.grads)
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(),
                       minlength=mesh.n_vertices)


class NeumannSystem:
    """Assembled Neumann problem

    Parameters
    ----------
    mesh : :obj:`matmi.mesh.Mesh`
    stiffness : :obj:`scipy.sparse.csr_matrix`
        Symmetric positive semidefinite with the constants as null space
    load : :obj:`numpy.ndarray`
        Compatible load vector (entries sum to zero)
    coeffs : :obj:`numpy.ndarray`
        Element coefficients the stiffness was built from
    """

    def __init__(self, mesh, stiffness, load, coeffs=None):
        self.mesh = mesh
        self.stiffness = stiffness
        self.load = np.asarray(load, dtype=float)
        self.load.setflags(write=False)
        self.coeffs = coeffs
        self.diagonal = stiffness.diagonal()

    def __repr__(self):
        return "NeumannSystem(n=%r, nnz=%r)" % (self.mesh.n_vertices,
                                                self.stiffness.nnz)

    def with_load(self, E_in):
        """Same stiffness, new right-hand side flux"""
        check_same_mesh(self, E_in)
        return NeumannSystem(self.mesh, self.stiffness, assemble_load(E_in),
                             self.coeffs)

    def residual(self, u):
        """Relative residual ||K u - b|| / ||b|| of a candidate solution"""
        values = getattr(u, "values", u)
        norm_b = np.linalg.norm(self.load)
        res = np.linalg.norm(self.stiffness @ values - self.load)
        return float(res / norm_b) if norm_b > 0 else float(res)


def assemble(sigma, D, E_in, bounds=None):
    """Assemble the Neumann system with coefficient sigma D

    Parameters
    ----------
    sigma : :obj:`matmi.fields.ScalarField`
    D : :obj:`matmi.fields.TensorField`
    E_in : :obj:`matmi.fields.VectorField`
        Right-hand side flux
    bounds : :obj:`CoefficientBounds`, optional
        Bounds to check. Positivity only if not given.

    Returns
    -------
    system : :obj:`NeumannSystem`
    """
    check_same_mesh(sigma, D, E_in)
    check_coefficients(sigma, D, bounds)

    coeffs = element_coefficients(sigma, D)
    stiffness = assemble_stiffness(sigma.mesh, coeffs)
    load = assemble_load(E_in)

    logger.debug(f"Assembled Neumann system on {sigma.mesh.n_vertices} "
                 f"nodes, nnz = {stiffness.nnz}")
    return NeumannSystem(sigma.mesh, stiffness, load, coeffs)


def _deflate(x):
    return x - x.mean()


def solve(system, rel_tol=1e-10, x0=None, max_iter=None, history=None):
    """Deflated Jacobi preconditioned conjugate gradients

    Iterates stay in the subspace orthogonal to the constants, the null
    space of the stiffness. The returned potential is shifted to have zero
    mean over the domain.

    Parameters
    ----------
    system : :obj:`NeumannSystem`
    rel_tol : :obj:`float`
        Target for ||K u - b|| / ||b||
    x0 : :obj:`matmi.fields.ScalarField` or :obj:`numpy.ndarray`, optional
        Initial guess. Constant offsets in it have no effect.
    max_iter : :obj:`int`, optional
        Iteration limit. Defaults to 50 sqrt(n_vertices) + 100
    history : :obj:`list`, optional
        If given, the relative residual of every iteration is appended

    Returns
    -------
    u : :obj:`matmi.fields.ScalarField`
        Mean-zero solution

    Raises
    ------
    SolverError
        If the tolerance is not reached within :attr:`max_iter`
    """
    mesh = system.mesh
    A = system.stiffness
    b = _deflate(system.load)
    n = mesh.n_vertices

    if max_iter is None:
        max_iter = int(50 * np.sqrt(n)) + 100

    norm_b = np.linalg.norm(b)
    residuals = [] if history is None else history
    if norm_b == 0:
        residuals.append(0.0)
        return ScalarField.zeros(mesh)

    inv_diag = np.where(system.diagonal > 0, 1.0 / system.diagonal, 0.0)

    if x0 is None:
        x = np.zeros(n)
    else:
        x = _deflate(np.array(getattr(x0, "values", x0), dtype=float))

    r = b - A @ x
    z = _deflate(inv_diag * r)
    p = z.copy()
    rz = r @ z

    rel = np.linalg.norm(r) / norm_b
    residuals.append(rel)
    k = 0
    while rel > rel_tol and k < max_iter:
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap

        z = _deflate(inv_diag * r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new

        rel = np.linalg.norm(r) / norm_b
        residuals.append(rel)
        k += 1

    if not rel <= rel_tol:
        raise SolverError(
            f"PCG stopped after {k} iterations with relative residual "
            f"{rel:.3e} > {rel_tol:.1e}", residuals)

    logger.debug(f"PCG converged in {k} iterations, residual {rel:.3e}")

    # zero mean with respect to the integral over the domain
    x -= np.sum(mesh.lumped_mass * x) / np.sum(mesh.lumped_mass)
    return ScalarField(mesh, x)
