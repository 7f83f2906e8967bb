# -*- coding: utf-8 -*-
"""
Discrete fields on a :obj:`matmi.mesh.Mesh` and the discrete vector calculus
acting on them.

Scalar fields are P1 nodal. Vector fields come in three representations:

``element``
    one constant 2D vector per triangle (P0), e.g. P1 gradients
``nodal``
    one 2D vector per vertex (P1)
``broken``
    a 2D vector per triangle corner, linear inside each triangle and
    possibly discontinuous across edges, e.g. E = gauge + gradient

The magnetic background field is B0 = (0, 0, 1) throughout, so cross
products with B0 act on the in-plane components only.
"""

import logging

import numpy as np

from matmi.exceptions import MeshMismatchError
from matmi.mesh import QUAD_BARY, UNIT_SQUARE

logger = logging.getLogger(__name__)

ELEMENT = "element"
NODAL = "nodal"
BROKEN = "broken"
REPRESENTATIONS = (ELEMENT, NODAL, BROKEN)


def check_same_mesh(*fields):
    """Raise :obj:`MeshMismatchError` unless all fields share one mesh"""
    first = fields[0].mesh
    for field in fields[1:]:
        if not first.same_as(field.mesh):
            raise MeshMismatchError(
                f"Fields live on different meshes: {first!r} and "
                f"{field.mesh!r}")


def _frozen(values):
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


def corners_to_quadrature(corners):
    """Values at the edge midpoints from values at the triangle corners

    Parameters
    ----------
    corners : :obj:`numpy.ndarray`
        Shape (n_triangles, 3, ...)

    Returns
    -------
    quad : :obj:`numpy.ndarray`
        Same shape, the second axis now indexing the quadrature points
    """
    return np.einsum("qa,ta...->tq...", QUAD_BARY, corners)


def quadrature_to_corners(quad):
    """Inverse of :func:`corners_to_quadrature` for element-wise linear data"""
    m01, m12, m20 = quad[:, 0], quad[:, 1], quad[:, 2]
    return np.stack((m01 + m20 - m12,
                     m01 + m12 - m20,
                     m12 + m20 - m01), axis=1)


########################################################################
############################ Scalar fields #############################

class ScalarField:
    """P1 nodal scalar field

    Parameters
    ----------
    mesh : :obj:`matmi.mesh.Mesh`
        Mesh the field lives on
    values : :obj:`numpy.ndarray`
        One value per vertex. Must be finite.
    """

    # numpy scalars defer to the operators below
    __array_ufunc__ = None

    def __init__(self, mesh, values):
        values = _frozen(values)
        if values.shape != (mesh.n_vertices,):
            raise ValueError(
                f"Expected {mesh.n_vertices} nodal values, got shape "
                f"{values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Scalar field contains non-finite values")
        self.mesh = mesh
        self.values = values

    def __repr__(self):
        return "ScalarField(n_vertices=%r, min=%.4g, max=%.4g)" % (
            self.values.size, self.values.min(), self.values.max())

    @classmethod
    def constant(cls, mesh, value):
        return cls(mesh, np.full(mesh.n_vertices, float(value)))

    @classmethod
    def zeros(cls, mesh):
        return cls.constant(mesh, 0.0)

    @classmethod
    def from_function(cls, mesh, func):
        """Nodal interpolant of func(x1, x2)"""
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        return cls(mesh, np.broadcast_to(func(x, y), x.shape))

    def with_values(self, values):
        return ScalarField(self.mesh, values)

    def corners(self):
        return self.values[self.mesh.triangles]

    def at_quadrature(self):
        """Values at the three quadrature points of every triangle"""
        return self.corners() @ QUAD_BARY.T

    def _operand(self, other):
        if isinstance(other, ScalarField):
            check_same_mesh(self, other)
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._operand(other))

    def __rsub__(self, other):
        return self.with_values(self._operand(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._operand(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


########################################################################
############################ Vector fields #############################

class VectorField:
    """Discrete 2D vector field

    Parameters
    ----------
    mesh : :obj:`matmi.mesh.Mesh`
        Mesh the field lives on
    values : :obj:`numpy.ndarray`
        Shape (n_triangles, 2) for ``element``, (n_vertices, 2) for
        ``nodal`` and (n_triangles, 3, 2) for ``broken``
    representation : :obj:`str`
        One of ``element``, ``nodal`` or ``broken``
    """

    __array_ufunc__ = None

    def __init__(self, mesh, values, representation=ELEMENT):
        if representation not in REPRESENTATIONS:
            raise ValueError(f"Unknown representation '{representation}'")

        expected = {ELEMENT: (mesh.n_triangles, 2),
                    NODAL: (mesh.n_vertices, 2),
                    BROKEN: (mesh.n_triangles, 3, 2)}[representation]
        values = _frozen(values)
        if values.shape != expected:
            raise ValueError(
                f"A {representation} vector field needs shape {expected}, "
                f"got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Vector field contains non-finite values")

        self.mesh = mesh
        self.values = values
        self.representation = representation

    def __repr__(self):
        return "VectorField(%r, shape=%r)" % (self.representation,
                                              self.values.shape)

    @classmethod
    def from_quadrature(cls, mesh, quad):
        """Element-wise linear field through the given midpoint values

        Parameters
        ----------
        quad : :obj:`numpy.ndarray`
            Shape (n_triangles, 3, 2), values at the edge midpoints
        """
        return cls(mesh, quadrature_to_corners(np.asarray(quad)), BROKEN)

    @classmethod
    def from_function(cls, mesh, func):
        """Nodal interpolant of func(x1, x2) -> (v1, v2)"""
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        v1, v2 = func(x, y)
        return cls(mesh, np.column_stack((np.broadcast_to(v1, x.shape),
                                          np.broadcast_to(v2, x.shape))),
                   NODAL)

    def corners(self):
        """Values at the corners of every triangle, shape (n_triangles, 3, 2)
        """
        if self.representation == BROKEN:
            return self.values
        if self.representation == NODAL:
            return self.values[self.mesh.triangles]
        return np.repeat(self.values[:, None, :], 3, axis=1)

    def at_quadrature(self):
        if self.representation == ELEMENT:
            return self.corners()
        return corners_to_quadrature(self.corners())

    def element_means(self):
        """Average over each triangle, shape (n_triangles, 2)"""
        return self.corners().mean(axis=1)

    def curl(self):
        """Element-wise scalar curl d(v2)/dx1 - d(v1)/dx2"""
        if self.representation == ELEMENT:
            return np.zeros(self.mesh.n_triangles)
        c = self.corners()
        g = self.mesh.grads
        return np.sum(g[:, :, 0] * c[:, :, 1] - g[:, :, 1] * c[:, :, 0],
                      axis=1)

    def cross_b0(self):
        """The field crossed with B0 on the right, v x B0 = (v2, -v1)"""
        v = self.values
        return VectorField(self.mesh, np.stack((v[..., 1], -v[..., 0]),
                                               axis=-1),
                           self.representation)

    def b0_cross(self):
        """B0 crossed with the field, B0 x v = (-v2, v1)"""
        v = self.values
        return VectorField(self.mesh, np.stack((-v[..., 1], v[..., 0]),
                                               axis=-1),
                           self.representation)

    def l2_norm(self):
        """L2 norm, exact for element-wise linear fields"""
        q = self.at_quadrature()
        w = self.mesh.areas / 3.0
        return float(np.sqrt(np.sum(w[:, None] * np.sum(q**2, axis=-1))))

    def max_norm(self):
        """Largest Euclidean length over corners and elements"""
        return float(np.max(np.linalg.norm(self.values, axis=-1)))

    def _combine(self, other, op):
        check_same_mesh(self, other)
        if self.representation == other.representation:
            return VectorField(self.mesh, op(self.values, other.values),
                               self.representation)
        return VectorField(self.mesh, op(self.corners(), other.corners()),
                           BROKEN)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, factor):
        return VectorField(self.mesh, self.values * float(factor),
                           self.representation)

    __rmul__ = __mul__


########################################################################
############################ Tensor fields #############################

class TensorField:
    """Nodal symmetric 2x2 tensor field (d11, d12, d22), d33 = 1 implied

    Parameters
    ----------
    mesh : :obj:`matmi.mesh.Mesh`
    d11, d12, d22 : :obj:`numpy.ndarray`
        Nodal entries
    """

    def __init__(self, mesh, d11, d12, d22):
        values = _frozen(np.column_stack((d11, d12, d22)))
        if values.shape != (mesh.n_vertices, 3):
            raise ValueError("Tensor entries need one value per vertex")
        if not np.all(np.isfinite(values)):
            raise ValueError("Tensor field contains non-finite values")
        self.mesh = mesh
        self.values = values

    def __repr__(self):
        lam_min, lam_max = self.eigenvalue_range()
        return "TensorField(n_vertices=%r, eigenvalues in [%.4g, %.4g])" % (
            self.mesh.n_vertices, lam_min, lam_max)

    @classmethod
    def identity(cls, mesh):
        ones = np.ones(mesh.n_vertices)
        return cls(mesh, ones, np.zeros_like(ones), ones)

    @property
    def d11(self):
        return self.values[:, 0]

    @property
    def d12(self):
        return self.values[:, 1]

    @property
    def d22(self):
        return self.values[:, 2]

    def matrices(self):
        """Nodal matrices, shape (n_vertices, 2, 2)"""
        d11, d12, d22 = self.values.T
        return np.stack((np.column_stack((d11, d12)),
                         np.column_stack((d12, d22))), axis=1)

    def eigenvalues(self):
        """Ascending nodal eigenvalues, shape (n_vertices, 2)"""
        d11, d12, d22 = self.values.T
        mid = 0.5 * (d11 + d22)
        rad = np.hypot(0.5 * (d11 - d22), d12)
        return np.column_stack((mid - rad, mid + rad))

    def eigenvalue_range(self):
        eig = self.eigenvalues()
        return float(eig[:, 0].min()), float(eig[:, 1].max())

    def spectral_distance(self):
        """Nodal spectral norm of D - I"""
        return np.max(np.abs(self.eigenvalues() - 1.0), axis=1)

    def first_violation(self, lam, eta=None, atol=1e-12):
        """Index of the first node violating lam <= eig(D) <= 1 (and
        ||D - I|| <= eta when given), or None"""
        eig = self.eigenvalues()
        bad = (eig[:, 0] < lam - atol) | (eig[:, 1] > 1.0 + atol)
        if eta is not None:
            bad |= self.spectral_distance() > eta + atol
        if np.any(bad):
            return int(np.argmax(bad))
        return None

    def clip_spectrum(self, lam):
        """Clip the nodal eigenvalues into [lam, 1]

        Returns
        -------
        clipped : :obj:`TensorField`
            A new field, the same object if nothing needed clipping
        """
        if self.first_violation(lam) is None:
            return self

        eig, vec = np.linalg.eigh(self.matrices())
        n_bad = int(np.sum((eig[:, 0] < lam) | (eig[:, 1] > 1.0)))
        logger.warning(f"Clipping the tensor spectrum into [{lam}, 1] at "
                       f"{n_bad} nodes")

        eig = np.clip(eig, lam, 1.0)
        mats = np.einsum("nij,nj,nkj->nik", vec, eig, vec)
        return TensorField(self.mesh, mats[:, 0, 0],
                           0.5 * (mats[:, 0, 1] + mats[:, 1, 0]),
                           mats[:, 1, 1])

    def at_quadrature(self):
        """Entries at the quadrature points, shape (n_triangles, 3, 3)"""
        return corners_to_quadrature(self.values[self.mesh.triangles])

    def apply_at_quadrature(self, quad):
        """D v at the quadrature points

        Parameters
        ----------
        quad : :obj:`numpy.ndarray`
            Vectors at the quadrature points, shape (n_triangles, 3, 2)
        """
        d = self.at_quadrature()
        return np.stack((d[..., 0] * quad[..., 0] + d[..., 1] * quad[..., 1],
                         d[..., 1] * quad[..., 0] + d[..., 2] * quad[..., 1]),
                        axis=-1)


########################################################################
################################ Gauge #################################

class Gauge:
    """Rotational gauge field E~(x) = 1/2 (-(x2 - c2), x1 - c1) with curl 1

    Parameters
    ----------
    center : :obj:`tuple`
        Gauge center c
    """

    def __init__(self, center=(0.5, 0.5)):
        self.center = tuple(float(_) for _ in center)

    def __repr__(self):
        return "Gauge(center=%r)" % (self.center,)

    def __call__(self, x, y):
        c1, c2 = self.center
        return -0.5 * (y - c2), 0.5 * (x - c1)

    def field(self, mesh):
        """Nodal interpolant of the gauge field, exact since it is affine"""
        return VectorField.from_function(mesh, self)


########################################################################
########################## Discrete calculus ###########################

def p1_gradient(f):
    """Element-wise gradient of a P1 scalar field

    Parameters
    ----------
    f : :obj:`ScalarField`

    Returns
    -------
    grad : :obj:`VectorField`
        ``element`` representation
    """
    return VectorField(f.mesh, np.einsum("ta,tad->td", f.corners(),
                                         f.mesh.grads), ELEMENT)


def weak_divergence(w):
    """Mass-lumped divergence of a vector field

    Tests the divergence against every P1 basis function,
    d_i = (int_bnd (w.nu) phi_i - int w.grad(phi_i)) / m_i with m_i the
    lumped mass. The domain integral uses the midpoint rule, the boundary
    integral is exact for element-wise linear w.

    Parameters
    ----------
    w : :obj:`VectorField`

    Returns
    -------
    div : :obj:`ScalarField`
    """
    mesh = w.mesh
    corners = w.corners()

    # domain term: grad(phi_a) is constant so only the element mean matters
    mean = corners.mean(axis=1)
    local = -mesh.areas[:, None] * np.einsum("td,tad->ta", mean, mesh.grads)
    rhs = np.bincount(mesh.triangles.ravel(), weights=local.ravel(),
                      minlength=mesh.n_vertices)

    # boundary term along each edge (a, b) of the adjacent triangle
    tri = mesh.boundary_triangles
    la, lb = mesh.boundary_local[:, 0], mesh.boundary_local[:, 1]
    fa = np.einsum("ed,ed->e", corners[tri, la], mesh.boundary_normals)
    fb = np.einsum("ed,ed->e", corners[tri, lb], mesh.boundary_normals)
    length = mesh.boundary_lengths
    rhs += np.bincount(mesh.boundary_edges[:, 0],
                       weights=length * (2 * fa + fb) / 6.0,
                       minlength=mesh.n_vertices)
    rhs += np.bincount(mesh.boundary_edges[:, 1],
                       weights=length * (fa + 2 * fb) / 6.0,
                       minlength=mesh.n_vertices)

    return ScalarField(mesh, rhs / mesh.lumped_mass)


def lumped_project(mesh, quad):
    """Mass-lumped L2 projection of quadrature samples onto P1

    Parameters
    ----------
    mesh : :obj:`matmi.mesh.Mesh`
    quad : :obj:`numpy.ndarray`
        Scalar values at the quadrature points, shape (n_triangles, 3)

    Returns
    -------
    projected : :obj:`ScalarField`
    """
    local = (mesh.areas / 3.0)[:, None] * (np.asarray(quad) @ QUAD_BARY)
    loads = np.bincount(mesh.triangles.ravel(), weights=local.ravel(),
                        minlength=mesh.n_vertices)
    return ScalarField(mesh, loads / mesh.lumped_mass)


def _masked(f, interior_only):
    if interior_only:
        return np.where(f.mesh.interior_mask, f.values, 0.0)
    return f.values


def l2_inner(f, g, interior_only=False):
    """L2 inner product with the exact P1 mass matrix

    Parameters
    ----------
    f, g : :obj:`ScalarField`
    interior_only : :obj:`bool`
        Zero the boundary values first

    Returns
    -------
    inner : :obj:`float`
    """
    check_same_mesh(f, g)
    tri = f.mesh.triangles
    fc = _masked(f, interior_only)[tri]
    gc = _masked(g, interior_only)[tri]
    local = (np.sum(fc * gc, axis=1) +
             np.sum(fc, axis=1) * np.sum(gc, axis=1))
    return float(np.sum(f.mesh.areas / 12.0 * local))


def l2_norm(f, interior_only=False):
    return float(np.sqrt(max(l2_inner(f, f, interior_only), 0.0)))


def lumped_inner(f, g):
    """Inner product with the lumped (diagonal) mass matrix"""
    check_same_mesh(f, g)
    return float(np.sum(f.mesh.lumped_mass * f.values * g.values))


def lumped_norm(f):
    return float(np.sqrt(lumped_inner(f, f)))


def interpolate_to(f, target):
    """Evaluate a P1 field from a unit-square mesh at the vertices of another

    Parameters
    ----------
    f : :obj:`ScalarField`
        Field on a unit-square mesh
    target : :obj:`matmi.mesh.Mesh`
        Mesh whose vertices lie in the unit square

    Returns
    -------
    g : :obj:`ScalarField`
        Field on :attr:`target`
    """
    source = f.mesh
    if source.domain_kind != UNIT_SQUARE:
        raise ValueError("Interpolation needs a unit-square source mesh")

    n = source.descriptor["n"]
    pts = np.clip(target.vertices, 0.0, 1.0) * n
    i = np.minimum(np.floor(pts[:, 0]).astype(int), n - 1)
    j = np.minimum(np.floor(pts[:, 1]).astype(int), n - 1)
    x = pts[:, 0] - i
    y = pts[:, 1] - j

    v00 = i + j * (n + 1)
    f00 = f.values[v00]
    f10 = f.values[v00 + 1]
    f01 = f.values[v00 + n + 1]
    f11 = f.values[v00 + n + 2]

    if source.descriptor.get("diagonal", "right") == "right":
        lower = f00 + (f10 - f00) * x + (f11 - f10) * y
        upper = f00 + (f11 - f01) * x + (f01 - f00) * y
        values = np.where(y <= x, lower, upper)
    else:
        lower = f00 + (f10 - f00) * x + (f01 - f00) * y
        upper = f11 + (f01 - f11) * (1 - x) + (f10 - f11) * (1 - y)
        values = np.where(x + y <= 1.0, lower, upper)

    return ScalarField(target, values)
