# -*- coding: utf-8 -*-
"""
Structured triangular meshes of the unit square and of a disk, with the
boundary and quadrature data needed by P1 finite elements.
"""

import logging

import numpy as np

logger = logging.getLogger(__name__)

UNIT_SQUARE = "unit-square"
DISK = "disk"

# barycentric coordinates of the three edge-midpoint quadrature points,
# rows are points, columns the local vertex. Weights are area / 3 each.
QUAD_BARY = np.array([[0.5, 0.5, 0.0],
                      [0.0, 0.5, 0.5],
                      [0.5, 0.0, 0.5]])
QUAD_BARY.setflags(write=False)

# two-point Gauss rule on the reference edge [0, 1]
EDGE_GAUSS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
EDGE_GAUSS.setflags(write=False)


def _readonly(array, dtype=float):
    array = np.ascontiguousarray(array, dtype=dtype)
    array.setflags(write=False)
    return array


class Mesh:
    """Immutable triangular mesh with P1 element data.

    Parameters
    ----------
    vertices : :obj:`numpy.ndarray`
        Vertex coordinates, shape (n_vertices, 2)
    triangles : :obj:`numpy.ndarray`
        Vertex indices of each triangle in counterclockwise order, shape
        (n_triangles, 3)
    descriptor : :obj:`dict`
        Recipe that rebuilds this mesh (see :func:`mesh_from_descriptor`).
        Must contain at least "domain_kind".

    Attributes
    ----------
    areas : :obj:`numpy.ndarray`
        Triangle areas
    grads : :obj:`numpy.ndarray`
        Gradients of the barycentric basis functions, shape (n_triangles, 3, 2)
    boundary_edges : :obj:`numpy.ndarray`
        Boundary edges as vertex pairs, oriented counterclockwise around the
        domain, shape (n_boundary_edges, 2)
    boundary_normals : :obj:`numpy.ndarray`
        Outward unit normal of each boundary edge
    boundary_lengths : :obj:`numpy.ndarray`
        Length of each boundary edge
    boundary_triangles : :obj:`numpy.ndarray`
        Triangle adjacent to each boundary edge
    boundary_local : :obj:`numpy.ndarray`
        Local (0, 1, 2) indices of the edge's vertices inside its triangle
    boundary_nodes : :obj:`numpy.ndarray`
        Sorted indices of the vertices on the boundary
    lumped_mass : :obj:`numpy.ndarray`
        Row sums of the P1 mass matrix, i.e. the integral of each basis
        function
    h : :obj:`float`
        Largest edge length
    """

    def __init__(self, vertices, triangles, descriptor):
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)

        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError("vertices must have shape (n_vertices, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise ValueError("triangles must have shape (n_triangles, 3)")

        self.vertices = _readonly(vertices)
        self.triangles = _readonly(triangles, dtype=np.int64)
        self.descriptor = dict(descriptor)
        self.domain_kind = self.descriptor["domain_kind"]

        p0, p1, p2 = (self.vertices[self.triangles[:, _]] for _ in range(3))
        signed = 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) -
                        (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))

        if np.any(signed <= 0):
            bad = int(np.argmax(signed <= 0))
            raise ValueError(f"Triangle {bad} has non-positive signed area")

        self.areas = _readonly(signed)

        # gradient of the barycentric function of vertex a is the rotated
        # opposite edge divided by twice the area
        grads = np.empty((len(signed), 3, 2))
        for a in range(3):
            pb = self.vertices[self.triangles[:, (a + 1) % 3]]
            pc = self.vertices[self.triangles[:, (a + 2) % 3]]
            grads[:, a, 0] = (pb[:, 1] - pc[:, 1]) / (2 * signed)
            grads[:, a, 1] = (pc[:, 0] - pb[:, 0]) / (2 * signed)
        self.grads = _readonly(grads)

        self.centroids = _readonly((p0 + p1 + p2) / 3.0)

        lumped = np.bincount(self.triangles.ravel(),
                             weights=np.repeat(signed / 3.0, 3),
                             minlength=self.n_vertices)
        self.lumped_mass = _readonly(lumped)

        self._build_edges()

        logger.debug(f"Mesh ({self.domain_kind}) with {self.n_vertices} "
                     f"vertices and {self.n_triangles} triangles, "
                     f"h = {self.h:.4g}")

    def __repr__(self):
        return "Mesh(%r, n_vertices=%r, n_triangles=%r)" % (
            self.domain_kind, self.n_vertices, self.n_triangles)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def _build_edges(self):
        """Classify the edges and set up the boundary data"""
        tri = self.triangles
        n_tri = self.n_triangles

        # directed edges (a -> b) follow the counterclockwise order of each
        # triangle, so for boundary edges the outward normal is (dy, -dx)
        local = np.array([[0, 1], [1, 2], [2, 0]])
        directed = tri[:, local].reshape(-1, 2)
        owner = np.repeat(np.arange(n_tri), 3)
        local_pairs = np.tile(local, (n_tri, 1))

        keys = np.sort(directed, axis=1)
        _, first, inverse, counts = np.unique(keys, axis=0,
                                              return_index=True,
                                              return_inverse=True,
                                              return_counts=True)
        inverse = np.asarray(inverse).ravel()

        if np.any(counts > 2):
            raise ValueError("An edge is shared by more than two triangles")

        self.n_edges = len(counts)
        is_boundary = counts[inverse] == 1

        b_edges = directed[is_boundary]
        delta = self.vertices[b_edges[:, 1]] - self.vertices[b_edges[:, 0]]
        lengths = np.hypot(delta[:, 0], delta[:, 1])
        normals = np.column_stack((delta[:, 1], -delta[:, 0]))
        normals /= lengths[:, None]

        self.boundary_edges = _readonly(b_edges, dtype=np.int64)
        self.boundary_lengths = _readonly(lengths)
        self.boundary_normals = _readonly(normals)
        self.boundary_triangles = _readonly(owner[is_boundary], dtype=np.int64)
        self.boundary_local = _readonly(local_pairs[is_boundary],
                                        dtype=np.int64)
        self.boundary_nodes = _readonly(np.unique(b_edges), dtype=np.int64)

        interior = np.ones(self.n_vertices, dtype=bool)
        interior[self.boundary_nodes] = False
        self.interior_mask = _readonly(interior, dtype=bool)

        # element diameters are the longest edges
        p = self.vertices[tri]
        edge_len = np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2)
        self.diameters = _readonly(edge_len.max(axis=1))
        self.h = float(self.diameters.max())

    def edge_counts(self):
        """Number of triangles sharing every edge

        Returns
        -------
        counts : :obj:`numpy.ndarray`
            One entry per unique edge, 1 for boundary and 2 for interior edges
        """
        keys = np.sort(self.triangles[:, [[0, 1], [1, 2], [2, 0]]]
                       .reshape(-1, 2), axis=1)
        _, counts = np.unique(keys, axis=0, return_counts=True)
        return counts

    def same_as(self, other):
        """Whether two meshes describe the same discretisation"""
        if self is other:
            return True
        return (self.descriptor == other.descriptor and
                self.n_vertices == other.n_vertices and
                self.n_triangles == other.n_triangles)


########################################################################
####################### Mesh builders ##################################

def check_square_arguments(n, diagonal="right"):
    """Validate the cell count and diagonal of a unit-square mesh

    Returns the cell count as an :obj:`int`. Raises ValueError otherwise.
    """
    if n is None or int(n) != n or n < 2:
        raise ValueError(f"Need at least 2 cells per direction, got {n}")
    if diagonal not in ("right", "left"):
        raise ValueError(f"Unknown diagonal orientation '{diagonal}'")
    return int(n)


def build_unit_square_mesh(n, diagonal="right"):
    """Uniform triangulation of the unit square with two triangles per cell.

    Parameters
    ----------
    n : :obj:`int`
        Number of cells in each direction. Must be at least 2
    diagonal : :obj:`str`
        "right" splits each cell along the diagonal from its lower left to its
        upper right corner, "left" along the other diagonal

    Returns
    -------
    mesh : :obj:`Mesh`
        (n + 1)**2 vertices and 2 n**2 triangles
    """
    n = check_square_arguments(n, diagonal)

    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords)
    vertices = np.column_stack((xx.ravel(), yy.ravel()))

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (i + j * (n + 1)).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1

    if diagonal == "right":
        lower = np.column_stack((v00, v10, v11))
        upper = np.column_stack((v00, v11, v01))
    else:
        lower = np.column_stack((v00, v10, v01))
        upper = np.column_stack((v10, v11, v01))

    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    descriptor = {"domain_kind": UNIT_SQUARE, "n": n, "diagonal": diagonal}
    return Mesh(vertices, triangles, descriptor)


def refine(mesh, project=None):
    """Uniform refinement: every triangle is split into four.

    Parameters
    ----------
    mesh : :obj:`Mesh`
        Mesh to refine
    project : callable, optional
        Applied to the coordinates of new vertices created on boundary edges,
        e.g. to move them onto a curved boundary

    Returns
    -------
    fine : :obj:`Mesh`
        Refined mesh with four times as many triangles. The descriptor is
        copied with "n_refine" incremented.
    """
    tri = mesh.triangles
    n_v = mesh.n_vertices

    pairs = tri[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
    keys = np.sort(pairs, axis=1)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True,
                                      return_counts=True)
    inverse = np.asarray(inverse).ravel()

    mids = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
    on_boundary = counts == 1
    if project is not None and np.any(on_boundary):
        mids[on_boundary] = project(mids[on_boundary])

    vertices = np.vstack((mesh.vertices, mids))
    m = (n_v + inverse).reshape(-1, 3)
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]

    triangles = np.vstack((np.column_stack((a, m01, m20)),
                           np.column_stack((m01, b, m12)),
                           np.column_stack((m20, m12, c)),
                           np.column_stack((m01, m12, m20))))

    descriptor = dict(mesh.descriptor)
    descriptor["n_refine"] = descriptor.get("n_refine", 0) + 1
    return Mesh(vertices, triangles, descriptor)


def build_disk_mesh(center=(0.0, 0.0), radius=1.0, n_refine=3):
    """Quasi-uniform triangulation of a disk.

    Starts from a hexagon split into six triangles and refines it
    :attr:`n_refine` times, moving new boundary vertices onto the circle.

    Parameters
    ----------
    center : :obj:`tuple`
        Disk center
    radius : :obj:`float`
        Disk radius, must be positive
    n_refine : :obj:`int`
        Number of uniform refinements

    Returns
    -------
    mesh : :obj:`Mesh`
        Mesh with 6 * 4**n_refine triangles whose boundary vertices lie on the
        circle
    """
    if not radius > 0:
        raise ValueError(f"Disk radius must be positive, got {radius}")
    if int(n_refine) != n_refine or n_refine < 0:
        raise ValueError(f"n_refine must be a non-negative integer")

    center = np.asarray(center, dtype=float)
    angles = np.arange(6) * np.pi / 3.0
    ring = center + radius * np.column_stack((np.cos(angles),
                                              np.sin(angles)))
    vertices = np.vstack((center, ring))
    triangles = np.array([[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)])

    def to_circle(points):
        offset = points - center
        dist = np.linalg.norm(offset, axis=1)
        return center + radius * offset / dist[:, None]

    descriptor = {"domain_kind": DISK, "center": [float(_) for _ in center],
                  "radius": float(radius), "n_refine": 0}
    mesh = Mesh(vertices, triangles, descriptor)
    for _ in range(int(n_refine)):
        mesh = refine(mesh, project=to_circle)
    return mesh


def mesh_from_descriptor(descriptor):
    """Rebuild a mesh from :attr:`Mesh.descriptor`

    Parameters
    ----------
    descriptor : :obj:`dict`
        As stored in field file headers and manifests

    Returns
    -------
    mesh : :obj:`Mesh`
    """
    kind = descriptor.get("domain_kind")
    if kind == UNIT_SQUARE:
        return build_unit_square_mesh(int(descriptor["n"]),
                                      diagonal=descriptor.get("diagonal",
                                                              "right"))
    if kind == DISK:
        return build_disk_mesh(center=tuple(descriptor["center"]),
                               radius=float(descriptor["radius"]),
                               n_refine=int(descriptor["n_refine"]))
    raise ValueError(f"Unknown domain kind '{kind}'")
