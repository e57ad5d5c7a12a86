"""Structured right-angled triangulations of a rectangle.

Every cell of an nx-by-ny grid on [0, lx] x [0, ly] is split along the
diagonal from its lower-left to its upper-right corner.  The two resulting
triangles have their right angles at the lower-right and upper-left cell
corners, which is what makes the divided-difference diffusion matrices of
:mod:`chemorep.regularization` act exactly along the mesh axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Vertex classification relative to the rectangle boundary.
INTERIOR = 0
EDGE_X = 1  # on a horizontal edge (bottom/top), outward normal along y
EDGE_Y = 2  # on a vertical edge (left/right), outward normal along x
CORNER = 3

BOUNDARY_KIND_NAMES = {INTERIOR: "interior", EDGE_X: "edge-x", EDGE_Y: "edge-y", CORNER: "corner"}


@dataclass(frozen=True)
class Mesh:
    """Immutable triangulation.

    Attributes:
        nx, ny: cells per axis.
        lx, ly: rectangle side lengths.
        vertices: (n_vertices, 2) coordinates, lexicographic with x fastest.
        triangles: (n_triangles, 3) vertex indices; the right-angle vertex
            comes first and the triple is counterclockwise.
        boundary_kind: (n_vertices,) uint8 of INTERIOR/EDGE_X/EDGE_Y/CORNER.
        h: largest triangle diameter (the common hypotenuse length).
    """

    nx: int
    ny: int
    lx: float
    ly: float
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_kind: np.ndarray
    h: float

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]


def build_structured(nx: int, ny: int, lx: float, ly: float) -> Mesh:
    """Build the uniform triangulation; raises ValueError on bad sizes."""
    if not (isinstance(nx, (int, np.integer)) and isinstance(ny, (int, np.integer))):
        raise ValueError("nx and ny must be integers")
    if nx < 1 or ny < 1:
        raise ValueError(f"nx and ny must be >= 1, got {nx}, {ny}")
    if not (np.isfinite(lx) and np.isfinite(ly)) or lx <= 0 or ly <= 0:
        raise ValueError(f"lx and ly must be positive finite, got {lx}, {ly}")

    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    xg, yg = np.meshgrid(xs, ys)  # row index = iy, column index = ix
    vertices = np.column_stack([xg.ravel(), yg.ravel()])

    def vid(ix, iy):
        return iy * (nx + 1) + ix

    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny))
    ix = ix.ravel()
    iy = iy.ravel()
    a = vid(ix, iy)          # lower-left
    b = vid(ix + 1, iy)      # lower-right
    c = vid(ix + 1, iy + 1)  # upper-right
    d = vid(ix, iy + 1)      # upper-left
    # Diagonal a-c; right-angle vertex first, counterclockwise order.
    lower = np.column_stack([b, c, a])
    upper = np.column_stack([d, a, c])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    all_ix = np.arange(vertices.shape[0]) % (nx + 1)
    all_iy = np.arange(vertices.shape[0]) // (nx + 1)
    vert = (all_ix == 0) | (all_ix == nx)   # on a vertical (left/right) edge
    horiz = (all_iy == 0) | (all_iy == ny)  # on a horizontal (bottom/top) edge
    boundary_kind = np.zeros(vertices.shape[0], dtype=np.uint8)
    boundary_kind[horiz] = EDGE_X
    boundary_kind[vert] = EDGE_Y
    boundary_kind[horiz & vert] = CORNER

    p = vertices[triangles]
    edge_lengths = np.stack([
        np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
        np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
        np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
    ])
    h = float(edge_lengths.max())

    return Mesh(nx=int(nx), ny=int(ny), lx=float(lx), ly=float(ly),
                vertices=vertices, triangles=triangles,
                boundary_kind=boundary_kind, h=h)


def triangle_areas(mesh: Mesh) -> np.ndarray:
    """Signed-area magnitudes of all triangles (positive for CCW triples)."""
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def lumped_weights(mesh: Mesh) -> np.ndarray:
    """Diagonal mass weights: one third of the area incident to each vertex."""
    areas = triangle_areas(mesh)
    w = np.zeros(mesh.n_vertices)
    np.add.at(w, mesh.triangles.ravel(), np.repeat(areas / 3.0, 3))
    return w


def lumped_weight(mesh: Mesh, j: int) -> float:
    """Lumped weight of a single vertex."""
    return float(lumped_weights(mesh)[j])
