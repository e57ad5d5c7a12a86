"""P1 finite-element assembly on triangulated rectangles.

One degree-4 quadrature rule drives every coefficient-weighted integral, in
assembly and in diagnostics alike; the discrete energy laws cancel to
machine precision only because both sides of each coupling are built from
bit-identical element data.  Coupling blocks that must be exact transposes
of each other are assembled once and transposed, never re-assembled.

Scalar fields are coefficient vectors over vertices; vector fields stack
the x block before the y block (length 2 * n_vertices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import linalg
from .mesh import CORNER, EDGE_X, EDGE_Y, Mesh, lumped_weights, triangle_areas


@dataclass(frozen=True)
class QuadratureRule:
    """Symmetric rule on the reference triangle in barycentric form.

    bary: (nq, 3) barycentric coordinates; weights: (nq,) summing to one
    (scale by the element area when integrating).
    """

    bary: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return self.weights.shape[0]


def quadrature_degree4() -> QuadratureRule:
    """Six-point rule exact for polynomials up to total degree 4."""
    a1, b1, w1 = 0.108103018168070, 0.445948490915965, 0.223381589678011
    a2, b2, w2 = 0.816847572980459, 0.091576213509771, 0.109951743655322
    bary = np.array([
        [a1, b1, b1], [b1, a1, b1], [b1, b1, a1],
        [a2, b2, b2], [b2, a2, b2], [b2, b2, a2],
    ])
    weights = np.array([w1, w1, w1, w2, w2, w2])
    return QuadratureRule(bary=bary, weights=weights)


def p1_gradients(mesh: Mesh) -> np.ndarray:
    """Constant basis gradients per triangle, shape (n_triangles, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    grads = np.empty((mesh.n_triangles, 3, 2))
    grads[:, 1, 0] = e2[:, 1] / det
    grads[:, 1, 1] = -e2[:, 0] / det
    grads[:, 2, 0] = -e1[:, 1] / det
    grads[:, 2, 1] = e1[:, 0] / det
    grads[:, 0] = -grads[:, 1] - grads[:, 2]
    return grads


def _scatter_nn(mesh: Mesh, vals: np.ndarray) -> sparse.csr_matrix:
    """Sum (T,3,3) element matrices into an n-by-n CSR matrix."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1)
    cols = np.tile(tri, (1, 3))
    n = mesh.n_vertices
    m = sparse.coo_matrix((vals.reshape(-1), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def assemble_mass(mesh: Mesh) -> sparse.csr_matrix:
    """Consistent mass matrix from the exact element formula."""
    areas = triangle_areas(mesh)
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    vals = areas[:, None, None] * local[None, :, :]
    return _scatter_nn(mesh, vals)


def assemble_stiffness(mesh: Mesh, grads: np.ndarray | None = None) -> sparse.csr_matrix:
    """Stiffness matrix (grad phi_i, grad phi_j)."""
    areas = triangle_areas(mesh)
    if grads is None:
        grads = p1_gradients(mesh)
    vals = areas[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    return _scatter_nn(mesh, vals)


def sigma_constraint_mask(mesh: Mesh) -> np.ndarray:
    """Boolean mask of constrained vector dofs (zero normal trace).

    Vertices on vertical edges pin the x component, vertices on horizontal
    edges pin the y component, corners pin both.
    """
    kind = mesh.boundary_kind
    pin_x = (kind == EDGE_Y) | (kind == CORNER)
    pin_y = (kind == EDGE_X) | (kind == CORNER)
    return np.concatenate([pin_x, pin_y])


class FemOperators:
    """Assembled operators and quadrature data for one mesh.

    Attributes:
        ml: lumped mass weights (one per vertex).
        M, K: consistent mass and stiffness.
        Msig: vector mass, block diagonal [M, M].
        R, D: per-triangle rot/div maps (n_triangles x 2n), element-constant.
        B: R^T W R + D^T W D + Msig with W = diag(areas); its quadratic form
            is the squared graph norm used by the flux-based schemes.
        sigma_free: mask of unconstrained vector dofs.
    """

    def __init__(self, mesh: Mesh, quad: QuadratureRule | None = None):
        self.mesh = mesh
        self.quad = quad if quad is not None else quadrature_degree4()
        self.areas = triangle_areas(mesh)
        self.grads = p1_gradients(mesh)
        pts = mesh.vertices[mesh.triangles]
        self.quad_x = np.einsum("qi,tid->tqd", self.quad.bary, pts)
        self.ml = lumped_weights(mesh)
        self.M = assemble_mass(mesh)
        self.K = assemble_stiffness(mesh, self.grads)
        self.Msig = sparse.block_diag([self.M, self.M], format="csr")
        self.R, self.D = self._assemble_rot_div()
        w = sparse.diags(self.areas)
        b = self.R.T @ w @ self.R + self.D.T @ w @ self.D + self.Msig
        b = sparse.csr_matrix(b)
        b.sum_duplicates()
        b.sort_indices()
        self.B = b
        self.sigma_free = ~sigma_constraint_mask(mesh)

    # -- geometry / evaluation -------------------------------------------------

    def _assemble_rot_div(self) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
        mesh = self.mesh
        n = mesh.n_vertices
        t = mesh.n_triangles
        tri = mesh.triangles
        rows = np.repeat(np.arange(t), 6)
        cols = np.concatenate([tri, tri + n], axis=1).ravel()
        # rot sigma = d(sigma_y)/dx - d(sigma_x)/dy; div sigma likewise constant.
        rot_vals = np.concatenate([-self.grads[:, :, 1], self.grads[:, :, 0]], axis=1).ravel()
        div_vals = np.concatenate([self.grads[:, :, 0], self.grads[:, :, 1]], axis=1).ravel()
        shape = (t, 2 * n)
        r = sparse.coo_matrix((rot_vals, (rows, cols)), shape=shape).tocsr()
        d = sparse.coo_matrix((div_vals, (rows, cols)), shape=shape).tocsr()
        for m in (r, d):
            m.sum_duplicates()
            m.sort_indices()
        return r, d

    def field_at_quad(self, u: np.ndarray) -> np.ndarray:
        """Scalar field values at all quadrature points, shape (T, nq)."""
        return np.einsum("qi,ti->tq", self.quad.bary, u[self.mesh.triangles])

    def sigma_at_quad(self, sig: np.ndarray) -> np.ndarray:
        """Vector field values at quadrature points, shape (T, nq, 2)."""
        n = self.mesh.n_vertices
        tri = self.mesh.triangles
        out = np.empty((self.mesh.n_triangles, self.quad.n_points, 2))
        out[:, :, 0] = np.einsum("qi,ti->tq", self.quad.bary, sig[:n][tri])
        out[:, :, 1] = np.einsum("qi,ti->tq", self.quad.bary, sig[n:][tri])
        return out

    def eval_at_quad(self, f) -> np.ndarray:
        """Evaluate a callable f(x, y) at quadrature points, shape (T, nq)."""
        vals = np.asarray(f(self.quad_x[:, :, 0], self.quad_x[:, :, 1]), dtype=float)
        return np.broadcast_to(vals, self.quad_x[:, :, 0].shape)

    def grad_of_field(self, u: np.ndarray) -> np.ndarray:
        """Element-constant gradient of a P1 field, shape (T, 2)."""
        return np.einsum("ti,tid->td", u[self.mesh.triangles], self.grads)

    # -- norms and products ----------------------------------------------------

    def lumped_product(self, u1: np.ndarray, u2: np.ndarray) -> float:
        """Mass-lumped inner product sum_j ml_j u1_j u2_j."""
        return float(self.ml @ (u1 * u2))

    def l2_sq(self, u: np.ndarray) -> float:
        return float(u @ (self.M @ u))

    def h1_semi_sq(self, u: np.ndarray) -> float:
        return float(u @ (self.K @ u))

    def sigma_l2_sq(self, sig: np.ndarray) -> float:
        return float(sig @ (self.Msig @ sig))

    def sigma_graph_sq(self, sig: np.ndarray) -> float:
        """Quadratic form of B: rot/div seminorms plus the vector mass."""
        return float(sig @ (self.B @ sig))

    def ah_defect_sq(self, v: np.ndarray, tol: float = linalg.DEFAULT_TOL) -> float:
        """|| (A_h - I) v ||_0^2 where A_h is the Neumann operator grad-grad + id.

        The defect has coefficients M^{-1} K v, so the squared norm is
        (K v)^T M^{-1} (K v), evaluated with one consistent-mass solve.
        """
        kv = self.K @ v
        q, _ = linalg.solve_spd(self.M, kv, tol=tol)
        return float(kv @ q)

    # -- coefficient-weighted assembly -----------------------------------------

    def weighted_stiffness(self, c_quad: np.ndarray) -> sparse.csr_matrix:
        """(c grad phi_j, grad phi_i) with c given at quadrature points (T, nq)."""
        cbar = c_quad @ self.quad.weights
        vals = (self.areas * cbar)[:, None, None] * np.einsum("tid,tjd->tij", self.grads, self.grads)
        return _scatter_nn(self.mesh, vals)

    def lambda_stiffness(self, lam: np.ndarray) -> sparse.csr_matrix:
        """(Lam grad phi_j, grad phi_i) for element-constant matrices lam (T, 2, 2)."""
        vals = self.areas[:, None, None] * np.einsum("tid,tde,tje->tij", self.grads, lam, self.grads)
        return _scatter_nn(self.mesh, vals)

    def weighted_mass(self, c_quad: np.ndarray) -> sparse.csr_matrix:
        """(c phi_j, phi_i) with c at quadrature points; bitwise symmetric."""
        q = self.quad
        vals = self.areas[:, None, None] * np.einsum(
            "q,tq,qi,qj->tij", q.weights, c_quad, q.bary, q.bary)
        # einsum's contraction order need not commute in floating point;
        # the energy-equality cancellations want V == V^T at the bit level
        vals = 0.5 * (vals + vals.transpose(0, 2, 1))
        return _scatter_nn(self.mesh, vals)

    def grad_coupling(self, c_quad: np.ndarray) -> sparse.csr_matrix:
        """Vector-against-gradient coupling, shape (2n, n).

        Row (d, i), column j holds int c phi_i d_d(phi_j).  Its transpose is
        the scalar-against-vector-gradient block; callers must transpose this
        one matrix rather than assembling the pair separately.
        """
        mesh = self.mesh
        n = mesh.n_vertices
        tri = mesh.triangles
        q = self.quad
        cphi = np.einsum("q,tq,qi->ti", q.weights, c_quad, q.bary)
        vals = np.einsum("t,ti,tjd->tdij", self.areas, cphi, self.grads)
        rows = np.concatenate([tri, tri + n], axis=1)  # (T, 6): x dofs then y dofs
        rows = np.repeat(rows, 3, axis=1)
        cols = np.tile(tri, (1, 6))
        m = sparse.coo_matrix((vals.reshape(-1), (rows.ravel(), cols.ravel())),
                              shape=(2 * n, n)).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return m

    def load_from_values(self, f_quad: np.ndarray) -> np.ndarray:
        """Load vector int f phi_j from values of f at quadrature points."""
        q = self.quad
        contrib = np.einsum("t,q,tq,qj->tj", self.areas, q.weights, f_quad, q.bary)
        out = np.zeros(self.mesh.n_vertices)
        np.add.at(out, self.mesh.triangles.ravel(), contrib.ravel())
        return out

    def sigma_load_from_values(self, g_quad: np.ndarray) -> np.ndarray:
        """Vector load int g . (phi_j e_d) from g at quadrature points (T, nq, 2)."""
        return np.concatenate([self.load_from_values(g_quad[:, :, 0]),
                               self.load_from_values(g_quad[:, :, 1])])

    def weighted_grad_load(self, c_quad: np.ndarray, gfield: np.ndarray) -> np.ndarray:
        """Load int c (g . grad phi_j) for element-constant g (T, 2)."""
        cbar = c_quad @ self.quad.weights
        contrib = np.einsum("t,tjd,td->tj", self.areas * cbar, self.grads, gfield)
        out = np.zeros(self.mesh.n_vertices)
        np.add.at(out, self.mesh.triangles.ravel(), contrib.ravel())
        return out

    def grad_load_from_values(self, g_quad: np.ndarray) -> np.ndarray:
        """Load int g . grad phi_j from g at quadrature points (T, nq, 2)."""
        q = self.quad
        contrib = np.einsum("t,q,tqd,tjd->tj", self.areas, q.weights, g_quad, self.grads)
        out = np.zeros(self.mesh.n_vertices)
        np.add.at(out, self.mesh.triangles.ravel(), contrib.ravel())
        return out

    def eval_grad_at_quad(self, grad_f) -> np.ndarray:
        """Evaluate a gradient callable returning (gx, gy) arrays, shape (T, nq, 2)."""
        gx, gy = grad_f(self.quad_x[:, :, 0], self.quad_x[:, :, 1])
        gx = np.broadcast_to(np.asarray(gx, dtype=float), self.quad_x[:, :, 0].shape)
        gy = np.broadcast_to(np.asarray(gy, dtype=float), self.quad_x[:, :, 0].shape)
        return np.stack([gx, gy], axis=-1)

    # -- boundary constraints ---------------------------------------------------

    def constrain_sigma_matrix(self, a: sparse.spmatrix) -> sparse.csr_matrix:
        """Zero constrained rows and columns symmetrically, unit diagonal."""
        free = sparse.diags(self.sigma_free.astype(float))
        pinned = sparse.diags((~self.sigma_free).astype(float))
        out = sparse.csr_matrix(free @ a @ free + pinned)
        out.sum_duplicates()
        out.sort_indices()
        return out

    def constrain_sigma_rows(self, a: sparse.spmatrix) -> sparse.csr_matrix:
        """Zero constrained rows of a (2n x n) coupling block."""
        free = sparse.diags(self.sigma_free.astype(float))
        out = sparse.csr_matrix(free @ a)
        out.sum_duplicates()
        out.sort_indices()
        return out

    def constrain_sigma_vector(self, rhs: np.ndarray) -> np.ndarray:
        out = rhs.copy()
        out[~self.sigma_free] = 0.0
        return out


def assemble_operators(mesh: Mesh, quad: QuadratureRule | None = None) -> FemOperators:
    return FemOperators(mesh, quad)


def interp_nodal(mesh: Mesh, f) -> np.ndarray:
    """Vertex interpolant of a callable f(x, y); rejects non-finite values."""
    vals = np.asarray(f(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)
    vals = np.broadcast_to(vals, (mesh.n_vertices,)).astype(float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("initial datum evaluated to a non-finite value")
    return vals


# -- projections ----------------------------------------------------------------


def project_qh(ops: FemOperators, f) -> np.ndarray:
    """Mass-lumped nodal projection: (f, phi_j) / ml_j; preserves the integral."""
    return ops.load_from_values(ops.eval_at_quad(f)) / ops.ml


def project_rh(ops: FemOperators, f, grad_f, tol: float = linalg.DEFAULT_TOL) -> np.ndarray:
    """Elliptic projection through the operator grad-grad + id."""
    load = ops.load_from_values(ops.eval_at_quad(f))
    load += ops.grad_load_from_values(ops.eval_grad_at_quad(grad_f))
    x, _ = linalg.solve_spd(ops.K + ops.M, load, tol=tol)
    return x


def project_l2(ops: FemOperators, f, tol: float = linalg.DEFAULT_TOL) -> np.ndarray:
    """Consistent-mass L2 projection of a callable."""
    x, _ = linalg.solve_spd(ops.M, ops.load_from_values(ops.eval_at_quad(f)), tol=tol)
    return x


def project_l2_sigma(ops: FemOperators, grad_f, tol: float = linalg.DEFAULT_TOL) -> np.ndarray:
    """Constrained vector L2 projection (zero normal trace)."""
    g_quad = ops.eval_grad_at_quad(grad_f)
    load = ops.constrain_sigma_vector(ops.sigma_load_from_values(g_quad))
    a = ops.constrain_sigma_matrix(ops.Msig)
    x, _ = linalg.solve_spd(a, load, tol=tol)
    x[~ops.sigma_free] = 0.0
    return x
