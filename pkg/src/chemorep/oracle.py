"""Dense reference implementations used only by the test suite.

Everything here recomputes what the production assembly produces, through a
deliberately different route: tensor Gauss quadrature mapped to the triangle
(exact far past what the production rule needs), basis functions recovered
by inverting per-element Vandermonde systems, dense matrices filled entry by
entry.  No assembly code is shared with :mod:`chemorep.fem`.

These routines are dense and slow on purpose; they refuse meshes with more
than 200 vertices.
"""

from __future__ import annotations

import numpy as np

from .mesh import CORNER, EDGE_X, EDGE_Y, Mesh
from .regularization import f_eps, fp_eps, lambda_eps

MAX_VERTICES = 200


def _guard(mesh: Mesh):
    if mesh.n_vertices > MAX_VERTICES:
        raise ValueError(f"oracle routines accept at most {MAX_VERTICES} vertices, "
                         f"got {mesh.n_vertices}")


def tensor_rule(n: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed-square Gauss rule on the reference triangle.

    Returns barycentric coordinates (n*n, 3) and weights summing to one;
    exact for total degree up to 2n - 2.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wx, we = np.meshgrid(w, w, indexing="ij")
    px = xi.ravel()
    py = (eta * (1.0 - xi)).ravel()
    weights = (wx * we * (1.0 - xi)).ravel()  # Jacobian of the collapse
    bary = np.column_stack([1.0 - px - py, px, py])
    return bary, weights / weights.sum()


def degree4_rule() -> tuple[np.ndarray, np.ndarray]:
    """Own copy of the production six-point rule for exact-value comparisons."""
    a1, b1, w1 = 0.108103018168070, 0.445948490915965, 0.223381589678011
    a2, b2, w2 = 0.816847572980459, 0.091576213509771, 0.109951743655322
    bary = np.array([
        [a1, b1, b1], [b1, a1, b1], [b1, b1, a1],
        [a2, b2, b2], [b2, a2, b2], [b2, b2, a2],
    ])
    return bary, np.array([w1, w1, w1, w2, w2, w2])


def _element(mesh: Mesh, t: int):
    """Vertex coords, area, affine basis coefficients of one triangle.

    coeffs[:, i] holds (c0, cx, cy) with phi_i = c0 + cx x + cy y.
    """
    pts = mesh.vertices[mesh.triangles[t]]
    vand = np.column_stack([np.ones(3), pts])
    coeffs = np.linalg.inv(vand)
    e1, e2 = pts[1] - pts[0], pts[2] - pts[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    return pts, area, coeffs


def _basis_at(coeffs: np.ndarray, x: float, y: float) -> np.ndarray:
    return coeffs[0] + coeffs[1] * x + coeffs[2] * y


def p1_value(mesh: Mesh, nodal: np.ndarray, t: int, x: float, y: float) -> float:
    """Evaluate the P1 interpolant of nodal values inside triangle t."""
    _, _, coeffs = _element(mesh, t)
    return float(_basis_at(coeffs, x, y) @ nodal[mesh.triangles[t]])


def p1_coefficient(mesh: Mesh, nodal: np.ndarray):
    """Coefficient callable (t, x, y) -> value for the weighted assemblies."""

    def coeff(t, x, y):
        return p1_value(mesh, nodal, t, x, y)

    return coeff


def constant_coefficient(value: float):
    def coeff(t, x, y):
        return value

    return coeff


def function_coefficient(f):
    def coeff(t, x, y):
        return float(f(x, y))

    return coeff


# -- dense assemblies -------------------------------------------------------------


def mass(mesh: Mesh, n_gauss: int = 6) -> np.ndarray:
    return weighted_mass(mesh, constant_coefficient(1.0), n_gauss)


def lumped(mesh: Mesh, n_gauss: int = 6) -> np.ndarray:
    """Dense lumped weights: integral of each hat function."""
    _guard(mesh)
    bary, wq = tensor_rule(n_gauss)
    out = np.zeros(mesh.n_vertices)
    for t in range(mesh.n_triangles):
        pts, area, coeffs = _element(mesh, t)
        for lam, w in zip(bary, wq):
            x, y = lam @ pts
            out[mesh.triangles[t]] += area * w * _basis_at(coeffs, x, y)
    return out


def stiffness(mesh: Mesh) -> np.ndarray:
    return weighted_stiffness(mesh, constant_coefficient(1.0))


def weighted_mass(mesh: Mesh, coeff, n_gauss: int = 6) -> np.ndarray:
    _guard(mesh)
    bary, wq = tensor_rule(n_gauss)
    n = mesh.n_vertices
    out = np.zeros((n, n))
    for t in range(mesh.n_triangles):
        pts, area, coeffs = _element(mesh, t)
        idx = mesh.triangles[t]
        for lam, w in zip(bary, wq):
            x, y = lam @ pts
            phi = _basis_at(coeffs, x, y)
            c = coeff(t, x, y)
            out[np.ix_(idx, idx)] += area * w * c * np.outer(phi, phi)
    return out


def weighted_stiffness(mesh: Mesh, coeff, n_gauss: int = 6) -> np.ndarray:
    _guard(mesh)
    bary, wq = tensor_rule(n_gauss)
    n = mesh.n_vertices
    out = np.zeros((n, n))
    for t in range(mesh.n_triangles):
        pts, area, coeffs = _element(mesh, t)
        idx = mesh.triangles[t]
        grads = coeffs[1:, :].T  # (3, 2) rows are basis gradients
        gg = grads @ grads.T
        for lam, w in zip(bary, wq):
            x, y = lam @ pts
            out[np.ix_(idx, idx)] += area * w * coeff(t, x, y) * gg
    return out


def lambda_stiffness(mesh: Mesh, matrices: np.ndarray) -> np.ndarray:
    """Dense (Lam grad phi_j, grad phi_i) for element-constant matrices."""
    _guard(mesh)
    n = mesh.n_vertices
    out = np.zeros((n, n))
    for t in range(mesh.n_triangles):
        pts, area, coeffs = _element(mesh, t)
        idx = mesh.triangles[t]
        grads = coeffs[1:, :].T
        out[np.ix_(idx, idx)] += area * (grads @ matrices[t] @ grads.T)
    return out


def vector_mass(mesh: Mesh, n_gauss: int = 6) -> np.ndarray:
    m = mass(mesh, n_gauss)
    n = mesh.n_vertices
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = m
    out[n:, n:] = m
    return out


def graph_matrix(mesh: Mesh, n_gauss: int = 6) -> np.ndarray:
    """Dense rot-rot + div-div + vector mass."""
    _guard(mesh)
    n = mesh.n_vertices
    out = vector_mass(mesh, n_gauss)
    for t in range(mesh.n_triangles):
        pts, area, coeffs = _element(mesh, t)
        idx = mesh.triangles[t]
        grads = coeffs[1:, :].T
        # rot(phi e_x) = -dphi/dy, rot(phi e_y) = dphi/dx; div analogous.
        rot = np.concatenate([-grads[:, 1], grads[:, 0]])
        div = np.concatenate([grads[:, 0], grads[:, 1]])
        dofs = np.concatenate([idx, idx + n])
        out[np.ix_(dofs, dofs)] += area * (np.outer(rot, rot) + np.outer(div, div))
    return out


def rot_div_of(mesh: Mesh, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Element-constant rot and div of a vector field, shapes (T,), (T,)."""
    _guard(mesh)
    n = mesh.n_vertices
    rot = np.zeros(mesh.n_triangles)
    div = np.zeros(mesh.n_triangles)
    for t in range(mesh.n_triangles):
        _, _, coeffs = _element(mesh, t)
        idx = mesh.triangles[t]
        grads = coeffs[1:, :].T
        sx = sigma[idx]
        sy = sigma[idx + n]
        rot[t] = grads[:, 0] @ sy - grads[:, 1] @ sx
        div[t] = grads[:, 0] @ sx + grads[:, 1] @ sy
    return rot, div


def grad_coupling(mesh: Mesh, coeff, n_gauss: int = 6) -> np.ndarray:
    """Dense (2n, n) block with entry ((d,i), j) = int c phi_i d_d(phi_j)."""
    _guard(mesh)
    bary, wq = tensor_rule(n_gauss)
    n = mesh.n_vertices
    out = np.zeros((2 * n, n))
    for t in range(mesh.n_triangles):
        pts, area, coeffs = _element(mesh, t)
        idx = mesh.triangles[t]
        grads = coeffs[1:, :].T
        for lam, w in zip(bary, wq):
            x, y = lam @ pts
            phi = _basis_at(coeffs, x, y)
            c = coeff(t, x, y)
            for d in range(2):
                out[np.ix_(idx + d * n, idx)] += area * w * c * np.outer(phi, grads[:, d])
    return out


def load(mesh: Mesh, f, rule=None) -> np.ndarray:
    """Dense load vector int f phi_j; default rule is the production-degree copy."""
    _guard(mesh)
    bary, wq = degree4_rule() if rule is None else rule
    out = np.zeros(mesh.n_vertices)
    for t in range(mesh.n_triangles):
        pts, area, coeffs = _element(mesh, t)
        for lam, w in zip(bary, wq):
            x, y = lam @ pts
            out[mesh.triangles[t]] += area * w * float(f(x, y)) * _basis_at(coeffs, x, y)
    return out


def qh_projection(mesh: Mesh, f) -> np.ndarray:
    """Dense mass-lumped projection with the production-degree rule copy."""
    ml = np.zeros(mesh.n_vertices)
    bary, wq = degree4_rule()
    for t in range(mesh.n_triangles):
        pts, area, coeffs = _element(mesh, t)
        for lam, w in zip(bary, wq):
            x, y = lam @ pts
            ml[mesh.triangles[t]] += area * w * _basis_at(coeffs, x, y)
    return load(mesh, f) / ml


def sigma_constrained_dofs(mesh: Mesh) -> np.ndarray:
    """Independent recomputation of the pinned vector dofs."""
    kind = mesh.boundary_kind
    pin_x = (kind == EDGE_Y) | (kind == CORNER)
    pin_y = (kind == EDGE_X) | (kind == CORNER)
    return np.concatenate([pin_x, pin_y])


# -- dense energy-law recomputation -------------------------------------------------


def _defect_sq(m: np.ndarray, kmat: np.ndarray, v: np.ndarray) -> float:
    kv = kmat @ v
    return float(kv @ np.linalg.solve(m, kv))


def uv_law(mesh: Mesh, prev, new) -> dict:
    """Dense recomputation of the mobility scheme's step identity and law."""
    _guard(mesh)
    p = new.params
    k = new.k
    m = mass(mesh)
    kmat = stiffness(mesh)
    ml = lumped(mesh)
    u0, v0, u1, v1 = prev.u, prev.v, new.u, new.v
    fp1 = fp_eps(u1, p)
    t_entropy = float(ml @ ((u1 - u0) / k * fp1))
    # The mobility form equals (grad interp F', grad u) on these meshes.
    t_mobility = float(fp1 @ (kmat @ u1))
    dt_energy = 0.5 * (float(v1 @ kmat @ v1) - float(v0 @ kmat @ v0)) / k
    t_numdiss = 0.5 / k * float((v1 - v0) @ kmat @ (v1 - v0))
    t_defect = _defect_sq(m, kmat, v1)
    t_grad_v = float(v1 @ kmat @ v1)
    identity_residual = t_entropy + t_mobility + dt_energy + t_numdiss + t_defect + t_grad_v
    e0 = float(ml @ f_eps(u0, p)) + 0.5 * float(v0 @ kmat @ v0)
    e1 = float(ml @ f_eps(u1, p)) + 0.5 * float(v1 @ kmat @ v1)
    du = u1 - u0
    law_lhs = ((e1 - e0) / k + p.eps * 0.5 / k * float(du @ m @ du) + t_numdiss
               + p.eps * float(u1 @ kmat @ u1) + t_defect + t_grad_v)
    return {"identity_residual": identity_residual, "law_lhs": law_lhs,
            "e_mod_prev": e0, "e_mod_new": e1,
            "t_entropy": t_entropy, "t_mobility": t_mobility, "dt_energy": dt_energy,
            "t_numdiss": t_numdiss, "t_defect": t_defect, "t_grad_v": t_grad_v}


def us_law(mesh: Mesh, prev, new) -> dict:
    """Dense recomputation of the flux scheme's step identity and law."""
    _guard(mesh)
    p = new.params
    k = new.k
    m = mass(mesh)
    kmat = stiffness(mesh)
    ml = lumped(mesh)
    msig = vector_mass(mesh)
    b = graph_matrix(mesh)
    u0, s0, u1, s1 = prev.u, prev.sigma, new.u, new.sigma
    fp1 = fp_eps(u1, p)
    t_entropy = float(ml @ ((u1 - u0) / k * fp1))

    def lam_coeff(t, x, y):
        return lambda_eps(p1_value(mesh, u1, t, x, y), p)

    k_lam = weighted_stiffness(mesh, lam_coeff)
    t_mobility = float(fp1 @ k_lam @ fp1)
    dt_energy = 0.5 * (float(s1 @ msig @ s1) - float(s0 @ msig @ s0)) / k
    ds = s1 - s0
    t_numdiss = 0.5 / k * float(ds @ msig @ ds)
    t_graph = float(s1 @ b @ s1)
    identity_residual = t_entropy + t_mobility + dt_energy + t_numdiss + t_graph
    e0 = float(ml @ f_eps(u0, p)) + 0.5 * float(s0 @ msig @ s0)
    e1 = float(ml @ f_eps(u1, p)) + 0.5 * float(s1 @ msig @ s1)
    du = u1 - u0
    law_lhs = ((e1 - e0) / k + p.eps * 0.5 / k * float(du @ m @ du) + t_numdiss
               + t_mobility + t_graph)
    return {"identity_residual": identity_residual, "law_lhs": law_lhs,
            "e_mod_prev": e0, "e_mod_new": e1,
            "t_entropy": t_entropy, "t_mobility": t_mobility, "dt_energy": dt_energy,
            "t_numdiss": t_numdiss, "t_graph": t_graph}


def uzsw_law(mesh: Mesh, prev, new) -> dict:
    """Dense recomputation of the four-field scheme's energy equality."""
    _guard(mesh)
    p = new.params
    k = new.k
    m = mass(mesh)
    msig = vector_mass(mesh)
    b = graph_matrix(mesh)

    def lam_coeff(t, x, y):
        return lambda_eps(p1_value(mesh, prev.u, t, x, y), p)

    k_lam = weighted_stiffness(mesh, lam_coeff)
    t_mobility = float(new.z @ k_lam @ new.z)
    w0, w1, s0, s1 = prev.w, new.w, prev.sigma, new.sigma
    e0 = float(w0 @ m @ w0) + 0.5 * float(s0 @ msig @ s0)
    e1 = float(w1 @ m @ w1) + 0.5 * float(s1 @ msig @ s1)
    dw = w1 - w0
    ds = s1 - s0
    t_numdiss_w = float(dw @ m @ dw) / k
    t_numdiss = 0.5 / k * float(ds @ msig @ ds)
    t_graph = float(s1 @ b @ s1)
    residual = (e1 - e0) / k + t_numdiss_w + t_numdiss + t_mobility + t_graph
    return {"identity_residual": residual, "law_lhs": residual,
            "e_mod_prev": e0, "e_mod_new": e1,
            "t_mobility": t_mobility, "dt_energy": (e1 - e0) / k,
            "t_numdiss_w": t_numdiss_w, "t_numdiss": t_numdiss, "t_graph": t_graph}


LAW_EVALUATORS = {"uv": uv_law, "us": us_law, "uzsw": uzsw_law}
