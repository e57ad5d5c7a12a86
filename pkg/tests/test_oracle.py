"""Self-checks for the dense reference assembler against closed-form values.

Everything here is validated against hand-computable quantities (factorial
formulas for monomial integrals, textbook element matrices, affine fields),
so the reference path never depends on the production code it later judges.
"""

import math

import numpy as np
import pytest

from chemorep import oracle
from chemorep.mesh import build_structured


def monomial_integral(a, b):
    # over the reference triangle {x,y >= 0, x+y <= 1}
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def test_tensor_rule_exact_to_degree_10():
    bary, w = oracle.tensor_rule(6)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    x, y = bary[:, 1], bary[:, 2]
    for a in range(11):
        for b in range(11 - a):
            got = float(w @ (x ** a * y ** b)) * 0.5
            assert got == pytest.approx(monomial_integral(a, b), rel=1e-13), (a, b)


def test_degree4_rule_exact_to_degree_4():
    bary, w = oracle.degree4_rule()
    assert bary.shape[0] == 6
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert (w > 0).all() and (bary >= 0).all() and (bary <= 1).all()
    x, y = bary[:, 1], bary[:, 2]
    for a in range(5):
        for b in range(5 - a):
            got = float(w @ (x ** a * y ** b)) * 0.5
            assert got == pytest.approx(monomial_integral(a, b), rel=1e-13), (a, b)


def test_mass_and_stiffness_match_textbook_element_forms():
    m = build_structured(1, 1, 2.0, 2.0)
    area = 2.0
    mass_el = area / 12.0 * (np.ones((3, 3)) + np.eye(3))
    # right triangle with legs of equal length, right angle listed first
    stiff_el = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    mass_ref = np.zeros((4, 4))
    stiff_ref = np.zeros((4, 4))
    for tri in m.triangles:
        mass_ref[np.ix_(tri, tri)] += mass_el
        stiff_ref[np.ix_(tri, tri)] += stiff_el
    assert np.abs(oracle.mass(m) - mass_ref).max() < 1e-14
    assert np.abs(oracle.stiffness(m) - stiff_ref).max() < 1e-14


def test_lumped_is_mass_row_sums():
    m = build_structured(3, 2, 2.0, 2.0)
    assert np.abs(oracle.lumped(m) - oracle.mass(m).sum(axis=1)).max() < 1e-14
    assert oracle.lumped(m).sum() == pytest.approx(4.0, rel=1e-14)


def test_weighted_forms_reduce_to_plain_for_unit_coefficient():
    m = build_structured(2, 2, 2.0, 2.0)
    one = oracle.constant_coefficient(1.0)
    assert np.abs(oracle.weighted_mass(m, one) - oracle.mass(m)).max() < 1e-13
    assert np.abs(oracle.weighted_stiffness(m, one) - oracle.stiffness(m)).max() < 1e-13
    eye = np.broadcast_to(np.eye(2), (m.n_triangles, 2, 2))
    assert np.abs(oracle.lambda_stiffness(m, eye) - oracle.stiffness(m)).max() < 1e-13


def test_weighted_mass_of_affine_coefficient():
    # int (x) phi_i phi_j summed over all i,j equals int x over the square
    m = build_structured(2, 2, 2.0, 2.0)
    g = oracle.weighted_mass(m, oracle.function_coefficient(lambda x, y: x))
    assert g.sum() == pytest.approx(4.0, rel=1e-13)


def test_vector_mass_is_block_diagonal():
    m = build_structured(2, 2, 2.0, 2.0)
    mv = oracle.vector_mass(m)
    n = m.n_vertices
    assert np.abs(mv[:n, :n] - oracle.mass(m)).max() < 1e-14
    assert np.abs(mv[n:, n:] - oracle.mass(m)).max() < 1e-14
    assert np.abs(mv[:n, n:]).max() == 0.0


def test_rot_div_of_affine_fields():
    m = build_structured(3, 3, 2.0, 2.0)
    x, y = m.vertices[:, 0], m.vertices[:, 1]
    rot, div = oracle.rot_div_of(m, np.concatenate([y - 1.0, np.zeros_like(x)]))
    assert np.allclose(rot, -1.0, atol=1e-14)
    assert np.allclose(div, 0.0, atol=1e-14)
    rot, div = oracle.rot_div_of(m, np.concatenate([x, y]))
    assert np.allclose(rot, 0.0, atol=1e-14)
    assert np.allclose(div, 2.0, atol=1e-14)


def test_graph_matrix_quadratic_form_on_affine_field():
    # sigma = (y-1, 0): rot = -1, div = 0, and int |sigma|^2 = int (y-1)^2 = 4/3
    m = build_structured(2, 2, 2.0, 2.0)
    y = m.vertices[:, 1]
    sig = np.concatenate([y - 1.0, np.zeros_like(y)])
    b = oracle.graph_matrix(m)
    assert float(sig @ b @ sig) == pytest.approx(4.0 + 4.0 / 3.0, rel=1e-13)


def test_load_of_one_is_lumped_and_qh_of_constant_is_constant():
    m = build_structured(3, 2, 2.0, 2.0)
    one = lambda x, y: 1.0
    assert np.abs(oracle.load(m, one) - oracle.lumped(m)).max() < 1e-13
    assert np.allclose(oracle.qh_projection(m, lambda x, y: 3.5), 3.5, rtol=1e-13)


def test_p1_value_reproduces_affines():
    m = build_structured(2, 2, 2.0, 2.0)
    nodal = 2.0 * m.vertices[:, 0] - 0.5 * m.vertices[:, 1] + 1.0
    for t in (0, 3, 5):
        pts = m.vertices[m.triangles[t]]
        cx, cy = pts.mean(axis=0)
        assert oracle.p1_value(m, nodal, t, cx, cy) == pytest.approx(
            2.0 * cx - 0.5 * cy + 1.0, rel=1e-13)


def test_sigma_constrained_dofs_counts():
    m = build_structured(2, 2, 2.0, 2.0)
    pinned = oracle.sigma_constrained_dofs(m)
    n = m.n_vertices
    assert pinned.shape == (2 * n,)
    # four corners pin both components; two mid-edge nodes per direction pin one
    assert pinned[:n].sum() == 6
    assert pinned[n:].sum() == 6


def test_vertex_guard_refuses_large_meshes():
    with pytest.raises(ValueError):
        oracle.mass(build_structured(20, 20, 2.0, 2.0))
