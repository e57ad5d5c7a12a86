import numpy as np
import pytest

from chemorep.mesh import (CORNER, EDGE_X, EDGE_Y, INTERIOR, build_structured,
                           lumped_weights, triangle_areas)


def test_counts_and_extent():
    m = build_structured(4, 3, 2.0, 1.5)
    assert m.n_vertices == 5 * 4
    assert m.n_triangles == 2 * 4 * 3
    assert m.vertices[:, 0].min() == 0.0 and m.vertices[:, 0].max() == 2.0
    assert m.vertices[:, 1].min() == 0.0 and m.vertices[:, 1].max() == 1.5


def test_vertex_ordering_lexicographic_x_fastest():
    m = build_structured(3, 2, 3.0, 2.0)
    for iy in range(3):
        for ix in range(4):
            idx = iy * 4 + ix
            assert m.vertices[idx, 0] == pytest.approx(ix * 1.0)
            assert m.vertices[idx, 1] == pytest.approx(iy * 1.0)


def test_triangles_right_angle_first_and_ccw():
    m = build_structured(5, 4, 2.0, 2.0)
    pts = m.vertices[m.triangles]
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    dots = np.einsum("td,td->t", e1, e2)
    assert np.abs(dots).max() == 0.0
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    assert cross.min() > 0.0


def test_areas_uniform_and_tile():
    m = build_structured(4, 5, 2.0, 2.0)
    areas = triangle_areas(m)
    expected = (2.0 / 4) * (2.0 / 5) / 2.0
    assert np.allclose(areas, expected, rtol=1e-14)
    assert areas.sum() == pytest.approx(4.0, rel=1e-14)


def test_h_is_longest_edge():
    m = build_structured(4, 2, 2.0, 2.0)
    assert m.h == pytest.approx(np.hypot(0.5, 1.0), rel=1e-14)


def test_boundary_classification():
    nx, ny = 5, 3
    m = build_structured(nx, ny, 2.0, 2.0)
    kind = m.boundary_kind
    assert (kind == CORNER).sum() == 4
    assert (kind == EDGE_X).sum() == 2 * (nx - 1)
    assert (kind == EDGE_Y).sum() == 2 * (ny - 1)
    assert (kind == INTERIOR).sum() == (nx - 1) * (ny - 1)
    # spot checks: corner, mid bottom edge (horizontal), mid left edge (vertical)
    assert kind[0] == CORNER
    assert kind[2] == EDGE_X
    assert kind[(nx + 1)] == EDGE_Y
    assert kind[(nx + 1) + 2] == INTERIOR


def test_interior_lumped_weight_is_cell_area():
    nx, ny = 6, 4
    m = build_structured(nx, ny, 2.0, 2.0)
    w = lumped_weights(m)
    assert w.sum() == pytest.approx(4.0, rel=1e-14)
    dx, dy = 2.0 / nx, 2.0 / ny
    interior = m.boundary_kind == INTERIOR
    # each interior vertex touches six triangles contributing area/3 apiece
    assert np.allclose(w[interior], dx * dy, rtol=1e-14)


def test_validation_errors():
    with pytest.raises(ValueError):
        build_structured(0, 2, 2.0, 2.0)
    with pytest.raises(ValueError):
        build_structured(2.5, 2, 2.0, 2.0)
    with pytest.raises(ValueError):
        build_structured(2, 2, -1.0, 2.0)
    with pytest.raises(ValueError):
        build_structured(2, 2, 2.0, float("nan"))
