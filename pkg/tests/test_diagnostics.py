import numpy as np
import pytest

from chemorep.diagnostics import (CSV_COLUMNS, TimeSeriesRow, compute_row,
                                  energy_exact, energy_modified,
                                  exact_entropy_density, mass_consistent,
                                  mass_lumped, negativity, residual_exact)
from chemorep.fem import assemble_operators
from chemorep.mesh import build_structured
from chemorep.regularization import RegParams
from chemorep.schemes import PicardSettings, SchemeState, make_scheme


@pytest.fixture(scope="module")
def grid():
    mesh = build_structured(4, 4, 2.0, 2.0)
    return mesh, assemble_operators(mesh)


def make_state(grid, scheme="uv", **overrides):
    mesh, ops = grid
    n = mesh.n_vertices
    fields = dict(scheme=scheme, n=0, k=1e-3, params=RegParams(eps=1e-3),
                  u=np.ones(n), v=np.ones(n), sigma=None, z=None, w=None)
    fields.update(overrides)
    return SchemeState(**fields)


def test_csv_column_order_is_frozen():
    assert CSV_COLUMNS == ("t", "mass_lumped", "mass_consistent", "v_integral",
                          "E_mod", "E_exact", "RE_exact", "min_u", "neg_norm_u",
                          "picard_iters")


def test_masses_agree_and_match_integral(grid, rng):
    mesh, ops = grid
    u = rng.uniform(0.0, 3.0, mesh.n_vertices)
    ml = mass_lumped(ops, u)
    mc = mass_consistent(ops, u)
    assert ml == pytest.approx(mc, rel=1e-12)
    x = mesh.vertices[:, 0]
    assert mass_lumped(ops, 2.0 * x) == pytest.approx(8.0, rel=1e-12)


def test_exact_entropy_density_values():
    assert exact_entropy_density(np.array([-2.0, 0.0])).tolist() == [1.0, 1.0]
    assert exact_entropy_density(np.array([1.0]))[0] == 0.0
    e = float(np.e)
    assert exact_entropy_density(np.array([e]))[0] == pytest.approx(1.0, rel=1e-12)


def test_energy_exact_of_flat_state_is_zero(grid):
    mesh, ops = grid
    assert energy_exact(ops, make_state(grid)) == pytest.approx(0.0, abs=1e-13)


def test_energy_modified_uzsw_counts_shifted_entropy(grid):
    mesh, ops = grid
    n = mesh.n_vertices
    state = make_state(grid, scheme="uzsw", w=np.ones(n),
                       sigma=np.zeros(2 * n), z=np.zeros(n))
    # w = 1 integrates to the domain area; the flux part is zero
    assert energy_modified(ops, state) == pytest.approx(4.0, rel=1e-12)


def test_energy_modified_dispatch_uv_vs_us(grid, rng):
    mesh, ops = grid
    n = mesh.n_vertices
    u = rng.uniform(0.5, 2.0, n)
    v = rng.uniform(0.5, 2.0, n)
    sig = rng.standard_normal(2 * n)
    e_uv = energy_modified(ops, make_state(grid, scheme="uv", u=u, v=v))
    e_us = energy_modified(ops, make_state(grid, scheme="us", u=u, v=v, sigma=sig))
    # same entropy part, different chemical part
    assert e_us - e_uv == pytest.approx(
        0.5 * ops.sigma_l2_sq(sig) - 0.5 * ops.h1_semi_sq(v), rel=1e-10, abs=1e-10)


def test_negativity_measures_negative_part(grid):
    mesh, ops = grid
    u = np.ones(mesh.n_vertices)
    assert negativity(ops, u) == (1.0, 0.0)
    u[0] = -2.0
    min_u, neg_norm = negativity(ops, u)
    assert min_u == -2.0
    assert neg_norm > 0.0
    # enlarging the dip enlarges the norm
    u2 = u.copy()
    u2[0] = -3.0
    assert negativity(ops, u2)[1] > neg_norm


def test_residual_exact_of_stationary_flat_state(grid):
    mesh, ops = grid
    state = make_state(grid)
    e = energy_exact(ops, state)
    # no change, no gradients: only the sqrt-mobility term of the flat
    # profile remains and it vanishes too
    assert residual_exact(ops, e, e, state) == pytest.approx(0.0, abs=1e-10)


def test_compute_row_initial_and_subsequent(grid):
    mesh, ops = grid
    state = make_state(grid)
    row, e0 = compute_row(ops, state)
    assert isinstance(row, TimeSeriesRow)
    assert row.t == 0.0 and row.re_exact == 0.0 and row.picard_iters == 0
    assert row.mass_lumped == pytest.approx(4.0, rel=1e-12)
    assert row.min_u == 1.0 and row.neg_norm_u == 0.0
    state2 = make_state(grid, n=1)
    row2, _ = compute_row(ops, state2, e0, picard_iters=7)
    assert row2.t == pytest.approx(1e-3)
    assert row2.picard_iters == 7
    assert row2.as_tuple()[-1] == 7


def test_rows_track_a_real_run(grid):
    mesh, ops = grid
    scheme = make_scheme("us", mesh, ops, 1e-3, RegParams(eps=1e-3),
                         PicardSettings(tol=1e-10, max_iters=100))

    def u0(x, y):
        return 2.0 + np.cos(np.pi * x) * np.cos(np.pi * y)

    def v0(x, y):
        return 2.0 - np.cos(np.pi * x) * np.cos(np.pi * y)

    def grad_v0(x, y):
        return (np.pi * np.sin(np.pi * x) * np.cos(np.pi * y),
                np.pi * np.cos(np.pi * x) * np.sin(np.pi * y))

    state = scheme.init_state(u0, v0, grad_v0)
    row, e_prev = compute_row(ops, state)
    masses = [row.mass_lumped]
    e_mods = [row.e_mod]
    for _ in range(4):
        state, rep = scheme.step(state)
        row, e_prev = compute_row(ops, state, e_prev, rep.picard_iters)
        masses.append(row.mass_lumped)
        e_mods.append(row.e_mod)
    assert np.ptp(masses) <= 1e-11 * abs(masses[0])
    assert all(b <= a + 1e-10 for a, b in zip(e_mods, e_mods[1:]))
