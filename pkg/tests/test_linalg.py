import numpy as np
import pytest
import scipy.sparse as sparse

from chemorep.linalg import (DEFAULT_TOL, SolveReport, SolverError, solve_general,
                             solve_spd)


def random_spd(rng, n):
    a = rng.standard_normal((n, n))
    return sparse.csr_matrix(a @ a.T + n * np.eye(n))


def test_spd_solve_matches_dense(rng):
    for n in (3, 10, 40):
        a = random_spd(rng, n)
        b = rng.standard_normal(n)
        x, report = solve_spd(a, b, tol=1e-12)
        assert np.allclose(x, np.linalg.solve(a.toarray(), b), rtol=1e-8, atol=1e-10)
        assert np.linalg.norm(a @ x - b) <= 1e-12 * np.linalg.norm(b)
        assert isinstance(report, SolveReport)
        assert report.iterations <= 10 * n


def test_spd_solve_zero_rhs_short_circuit(rng):
    a = random_spd(rng, 5)
    x, report = solve_spd(a, np.zeros(5), tol=1e-12)
    assert (x == 0.0).all()
    assert report.iterations == 0


def test_spd_solve_deterministic(rng):
    a = random_spd(rng, 20)
    b = rng.standard_normal(20)
    x1, _ = solve_spd(a, b, tol=1e-12)
    x2, _ = solve_spd(a, b, tol=1e-12)
    assert np.array_equal(x1, x2)


def test_spd_solve_warm_start(rng):
    a = random_spd(rng, 15)
    b = rng.standard_normal(15)
    x, _ = solve_spd(a, b, tol=1e-12)
    x2, report = solve_spd(a, b, tol=1e-12, x0=x)
    assert report.iterations <= 1
    assert np.linalg.norm(a @ x2 - b) <= 1e-12 * np.linalg.norm(b)


def test_spd_solve_rejects_nonpositive_diagonal():
    a = sparse.csr_matrix(np.array([[1.0, 0.0], [0.0, -2.0]]))
    with pytest.raises(SolverError):
        solve_spd(a, np.ones(2), tol=1e-12)


def test_spd_solve_reports_failure_when_tolerance_unreachable(rng):
    # 1e-30 relative residual is impossible in double precision, so the
    # iteration budget runs out and the true-residual check must raise
    a = random_spd(rng, 20)
    with pytest.raises(SolverError) as exc_info:
        solve_spd(a, rng.standard_normal(20), tol=1e-30)
    assert exc_info.value.report.residual > 1e-30


def test_general_solve_matches_dense(rng):
    for n in (4, 25):
        a = sparse.csr_matrix(rng.standard_normal((n, n)) + n * np.eye(n))
        b = rng.standard_normal(n)
        x, report = solve_general(a, b, tol=1e-12)
        assert np.allclose(x, np.linalg.solve(a.toarray(), b), rtol=1e-9, atol=1e-11)
        assert report.method in ("lu", "lu+gmres")


def test_general_solve_deterministic(rng):
    a = sparse.csr_matrix(rng.standard_normal((12, 12)) + 12 * np.eye(12))
    b = rng.standard_normal(12)
    assert np.array_equal(solve_general(a, b, tol=1e-12)[0],
                          solve_general(a, b, tol=1e-12)[0])


def test_general_solve_singular_matrix_raises(rng):
    a = np.zeros((3, 3))
    a[0, 0] = 1.0
    a[1, 1] = 1.0
    with pytest.raises(SolverError):
        solve_general(sparse.csr_matrix(a), np.array([1.0, 1.0, 1.0]), tol=1e-12)


def test_default_tolerance_value():
    assert DEFAULT_TOL == 1e-12
