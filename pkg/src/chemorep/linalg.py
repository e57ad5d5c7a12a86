"""Sparse solver frontends with accuracy reporting.

Matrices are scipy CSR/CSC throughout (canonical form: sorted indices, no
duplicates).  Both entry points verify the true relative residual
||Ax - b|| / ||b|| after solving and raise :class:`SolverError` when the
requested tolerance is not met, so callers never consume a silently bad
solution.  All paths are deterministic: repeated calls with identical inputs
return bit-identical vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class SolveReport:
    """What a solve did: method tag, iteration count, final relative residual."""

    method: str
    iterations: int
    residual: float


class SolverError(RuntimeError):
    """Raised when no solver path reaches the requested residual."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(f"{message} (method={report.method}, "
                         f"iterations={report.iterations}, residual={report.residual:.3e})")
        self.report = report


def _as_csr(a) -> sparse.csr_matrix:
    m = sparse.csr_matrix(a)
    m.sum_duplicates()
    m.sort_indices()
    return m


def solve_spd(a, b: np.ndarray, tol: float = DEFAULT_TOL,
              x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveReport]:
    """Jacobi-preconditioned conjugate gradients for SPD systems.

    Iterates at most 10*n times and checks the unpreconditioned true
    residual after convergence of the recurrence.
    """
    a = _as_csr(a)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(method="cg-jacobi", iterations=0, residual=0.0)

    d = a.diagonal()
    if np.any(d <= 0.0):
        raise SolverError("non-positive diagonal entry in SPD solve",
                          SolveReport(method="cg-jacobi", iterations=0, residual=np.inf))

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - a @ x
    z = r / d
    rho = float(r @ z)
    pvec = z.copy()
    max_iters = 10 * n
    iters = 0
    # Recurrence target below tol so the true residual check has headroom.
    target = 0.5 * tol * bnorm
    while np.linalg.norm(r) > target and iters < max_iters:
        ap = a @ pvec
        alpha = rho / float(pvec @ ap)
        x += alpha * pvec
        r -= alpha * ap
        z = r / d
        rho_new = float(r @ z)
        pvec = z + (rho_new / rho) * pvec
        rho = rho_new
        iters += 1

    residual = float(np.linalg.norm(b - a @ x) / bnorm)
    report = SolveReport(method="cg-jacobi", iterations=iters, residual=residual)
    if residual > tol:
        raise SolverError("conjugate gradients did not reach tolerance", report)
    return x, report


def solve_general(a, b: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, SolveReport]:
    """Sparse LU first, restarted GMRES as a fallback."""
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(b.shape[0]), SolveReport(method="lu", iterations=0, residual=0.0)

    acsc = sparse.csc_matrix(a)
    acsc.sum_duplicates()
    acsc.sort_indices()
    lu_report = None
    try:
        x = spla.splu(acsc).solve(b)
        residual = float(np.linalg.norm(b - acsc @ x) / bnorm)
        lu_report = SolveReport(method="lu", iterations=1, residual=residual)
        if residual <= tol:
            return x, lu_report
    except RuntimeError:
        lu_report = SolveReport(method="lu", iterations=1, residual=np.inf)

    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    x, info = spla.gmres(acsc, b, rtol=tol, atol=0.0, restart=200, maxiter=5,
                         callback=count, callback_type="pr_norm")
    residual = float(np.linalg.norm(b - acsc @ x) / bnorm)
    report = SolveReport(method="lu+gmres", iterations=iters, residual=residual)
    if info != 0 or residual > tol:
        raise SolverError("direct and iterative solves both failed", report)
    return x, report
