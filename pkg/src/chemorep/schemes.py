"""Four fully discrete time steppers for the chemo-repulsion system.

All schemes advance the same PDE pair but differ in unknowns and structure:

- UV: mass-lumped u with a secant mobility matrix, implicit v; nonlinear
  steps resolved by a Picard loop (v-solve first, then u-solve).
- US: u coupled to the flux-like variable sigma = grad v with zero normal
  trace; the Picard loop carries a vanishing Laplacian stabilization.
- UZSW: a linear one-solve scheme in (u, z, sigma, w) built so that an exact
  energy equality holds at every step.
- BEUV: plain backward Euler with consistent mass and the unregularized
  coupling; no stability structure, diverging runs abort.

Each step returns a fresh state plus a report of the iteration work.  The
nonlinear loops stop when the largest relative L2 increment of the iterated
fields drops to the configured tolerance, and raise :class:`StepError` with
the increment history when the budget runs out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import fem, linalg
from .fem import FemOperators
from .mesh import Mesh
from .regularization import RegParams, element_lambda_all, f_eps, fp_eps, lambda_eps

SCHEME_NAMES = ("uv", "us", "uzsw", "beuv")


@dataclass(frozen=True)
class PicardSettings:
    """Fixed-point iteration control for the nonlinear schemes."""

    tol: float = 1e-4
    max_iters: int = 100

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError(f"picard tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"picard max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class StepReport:
    """Work done by one time step."""

    picard_iters: int
    final_increment: float
    history: tuple[float, ...] = ()


class StepError(RuntimeError):
    """A time step failed (non-convergence or a diverged field)."""

    def __init__(self, message: str, history: tuple[float, ...] = ()):
        if history:
            message = f"{message}; relative increments per iteration: " + \
                ", ".join(f"{h:.3e}" for h in history)
        super().__init__(message)
        self.history = history


@dataclass
class SchemeState:
    """Discrete fields after n steps of size k.

    v is the chemical field: intrinsic for UV/BEUV, recovered for US/UZSW.
    sigma stacks the x block before the y block; z and w only exist for the
    four-field scheme.
    """

    scheme: str
    n: int
    k: float
    params: RegParams
    u: np.ndarray
    v: np.ndarray
    sigma: np.ndarray | None = None
    z: np.ndarray | None = None
    w: np.ndarray | None = None

    @property
    def t(self) -> float:
        return self.n * self.k


def _rel_increment(ops: FemOperators, new: np.ndarray, old: np.ndarray,
                   vector: bool = False) -> float:
    form = ops.sigma_l2_sq if vector else ops.l2_sq
    denom = np.sqrt(form(old))
    return float(np.sqrt(form(new - old)) / max(denom, np.finfo(float).tiny))


def _check_finite(name: str, *fields: np.ndarray):
    for f in fields:
        if not np.all(np.isfinite(f)):
            raise StepError(f"scheme {name} produced a non-finite field (diverged)")


class _SchemeBase:
    name = ""

    def __init__(self, mesh: Mesh, ops: FemOperators, k: float, params: RegParams,
                 picard: PicardSettings | None = None,
                 solver_tol: float = linalg.DEFAULT_TOL):
        if not k > 0.0:
            raise ValueError(f"time step k must be positive, got {k}")
        self.mesh = mesh
        self.ops = ops
        self.k = float(k)
        self.params = params
        self.picard = picard if picard is not None else PicardSettings()
        self.solver_tol = solver_tol
        # Chemical equation operator (time derivative + grad-grad + id).
        self.a_v = sparse.csr_matrix(ops.M / self.k + ops.K + ops.M)
        self.a_v.sum_duplicates()
        self.a_v.sort_indices()

    def recover_v(self, v_prev: np.ndarray, u_new: np.ndarray) -> np.ndarray:
        """One backward Euler step of the chemical equation driven by u_new."""
        rhs = self.ops.M @ (v_prev / self.k + u_new)
        v, _ = linalg.solve_spd(self.a_v, rhs, tol=self.solver_tol, x0=v_prev)
        return v

    def _base_state(self, u0, v0, grad_v0) -> tuple[np.ndarray, np.ndarray]:
        u = fem.project_qh(self.ops, u0)
        v = fem.project_rh(self.ops, v0, grad_v0, tol=self.solver_tol)
        return u, v


class UVScheme(_SchemeBase):
    """Mass-lumped scheme with the secant mobility matrix in the drift."""

    name = "uv"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        ops = self.ops
        self.a_u = sparse.csr_matrix(sparse.diags(ops.ml / self.k) + ops.K)
        self.a_u.sum_duplicates()
        self.a_u.sort_indices()

    def init_state(self, u0, v0, grad_v0) -> SchemeState:
        u, v = self._base_state(u0, v0, grad_v0)
        return SchemeState(scheme=self.name, n=0, k=self.k, params=self.params, u=u, v=v)

    def step(self, state: SchemeState) -> tuple[SchemeState, StepReport]:
        ops = self.ops
        k = self.k
        u_prev, v_prev = state.u, state.v
        rhs_v_base = ops.M @ (v_prev / k)
        rhs_u_base = ops.ml * u_prev / k
        u_l, v_l = u_prev, v_prev
        history = []
        for _ in range(self.picard.max_iters):
            v_new, _ = linalg.solve_spd(self.a_v, rhs_v_base + ops.M @ u_l,
                                        tol=self.solver_tol, x0=v_l)
            lam = element_lambda_all(self.mesh, u_l, self.params)
            drift = ops.lambda_stiffness(lam)
            u_new, _ = linalg.solve_spd(self.a_u, rhs_u_base - drift @ v_new,
                                        tol=self.solver_tol, x0=u_l)
            inc = max(_rel_increment(ops, u_new, u_l), _rel_increment(ops, v_new, v_l))
            history.append(inc)
            u_l, v_l = u_new, v_new
            if inc <= self.picard.tol:
                _check_finite(self.name, u_new, v_new)
                new = SchemeState(scheme=self.name, n=state.n + 1, k=k,
                                  params=self.params, u=u_new, v=v_new)
                return new, StepReport(len(history), inc, tuple(history))
        raise StepError(f"scheme uv: no Picard convergence within "
                        f"{self.picard.max_iters} iterations", tuple(history))


class BEUVScheme(_SchemeBase):
    """Backward Euler with consistent mass and unregularized drift."""

    name = "beuv"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        ops = self.ops
        self.a_u = sparse.csr_matrix(ops.M / self.k + ops.K)
        self.a_u.sum_duplicates()
        self.a_u.sort_indices()

    def init_state(self, u0, v0, grad_v0) -> SchemeState:
        u, v = self._base_state(u0, v0, grad_v0)
        return SchemeState(scheme=self.name, n=0, k=self.k, params=self.params, u=u, v=v)

    def step(self, state: SchemeState) -> tuple[SchemeState, StepReport]:
        ops = self.ops
        k = self.k
        u_prev, v_prev = state.u, state.v
        rhs_v_base = ops.M @ (v_prev / k)
        rhs_u_base = ops.M @ (u_prev / k)
        u_l, v_l = u_prev, v_prev
        history = []
        for _ in range(self.picard.max_iters):
            v_new, _ = linalg.solve_spd(self.a_v, rhs_v_base + ops.M @ u_l,
                                        tol=self.solver_tol, x0=v_l)
            load = ops.weighted_grad_load(ops.field_at_quad(u_l), ops.grad_of_field(v_new))
            u_new, _ = linalg.solve_spd(self.a_u, rhs_u_base - load,
                                        tol=self.solver_tol, x0=u_l)
            _check_finite(self.name, u_new, v_new)
            inc = max(_rel_increment(ops, u_new, u_l), _rel_increment(ops, v_new, v_l))
            history.append(inc)
            u_l, v_l = u_new, v_new
            if inc <= self.picard.tol:
                new = SchemeState(scheme=self.name, n=state.n + 1, k=k,
                                  params=self.params, u=u_new, v=v_new)
                return new, StepReport(len(history), inc, tuple(history))
        raise StepError(f"scheme beuv: no Picard convergence within "
                        f"{self.picard.max_iters} iterations", tuple(history))


class USScheme(_SchemeBase):
    """Flux scheme: u plus the projected gradient sigma with zero normal trace."""

    name = "us"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        ops = self.ops
        self.a_u = sparse.csr_matrix(sparse.diags(ops.ml / self.k) + ops.K)
        self.a_u.sum_duplicates()
        self.a_u.sort_indices()
        self.a_sigma = ops.constrain_sigma_matrix(ops.Msig / self.k + ops.B)

    def init_state(self, u0, v0, grad_v0) -> SchemeState:
        u, v = self._base_state(u0, v0, grad_v0)
        sig = fem.project_l2_sigma(self.ops, grad_v0, tol=self.solver_tol)
        return SchemeState(scheme=self.name, n=0, k=self.k, params=self.params,
                           u=u, v=v, sigma=sig)

    def step(self, state: SchemeState) -> tuple[SchemeState, StepReport]:
        ops = self.ops
        k = self.k
        u_prev, sig_prev = state.u, state.sigma
        rhs_u_base = ops.ml * u_prev / k
        rhs_sig_base = ops.constrain_sigma_vector(ops.Msig @ (sig_prev / k))
        u_l, sig_l = u_prev, sig_prev
        history = []
        for _ in range(self.picard.max_iters):
            lam_q = lambda_eps(ops.field_at_quad(u_l), self.params)
            fp_l = fp_eps(u_l, self.params)
            flux_coupling = ops.constrain_sigma_rows(ops.grad_coupling(lam_q))
            k_lam = ops.weighted_stiffness(lam_q)
            sig_new, _ = linalg.solve_spd(
                self.a_sigma, rhs_sig_base + flux_coupling @ fp_l,
                tol=self.solver_tol, x0=sig_l)
            # Vanishing stabilization: +K u^{l+1} on the left, +K u^l on the right.
            rhs_u = rhs_u_base + ops.K @ u_l - k_lam @ fp_l - flux_coupling.T @ sig_new
            u_new, _ = linalg.solve_spd(self.a_u, rhs_u, tol=self.solver_tol, x0=u_l)
            inc = max(_rel_increment(ops, u_new, u_l),
                      _rel_increment(ops, sig_new, sig_l, vector=True))
            history.append(inc)
            u_l, sig_l = u_new, sig_new
            if inc <= self.picard.tol:
                _check_finite(self.name, u_new, sig_new)
                v_new = self.recover_v(state.v, u_new)
                new = SchemeState(scheme=self.name, n=state.n + 1, k=k,
                                  params=self.params, u=u_new, v=v_new, sigma=sig_new)
                return new, StepReport(len(history), inc, tuple(history))
        raise StepError(f"scheme us: no Picard convergence within "
                        f"{self.picard.max_iters} iterations", tuple(history))


class UZSWScheme(_SchemeBase):
    """Linear four-field scheme with an exact discrete energy equality.

    Unknowns are ordered [u, z, sigma, w]; every block row is scaled by k so
    the monolithic matrix stays O(1) for the direct solver.  The two

    coupling blocks are one assembled matrix and its transpose, and the
    weighted mass G is reused in both rows that carry it - this is what
    makes the energy identity cancel to solver precision.
    """

    name = "uzsw"

    def init_state(self, u0, v0, grad_v0) -> SchemeState:
        u, v = self._base_state(u0, v0, grad_v0)
        sig = fem.project_l2_sigma(self.ops, grad_v0, tol=self.solver_tol)
        p = self.params

        def w0(x, y):
            return np.sqrt(f_eps(u0(x, y), p) + p.a_shift)

        w = fem.project_l2(self.ops, w0, tol=self.solver_tol)
        z = np.zeros(self.mesh.n_vertices)
        return SchemeState(scheme=self.name, n=0, k=self.k, params=self.params,
                           u=u, v=v, sigma=sig, z=z, w=w)

    def step(self, state: SchemeState) -> tuple[SchemeState, StepReport]:
        ops = self.ops
        mesh = self.mesh
        k = self.k
        p = self.params
        n = mesh.n_vertices
        u0, sig0, w0 = state.u, state.sigma, state.w

        uq = ops.field_at_quad(u0)
        lam_q = lambda_eps(uq, p)
        g_q = fp_eps(uq, p) / np.sqrt(f_eps(uq, p) + p.a_shift)
        k_lam = ops.weighted_stiffness(lam_q)
        coupling = ops.constrain_sigma_rows(ops.grad_coupling(uq))  # (2n, n)
        g_mass = ops.weighted_mass(g_q)
        m = ops.M
        a_sig = ops.constrain_sigma_matrix(ops.Msig + k * ops.B)

        a = sparse.bmat([
            [m, k * k_lam, k * coupling.T, None],
            [None, -k * coupling, a_sig, None],
            [-0.5 * g_mass, None, None, m],
            [None, m, None, -g_mass],
        ], format="csc")
        rhs = np.concatenate([
            m @ u0,
            ops.constrain_sigma_vector(ops.Msig @ sig0),
            m @ w0 - 0.5 * (g_mass @ u0),
            np.zeros(n),
        ])
        x, report = linalg.solve_general(a, rhs, tol=self.solver_tol)
        u_new = x[:n]
        z_new = x[n:2 * n]
        sig_new = x[2 * n:4 * n]
        w_new = x[4 * n:]
        sig_new[~ops.sigma_free] = 0.0
        _check_finite(self.name, u_new, z_new, sig_new, w_new)
        v_new = self.recover_v(state.v, u_new)
        new = SchemeState(scheme=self.name, n=state.n + 1, k=k, params=p,
                          u=u_new, v=v_new, sigma=sig_new, z=z_new, w=w_new)
        return new, StepReport(picard_iters=1, final_increment=report.residual)


SCHEME_CLASSES = {cls.name: cls for cls in (UVScheme, USScheme, UZSWScheme, BEUVScheme)}


def make_scheme(name: str, mesh: Mesh, ops: FemOperators, k: float, params: RegParams,
                picard: PicardSettings | None = None,
                solver_tol: float = linalg.DEFAULT_TOL) -> _SchemeBase:
    try:
        cls = SCHEME_CLASSES[name]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; expected one of {SCHEME_NAMES}") from None
    return cls(mesh, ops, k, params, picard, solver_tol)
