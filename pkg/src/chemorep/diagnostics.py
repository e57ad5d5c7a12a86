"""Per-step diagnostics: energies, energy-law residuals, negativity.

The law evaluators recompute every term of a scheme's discrete energy
identity from a pair of consecutive states, using the same quadrature and
assembly routines the stepper used, so a converged step satisfies its law
to solver precision.  They are consumed by the test suite and by the CLI
``check`` subcommand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import FemOperators
from .regularization import element_lambda_all, f_eps, fp_eps, lambda_eps
from .schemes import SchemeState

CSV_COLUMNS = ("t", "mass_lumped", "mass_consistent", "v_integral", "E_mod",
               "E_exact", "RE_exact", "min_u", "neg_norm_u", "picard_iters")


@dataclass(frozen=True)
class TimeSeriesRow:
    """One CSV row; field order matches CSV_COLUMNS."""

    t: float
    mass_lumped: float
    mass_consistent: float
    v_integral: float
    e_mod: float
    e_exact: float
    re_exact: float
    min_u: float
    neg_norm_u: float
    picard_iters: int

    def as_tuple(self) -> tuple:
        return (self.t, self.mass_lumped, self.mass_consistent, self.v_integral,
                self.e_mod, self.e_exact, self.re_exact, self.min_u,
                self.neg_norm_u, self.picard_iters)


def mass_lumped(ops: FemOperators, u: np.ndarray) -> float:
    return float(ops.ml @ u)


def mass_consistent(ops: FemOperators, u: np.ndarray) -> float:
    return float((ops.M @ u).sum())


def integral(ops: FemOperators, v: np.ndarray) -> float:
    return float((ops.M @ v).sum())


def entropy_lumped(ops: FemOperators, state_u: np.ndarray, params) -> float:
    """Mass-lumped integral of the regularized entropy of u."""
    return float(ops.ml @ f_eps(state_u, params))


def energy_modified(ops: FemOperators, state: SchemeState) -> float:
    """The scheme's own Lyapunov functional (regularized energy for beuv)."""
    p = state.params
    if state.scheme in ("uv", "beuv"):
        return entropy_lumped(ops, state.u, p) + 0.5 * ops.h1_semi_sq(state.v)
    if state.scheme == "us":
        return entropy_lumped(ops, state.u, p) + 0.5 * ops.sigma_l2_sq(state.sigma)
    if state.scheme == "uzsw":
        return ops.l2_sq(state.w) + 0.5 * ops.sigma_l2_sq(state.sigma)
    raise ValueError(f"unknown scheme {state.scheme!r}")


def exact_entropy_density(s):
    """Unregularized entropy extended by its limit value 1 for s <= 0."""
    arr = np.asarray(s, dtype=float)
    safe = np.where(arr > 0.0, arr, 1.0)
    out = np.where(arr > 0.0, safe * np.log(safe) - safe + 1.0, 1.0)
    return float(out) if np.ndim(s) == 0 else out


def energy_exact(ops: FemOperators, state: SchemeState) -> float:
    """Quadrature of the exact entropy of u_h plus half the v Dirichlet term."""
    uq = ops.field_at_quad(state.u)
    dens = exact_entropy_density(uq)
    entropy = float(ops.areas @ (dens @ ops.quad.weights))
    return entropy + 0.5 * ops.h1_semi_sq(state.v)


def residual_exact(ops: FemOperators, e_prev: float, e_new: float,
                   state: SchemeState) -> float:
    """Backward-difference residual of the exact energy law.

    Positive values witness a violation of the continuous-level decay: the
    energy rate plus the entropy and chemical dissipation terms.
    """
    s = np.sqrt(np.maximum(state.u, 0.0))
    diss_u = 4.0 * ops.h1_semi_sq(s)
    diss_v = ops.ah_defect_sq(state.v) + ops.h1_semi_sq(state.v)
    return (e_new - e_prev) / state.k + diss_u + diss_v


def negativity(ops: FemOperators, u: np.ndarray) -> tuple[float, float]:
    """Minimum nodal value and L2 norm of the interpolated negative part."""
    neg = np.minimum(u, 0.0)
    return float(u.min()), float(np.sqrt(ops.l2_sq(neg)))


def compute_row(ops: FemOperators, state: SchemeState,
                e_exact_prev: float | None = None,
                picard_iters: int = 0) -> tuple[TimeSeriesRow, float]:
    """Build one series row; returns the row and E_exact for chaining."""
    e_mod = energy_modified(ops, state)
    e_exact = energy_exact(ops, state)
    if e_exact_prev is None:
        re = 0.0
    else:
        re = residual_exact(ops, e_exact_prev, e_exact, state)
    min_u, neg_norm = negativity(ops, state.u)
    row = TimeSeriesRow(
        t=state.t,
        mass_lumped=mass_lumped(ops, state.u),
        mass_consistent=mass_consistent(ops, state.u),
        v_integral=integral(ops, state.v),
        e_mod=e_mod,
        e_exact=e_exact,
        re_exact=re,
        min_u=min_u,
        neg_norm_u=neg_norm,
        picard_iters=picard_iters,
    )
    return row, e_exact


# -- discrete energy laws ---------------------------------------------------------


def uv_law(ops: FemOperators, prev: SchemeState, new: SchemeState) -> dict:
    """Exact step identity and energy-law left side of the mobility scheme."""
    p = new.params
    k = new.k
    u0, v0, u1, v1 = prev.u, prev.v, new.u, new.v
    fp1 = fp_eps(u1, p)
    t_entropy = float(ops.ml @ ((u1 - u0) / k * fp1))
    lam = element_lambda_all(ops.mesh, u1, p)
    lam_inv = np.linalg.inv(lam)
    gu = ops.grad_of_field(u1)
    t_mobility = float(np.einsum("t,td,tde,te->", ops.areas, gu, lam_inv, gu))
    kv1 = ops.K @ v1
    dt_chem = 0.5 * (float(v1 @ kv1) - ops.h1_semi_sq(v0)) / k
    t_numdiss_v = 0.5 / k * float((v1 - v0) @ (kv1 - ops.K @ v0))
    t_defect = ops.ah_defect_sq(v1)
    t_grad_v = float(v1 @ kv1)
    identity_residual = (t_entropy + t_mobility + dt_chem + t_numdiss_v
                         + t_defect + t_grad_v)
    scale = (abs(t_entropy) + abs(t_mobility) + abs(dt_chem) + t_numdiss_v
             + t_defect + t_grad_v)

    e0 = entropy_lumped(ops, u0, p) + 0.5 * ops.h1_semi_sq(v0)
    e1 = entropy_lumped(ops, u1, p) + 0.5 * float(v1 @ kv1)
    du = u1 - u0
    law_lhs = ((e1 - e0) / k
               + p.eps * 0.5 / k * ops.l2_sq(du)
               + t_numdiss_v
               + p.eps * ops.h1_semi_sq(u1)
               + t_defect + t_grad_v)
    return {"identity_residual": identity_residual, "identity_scale": scale,
            "law_lhs": law_lhs, "e_mod_prev": e0, "e_mod_new": e1,
            "t_entropy": t_entropy, "t_mobility": t_mobility, "dt_energy": dt_chem,
            "t_numdiss": t_numdiss_v, "t_defect": t_defect, "t_grad_v": t_grad_v}


def us_law(ops: FemOperators, prev: SchemeState, new: SchemeState) -> dict:
    """Exact step identity and energy-law left side of the flux scheme."""
    p = new.params
    k = new.k
    u0, s0, u1, s1 = prev.u, prev.sigma, new.u, new.sigma
    fp1 = fp_eps(u1, p)
    t_entropy = float(ops.ml @ ((u1 - u0) / k * fp1))
    lam_q = lambda_eps(ops.field_at_quad(u1), p)
    k_lam = ops.weighted_stiffness(lam_q)
    t_mobility = float(fp1 @ (k_lam @ fp1))
    ms1 = ops.Msig @ s1
    dt_sig = 0.5 * (float(s1 @ ms1) - ops.sigma_l2_sq(s0)) / k
    ds = s1 - s0
    t_numdiss_s = 0.5 / k * float(ds @ (ops.Msig @ ds))
    t_graph = ops.sigma_graph_sq(s1)
    identity_residual = t_entropy + t_mobility + dt_sig + t_numdiss_s + t_graph
    scale = (abs(t_entropy) + abs(t_mobility) + abs(dt_sig) + t_numdiss_s + t_graph)

    e0 = entropy_lumped(ops, u0, p) + 0.5 * ops.sigma_l2_sq(s0)
    e1 = entropy_lumped(ops, u1, p) + 0.5 * float(s1 @ ms1)
    du = u1 - u0
    law_lhs = ((e1 - e0) / k
               + p.eps * 0.5 / k * ops.l2_sq(du)
               + t_numdiss_s
               + t_mobility
               + t_graph)
    return {"identity_residual": identity_residual, "identity_scale": scale,
            "law_lhs": law_lhs, "e_mod_prev": e0, "e_mod_new": e1,
            "t_entropy": t_entropy, "t_mobility": t_mobility, "dt_energy": dt_sig,
            "t_numdiss": t_numdiss_s, "t_graph": t_graph}


def uzsw_law(ops: FemOperators, prev: SchemeState, new: SchemeState) -> dict:
    """Energy equality of the four-field scheme (coefficients from the old u)."""
    p = new.params
    k = new.k
    lam_q = lambda_eps(ops.field_at_quad(prev.u), p)
    k_lam = ops.weighted_stiffness(lam_q)
    t_mobility = float(new.z @ (k_lam @ new.z))
    w0, w1 = prev.w, new.w
    s0, s1 = prev.sigma, new.sigma
    e0 = ops.l2_sq(w0) + 0.5 * ops.sigma_l2_sq(s0)
    e1 = ops.l2_sq(w1) + 0.5 * ops.sigma_l2_sq(s1)
    dw = w1 - w0
    ds = s1 - s0
    t_numdiss_w = ops.l2_sq(dw) / k
    t_numdiss_s = 0.5 / k * ops.sigma_l2_sq(ds)
    t_graph = ops.sigma_graph_sq(s1)
    residual = (e1 - e0) / k + t_numdiss_w + t_numdiss_s + t_mobility + t_graph
    scale = (abs(e1 - e0) / k + t_numdiss_w + t_numdiss_s + t_mobility + t_graph)
    return {"identity_residual": residual, "identity_scale": scale,
            "law_lhs": residual, "e_mod_prev": e0, "e_mod_new": e1,
            "t_mobility": t_mobility, "dt_energy": (e1 - e0) / k,
            "t_numdiss_w": t_numdiss_w, "t_numdiss": t_numdiss_s, "t_graph": t_graph}


LAW_EVALUATORS = {"uv": uv_law, "us": us_law, "uzsw": uzsw_law}
