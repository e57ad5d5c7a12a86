"""Truncated entropy family and its element-level matrix form.

The entropy density F(s) = s(ln s - 1) + 1 is regularized by capping its
second derivative: F''_eps(s) = 1/lambda_eps(s) with lambda_eps clamping to
[eps, 1/eps], integrated twice from s = 1 so that F_eps(1) = F'_eps(1) = 0.
All three branches are closed forms, so the functions are exact up to
rounding and cheap to vectorize.

The matrix Lambda built from divided differences of F'_eps turns the nodal
interpolant of F'_eps(u) back into grad(u) on right triangles whose legs are
axis-aligned, which is the keystone of the discrete energy laws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

# Threshold for switching the divided difference to its midpoint fallback.
DD_TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class RegParams:
    """Regularization strength eps in (0,1); a_shift only feeds one scheme."""

    eps: float
    a_shift: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ValueError(f"eps must lie in (0,1), got {self.eps}")
        if not self.a_shift > 0.0:
            raise ValueError(f"a_shift must be positive, got {self.a_shift}")


def _split(s):
    arr = np.asarray(s, dtype=float)
    return arr, arr.ndim == 0


def lambda_eps(s, p: RegParams):
    """Mobility truncation: clamp s to [eps, 1/eps]."""
    arr, scalar = _split(s)
    out = np.clip(arr, p.eps, 1.0 / p.eps)
    return float(out) if scalar else out


def fpp_eps(s, p: RegParams):
    """Second derivative of the regularized entropy: 1/lambda_eps(s)."""
    arr, scalar = _split(s)
    out = 1.0 / np.clip(arr, p.eps, 1.0 / p.eps)
    return float(out) if scalar else out


def fp_eps(s, p: RegParams):
    """First derivative; ln s in the middle band, linear continuations outside."""
    arr, scalar = _split(s)
    e = p.eps
    ei = 1.0 / e
    le = np.log(e)
    lo = arr < e
    hi = arr > ei
    mid = np.clip(arr, e, ei)  # safe log argument everywhere
    out = np.log(mid)
    out = np.where(lo, le + (arr - e) / e, out)
    out = np.where(hi, -le + e * arr - 1.0, out)
    return float(out) if scalar else out


def f_eps(s, p: RegParams):
    """Regularized entropy, C^1 with F_eps(1) = F'_eps(1) = 0 and F_eps >= 0."""
    arr, scalar = _split(s)
    e = p.eps
    ei = 1.0 / e
    le = np.log(e)
    lo = arr < e
    hi = arr > ei
    mid = np.clip(arr, e, ei)
    out = mid * np.log(mid) - mid + 1.0
    # Quadratic continuations matching value and slope at the band edges.
    f_at_lo, fp_at_lo = e * le - e + 1.0, le
    f_at_hi, fp_at_hi = -le * ei - ei + 1.0, -le
    out = np.where(lo, f_at_lo + fp_at_lo * (arr - e) + (arr - e) ** 2 / (2.0 * e), out)
    out = np.where(hi, f_at_hi + fp_at_hi * (arr - ei) + 0.5 * e * (arr - ei) ** 2, out)
    return float(out) if scalar else out


def lambda_hat(a, b, p: RegParams):
    """Secant mobility (a-b)/(F'_eps(a)-F'_eps(b)), midpoint value on ties.

    The mean value theorem keeps the exact ratio inside [eps, 1/eps]; the
    final clip only absorbs last-ulp roundoff so spectral bounds stay sharp.
    """
    aa, a_scalar = _split(a)
    bb, b_scalar = _split(b)
    aa, bb = np.broadcast_arrays(aa, bb)
    num = aa - bb
    den = fp_eps(aa, p) - fp_eps(bb, p)
    tie = np.abs(num) <= DD_TIE_TOLERANCE * np.maximum(1.0, np.maximum(np.abs(aa), np.abs(bb)))
    tie |= den == 0.0  # F'_eps is strictly increasing; guard rounding collisions
    ratio = num / np.where(tie, 1.0, den)
    out = np.where(tie, np.clip((aa + bb) / 2.0, p.eps, 1.0 / p.eps), ratio)
    out = np.clip(out, p.eps, 1.0 / p.eps)
    return float(out) if (a_scalar and b_scalar) else out


@dataclass(frozen=True)
class ElementLambda:
    """Per-triangle mobility matrix Lambda = sum_i coeffs[i] legs[i] legs[i]^T.

    legs: (2,2) array of the unit vectors from the right-angle vertex to the
        other two vertices (rows); orthonormal on the meshes built here.
    coeffs: (2,) secant mobilities along those legs.
    """

    legs: np.ndarray
    coeffs: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        e1, e2 = self.legs
        return self.coeffs[0] * np.outer(e1, e1) + self.coeffs[1] * np.outer(e2, e2)


def build_element_lambda(mesh: Mesh, k: int, u: np.ndarray, p: RegParams) -> ElementLambda:
    """Mobility matrix for one triangle from the nodal values of u."""
    tri = mesh.triangles[k]
    pts = mesh.vertices[tri]
    legs = np.empty((2, 2))
    coeffs = np.empty(2)
    for i in (1, 2):
        leg = pts[i] - pts[0]
        legs[i - 1] = leg / np.linalg.norm(leg)
        coeffs[i - 1] = lambda_hat(u[tri[i]], u[tri[0]], p)
    return ElementLambda(legs=legs, coeffs=coeffs)


def element_lambda_all(mesh: Mesh, u: np.ndarray, p: RegParams) -> np.ndarray:
    """Mobility matrices for every triangle at once, shape (n_triangles, 2, 2)."""
    tri = mesh.triangles
    pts = mesh.vertices[tri]
    out = np.zeros((tri.shape[0], 2, 2))
    for i in (1, 2):
        leg = pts[:, i] - pts[:, 0]
        leg = leg / np.linalg.norm(leg, axis=1)[:, None]
        lam = lambda_hat(u[tri[:, i]], u[tri[:, 0]], p)
        out += lam[:, None, None] * (leg[:, :, None] * leg[:, None, :])
    return out
