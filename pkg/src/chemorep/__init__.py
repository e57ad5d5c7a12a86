"""Fully discrete finite-element schemes for a chemo-repulsion model.

The package implements four time discretizations of the parabolic system

    du/dt - laplace(u) = div(u grad(v)),   dv/dt - laplace(v) + v = u

on a rectangle with homogeneous Neumann boundary conditions, together with
the machinery needed to verify their discrete energy laws, conservation
identities and approximated-positivity behaviour at machine precision:

- ``mesh``: structured right-angled triangulations and mass-lumping weights
- ``regularization``: the truncated entropy family and its matrix form
- ``fem``: P1 assembly, quadrature, projections and discrete operators
- ``linalg``: sparse solver frontends with accuracy reporting
- ``schemes``: the UV, US, UZSW and BEUV time steppers
- ``diagnostics``: energies, energy-law residuals and negativity measures
- ``app``: CLI runner, presets, CSV/VTK/JSON output
- ``oracle``: slow dense re-implementations used only by the test suite
"""

__version__ = "0.1.0"

__all__ = [
    "mesh",
    "regularization",
    "fem",
    "linalg",
    "schemes",
    "diagnostics",
    "app",
    "oracle",
]
