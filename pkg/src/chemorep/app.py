"""Command-line runner: configuration, presets, output writers, subcommands.

Subcommands:

- ``run``: advance one scheme and write a CSV time series, VTK snapshots
  and a JSON summary into the output directory.
- ``check``: run the property suite (quadrature, mobility identities,
  spectral bounds, entropy values, oracle agreement, short-run conservation
  and energy-law residuals) against the given configuration.
- ``sweep-eps``: repeat a run for several regularization strengths.

Exit codes: 0 success, 2 configuration error, 3 solver or step failure,
4 property-check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import diagnostics, fem, linalg, oracle
from .diagnostics import CSV_COLUMNS, TimeSeriesRow, compute_row
from .fem import FemOperators, assemble_operators
from .linalg import SolverError
from .mesh import Mesh, build_structured
from .regularization import RegParams, element_lambda_all, f_eps, fp_eps, lambda_eps
from .schemes import (SCHEME_NAMES, PicardSettings, SchemeState, StepError,
                      make_scheme)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STEP = 3
EXIT_PROPERTY = 4

PRESET_NAMES = ("positivity", "energy1", "energy2", "constant", "custom-gaussian")

# Picard tolerance when the user leaves it unset: a loose default for plain
# runs, a tight one for `check`, whose identity tests need a converged fixed
# point to be meaningful.
RUN_DEFAULT_PICARD_TOL = 1e-4
CHECK_DEFAULT_PICARD_TOL = 1e-10


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "uv"
    nx: int = 20
    ny: int = 20
    lx: float = 2.0
    ly: float = 2.0
    k: float = 1e-5
    n_steps: int = 100
    eps: float = 1e-3
    a_shift: float = 1.0
    picard_tol: float | None = None
    picard_max_iters: int = 100
    ic_preset: str = "energy2"
    outdir: str = "out"
    snapshot_stride: int = 100

    def validate(self) -> "RunConfig":
        if self.scheme not in SCHEME_NAMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}, expected one of {SCHEME_NAMES}")
        if self.ic_preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {self.ic_preset!r}, expected one of {PRESET_NAMES}")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError(f"nx and ny must be >= 1, got {self.nx}, {self.ny}")
        if self.lx <= 0 or self.ly <= 0:
            raise ConfigError(f"lx and ly must be positive, got {self.lx}, {self.ly}")
        if self.k <= 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if not (0.0 < self.eps < 1.0):
            raise ConfigError(f"eps must lie in (0,1), got {self.eps}")
        if self.a_shift <= 0:
            raise ConfigError(f"a_shift must be positive, got {self.a_shift}")
        if self.picard_tol is not None and self.picard_tol <= 0:
            raise ConfigError(f"picard_tol must be positive, got {self.picard_tol}")
        if self.picard_max_iters < 1:
            raise ConfigError(f"picard_max_iters must be >= 1, got {self.picard_max_iters}")
        if self.snapshot_stride < 0:
            raise ConfigError(f"snapshot_stride must be >= 0, got {self.snapshot_stride}")
        return self


_INT_KEYS = {"nx", "ny", "n_steps", "picard_max_iters", "snapshot_stride"}
_FLOAT_KEYS = {"lx", "ly", "k", "eps", "a_shift", "picard_tol"}
_STR_KEYS = {"scheme", "ic_preset", "outdir"}


def parse_config_file(path: str) -> dict:
    """Flat key = value lines; '#' starts a comment; unknown keys are errors."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _INT_KEYS and key not in _FLOAT_KEYS and key not in _STR_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            else:
                out[key] = value
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def build_config(file_values: dict, cli_values: dict) -> RunConfig:
    """Defaults, overlaid by the config file, overlaid by CLI flags."""
    merged = dict(file_values)
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    valid = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - valid
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged).validate()


# -- initial data presets -----------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    name: str
    u0: object
    v0: object
    grad_v0: object


def _bump(x):
    return x * (2.0 - x)


def _dbump(x):
    return 2.0 - 2.0 * x


def preset_ic(name: str) -> Preset:
    """Initial data by name; gradients of v0 are exact closed forms."""
    if name == "positivity":
        def u0(x, y):
            return -10.0 * _bump(x) * _bump(y) * np.exp(
                -10.0 * (y - 1.0) ** 2 - 10.0 * (x - 1.0) ** 2) + 10.0001

        def v0(x, y):
            return 100.0 * _bump(x) * _bump(y) * np.exp(
                -30.0 * (y - 1.0) ** 2 - 30.0 * (x - 1.0) ** 2) + 0.0001

        def grad_v0(x, y):
            e = np.exp(-30.0 * (y - 1.0) ** 2 - 30.0 * (x - 1.0) ** 2)
            gx = 100.0 * _bump(y) * e * (_dbump(x) - 60.0 * (x - 1.0) * _bump(x))
            gy = 100.0 * _bump(x) * e * (_dbump(y) - 60.0 * (y - 1.0) * _bump(y))
            return gx, gy

        return Preset(name, u0, v0, grad_v0)

    if name in ("energy1", "energy2"):
        amp = 7.0 if name == "energy1" else 14.0
        shift = amp + 0.0001

        def u0(x, y):
            return amp * np.cos(2.0 * np.pi * x) * np.cos(2.0 * np.pi * y) + shift

        def v0(x, y):
            return -amp * np.cos(2.0 * np.pi * x) * np.cos(2.0 * np.pi * y) + shift

        def grad_v0(x, y):
            two_pi = 2.0 * np.pi
            gx = amp * two_pi * np.sin(two_pi * x) * np.cos(two_pi * y)
            gy = amp * two_pi * np.cos(two_pi * x) * np.sin(two_pi * y)
            return gx, gy

        return Preset(name, u0, v0, grad_v0)

    if name == "constant":
        def u0(x, y):
            return np.ones_like(np.asarray(x, dtype=float))

        def v0(x, y):
            return np.ones_like(np.asarray(x, dtype=float))

        def grad_v0(x, y):
            z = np.zeros_like(np.asarray(x, dtype=float))
            return z, z.copy()

        return Preset(name, u0, v0, grad_v0)

    if name == "custom-gaussian":
        def u0(x, y):
            return 8.0 * np.exp(-20.0 * ((x - 1.0) ** 2 + (y - 1.0) ** 2)) + 0.0001

        def v0(x, y):
            return 2.0 * np.exp(-10.0 * ((x - 1.0) ** 2 + (y - 1.0) ** 2)) + 0.0001

        def grad_v0(x, y):
            e = 2.0 * np.exp(-10.0 * ((x - 1.0) ** 2 + (y - 1.0) ** 2))
            return -20.0 * (x - 1.0) * e, -20.0 * (y - 1.0) * e

        return Preset(name, u0, v0, grad_v0)

    raise ConfigError(f"unknown preset {name!r}")


# -- simulation driver --------------------------------------------------------------


@dataclass
class RunResult:
    config: RunConfig
    mesh: Mesh
    ops: FemOperators
    rows: list
    laws: list
    final_state: SchemeState
    mass0: float


def run_simulation(config: RunConfig, picard_tol_default: float = RUN_DEFAULT_PICARD_TOL,
                   collect_laws: bool = False, outdir: str | None = None,
                   log=None) -> RunResult:
    """Advance the configured scheme; optionally write snapshots as it goes."""
    config.validate()
    mesh = build_structured(config.nx, config.ny, config.lx, config.ly)
    ops = assemble_operators(mesh)
    params = RegParams(eps=config.eps, a_shift=config.a_shift)
    tol = config.picard_tol if config.picard_tol is not None else picard_tol_default
    picard = PicardSettings(tol=tol, max_iters=config.picard_max_iters)
    scheme = make_scheme(config.scheme, mesh, ops, config.k, params, picard)
    preset = preset_ic(config.ic_preset)
    state = scheme.init_state(preset.u0, preset.v0, preset.grad_v0)
    mass0 = diagnostics.mass_lumped(ops, state.u)

    row, e_prev = compute_row(ops, state)
    rows = [row]
    laws = []
    law_fn = diagnostics.LAW_EVALUATORS.get(config.scheme)

    def snapshot(st: SchemeState):
        if outdir is not None and config.snapshot_stride > 0:
            if st.n % config.snapshot_stride == 0 or st.n == config.n_steps:
                write_vtk(os.path.join(outdir, f"snap_{st.n:06d}.vtk"), mesh, st)

    snapshot(state)
    for n in range(1, config.n_steps + 1):
        new_state, report = scheme.step(state)
        if collect_laws and law_fn is not None:
            laws.append(law_fn(ops, state, new_state))
        row, e_prev = compute_row(ops, new_state, e_prev, report.picard_iters)
        rows.append(row)
        snapshot(new_state)
        state = new_state
        if log is not None and (n % 100 == 0 or n == config.n_steps):
            log(f"step {n}/{config.n_steps}: mass={row.mass_lumped:.9g} "
                f"E_mod={row.e_mod:.9g} min_u={row.min_u:.3e}")
    return RunResult(config=config, mesh=mesh, ops=ops, rows=rows, laws=laws,
                     final_state=state, mass0=mass0)


# -- output writers -----------------------------------------------------------------


def write_series_csv(path: str, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            vals = row.as_tuple()
            writer.writerow([repr(float(v)) for v in vals[:-1]] + [str(int(vals[-1]))])


def write_vtk(path: str, mesh: Mesh, state: SchemeState) -> None:
    """Legacy ASCII unstructured-grid snapshot of all fields in the state."""
    n = mesh.n_vertices
    lines = ["# vtk DataFile Version 3.0",
             f"chemorep scheme={state.scheme} n={state.n}",
             "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n} double"]
    for x, y in mesh.vertices:
        lines.append(f"{x:.17g} {y:.17g} 0")
    t = mesh.n_triangles
    lines.append(f"CELLS {t} {4 * t}")
    for tri in mesh.triangles:
        lines.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    lines.append(f"CELL_TYPES {t}")
    lines.extend(["5"] * t)
    lines.append(f"POINT_DATA {n}")
    scalars = [("u", state.u), ("v", state.v)]
    if state.z is not None:
        scalars.append(("z", state.z))
    if state.w is not None:
        scalars.append(("w", state.w))
    for name, vals in scalars:
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{v:.17g}" for v in vals)
    if state.sigma is not None:
        lines.append("VECTORS sigma double")
        sx, sy = state.sigma[:n], state.sigma[n:]
        lines.extend(f"{a:.17g} {b:.17g} 0" for a, b in zip(sx, sy))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_json(path: str, result: RunResult) -> None:
    rows = result.rows
    last = rows[-1]
    body = {
        "scheme": result.config.scheme,
        "ic_preset": result.config.ic_preset,
        "eps": result.config.eps,
        "k": result.config.k,
        "n_steps": result.config.n_steps,
        "nx": result.config.nx,
        "ny": result.config.ny,
        "mass_initial": result.mass0,
        "mass_final": last.mass_lumped,
        "mass_max_rel_drift": max(
            abs(r.mass_lumped - result.mass0) for r in rows) / abs(result.mass0),
        "e_mod_final": last.e_mod,
        "e_exact_final": last.e_exact,
        "re_exact_max": max(r.re_exact for r in rows),
        "min_u_over_run": min(r.min_u for r in rows),
        "neg_norm_u_max": max(r.neg_norm_u for r in rows),
        "picard_iters_total": sum(r.picard_iters for r in rows),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands --------------------------------------------------------------------


def cmd_run(config: RunConfig, quiet: bool = False) -> int:
    os.makedirs(config.outdir, exist_ok=True)
    log = None if quiet else (lambda msg: print(msg, flush=True))
    try:
        result = run_simulation(config, outdir=config.outdir, log=log)
    except (StepError, SolverError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_STEP
    write_series_csv(os.path.join(config.outdir, "series.csv"), result.rows)
    write_summary_json(os.path.join(config.outdir, "summary.json"), result)
    if not quiet:
        last = result.rows[-1]
        print(f"{config.scheme} finished {config.n_steps} steps: "
              f"mass={last.mass_lumped:.9g} E_mod={last.e_mod:.9g} "
              f"min_u={last.min_u:.3e} -> {config.outdir}/series.csv")
    return EXIT_OK


def _check_lines(config: RunConfig) -> list[tuple[str, bool, str]]:
    """Property suite behind the `check` subcommand; returns (name, ok, detail)."""
    checks = []
    rng = np.random.default_rng(20260822)
    params = RegParams(eps=config.eps, a_shift=config.a_shift)

    mesh = build_structured(4, 4, config.lx, config.ly)
    ops = assemble_operators(mesh)

    area = float(ops.areas.sum())
    ok = abs(area - config.lx * config.ly) <= 1e-12 * config.lx * config.ly
    checks.append(("mesh-area-tiling", ok, f"sum={area!r}"))

    ml_vs_m = float(np.abs(ops.ml - np.asarray(ops.M.sum(axis=1)).ravel()).max())
    checks.append(("lumped-equals-mass-rowsums", ml_vs_m <= 1e-14, f"max diff={ml_vs_m:.2e}"))

    # Quadrature must integrate low-degree polynomials exactly.
    worst = 0.0
    for (a, b) in [(0, 0), (1, 0), (2, 1), (2, 2), (4, 0), (1, 3)]:
        val = float(ops.areas @ ((ops.quad_x[:, :, 0] ** a * ops.quad_x[:, :, 1] ** b)
                                 @ ops.quad.weights))
        exact = (config.lx ** (a + 1) / (a + 1)) * (config.ly ** (b + 1) / (b + 1))
        worst = max(worst, abs(val - exact) / abs(exact))
    checks.append(("quadrature-degree4-exact", worst <= 1e-13, f"max rel err={worst:.2e}"))

    # Mobility matrix identity and spectral bounds on random fields.
    worst_res = 0.0
    worst_eig = 0.0
    for _ in range(20):
        u = rng.uniform(-2.0, 3.0, mesh.n_vertices)
        lam = element_lambda_all(mesh, u, params)
        fp_nodal = fp_eps(u, params)
        gu = ops.grad_of_field(u)
        gf = ops.grad_of_field(fp_nodal)
        res = np.einsum("tde,te->td", lam, gf) - gu
        denom = 1.0 + np.linalg.norm(gu, axis=1)
        worst_res = max(worst_res, float((np.linalg.norm(res, axis=1) / denom).max()))
        eig = np.linalg.eigvalsh(lam)
        worst_eig = max(worst_eig,
                        float((params.eps - eig).max()),
                        float((eig - 1.0 / params.eps).max()))
    checks.append(("mobility-gradient-identity", worst_res <= 1e-10,
                   f"max residual={worst_res:.2e}"))
    checks.append(("mobility-spectral-bounds", worst_eig <= 1e-12,
                   f"max excursion={worst_eig:.2e}"))

    v1 = abs(f_eps(1.0, params)) + abs(fp_eps(1.0, params))
    v0 = abs(f_eps(0.0, params) - (1.0 - params.eps / 2.0))
    checks.append(("entropy-anchor-values", v1 == 0.0 and v0 <= 1e-15,
                   f"|F(1)|+|F'(1)|={v1:.2e}, F(0) err={v0:.2e}"))

    small = build_structured(2, 2, config.lx, config.ly)
    small_ops = assemble_operators(small)
    dm = float(np.abs(small_ops.M.toarray() - oracle.mass(small)).max())
    dk = float(np.abs(small_ops.K.toarray() - oracle.stiffness(small)).max())
    checks.append(("oracle-matrix-agreement", max(dm, dk) <= 1e-12,
                   f"max entry diff={max(dm, dk):.2e}"))

    # Short run: conservation, energy-law residuals, chemical-mass bound.
    short = replace(config, n_steps=min(config.n_steps, 10), outdir=config.outdir)
    try:
        result = run_simulation(short, picard_tol_default=CHECK_DEFAULT_PICARD_TOL,
                                collect_laws=True)
    except (StepError, SolverError) as exc:
        checks.append(("short-run", False, str(exc)))
        return checks
    rows = result.rows
    drift = max(abs(r.mass_lumped - result.mass0) for r in rows) / abs(result.mass0)
    checks.append(("mass-conservation", drift <= 1e-8, f"max rel drift={drift:.2e}"))

    if result.laws:
        worst_ident = max(abs(l["identity_residual"]) / max(1.0, l["identity_scale"])
                          for l in result.laws)
        checks.append(("energy-law-identity", worst_ident <= 1e-8,
                       f"max scaled residual={worst_ident:.2e}"))
        worst_lhs = max(l["law_lhs"] / max(1.0, abs(l["e_mod_new"])) for l in result.laws)
        checks.append(("energy-law-dissipation", worst_lhs <= 1e-8,
                       f"max scaled lhs={worst_lhs:.2e}"))

    m0 = result.mass0
    v0_int = rows[0].v_integral
    worst_gap = max(abs(r.v_integral) - ((1.0 + config.k) ** (-i) * abs(v0_int) + abs(m0))
                    for i, r in enumerate(rows))
    checks.append(("chemical-mass-bound", worst_gap <= 1e-8, f"max excess={worst_gap:.2e}"))
    return checks


def cmd_check(config: RunConfig) -> int:
    failed = 0
    for name, ok, detail in _check_lines(config):
        print(f"check {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        if not ok:
            failed += 1
    if failed:
        print(f"{failed} check(s) failed", file=sys.stderr)
        return EXIT_PROPERTY
    print("all checks passed")
    return EXIT_OK


def cmd_sweep_eps(config: RunConfig, eps_list: list[float], quiet: bool = False) -> int:
    for eps in eps_list:
        sub = replace(config, eps=eps,
                      outdir=os.path.join(config.outdir, f"eps_{eps:g}"))
        sub.validate()
        code = cmd_run(sub, quiet=True)
        if code != EXIT_OK:
            return code
    if not quiet:
        print(f"sweep finished for eps in {[f'{e:g}' for e in eps_list]} -> {config.outdir}")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--scheme", choices=SCHEME_NAMES)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--lx", type=float)
    p.add_argument("--ly", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--n-steps", type=int, dest="n_steps")
    p.add_argument("--eps", type=float)
    p.add_argument("--a-shift", type=float, dest="a_shift")
    p.add_argument("--picard-tol", type=float, dest="picard_tol")
    p.add_argument("--picard-max-iters", type=int, dest="picard_max_iters")
    p.add_argument("--ic-preset", choices=PRESET_NAMES, dest="ic_preset")
    p.add_argument("--outdir")
    p.add_argument("--snapshot-stride", type=int, dest="snapshot_stride")


def _config_from_args(args) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    cli_values = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    return build_config(file_values, cli_values)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chemorep",
        description="Finite-element schemes for a chemo-repulsion model "
                    "with linear production")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="advance a scheme and write outputs")
    _add_config_flags(p_run)
    p_run.add_argument("--quiet", action="store_true")
    p_check = sub.add_parser("check", help="run the property suite")
    _add_config_flags(p_check)
    p_sweep = sub.add_parser("sweep-eps", help="run for several eps values")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--eps-list", default="1e-3,1e-5,1e-8",
                         help="comma-separated eps values")
    p_sweep.add_argument("--quiet", action="store_true")

    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "run":
            return cmd_run(config, quiet=args.quiet)
        if args.command == "check":
            return cmd_check(config)
        if args.command == "sweep-eps":
            try:
                eps_list = [float(tok) for tok in args.eps_list.split(",") if tok.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad --eps-list: {args.eps_list!r}") from exc
            if not eps_list:
                raise ConfigError("empty --eps-list")
            return cmd_sweep_eps(config, eps_list, quiet=args.quiet)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepError, SolverError) as exc:
        print(f"step failure: {exc}", file=sys.stderr)
        return EXIT_STEP


if __name__ == "__main__":
    sys.exit(main())
