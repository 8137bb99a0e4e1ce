"""Command line entry points: check-mesh, check-bc, simulate, converge.

Configuration is an INI-style file::

    [mesh]
    path = rectangle.off        ; or: name = rectangle_16 (bundled mesh)

    [materials]
    rho = 1.0                   ; or rho_csv = rho.csv (index,value rows)
    young = 1.0                 ; or young_csv = young.csv

    [bc]
    kind = impedance            ; velocity_zero | normal_zero | impedance | custom
    c = 1.0
    ; v1 = v1.csv and v2 = v2.csv for kind = custom

    [initial]
    profile = gaussian_bump     ; or u0_csv / v0_csv
    width = 0.1

    [run]
    steps = 1000
    dt = 0.03125                ; optional
    out = results

    [converge]
    meshes = rectangle_8, rectangle_16, rectangle_32
    t_final = 1.0
    dt_factor = 0.5

Relative paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path

import numpy as np

from . import boundary as bcs
from .dynamics import (
    InadmissibleBCError,
    SolverError,
    State,
    default_dt,
    initial_state,
    simulate,
)
from .mesh import MeshError, build_complex, read_off, validate_manifold
from .metric import MaterialFields, read_material_csv
from .operators import Discretization, green_residual
from .profiles import get_profile

__all__ = ["main", "RunConfig", "load_config", "bundled_mesh", "EXIT_OK", "EXIT_INVALID", "EXIT_SOLVER"]

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


def bundled_mesh(name: str) -> Path:
    """Path of a mesh shipped with the package, e.g. ``"rectangle_16"``."""
    p = files("hodgewave") / "data" / "meshes" / f"{name}.off"
    if not p.is_file():
        raise ConfigError(f"no bundled mesh named {name!r}")
    return Path(str(p))


def _fmt(x) -> str:
    return "%.17g" % x


@dataclass
class RunConfig:
    base: Path
    mesh_path: Path | None = None
    rho: float | Path = 1.0
    young: float | Path = 1.0
    bc: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    dt: float | None = None
    steps: int = 0
    out: Path | None = None
    snapshots: int = 0
    project_initial: bool = True
    solver_tol: float = 1e-12
    admissibility_tol: float | None = None
    converge: dict = field(default_factory=dict)

    def resolve(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base / p

    def mesh_ref(self, value: str) -> Path:
        value = value.strip()
        if value.endswith(".off"):
            return self.resolve(value)
        return bundled_mesh(value)


def _positive(section, key, value, cast=float):
    try:
        v = cast(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {value!r} is not a number") from None
    if not v > 0:
        raise ConfigError(f"[{section}] {key} must be positive, got {value!r}")
    return v


def load_config(path: str | Path | None) -> RunConfig:
    """Parse a config file (``None`` gives defaults rooted at the cwd)."""
    if path is None:
        return RunConfig(base=Path.cwd())
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = RunConfig(base=path.resolve().parent)

    if cp.has_section("mesh"):
        m = cp["mesh"]
        if "path" in m:
            cfg.mesh_path = cfg.resolve(m["path"])
        elif "name" in m:
            cfg.mesh_path = bundled_mesh(m["name"])
    if cp.has_section("materials"):
        mat = cp["materials"]
        for key in ("rho", "young"):
            if f"{key}_csv" in mat:
                setattr(cfg, key, cfg.resolve(mat[f"{key}_csv"]))
            elif key in mat:
                setattr(cfg, key, _positive("materials", key, mat[key]))
    if cp.has_section("bc"):
        cfg.bc = dict(cp["bc"])
    if cp.has_section("initial"):
        cfg.initial = dict(cp["initial"])
    if cp.has_section("run"):
        r = cp["run"]
        if "dt" in r:
            cfg.dt = _positive("run", "dt", r["dt"])
        if "steps" in r:
            try:
                cfg.steps = int(r["steps"])
            except ValueError:
                raise ConfigError(f"[run] steps = {r['steps']!r} is not an integer") from None
            if cfg.steps < 0:
                raise ConfigError("[run] steps must be >= 0")
        if "out" in r:
            cfg.out = cfg.resolve(r["out"])
        if "snapshots" in r:
            cfg.snapshots = int(r["snapshots"])
        if "project_initial" in r:
            cfg.project_initial = r.getboolean("project_initial")
    if cp.has_section("tolerance"):
        t = cp["tolerance"]
        if "solver" in t:
            cfg.solver_tol = _positive("tolerance", "solver", t["solver"])
        if "admissibility" in t:
            cfg.admissibility_tol = _positive("tolerance", "admissibility", t["admissibility"])
    if cp.has_section("converge"):
        cfg.converge = dict(cp["converge"])

    for p in (cfg.mesh_path, cfg.rho, cfg.young):
        if isinstance(p, Path) and not p.is_file():
            raise ConfigError(f"referenced file not found: {p}")
    return cfg


# ---------------------------------------------------------------------------
# Assembly helpers


def _load_disc(path: Path) -> Discretization:
    if path is None:
        raise ConfigError("no mesh given ([mesh] path/name or --mesh)")
    if not Path(path).is_file():
        raise ConfigError(f"mesh file not found: {path}")
    return Discretization.from_complex(build_complex(read_off(path)))


def _materials(cfg: RunConfig, complex) -> MaterialFields:
    nv, ne = complex.counts[0], complex.counts[1]

    def field_values(spec, count):
        if isinstance(spec, Path):
            return read_material_csv(spec, count)
        return np.full(count, float(spec))

    return MaterialFields(field_values(cfg.rho, nv), field_values(cfg.young, ne))


def _bc(cfg: RunConfig, nb: int, default: str | None = None) -> bcs.BCSpec | None:
    spec = cfg.bc or ({"kind": default} if default else {})
    if not spec:
        return None
    kind = spec.get("kind", "").strip()
    if kind == "velocity_zero":
        return bcs.velocity_zero(nb)
    if kind == "normal_zero":
        return bcs.normal_zero(nb)
    if kind == "impedance":
        if "c" not in spec:
            raise ConfigError("[bc] impedance needs c")
        return bcs.impedance(nb, float(spec["c"]))
    if kind == "custom":
        if "v1" not in spec or "v2" not in spec:
            raise ConfigError("[bc] custom needs v1 and v2 matrix files")
        paths = [cfg.resolve(spec["v1"]), cfg.resolve(spec["v2"])]
        for p in paths:
            if not p.is_file():
                raise ConfigError(f"referenced file not found: {p}")
        V1, V2 = (bcs.read_matrix_csv(p) for p in paths)
        return bcs.custom(V1, V2, spec.get("label", "custom"))
    raise ConfigError(f"[bc] unknown kind {kind!r}")


_PROFILE_FLOATS = ("width", "amplitude")


def _profile_params(spec: dict) -> dict:
    params = {}
    for key in _PROFILE_FLOATS:
        if key in spec:
            params[key] = float(spec[key])
    if "mode" in spec:
        params["mode"] = int(spec["mode"])
    if "center" in spec:
        params["center"] = [float(t) for t in spec["center"].split(",")]
    return params


def _initial(cfg: RunConfig, disc: Discretization, materials: MaterialFields) -> State:
    c = disc.complex
    spec = cfg.initial
    if "profile" in spec:
        profile = get_profile(spec["profile"].strip())
        u0, v0 = profile(c.points, materials, **_profile_params(spec))
    elif "u0_csv" in spec or "v0_csv" in spec:
        nv = c.n_vertices
        u0 = read_material_csv(cfg.resolve(spec["u0_csv"]), nv, 0.0) if "u0_csv" in spec else np.zeros(nv)
        v0 = read_material_csv(cfg.resolve(spec["v0_csv"]), nv, 0.0) if "v0_csv" in spec else np.zeros(nv)
    else:
        raise ConfigError("[initial] needs profile or u0_csv/v0_csv")
    return initial_state(u0, v0, c, materials)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _energy_rows(traj):
    for n in range(len(traj.times)):
        yield [
            n,
            _fmt(traj.times[n]),
            _fmt(traj.energy[n]),
            _fmt(traj.boundary_power[n]),
            _fmt(traj.residuals[n]),
        ]


def _state_rows(state: State):
    for i, v in enumerate(state.omega):
        yield ["vertex", i, _fmt(v)]
    for i, v in enumerate(state.nu):
        yield ["edge", i, _fmt(v)]


# ---------------------------------------------------------------------------
# Commands


def cmd_check_mesh(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        disc = _load_disc(cfg.mesh_path)
    except MeshError as exc:
        print(f"error: {exc}", file=out)
        return EXIT_INVALID
    c = disc.complex
    report = validate_manifold(c)
    for line in report.lines():
        print(line, file=out)
    ok = bool(report.chain_complex_exact)

    rng = np.random.default_rng(0)
    worst = 0.0
    m0, m1 = disc.metric.diagonals[0], disc.metric.diagonals[1]
    for _ in range(20):
        w = disc.cochain(0, rng.standard_normal(c.counts[0]))
        mu = disc.cochain(1, rng.standard_normal(c.counts[1]))
        scale = np.sqrt(w.values @ (m0 * w.values)) * np.sqrt(mu.values @ (m1 * mu.values))
        worst = max(worst, abs(green_residual(w, mu, disc.metric, disc.traces)) / scale)
    green_ok = worst <= 1e-12
    print(f"Green identity: {'PASS' if green_ok else 'FAIL'} (max relative residual {worst:.3e})", file=out)
    ok &= green_ok
    return EXIT_OK if ok else EXIT_INVALID


def cmd_check_bc(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    disc = _load_disc(cfg.mesh_path)
    nb = disc.traces.T.shape[0]
    if nb == 0:
        print("error: mesh has no boundary", file=out)
        return EXIT_INVALID
    bc = _bc(cfg, nb)
    if bc is None:
        raise ConfigError("no [bc] section")
    report = bcs.check_admissible(bc, disc.traces.mass, cfg.admissibility_tol)
    for line in report.lines():
        print(line, file=out)
    return EXIT_OK if report.admissible else EXIT_INVALID


def cmd_simulate(cfg: RunConfig, unsafe: bool = False, out=None) -> int:
    out = out or sys.stdout
    disc = _load_disc(cfg.mesh_path)
    materials = _materials(cfg, disc.complex)
    bc = _bc(cfg, disc.traces.T.shape[0]) if not disc.traces.is_empty else None
    x0 = _initial(cfg, disc, materials)
    dt = cfg.dt if cfg.dt is not None else default_dt(disc.complex, materials)
    outdir = cfg.out or cfg.base / "out"
    outdir.mkdir(parents=True, exist_ok=True)
    header = ["step", "time", "energy", "boundary_power", "solver_residual"]
    try:
        traj = simulate(
            disc, materials, bc, x0, dt, cfg.steps,
            unsafe=unsafe,
            project_initial=cfg.project_initial,
            snapshot_stride=cfg.snapshots,
            admissibility_tol=cfg.admissibility_tol,
            solver_tol=cfg.solver_tol,
        )
    except InadmissibleBCError as exc:
        for line in exc.report.lines():
            print(line, file=out)
        print(f"error: {exc}", file=out)
        return EXIT_INVALID
    except SolverError as exc:
        if exc.trajectory is not None:
            _write_csv(outdir / "energy.csv", header, _energy_rows(exc.trajectory))
        (outdir / "FAILED").write_text(f"step {exc.step}: {exc}\n")
        print(f"solver failure: {exc} (partial output in {outdir}, flagged by FAILED)", file=out)
        return EXIT_SOLVER
    stale = outdir / "FAILED"
    if stale.exists():
        stale.unlink()
    _write_csv(outdir / "energy.csv", header, _energy_rows(traj))
    if cfg.snapshots:
        for n, state in sorted(traj.snapshots.items()):
            _write_csv(outdir / f"state_{n}.csv", ["simplex_kind", "index", "value"], _state_rows(state))
    print(
        f"{traj.steps} steps, dt = {dt:.6g}; energy {traj.energy[0]:.6e} -> {traj.energy[-1]:.6e}"
        f" (max relative drift {traj.max_relative_drift():.3e}); output in {outdir}",
        file=out,
    )
    return EXIT_OK


def _min_edge(complex) -> float:
    E = complex.simplices[1]
    p = complex.points
    return float(np.min(np.linalg.norm(p[E[:, 1]] - p[E[:, 0]], axis=1)))


def convergence_table(cfg: RunConfig):
    """Rows ``(h, dt, error)`` of the final-time momentum error per level."""
    conv = cfg.converge
    if "meshes" not in conv:
        raise ConfigError("[converge] needs meshes")
    if "profile" not in cfg.initial:
        raise ConfigError("[initial] profile is required for converge")
    profile = get_profile(cfg.initial["profile"].strip())
    if profile.exact_omega is None:
        raise ConfigError(f"profile {profile.name!r} has no analytic solution")
    params = _profile_params(cfg.initial)
    t_final = _positive("converge", "t_final", conv.get("t_final", "1.0"))
    factor = _positive("converge", "dt_factor", conv.get("dt_factor", "0.5"))
    rows = []
    for ref in conv["meshes"].split(","):
        disc = _load_disc(cfg.mesh_ref(ref))
        c = disc.complex
        if isinstance(cfg.rho, Path) or isinstance(cfg.young, Path):
            raise ConfigError("converge needs constant materials")
        materials = _materials(cfg, c)
        bc = _bc(cfg, disc.traces.T.shape[0], default="normal_zero") if not disc.traces.is_empty else None
        h = _min_edge(c)
        steps = max(1, int(np.ceil(t_final / (factor * h) - 1e-9)))
        dt = t_final / steps
        u0, v0 = profile(c.points, materials, **params)
        x0 = initial_state(u0, v0, c, materials)
        traj = simulate(
            disc, materials, bc, x0, dt, steps,
            project_initial=cfg.project_initial, solver_tol=cfg.solver_tol,
            admissibility_tol=cfg.admissibility_tol,
        )
        exact = profile.exact_omega(c.points, materials, traj.final.time, **params)
        e = traj.final.omega - exact
        err = float(np.sqrt(e @ (disc.metric.diagonals[0] / materials.rho * e)))
        rows.append((h, dt, err))
    return rows


def observed_orders(rows):
    orders = [None]
    for (h0, _, e0), (h1, _, e1) in zip(rows, rows[1:]):
        orders.append(float(np.log(e0 / e1) / np.log(h0 / h1)))
    return orders


def cmd_converge(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    rows = convergence_table(cfg)
    orders = observed_orders(rows)
    outdir = cfg.out or cfg.base / "out"
    outdir.mkdir(parents=True, exist_ok=True)
    table = [
        [_fmt(h), _fmt(dt), _fmt(e), "" if p is None else _fmt(p)]
        for (h, dt, e), p in zip(rows, orders)
    ]
    _write_csv(outdir / "convergence.csv", ["h", "dt", "l2_error_omega", "observed_order"], table)
    print(f"{'h':>12} {'dt':>12} {'l2_error_omega':>16} {'order':>8}", file=out)
    for (h, dt, e), p in zip(rows, orders):
        print(f"{h:12.6g} {dt:12.6g} {e:16.8e} {'' if p is None else f'{p:8.3f}':>8}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodgewave", description="Simplicial wave equation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("check-mesh", "validate a mesh and run operator self-tests"),
        ("check-bc", "test a boundary condition for admissibility"),
        ("simulate", "integrate the wave system and write energy.csv"),
        ("converge", "refinement study against an analytic solution"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="configuration file")
        p.add_argument("--mesh", help="mesh file or bundled mesh name (overrides [mesh])")
        p.add_argument("--out", help="output directory (overrides [run] out)")
        if name == "simulate":
            p.add_argument("--unsafe", action="store_true", help="run even if the BC is inadmissible")
            p.add_argument("--snapshots", type=int, metavar="STRIDE", help="write state every STRIDE steps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.mesh:
            cfg.mesh_path = cfg.mesh_ref(args.mesh) if not Path(args.mesh).is_file() else Path(args.mesh)
        if args.out:
            cfg.out = Path(args.out)
        if args.command == "check-mesh":
            return cmd_check_mesh(cfg)
        if args.command == "check-bc":
            return cmd_check_bc(cfg)
        if args.command == "simulate":
            if args.snapshots is not None:
                if args.snapshots < 0:
                    raise ConfigError("--snapshots must be >= 0")
                cfg.snapshots = args.snapshots
            return cmd_simulate(cfg, unsafe=args.unsafe)
        return cmd_converge(cfg)
    except (ConfigError, MeshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stdout)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stdout)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stdout)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
