"""Hodge wave system on 0- and 1-cochains, integrated by the implicit midpoint rule.

State ``x = (omega, nu)`` with ``omega = rho * u_t`` on vertices and
``nu = d u`` on edges. The generator is

    A = [[0, -delta diag(young)], [D_0 diag(1/rho), 0]]

and the energy ``E(x) = x^T W x / 2`` with ``W = diag(M_0/rho, M_1 young)``.
Boundary conditions ``C x = 0`` are imposed at the midpoint of every step via
multipliers acting through ``W^{-1} C^T``, so that

    E(x+) - E(x) = dt * P(x_mid)

holds exactly, ``P`` being the boundary power.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .boundary import AdmissibilityReport, BCSpec, check_admissible, constraint_matrix
from .metric import HodgeMetric, MaterialFields
from .operators import Discretization, TraceOperators, codifferential_matrix

logger = logging.getLogger(__name__)

__all__ = [
    "SolverError",
    "InadmissibleBCError",
    "State",
    "Generator",
    "Trajectory",
    "assemble_generator",
    "energy",
    "boundary_power",
    "initial_state",
    "default_dt",
    "MidpointStepper",
    "step_midpoint",
    "project_state",
    "simulate",
]


class SolverError(RuntimeError):
    """Saddle-point system singular or not solved to tolerance.

    When raised from :func:`simulate`, ``trajectory`` holds the steps
    completed before the failure.
    """

    trajectory = None
    step = None


class InadmissibleBCError(ValueError):
    def __init__(self, report: AdmissibilityReport):
        self.report = report
        super().__init__(
            f"boundary condition {report.label!r} fails the admissibility test "
            "(pass unsafe=True to run anyway)"
        )


@dataclass(frozen=True, eq=False)
class State:
    omega: np.ndarray
    nu: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float).ravel())
        object.__setattr__(self, "nu", np.asarray(self.nu, dtype=float).ravel())

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.omega, self.nu])

    @classmethod
    def from_vector(cls, x: np.ndarray, nv: int, time: float = 0.0) -> "State":
        return cls(x[:nv], x[nv:], time)


def energy(state: State, metric: HodgeMetric, materials: MaterialFields) -> float:
    w, v = state.omega, state.nu
    e0 = w @ (metric.diagonals[0] / materials.rho * w)
    e1 = v @ (metric.diagonals[1] * materials.young * v)
    return 0.5 * float(e0 + e1)


def boundary_power(state: State, traces: TraceOperators, materials: MaterialFields) -> float:
    """``(T omega/rho)^T Mb (N young nu)``; zero on closed meshes."""
    if traces.is_empty:
        return 0.0
    theta = traces.T @ (state.omega / materials.rho)
    sigma = traces.N @ (materials.young * state.nu)
    return float(theta @ (traces.mass * sigma))


def initial_state(u0, v0, complex, materials: MaterialFields) -> State:
    """``omega = rho * v0`` and ``nu = D_0 u0`` from vertex samples."""
    u0 = np.asarray(u0, dtype=float).ravel()
    v0 = np.asarray(v0, dtype=float).ravel()
    nv = complex.n_vertices
    if u0.shape != (nv,) or v0.shape != (nv,):
        raise ValueError(f"vertex samples must have length {nv}")
    return State(materials.rho * v0, complex.incidence[0] @ u0, 0.0)


def default_dt(complex, materials: MaterialFields) -> float:
    """Half the shortest edge over the fastest wave speed."""
    pts = complex.points
    E = complex.simplices[1]
    hmin = float(np.min(np.linalg.norm(pts[E[:, 1]] - pts[E[:, 0]], axis=1)))
    return 0.5 * hmin * float(np.sqrt(materials.rho.min() / materials.young.max()))


@dataclass(frozen=True, eq=False)
class Generator:
    """Assembled system operator, energy weights and constraints."""

    A: sparse.csr_matrix
    weights: np.ndarray
    C: sparse.csr_matrix
    disc: Discretization
    materials: MaterialFields
    bc: BCSpec | None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def nv(self) -> int:
        return self.disc.complex.n_vertices

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @cached_property
    def independent_rows(self) -> np.ndarray:
        """Rows of ``C`` forming a basis of its row space."""
        if self.C.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        _, R, piv = linalg.qr(self.C.toarray().T, mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        rank = int(np.sum(d > 1e-10 * d[0])) if d.size and d[0] > 0 else 0
        return np.sort(piv[:rank])

    @cached_property
    def C_reduced(self) -> sparse.csr_matrix:
        return self.C[self.independent_rows]

    def apply(self, state: State) -> State:
        return State.from_vector(self.A @ state.x, self.nv, state.time)

    def energy_form(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ (self.weights * y))

    def stepper(self, dt: float) -> "MidpointStepper":
        key = float(dt)
        if key not in self._cache:
            self._cache[key] = MidpointStepper(self, key)
        return self._cache[key]


def assemble_generator(
    disc: Discretization, materials: MaterialFields, bc: BCSpec | None = None
) -> Generator:
    c = disc.complex
    nv, ne = c.counts[0], c.counts[1]
    traces = disc.traces
    delta = codifferential_matrix(c, disc.metric, 1, traces)
    D0 = c.incidence[0].astype(float)
    top = -delta @ sparse.diags(materials.young)
    bottom = D0 @ sparse.diags(1.0 / materials.rho)
    A = sparse.bmat([[None, top], [bottom, None]], format="csr")
    # bmat drops all-None rows/cols; force the full square shape
    A = sparse.csr_matrix(A, shape=(nv + ne, nv + ne))
    weights = np.concatenate(
        [disc.metric.diagonals[0] / materials.rho, disc.metric.diagonals[1] * materials.young]
    )
    if bc is None or traces.is_empty:
        if bc is not None and bc.n_boundary != 0:
            raise ValueError("boundary condition given for a closed mesh")
        C = sparse.csr_matrix((0, nv + ne))
    else:
        C = constraint_matrix(bc, traces, materials)
    return Generator(A=A, weights=weights, C=C, disc=disc, materials=materials, bc=bc)


class MidpointStepper:
    """Factorised midpoint saddle system for one generator and step size.

    Unknowns are the midpoint ``y = (x + x+)/2`` and multipliers ``lam``:

        (2 W - dt W A) y - dt C^T lam = 2 W x,     C y = 0.
    """

    def __init__(self, gen: Generator, dt: float, tol: float = 1e-12):
        if dt == 0:
            raise ValueError("dt must be nonzero")
        self.gen = gen
        self.dt = dt
        self.tol = tol
        W = sparse.diags(gen.weights)
        Cr = gen.C_reduced
        self.n_constraints = Cr.shape[0]
        top_left = 2.0 * W - dt * (W @ gen.A)
        self.K = sparse.bmat(
            [[top_left, -dt * Cr.T], [Cr, None]], format="csc"
        ) if self.n_constraints else top_left.tocsc()
        label = gen.bc.label if gen.bc is not None else "none"
        try:
            self._lu = splinalg.splu(self.K)
        except RuntimeError as exc:
            raise SolverError(
                f"midpoint saddle system is singular for boundary condition {label!r}: {exc}"
            ) from exc

    def solve(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        """Return the midpoint state and the relative residual."""
        n = self.gen.size
        b = np.zeros(self.K.shape[0])
        b[:n] = 2.0 * self.gen.weights * x
        bnorm = np.linalg.norm(b)
        z = self._lu.solve(b)
        res = self._residual(z, b, bnorm)
        if res > self.tol:
            z = z + self._lu.solve(b - self.K @ z)
            res = self._residual(z, b, bnorm)
        if not np.isfinite(res) or res > self.tol:
            label = self.gen.bc.label if self.gen.bc is not None else "none"
            raise SolverError(
                f"midpoint solve residual {res:.3e} exceeds {self.tol:.1e} (bc {label!r})"
            )
        return z[:n], res

    def _residual(self, z, b, bnorm) -> float:
        if bnorm == 0.0:
            return float(np.linalg.norm(self.K @ z))
        return float(np.linalg.norm(self.K @ z - b) / bnorm)


def step_midpoint(state: State, dt: float, gen: Generator) -> State:
    y, _ = gen.stepper(dt).solve(state.x)
    return State.from_vector(2.0 * y - state.x, gen.nv, state.time + dt)


def project_state(state: State, gen: Generator) -> State:
    """Energy-orthogonal projection onto ``{C x = 0}``."""
    Cr = gen.C_reduced
    if Cr.shape[0] == 0:
        return state
    x = state.x
    winv = 1.0 / gen.weights
    Cd = Cr.toarray()
    S = (Cd * winv) @ Cd.T
    lam = linalg.solve(S, Cd @ x, assume_a="pos")
    return State.from_vector(x - winv * (Cd.T @ lam), gen.nv, state.time)


@dataclass
class Trajectory:
    """Energy and power series of a run, plus sampled states.

    ``boundary_power[0]`` is the power at the initial state; entry ``n >= 1``
    is the power at the midpoint of step ``n``, so that
    ``energy[n] - energy[n-1] == dt * boundary_power[n]``.
    """

    dt: float
    times: np.ndarray
    energy: np.ndarray
    boundary_power: np.ndarray
    residuals: np.ndarray
    snapshots: dict
    final: State
    report: AdmissibilityReport | None = None

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def max_relative_drift(self) -> float:
        e0 = self.energy[0]
        if e0 == 0:
            return float(np.max(np.abs(self.energy)))
        return float(np.max(np.abs(self.energy - e0)) / e0)

    def nonincreasing(self, rtol: float = 1e-10) -> bool:
        return bool(np.all(np.diff(self.energy) <= rtol * self.energy[0]))


def simulate(
    disc: Discretization,
    materials: MaterialFields,
    bc: BCSpec | None,
    initial: State,
    dt: float,
    steps: int,
    *,
    unsafe: bool = False,
    project_initial: bool = True,
    snapshot_stride: int = 0,
    admissibility_tol: float | None = None,
    solver_tol: float = 1e-12,
) -> Trajectory:
    """Integrate ``steps`` midpoint steps of size ``dt`` from ``initial``.

    The boundary condition is checked for admissibility first unless
    ``unsafe``. With ``project_initial`` the initial state is first projected
    (in the energy norm) onto the constraint set.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    gen = assemble_generator(disc, materials, bc)
    report = None
    if bc is not None and not disc.traces.is_empty:
        report = check_admissible(bc, disc.traces.mass, admissibility_tol)
        if not report.admissible:
            if not unsafe:
                raise InadmissibleBCError(report)
            logger.warning("running inadmissible boundary condition %s", bc.label)

    state = project_state(initial, gen) if project_initial else initial
    traces, metric = disc.traces, disc.metric
    times = [state.time]
    energies = [energy(state, metric, materials)]
    powers = [boundary_power(state, traces, materials)]
    residuals = [0.0]
    snapshots = {0: state}
    stepper = gen.stepper(dt) if steps else None
    if stepper is not None:
        stepper.tol = solver_tol
    for n in range(1, steps + 1):
        try:
            y, res = stepper.solve(state.x)
        except SolverError as exc:
            # hand back what was computed so callers can flag partial output
            exc.trajectory = Trajectory(
                dt=dt,
                times=np.array(times),
                energy=np.array(energies),
                boundary_power=np.array(powers),
                residuals=np.array(residuals),
                snapshots=snapshots,
                final=state,
                report=report,
            )
            exc.step = n
            raise
        mid = State.from_vector(y, gen.nv)
        state = State.from_vector(2.0 * y - state.x, gen.nv, state.time + dt)
        times.append(state.time)
        energies.append(energy(state, metric, materials))
        powers.append(boundary_power(mid, traces, materials))
        residuals.append(res)
        if snapshot_stride and n % snapshot_stride == 0:
            snapshots[n] = state
    snapshots[steps] = state
    return Trajectory(
        dt=dt,
        times=np.array(times),
        energy=np.array(energies),
        boundary_power=np.array(powers),
        residuals=np.array(residuals),
        snapshots=snapshots,
        final=state,
        report=report,
    )
