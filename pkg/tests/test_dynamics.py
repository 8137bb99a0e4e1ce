import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from conftest import disc
from hodgewave.boundary import custom, impedance, normal_zero, velocity_zero
from hodgewave.dynamics import (
    InadmissibleBCError,
    SolverError,
    State,
    assemble_generator,
    boundary_power,
    default_dt,
    energy,
    initial_state,
    project_state,
    simulate,
    step_midpoint,
)
from hodgewave.metric import MaterialFields
from hodgewave.operators import codifferential_matrix
from hodgewave.profiles import gaussian_bump


def _random_state(d, rng):
    return State(rng.standard_normal(d.complex.counts[0]), rng.standard_normal(d.complex.counts[1]))


def _random_materials(d, rng):
    return MaterialFields(rng.uniform(0.5, 2.0, d.complex.counts[0]), rng.uniform(0.5, 2.0, d.complex.counts[1]))


def _nb(d):
    return d.traces.T.shape[0]


def test_energy_examples(load):
    d = load("square")
    mat = MaterialFields.constant(d.complex)
    rng = np.random.default_rng(0)
    x = _random_state(d, rng)
    zero = State(np.zeros(4), np.zeros(5))
    assert energy(zero, d.metric, mat) == 0.0
    m0, m1 = d.metric.diagonals[0], d.metric.diagonals[1]
    expected = 0.5 * (x.omega @ (m0 * x.omega) + x.nu @ (m1 * x.nu))
    assert energy(x, d.metric, mat) == pytest.approx(expected, rel=1e-14)
    x2 = State(2 * x.omega, 2 * x.nu)
    assert energy(x2, d.metric, mat) == pytest.approx(4 * expected, rel=1e-14)


def test_boundary_power_zero_cases(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    rng = np.random.default_rng(1)
    x = _random_state(d, rng)
    w = x.omega.copy()
    w[d.boundary.vertices] = 0.0
    assert boundary_power(State(w, x.nu), d.traces, mat) == 0.0
    s = load("icosphere_1")
    assert boundary_power(_random_state(s, rng), s.traces, MaterialFields.constant(s.complex)) == 0.0


def test_generator_blocks_identity_materials(load):
    d = load("square")
    g = assemble_generator(d, MaterialFields.constant(d.complex))
    nv = d.complex.n_vertices
    A = g.A.toarray()
    delta = codifferential_matrix(d.complex, d.metric, 1, d.traces).toarray()
    np.testing.assert_allclose(A[:nv, nv:], -delta)
    np.testing.assert_array_equal(A[nv:, :nv], d.complex.incidence[0].toarray())
    assert not np.any(A[:nv, :nv]) and not np.any(A[nv:, nv:])


def test_generator_density_halves_bottom_block(load):
    d = load("square")
    g = assemble_generator(d, MaterialFields.constant(d.complex, rho=2.0))
    nv = d.complex.n_vertices
    np.testing.assert_allclose(g.A.toarray()[nv:, :nv], d.complex.incidence[0].toarray() / 2)


def test_generator_closed_mesh_has_no_constraints(load):
    d = load("icosphere_1")
    assert assemble_generator(d, MaterialFields.constant(d.complex)).C.shape[0] == 0


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["square", "rectangle_8", "annulus", "cube", "icosphere_1"]), st.integers(0, 2**32 - 1))
def test_power_balance(name, seed):
    d = disc(name)
    rng = np.random.default_rng(seed)
    mat = _random_materials(d, rng)
    g = assemble_generator(d, mat)
    x = _random_state(d, rng)
    ax = g.A @ x.x
    lhs = 2 * g.energy_form(ax, x.x)
    p = boundary_power(x, d.traces, mat)
    scale = 2 * g.energy_form(x.x, x.x) * np.abs(g.A).max()
    assert abs(lhs - 2 * p) <= 1e-12 * scale


def test_skew_symmetry_on_zero_trace_states(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    g = assemble_generator(d, mat)
    rng = np.random.default_rng(2)
    kernel = linalg.null_space(d.traces.N.toarray())
    for _ in range(20):
        states = []
        for _ in range(2):
            w = rng.standard_normal(d.complex.n_vertices)
            w[d.boundary.vertices] = 0.0
            states.append(np.concatenate([w, kernel @ rng.standard_normal(kernel.shape[1])]))
        x, y = states
        s = g.energy_form(g.A @ x, y) + g.energy_form(x, g.A @ y)
        nx, ny = np.sqrt(g.energy_form(x, x)), np.sqrt(g.energy_form(y, y))
        assert abs(s) <= 1e-12 * nx * ny * np.abs(g.A).max()


def test_initial_state_examples(load):
    d = load("rectangle_8")
    c = d.complex
    mat = MaterialFields.constant(c, rho=3.0)
    nv = c.n_vertices
    x = initial_state(np.ones(nv), np.zeros(nv), c, mat)
    assert not np.any(x.nu) and not np.any(x.omega)
    x = initial_state(c.points[:, 0], np.ones(nv), c, mat)
    E = c.simplices[1]
    np.testing.assert_array_equal(x.nu, c.points[E[:, 1], 0] - c.points[E[:, 0], 0])
    np.testing.assert_array_equal(x.omega, 3.0)
    with pytest.raises(ValueError):
        initial_state(np.ones(3), np.ones(nv), c, mat)


def test_step_zero_state(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    g = assemble_generator(d, mat, impedance(_nb(d), 1.0))
    z = State(np.zeros(d.complex.counts[0]), np.zeros(d.complex.counts[1]))
    out = step_midpoint(z, 0.1, g)
    assert not np.any(out.x) and out.time == pytest.approx(0.1)


def test_step_conserves_energy_normal_zero(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    g = assemble_generator(d, mat, normal_zero(_nb(d)))
    x = project_state(_random_state(d, np.random.default_rng(3)), g)
    x1 = step_midpoint(x, 0.05, g)
    assert energy(x1, d.metric, mat) == pytest.approx(energy(x, d.metric, mat), rel=1e-10)


def test_time_reversal(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    for bc in (normal_zero(_nb(d)), velocity_zero(_nb(d))):
        g = assemble_generator(d, mat, bc)
        x = project_state(_random_state(d, np.random.default_rng(4)), g)
        back = step_midpoint(step_midpoint(x, 0.05, g), -0.05, g)
        assert np.linalg.norm(back.x - x.x) <= 1e-9 * np.linalg.norm(x.x)


def test_step_rejects_zero_dt(load):
    d = load("square")
    g = assemble_generator(d, MaterialFields.constant(d.complex))
    with pytest.raises(ValueError):
        step_midpoint(State(np.zeros(4), np.zeros(5)), 0.0, g)


def test_projection_satisfies_constraints(load):
    d = load("annulus")
    mat = _random_materials(d, np.random.default_rng(5))
    g = assemble_generator(d, mat, impedance(_nb(d), 0.5))
    x = project_state(_random_state(d, np.random.default_rng(6)), g)
    assert np.linalg.norm(g.C @ x.x) <= 1e-12 * np.linalg.norm(x.x)


def test_rank_deficient_constraints_compressed(load):
    d = load("square")
    g = assemble_generator(d, MaterialFields.constant(d.complex), normal_zero(_nb(d)))
    assert g.C.shape[0] == 4 and len(g.independent_rows) == 3


def test_simulate_zero_steps(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    x0 = initial_state(*gaussian_bump(d.complex.points, mat), d.complex, mat)
    tr = simulate(d, mat, impedance(_nb(d), 1.0), x0, 0.1, 0)
    assert tr.steps == 0 and len(tr.energy) == 1 and list(tr.snapshots) == [0]


def test_simulate_energy_balance_and_constraints(load):
    d = load("annulus")
    rng = np.random.default_rng(8)
    mat = _random_materials(d, rng)
    bc = impedance(_nb(d), 2.0)
    x0 = initial_state(*gaussian_bump(d.complex.points, mat, center=[0.75, 0, 0]), d.complex, mat)
    tr = simulate(d, mat, bc, x0, 0.02, 200, snapshot_stride=50)
    np.testing.assert_allclose(np.diff(tr.energy), tr.dt * tr.boundary_power[1:], atol=1e-12 * tr.energy[0])
    assert tr.nonincreasing()
    assert tr.energy[-1] < tr.energy[0]
    assert sorted(tr.snapshots) == [0, 50, 100, 150, 200]
    g = assemble_generator(d, mat, bc)
    for s in tr.snapshots.values():
        assert np.linalg.norm(g.C @ s.x) <= 1e-10 * np.linalg.norm(s.x)
    assert tr.residuals.max() <= 1e-12


def test_simulate_conservative_long_run(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    x0 = initial_state(*gaussian_bump(d.complex.points, mat), d.complex, mat)
    tr = simulate(d, mat, velocity_zero(_nb(d)), x0, default_dt(d.complex, mat), 1000)
    assert tr.max_relative_drift() <= 1e-8


def test_inadmissible_requires_unsafe(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    nb = _nb(d)
    bad = custom(np.eye(nb), -np.eye(nb))
    x0 = initial_state(*gaussian_bump(d.complex.points, mat), d.complex, mat)
    with pytest.raises(InadmissibleBCError):
        simulate(d, mat, bad, x0, 0.05, 10)
    tr = simulate(d, mat, bad, x0, 0.05, 50, unsafe=True)
    assert tr.energy.max() > tr.energy[0] * (1 + 1e-6)


def test_solver_error_carries_partial_trajectory(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex)
    x0 = initial_state(*gaussian_bump(d.complex.points, mat), d.complex, mat)
    with pytest.raises(SolverError, match="impedance") as info:
        simulate(d, mat, impedance(_nb(d), 1.0), x0, 0.05, 10, solver_tol=1e-300)
    assert info.value.step == 1 and info.value.trajectory.steps == 0


def test_default_dt(load):
    d = load("rectangle_8")
    mat = MaterialFields.constant(d.complex, rho=4.0, young=1.0)
    assert default_dt(d.complex, mat) == pytest.approx(0.5 * 0.125 * 2.0)
