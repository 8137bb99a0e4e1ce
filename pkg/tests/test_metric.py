import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgewave.mesh import RawMesh, build_complex
from hodgewave.metric import (
    DegenerateSimplexError,
    MaterialFields,
    build_metric,
    dual_volumes,
    inner_product,
    material_matrices,
    primal_volumes,
    read_material_csv,
    star,
    star_inv,
)
from hodgewave.operators import Cochain


def test_right_triangle_volumes(load):
    d = load("triangle")
    np.testing.assert_allclose(d.metric.primal[1], [1, 1, np.sqrt(2)])
    np.testing.assert_allclose(d.metric.primal[2], [0.5])


def test_segment_volumes(load):
    np.testing.assert_allclose(load("segment").metric.primal[1], [0.5, 0.5])


def test_degenerate_triangle():
    c = build_complex(RawMesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], 2))
    with pytest.raises(DegenerateSimplexError):
        primal_volumes(c, None, 2)


def test_vertex_dual_areas_triangle(load):
    d = load("triangle")
    np.testing.assert_allclose(d.metric.dual[0], [1 / 6] * 3, rtol=1e-14)
    np.testing.assert_allclose(d.metric.diagonals[0], [1 / 6] * 3, rtol=1e-14)
    np.testing.assert_allclose(d.metric.diagonals[2], [2.0], rtol=1e-14)


def test_square_diagonal_dual_length(load):
    d = load("square")
    c = d.complex
    # each triangle contributes barycentre-to-midpoint distance sqrt(2)/6
    e = c.index((0, 2))
    np.testing.assert_allclose(d.metric.dual[1][e], 2 * np.sqrt(2) / 6, rtol=1e-14)


@pytest.mark.parametrize("name", ["icosphere_1", "icosphere_2", "annulus", "cube", "torus"])
def test_partition_of_unity(load, name):
    d = load(name)
    total = d.metric.primal[d.complex.dim].sum()
    np.testing.assert_allclose(d.metric.dual[0].sum(), total, rtol=1e-12)


@pytest.mark.parametrize("name", ["triangle", "square", "rectangle_8", "annulus", "icosphere_1", "cube", "torus"])
def test_diagonals_positive(load, name):
    for m in load(name).metric.diagonals:
        assert np.all(m > 0)


def test_boundary_measure_sums_to_perimeter(load):
    d = load("rectangle_8")
    np.testing.assert_allclose(d.metric.boundary_diagonal.sum(), 3.0, rtol=1e-13)


def test_dual_volume_scaling(load):
    d = load("annulus")
    c = d.complex
    for k in range(3):
        scaled = dual_volumes(c, 2.0 * c.points, k)
        np.testing.assert_allclose(scaled, 2.0 ** (2 - k) * d.metric.dual[k], rtol=1e-12)


@pytest.mark.parametrize("name, k, sign", [("triangle", 1, -1), ("triangle", 0, 1), ("tetrahedron", 1, 1), ("tetrahedron", 2, 1)])
def test_star_sign_rule(load, name, k, sign):
    m = load(name).metric
    n = m.dim
    prod = (star_inv(m, n - k) @ star(m, k)).toarray()
    np.testing.assert_allclose(prod, sign * np.eye(prod.shape[0]), rtol=1e-14)


def test_inner_product_indicator(load):
    d = load("triangle")
    a = Cochain(d.complex, 0, [1.0, 0, 0])
    assert inner_product(d.metric, a, a) == pytest.approx(1 / 6, rel=1e-14)


def test_inner_product_degree_mismatch(load):
    d = load("triangle")
    with pytest.raises(ValueError):
        inner_product(d.metric, Cochain(d.complex, 0, np.ones(3)), Cochain(d.complex, 1, np.ones(3)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inner_product_symmetric_definite(seed):
    from conftest import disc

    d = disc("annulus")
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, 3))
    a = Cochain(d.complex, k, rng.standard_normal(d.complex.counts[k]))
    b = Cochain(d.complex, k, rng.standard_normal(d.complex.counts[k]))
    assert inner_product(d.metric, a, b) == pytest.approx(inner_product(d.metric, b, a), rel=1e-13)
    assert inner_product(d.metric, a, a) > 0
    zero = Cochain(d.complex, k, np.zeros(d.complex.counts[k]))
    assert inner_product(d.metric, zero, zero) == 0


def test_material_matrices(load):
    d = load("square")
    E0, E1 = material_matrices(d.metric, MaterialFields.constant(d.complex))
    np.testing.assert_array_equal(E0.diagonal(), d.metric.diagonals[0])
    np.testing.assert_array_equal(E1.diagonal(), d.metric.diagonals[1])
    E0, _ = material_matrices(d.metric, MaterialFields.constant(d.complex, rho=2.0))
    np.testing.assert_allclose(E0.diagonal(), d.metric.diagonals[0] / 2)


def test_material_zero_density_rejected():
    with pytest.raises(ValueError, match="rho"):
        MaterialFields([1.0, 0.0, 1.0], [1.0])


def test_material_size_mismatch(load):
    d = load("square")
    with pytest.raises(ValueError):
        material_matrices(d.metric, MaterialFields(np.ones(3), np.ones(5)))


def test_read_material_csv(tmp_path):
    p = tmp_path / "rho.csv"
    p.write_text("index,value\n1,2.5\n3,4\n")
    np.testing.assert_array_equal(read_material_csv(p, 4), [1, 2.5, 1, 4])
    p.write_text("9,1\n")
    with pytest.raises(ValueError):
        read_material_csv(p, 4)


def test_build_metric_embedding_dim(load):
    assert load("torus").metric.embedding_dim == 4
    assert load("segment").metric.embedding_dim == 1
