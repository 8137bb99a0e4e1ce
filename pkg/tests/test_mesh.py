import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgewave.cli import bundled_mesh
from hodgewave.mesh import (
    MeshError,
    NonManifoldError,
    NonOrientableError,
    OFFParseError,
    RawMesh,
    build_complex,
    chain_complex_exact,
    extract_boundary,
    format_off,
    parse_off,
    read_off,
    validate_manifold,
)

TRIANGLE = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
SQUARE = "OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n"


def test_parse_triangle():
    m = parse_off(TRIANGLE)
    assert m.n_vertices == 3 and m.n_cells == 1 and m.dim == 2


def test_parse_square():
    m = parse_off(SQUARE)
    assert m.n_vertices == 4 and m.n_cells == 2


def test_parse_comments_and_inline_counts():
    m = parse_off("# header\nOFF 3 1 0\n0 0\n1 0  # x\n0 1\n3 0 1 2\n")
    assert m.vertices.shape == (3, 2)


def test_parse_truncated_reports_line():
    with pytest.raises(OFFParseError) as info:
        parse_off("OFF\n3 1 0\n")
    assert "line" in str(info.value)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "PLY\n3 1 0\n",
        "OFF\n3 x 0\n",
        "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n",
        "OFF\n3 1 0\n0 0 0\n1 0\n0 1 0\n3 0 1 2\n",
        "OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n3 0 1 2\n2 1 3\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(OFFParseError):
        parse_off(text)


def test_roundtrip_format(tmp_path):
    m = parse_off(SQUARE)
    p = tmp_path / "sq.off"
    p.write_text(format_off(m))
    m2 = read_off(p)
    np.testing.assert_array_equal(m.vertices, m2.vertices)
    np.testing.assert_array_equal(m.cells, m2.cells)


def test_triangle_incidence():
    c = build_complex(parse_off(TRIANGLE))
    np.testing.assert_array_equal(c.simplices[1], [[0, 1], [0, 2], [1, 2]])
    np.testing.assert_array_equal(
        c.incidence[0].toarray(), [[-1, 1, 0], [-1, 0, 1], [0, -1, 1]]
    )
    np.testing.assert_array_equal(c.incidence[1].toarray(), [[1, -1, 1]])


def test_square_counts_and_exactness():
    c = build_complex(parse_off(SQUARE))
    assert c.counts == (4, 5, 2)
    assert (c.incidence[1] @ c.incidence[0]).count_nonzero() == 0


def test_mobius_rejected():
    with pytest.raises(NonOrientableError, match="non-orientable"):
        build_complex(read_off(bundled_mesh("mobius")))


def test_nonmanifold_edge_rejected():
    m = RawMesh([[0, 0], [1, 0], [0, 1], [0, -1], [1, 1]], [[0, 1, 2], [0, 1, 3], [0, 1, 4]], 2)
    with pytest.raises(NonManifoldError):
        build_complex(m)


def test_duplicate_cell_rejected():
    with pytest.raises(NonManifoldError):
        build_complex(RawMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2], [2, 1, 0]], 2))


def test_unused_vertex_rejected():
    with pytest.raises(MeshError):
        build_complex(RawMesh([[0, 0], [1, 0], [0, 1], [5, 5]], [[0, 1, 2]], 2))


def test_repeated_vertex_rejected():
    with pytest.raises(MeshError):
        RawMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 1]], 2)


def test_boundary_triangle_and_square():
    b = extract_boundary(build_complex(parse_off(TRIANGLE)))
    assert b.n_vertices == 3 and len(b.facets) == 3
    c = build_complex(parse_off(SQUARE))
    b = extract_boundary(c)
    assert b.n_vertices == 4 and len(b.facets) == 4
    diag = c.index((0, 2))
    assert diag not in set(b.facets.tolist())


def test_boundary_closed(load):
    b = load("icosphere_1").boundary
    assert b.is_empty and b.T.shape[0] == 0


def test_boundary_orientation_is_outward_cycle(load):
    # on an oriented surface the induced boundary orientation closes up
    d = load("annulus")
    c, b = d.complex, d.boundary
    D0 = c.incidence[0][b.facets]
    cycle = (b.facet_orientation[:, None] * D0.toarray()).sum(axis=0)
    np.testing.assert_array_equal(cycle, 0)


@pytest.mark.parametrize(
    "name, chi",
    [("triangle", 1), ("square", 1), ("rectangle_8", 1), ("annulus", 0), ("icosphere_1", 2),
     ("icosphere_2", 2), ("torus", 0), ("tetrahedron", 1), ("cube", 1), ("segment", 1)],
)
def test_euler_characteristic(load, name, chi):
    report = validate_manifold(load(name).complex)
    assert report.euler_characteristic == chi
    assert report.chain_complex_exact
    assert report.orientable


def test_report_lines(load):
    lines = validate_manifold(load("square").complex).lines()
    assert "euler characteristic: 1" in lines
    assert "closed: False" in lines


@st.composite
def random_strip(draw):
    # random triangulated strip, a valid manifold with boundary
    n = draw(st.integers(2, 8))
    flips = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    pts = [[i, 0.0] for i in range(n + 1)] + [[i, 1.0] for i in range(n + 1)]
    cells = []
    for i, f in enumerate(flips):
        a, b, c, d = i, i + 1, n + 2 + i, n + 1 + i
        cells += [[a, b, c], [a, c, d]] if f else [[a, b, d], [b, c, d]]
    return RawMesh(pts, cells, 2)


@settings(max_examples=30, deadline=None)
@given(random_strip())
def test_random_strips_exact_and_disk_like(mesh):
    c = build_complex(mesh)
    assert chain_complex_exact(c)
    assert c.euler_characteristic() == 1
    assert c.orientable
