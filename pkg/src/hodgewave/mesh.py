"""Oriented simplicial complexes, OFF parsing and boundary extraction.

Every simplex is stored with its vertices in ascending index order; that is
the reference orientation from which all incidence signs are derived.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy import sparse

__all__ = [
    "MeshError",
    "OFFParseError",
    "NonManifoldError",
    "NonOrientableError",
    "RawMesh",
    "SimplicialComplex",
    "BoundaryComplex",
    "ManifoldReport",
    "parse_off",
    "read_off",
    "format_off",
    "build_complex",
    "extract_boundary",
    "validate_manifold",
]


class MeshError(ValueError):
    """Base class for invalid mesh input."""


class OFFParseError(MeshError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonManifoldError(MeshError):
    pass


class NonOrientableError(MeshError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RawMesh:
    """Vertex coordinates plus top-dimensional cells.

    Parameters
    ----------
    vertices : array_like, shape (nv, d)
        Embedding coordinates, ``d >= dim``.
    cells : array_like of int, shape (nc, dim + 1)
        Vertex indices of each top simplex.
    dim : int
        Intrinsic dimension, one of 1, 2, 3 (0 is accepted for boundary
        complexes of curves).
    """

    vertices: np.ndarray
    cells: np.ndarray
    dim: int

    def __post_init__(self):
        verts = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        cells = np.asarray(self.cells, dtype=np.int64)
        if cells.ndim == 1:
            cells = cells.reshape(-1, self.dim + 1)
        if self.dim not in (0, 1, 2, 3):
            raise MeshError(f"unsupported dimension {self.dim}")
        if cells.shape[1] != self.dim + 1:
            raise MeshError(
                f"cells must have {self.dim + 1} vertices, got {cells.shape[1]}"
            )
        if verts.shape[1] < self.dim:
            raise MeshError(
                f"coordinate dimension {verts.shape[1]} < intrinsic dimension {self.dim}"
            )
        if cells.size and (cells.min() < 0 or cells.max() >= len(verts)):
            raise MeshError("cell vertex index out of range")
        for i, c in enumerate(cells):
            if len(set(c.tolist())) != len(c):
                raise MeshError(f"cell {i} has repeated vertices {tuple(c)}")
        object.__setattr__(self, "vertices", _frozen(verts))
        object.__setattr__(self, "cells", _frozen(cells))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)


# ---------------------------------------------------------------------------
# OFF input/output


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_off(text: str) -> RawMesh:
    """Parse ASCII OFF text.

    The intrinsic dimension is inferred from the face arity: 2 for segments,
    3 for triangles, 4 for tetrahedra. Tokens after the ``k`` indices of a
    face line (colours) are ignored.
    """
    lines = _content_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise OFFParseError("empty input") from None

    tokens = header.split()
    if tokens[0] != "OFF":
        raise OFFParseError(f"expected header 'OFF', got {tokens[0]!r}", lineno)
    tokens = tokens[1:]
    if not tokens:
        try:
            lineno, counts_line = next(lines)
        except StopIteration:
            raise OFFParseError("missing counts line", lineno) from None
        tokens = counts_line.split()
    try:
        counts = [int(t) for t in tokens]
    except ValueError:
        raise OFFParseError(f"malformed counts {' '.join(tokens)!r}", lineno) from None
    if len(counts) < 2 or min(counts) < 0:
        raise OFFParseError("counts line must be 'nv nf ne'", lineno)
    nv, nf = counts[0], counts[1]

    vertices = []
    for i in range(nv):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise OFFParseError(
                f"truncated: expected {nv} vertices, found {i}", lineno
            ) from None
        try:
            coords = [float(t) for t in line.split()]
        except ValueError:
            raise OFFParseError(f"malformed vertex line {line!r}", lineno) from None
        if vertices and len(coords) != len(vertices[0]):
            raise OFFParseError("inconsistent coordinate count", lineno)
        vertices.append(coords)

    cells = []
    arity = None
    for i in range(nf):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise OFFParseError(
                f"truncated: expected {nf} faces, found {i}", lineno
            ) from None
        parts = line.split()
        try:
            k = int(parts[0])
            idx = [int(t) for t in parts[1 : k + 1]]
        except ValueError:
            raise OFFParseError(f"malformed face line {line!r}", lineno) from None
        if len(idx) != k:
            raise OFFParseError(f"face declares {k} vertices, has {len(idx)}", lineno)
        if k not in (2, 3, 4):
            raise OFFParseError(f"unsupported face arity {k}", lineno)
        if arity is None:
            arity = k
        elif k != arity:
            raise OFFParseError(f"mixed cell arity ({arity} and {k})", lineno)
        if any(j < 0 or j >= nv for j in idx):
            raise OFFParseError(f"vertex index out of range in {idx}", lineno)
        cells.append(idx)

    if arity is None:
        raise OFFParseError("mesh has no faces")
    verts = np.array(vertices, dtype=float).reshape(nv, -1)
    return RawMesh(verts, np.array(cells, dtype=np.int64), arity - 1)


def read_off(path) -> RawMesh:
    return parse_off(Path(path).read_text())


def format_off(mesh: RawMesh) -> str:
    out = ["OFF", f"{mesh.n_vertices} {mesh.n_cells} 0"]
    out += [" ".join(f"{x:.17g}" for x in v) for v in mesh.vertices]
    out += [f"{len(c)} " + " ".join(str(i) for i in c) for c in mesh.cells]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Complex construction


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Oriented simplicial complex with signed incidence matrices.

    Attributes
    ----------
    simplices : tuple of ndarray
        ``simplices[k]`` has shape (count_k, k + 1); rows are sorted
        ascending and the list is in lexicographic order.
    incidence : tuple of csr_matrix
        ``incidence[k]`` is D_k with shape (count_{k+1}, count_k) and entries
        in {-1, 0, +1}.
    orientation : ndarray of int
        +1/-1 per top simplex, relative to the ascending reference order, such
        that neighbouring top simplices induce opposite orientations on shared
        facets. ``None`` when no consistent orientation exists.
    points : ndarray
        Vertex coordinates (the embedding).
    """

    dim: int
    points: np.ndarray
    simplices: tuple
    incidence: tuple
    orientation: np.ndarray | None
    _index: tuple = field(repr=False)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.simplices)

    @property
    def n_vertices(self) -> int:
        return len(self.simplices[0])

    @property
    def orientable(self) -> bool:
        return self.orientation is not None

    def index(self, simplex) -> int:
        """Position of a simplex (any vertex order) in its degree's list."""
        key = tuple(sorted(int(v) for v in simplex))
        return self._index[len(key) - 1][key]

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * c for k, c in enumerate(self.counts))

    def coface_counts(self) -> np.ndarray:
        """Number of top simplices containing each facet."""
        if self.dim == 0:
            return np.zeros(0, dtype=np.int64)
        D = self.incidence[self.dim - 1]
        return np.asarray(abs(D).sum(axis=0)).ravel().astype(np.int64)


def _faces(cells: np.ndarray, k: int) -> np.ndarray:
    """Unique sorted k-faces of sorted cells, in lexicographic order."""
    m = cells.shape[1]
    cols = list(combinations(range(m), k + 1))
    faces = np.concatenate([cells[:, c] for c in cols], axis=0)
    return np.unique(faces, axis=0)


def _incidence(high: np.ndarray, index: dict) -> sparse.csr_matrix:
    m = high.shape[1]
    rows, cols, vals = [], [], []
    for i in range(m):
        sign = -1 if i % 2 else 1
        sub = np.delete(high, i, axis=1)
        cols.extend(index[tuple(s)] for s in sub.tolist())
        rows.extend(range(len(high)))
        vals.extend([sign] * len(high))
    return sparse.csr_matrix(
        (np.array(vals, dtype=np.int64), (rows, cols)),
        shape=(len(high), len(index)),
    )


def _propagate_orientation(D: sparse.csr_matrix) -> np.ndarray | None:
    # Across an interior facet f shared by cells a, b a consistent orientation
    # needs o_a * D[a, f] + o_b * D[b, f] == 0.
    ntop = D.shape[0]
    Dc = D.tocsc()
    orient = np.zeros(ntop, dtype=np.int64)
    Dr = D.tocsr()
    for seed in range(ntop):
        if orient[seed]:
            continue
        orient[seed] = 1
        queue = deque([seed])
        while queue:
            a = queue.popleft()
            row = slice(Dr.indptr[a], Dr.indptr[a + 1])
            for f, s_a in zip(Dr.indices[row], Dr.data[row]):
                col = slice(Dc.indptr[f], Dc.indptr[f + 1])
                for b, s_b in zip(Dc.indices[col], Dc.data[col]):
                    if b == a:
                        continue
                    want = -orient[a] * s_a * s_b
                    if orient[b] == 0:
                        orient[b] = want
                        queue.append(b)
                    elif orient[b] != want:
                        return None
    return orient


def build_complex(mesh: RawMesh, require_orientable: bool = True) -> SimplicialComplex:
    """Enumerate all faces of ``mesh`` and assemble the incidence matrices.

    Raises
    ------
    NonManifoldError
        If a facet is shared by more than two top simplices, or a top
        simplex is repeated.
    NonOrientableError
        If ``require_orientable`` and no consistent orientation exists.
    """
    n = mesh.dim
    cells = np.sort(mesh.cells, axis=1)
    top = np.unique(cells, axis=0)
    if len(top) != len(cells):
        raise NonManifoldError("mesh contains duplicate top simplices")

    simplices = [_faces(top, k) for k in range(n)] + [top]
    # Isolated vertices carry no cochain data; they still appear as 0-simplices
    # so vertex indexing matches the input.
    if n > 0:
        used = simplices[0][:, 0]
        if len(used) != mesh.n_vertices:
            missing = sorted(set(range(mesh.n_vertices)) - set(used.tolist()))
            raise MeshError(f"vertices {missing[:10]} belong to no cell")
    else:
        simplices[0] = top

    index = tuple({tuple(s): i for i, s in enumerate(S.tolist())} for S in simplices)
    incidence = tuple(_incidence(simplices[k + 1], index[k]) for k in range(n))

    orientation = np.ones(len(top), dtype=np.int64)
    if n > 0:
        per_facet = np.asarray(abs(incidence[n - 1]).sum(axis=0)).ravel()
        bad = np.flatnonzero(per_facet > 2)
        if bad.size:
            f = tuple(simplices[n - 1][bad[0]].tolist())
            raise NonManifoldError(
                f"{n - 1}-simplex {f} is shared by {int(per_facet[bad[0]])} top simplices"
            )
        orientation = _propagate_orientation(incidence[n - 1])
        if orientation is None and require_orientable:
            raise NonOrientableError("mesh is non-orientable")

    for a in simplices:
        _frozen(a)
    if orientation is not None:
        _frozen(orientation)
    return SimplicialComplex(
        dim=n,
        points=mesh.vertices,
        simplices=tuple(simplices),
        incidence=incidence,
        orientation=orientation,
        _index=index,
    )


# ---------------------------------------------------------------------------
# Boundary


@dataclass(frozen=True, eq=False)
class BoundaryComplex:
    """The (n-1)-dimensional boundary of a complex.

    Attributes
    ----------
    facets : ndarray of int
        Indices (into ``complex.simplices[n-1]``) of facets with exactly one
        top coface.
    facet_cells : ndarray of int
        The top simplex owning each boundary facet.
    facet_orientation : ndarray of int
        Induced orientation of each facet relative to its ascending order.
    vertices : ndarray of int
        Global indices of boundary vertices, ascending. Boundary 0-cochains
        are indexed by position in this array.
    T : csr_matrix
        Trace selection matrix, shape (len(vertices), n_vertices).
    complex : SimplicialComplex or None
        The boundary as a closed complex on local vertex numbering; ``None``
        when the boundary is empty.
    """

    facets: np.ndarray
    facet_cells: np.ndarray
    facet_orientation: np.ndarray
    vertices: np.ndarray
    T: sparse.csr_matrix
    complex: SimplicialComplex | None

    @property
    def is_empty(self) -> bool:
        return len(self.facets) == 0

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def local_facets(self) -> np.ndarray:
        """Boundary facets in local (boundary vertex) numbering."""
        if self.complex is None:
            return np.zeros((0, 0), dtype=np.int64)
        return self.complex.simplices[-1]


def extract_boundary(complex: SimplicialComplex) -> BoundaryComplex:
    n = complex.dim
    nv = complex.n_vertices
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return BoundaryComplex(
            empty, empty, empty, empty, sparse.csr_matrix((0, nv)), None
        )
    D = complex.incidence[n - 1].tocsc()
    counts = np.diff(D.indptr)
    facets = np.flatnonzero(counts == 1)
    owner = D.indices[D.indptr[facets]]
    sign = D.data[D.indptr[facets]]
    orient = complex.orientation if complex.orientation is not None else np.ones(D.shape[0], dtype=np.int64)
    facet_orientation = sign * orient[owner]

    fverts = complex.simplices[n - 1][facets]
    bverts = np.unique(fverts)
    T = sparse.csr_matrix(
        (np.ones(len(bverts)), (np.arange(len(bverts)), bverts)),
        shape=(len(bverts), nv),
    )
    bcomplex = None
    if len(facets):
        local = np.searchsorted(bverts, fverts)
        bcomplex = build_complex(
            RawMesh(complex.points[bverts], local, n - 1), require_orientable=False
        )
    return BoundaryComplex(
        facets=_frozen(facets),
        facet_cells=_frozen(owner),
        facet_orientation=_frozen(np.asarray(facet_orientation, dtype=np.int64)),
        vertices=_frozen(bverts),
        T=T,
        complex=bcomplex,
    )


@dataclass(frozen=True)
class ManifoldReport:
    dim: int
    counts: tuple
    boundary_vertices: int
    boundary_facets: int
    orientable: bool
    euler_characteristic: int
    chain_complex_exact: bool

    @property
    def closed(self) -> bool:
        return self.boundary_facets == 0

    def lines(self) -> list[str]:
        names = ["vertices", "edges", "triangles", "tetrahedra"]
        out = [f"dimension: {self.dim}"]
        out += [f"{names[k]}: {c}" for k, c in enumerate(self.counts)]
        out += [
            f"boundary vertices: {self.boundary_vertices}",
            f"boundary facets: {self.boundary_facets}",
            f"closed: {self.closed}",
            f"orientable: {self.orientable}",
            f"euler characteristic: {self.euler_characteristic}",
            f"d o d == 0: {self.chain_complex_exact}",
        ]
        return out


def chain_complex_exact(complex: SimplicialComplex) -> bool:
    """True iff D_{k+1} D_k vanishes in integer arithmetic for every k."""
    for k in range(complex.dim - 1):
        prod = complex.incidence[k + 1] @ complex.incidence[k]
        if prod.count_nonzero():
            return False
    return True


def validate_manifold(complex: SimplicialComplex) -> ManifoldReport:
    boundary = extract_boundary(complex)
    return ManifoldReport(
        dim=complex.dim,
        counts=complex.counts,
        boundary_vertices=boundary.n_vertices,
        boundary_facets=len(boundary.facets),
        orientable=complex.orientable,
        euler_characteristic=complex.euler_characteristic(),
        chain_complex_exact=chain_complex_exact(complex),
    )
