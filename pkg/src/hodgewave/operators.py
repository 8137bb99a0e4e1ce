"""Exterior derivative, traces, codifferential and the discrete Green identity.

The degree-1 codifferential carries an explicit boundary term,

    delta mu = M_0^{-1} (D_0^T M_1 mu - T^T Mb N mu),

so that ``<d w, mu> - <w, delta mu> = (T w)^T Mb (N mu)`` holds exactly for
every pair of cochains. All discretisation error is pushed into the normal
trace ``N``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import sparse

from .mesh import BoundaryComplex, SimplicialComplex, extract_boundary
from .metric import HodgeMetric, build_metric

__all__ = [
    "Cochain",
    "TraceOperators",
    "Discretization",
    "barycentric_gradients",
    "assemble_normal_trace",
    "assemble_traces",
    "exterior_derivative",
    "trace",
    "normal_trace",
    "codifferential",
    "codifferential_matrix",
    "dual_derivative",
    "green_residual",
]


@dataclass(frozen=True, eq=False)
class Cochain:
    """Real values on the oriented k-simplices of a complex."""

    complex: SimplicialComplex
    degree: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not 0 <= self.degree <= self.complex.dim:
            raise ValueError(f"degree {self.degree} outside 0..{self.complex.dim}")
        expected = self.complex.counts[self.degree]
        if vals.shape != (expected,):
            raise ValueError(
                f"{self.degree}-cochain needs {expected} values, got shape {vals.shape}"
            )
        object.__setattr__(self, "values", vals)

    def __add__(self, other: "Cochain") -> "Cochain":
        self._check(other)
        return Cochain(self.complex, self.degree, self.values + other.values)

    def __sub__(self, other: "Cochain") -> "Cochain":
        self._check(other)
        return Cochain(self.complex, self.degree, self.values - other.values)

    def __mul__(self, s: float) -> "Cochain":
        return Cochain(self.complex, self.degree, s * self.values)

    __rmul__ = __mul__

    def _check(self, other):
        if other.complex is not self.complex or other.degree != self.degree:
            raise ValueError("cochains live on different spaces")


# ---------------------------------------------------------------------------
# Normal trace


def barycentric_gradients(corners: np.ndarray) -> np.ndarray:
    """Gradients of the barycentric coordinates of simplices.

    ``corners`` has shape (m, n + 1, d); returns (m, n + 1, d) with the
    gradients taken inside the affine hull of each simplex.
    """
    E = corners[:, 1:, :] - corners[:, :1, :]  # (m, n, d)
    G = np.einsum("mid,mjd->mij", E, E)
    # rows of inv(G) @ E are the gradients of lambda_1..lambda_n
    grads = np.linalg.solve(G, E)
    g0 = -grads.sum(axis=1, keepdims=True)
    return np.concatenate([g0, grads], axis=1)


# Barycentric coordinates (own vertex first) of the centroid of a vertex's
# barycentric region inside a boundary facet of dimension m.
_REGION_CENTROID = {
    0: np.array([1.0]),
    1: np.array([3 / 4, 1 / 4]),
    2: np.array([11 / 18, 7 / 36, 7 / 36]),
}


def assemble_normal_trace(
    complex: SimplicialComplex, boundary: BoundaryComplex, metric: HodgeMetric
) -> sparse.csr_matrix:
    """Normal-trace matrix, boundary 0-cochains from 1-cochains.

    A 1-cochain is interpolated by lowest-order Whitney forms in each top
    simplex touching the boundary. ``(N mu)_v`` is the outward flux of that
    field through the part of the boundary belonging to the barycentric dual
    cell of ``v``, divided by the measure of that part. The field is affine
    on each region, so the flux is the region measure times the value at
    the region centroid.
    """
    n = complex.dim
    nb = boundary.n_vertices
    ne = complex.counts[1]
    if boundary.is_empty:
        return sparse.csr_matrix((0, ne))
    pts = complex.points
    top = complex.simplices[n]
    cells = top[boundary.facet_cells]
    facet_verts = complex.simplices[n - 1][boundary.facets]
    grads = barycentric_gradients(pts[cells])
    edge_pairs = list(combinations(range(n + 1), 2))
    edge_ids = np.array(
        [[complex.index((c[a], c[b])) for a, b in edge_pairs] for c in cells.tolist()],
        dtype=np.int64,
    ).reshape(len(cells), len(edge_pairs))
    bpos = {int(v): i for i, v in enumerate(boundary.vertices)}
    fmeasure = metric.primal[n - 1][boundary.facets] if n > 1 else np.ones(len(cells))
    region = fmeasure / n  # each of the n facet vertices owns 1/n of the facet
    weights = _REGION_CENTROID[n - 1]

    rows, cols, vals = [], [], []
    for f in range(len(cells)):
        cell = cells[f].tolist()
        local_of = {v: i for i, v in enumerate(cell)}
        fv = facet_verts[f].tolist()
        opp = next(i for i, v in enumerate(cell) if v not in fv)
        g = grads[f]
        normal = -g[opp] / np.linalg.norm(g[opp])
        for v in fv:
            lam = np.zeros(n + 1)
            lam[local_of[v]] = weights[0]
            for w in fv:
                if w != v:
                    lam[local_of[w]] = weights[1]
            # Whitney 1-form of edge (a, b): lam_a grad lam_b - lam_b grad lam_a
            for j, (a, b) in enumerate(edge_pairs):
                field = lam[a] * g[b] - lam[b] * g[a]
                coef = region[f] * float(field @ normal)
                if coef != 0.0:
                    rows.append(bpos[v])
                    cols.append(edge_ids[f, j])
                    vals.append(coef)
    N = sparse.csr_matrix((vals, (rows, cols)), shape=(nb, ne))
    N.sum_duplicates()
    return sparse.diags(1.0 / metric.boundary_diagonal) @ N


@dataclass(frozen=True, eq=False)
class TraceOperators:
    """Trace ``T`` (0-cochains) and normal trace ``N`` (1-cochains).

    Both map into boundary 0-cochains, which carry the inner product
    ``diag(mass)``.
    """

    T: sparse.csr_matrix
    N: sparse.csr_matrix
    mass: np.ndarray
    boundary: BoundaryComplex

    @property
    def is_empty(self) -> bool:
        return self.boundary.is_empty

    @property
    def Mb(self):
        return sparse.diags(self.mass)


def assemble_traces(
    complex: SimplicialComplex, metric: HodgeMetric, boundary: BoundaryComplex | None = None
) -> TraceOperators:
    if boundary is None:
        boundary = extract_boundary(complex)
    N = assemble_normal_trace(complex, boundary, metric)
    return TraceOperators(T=boundary.T.tocsr(), N=N.tocsr(), mass=metric.boundary_diagonal, boundary=boundary)


@dataclass(frozen=True, eq=False)
class Discretization:
    """Complex, boundary, metric and traces assembled together."""

    complex: SimplicialComplex
    boundary: BoundaryComplex
    metric: HodgeMetric
    traces: TraceOperators

    @classmethod
    def from_complex(cls, complex: SimplicialComplex) -> "Discretization":
        boundary = extract_boundary(complex)
        metric = build_metric(complex, boundary)
        return cls(complex, boundary, metric, assemble_traces(complex, metric, boundary))

    @classmethod
    def from_mesh(cls, mesh) -> "Discretization":
        from .mesh import build_complex

        return cls.from_complex(build_complex(mesh))

    def cochain(self, degree: int, values) -> Cochain:
        return Cochain(self.complex, degree, values)


# ---------------------------------------------------------------------------
# Operators


def exterior_derivative(c: Cochain) -> Cochain:
    if c.degree >= c.complex.dim:
        raise ValueError(f"no exterior derivative of a top-degree ({c.degree}) cochain")
    D = c.complex.incidence[c.degree]
    return Cochain(c.complex, c.degree + 1, D @ c.values)


def trace(omega: Cochain, traces: TraceOperators) -> np.ndarray:
    if omega.degree != 0:
        raise ValueError("trace is defined on 0-cochains")
    if traces.is_empty:
        raise ValueError("complex has no boundary")
    return traces.T @ omega.values


def normal_trace(mu: Cochain, traces: TraceOperators) -> np.ndarray:
    if mu.degree != 1:
        raise ValueError("normal trace is defined on 1-cochains")
    if traces.is_empty:
        raise ValueError("complex has no boundary")
    return traces.N @ mu.values


def codifferential_matrix(
    complex: SimplicialComplex, metric: HodgeMetric, k: int, traces: TraceOperators | None = None
) -> sparse.csr_matrix:
    """Matrix of the codifferential on k-cochains.

    For ``k == 1`` with a non-empty boundary the boundary-corrected form is
    returned; otherwise ``M_{k-1}^{-1} D_{k-1}^T M_k``.
    """
    if k < 1 or k > complex.dim:
        raise ValueError(f"codifferential undefined on degree {k}")
    D = complex.incidence[k - 1].astype(float)
    inv = sparse.diags(1.0 / metric.diagonals[k - 1])
    body = D.T @ metric.M(k)
    if k == 1 and traces is not None and not traces.is_empty:
        body = body - traces.T.T @ traces.Mb @ traces.N
    return (inv @ body).tocsr()


def codifferential(mu: Cochain, metric: HodgeMetric, traces: TraceOperators | None = None) -> Cochain:
    if mu.degree == 0:
        raise ValueError("no codifferential of a 0-cochain")
    delta = codifferential_matrix(mu.complex, metric, mu.degree, traces)
    return Cochain(mu.complex, mu.degree - 1, delta @ mu.values)


def dual_derivative(complex: SimplicialComplex, j: int) -> sparse.csr_matrix:
    """Exterior derivative on dual j-cochains of a closed complex.

    Dual cells are oriented so that a primal simplex followed by its dual
    gives the ambient orientation; with that convention the dual derivative
    is ``(-1)**(n - j) * D_{n-j-1}^T``.
    """
    n = complex.dim
    k = n - j
    if not 1 <= k <= n:
        raise ValueError(f"no dual derivative on dual {j}-cochains")
    sign = -1.0 if k % 2 else 1.0
    return (sign * complex.incidence[k - 1].T).astype(float).tocsr()


def green_residual(omega: Cochain, mu: Cochain, metric: HodgeMetric, traces: TraceOperators) -> float:
    """``<d w, mu> - <w, delta mu> - (T w)^T Mb (N mu)``; zero up to rounding."""
    if omega.degree != 0 or mu.degree != 1:
        raise ValueError("expects a 0-cochain and a 1-cochain")
    if omega.complex is not mu.complex:
        raise ValueError("cochains live on different complexes")
    dw = exterior_derivative(omega).values
    lhs = float(dw @ (metric.diagonals[1] * mu.values))
    dmu = codifferential(mu, metric, traces).values
    rhs = float(omega.values @ (metric.diagonals[0] * dmu))
    if traces.is_empty:
        return lhs - rhs
    bterm = float((traces.T @ omega.values) @ (traces.mass * (traces.N @ mu.values)))
    return lhs - rhs - bterm
