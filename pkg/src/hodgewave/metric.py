"""Primal/barycentric-dual volumes, diagonal Hodge stars and material matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations, permutations
from math import factorial
from pathlib import Path

import numpy as np
from scipy import sparse

from .mesh import BoundaryComplex, MeshError, SimplicialComplex, extract_boundary

__all__ = [
    "DegenerateSimplexError",
    "HodgeMetric",
    "MaterialFields",
    "simplex_volumes",
    "primal_volumes",
    "dual_volumes",
    "build_metric",
    "hodge_matrix",
    "star",
    "star_inv",
    "inner_product",
    "material_matrices",
    "read_material_csv",
]


class DegenerateSimplexError(MeshError):
    def __init__(self, k: int, index: int):
        self.k = k
        self.index = index
        super().__init__(f"degenerate {k}-simplex {index} has zero volume")


def simplex_volumes(corners: np.ndarray) -> np.ndarray:
    """Unsigned volumes of simplices given corner points.

    ``corners`` has shape (m, k + 1, d); the result has shape (m,). Works in
    any embedding dimension via the Gram determinant.
    """
    corners = np.asarray(corners, dtype=float)
    k = corners.shape[1] - 1
    if k == 0:
        return np.ones(corners.shape[0])
    E = corners[:, 1:, :] - corners[:, :1, :]
    G = np.einsum("mid,mjd->mij", E, E)
    det = np.linalg.det(G)
    return np.sqrt(np.clip(det, 0.0, None)) / factorial(k)


def primal_volumes(complex: SimplicialComplex, coordinates=None, k: int = 0) -> np.ndarray:
    """Volumes of the k-simplices (1 for vertices)."""
    pts = complex.points if coordinates is None else np.asarray(coordinates, dtype=float)
    S = complex.simplices[k]
    vol = simplex_volumes(pts[S])
    if k > 0:
        # Scale-aware degeneracy test: compare against the longest edge^k.
        E = pts[S[:, 1:]] - pts[S[:, :1]]
        scale = np.max(np.linalg.norm(E, axis=2), axis=1) ** k
        bad = np.flatnonzero(vol <= 1e-12 * scale)
        if bad.size:
            raise DegenerateSimplexError(k, int(bad[0]))
    return vol


def dual_volumes(complex: SimplicialComplex, coordinates=None, k: int = 0) -> np.ndarray:
    """Volumes of the barycentric dual (n-k)-cells of the k-simplices.

    Inside each top simplex the dual cell of a k-face is the union of the
    simplices spanned by the barycentres of a flag ``s_k < s_{k+1} < ... <
    s_n``; the fragments are summed over all top simplices. Cells of
    boundary simplices are truncated at the boundary.
    """
    n = complex.dim
    pts = complex.points if coordinates is None else np.asarray(coordinates, dtype=float)
    top = complex.simplices[n]
    out = np.zeros(len(complex.simplices[k]))
    if k == n:
        out[:] = 1.0
        return out
    corner = pts[top]  # (ntop, n+1, d)
    for face in combinations(range(n + 1), k + 1):
        rest = [i for i in range(n + 1) if i not in face]
        face_ids = np.array(
            [complex.index(f) for f in top[:, list(face)].tolist()], dtype=np.int64
        )
        frag = np.zeros(len(top))
        for order in permutations(rest):
            members = list(face)
            chain = [corner[:, members, :].mean(axis=1)]
            for v in order:
                members.append(v)
                chain.append(corner[:, members, :].mean(axis=1))
            frag += simplex_volumes(np.stack(chain, axis=1))
        np.add.at(out, face_ids, frag)
    return out


@dataclass(frozen=True, eq=False)
class HodgeMetric:
    """Diagonal inner-product matrices of a complex.

    ``diagonals[k]`` holds (dual volume)/(primal volume) per k-simplex and
    ``boundary_diagonal`` the barycentric dual measure of each boundary
    vertex inside the boundary (n-1)-manifold.
    """

    dim: int
    embedding_dim: int
    primal: tuple
    dual: tuple
    diagonals: tuple
    boundary_diagonal: np.ndarray

    def M(self, k: int) -> sparse.dia_matrix:
        return sparse.diags(self.diagonals[k])

    @property
    def Mb(self) -> sparse.dia_matrix:
        return sparse.diags(self.boundary_diagonal)


def boundary_measure(boundary: BoundaryComplex) -> np.ndarray:
    if boundary.complex is None:
        return np.zeros(0)
    return dual_volumes(boundary.complex, None, 0)


def build_metric(complex: SimplicialComplex, boundary: BoundaryComplex | None = None) -> HodgeMetric:
    if boundary is None:
        boundary = extract_boundary(complex)
    n = complex.dim
    primal = tuple(primal_volumes(complex, None, k) for k in range(n + 1))
    dual = tuple(dual_volumes(complex, None, k) for k in range(n + 1))
    diagonals = tuple(d / p for d, p in zip(dual, primal))
    for a in (*primal, *dual, *diagonals):
        a.setflags(write=False)
    bdiag = boundary_measure(boundary)
    bdiag.setflags(write=False)
    return HodgeMetric(
        dim=n,
        embedding_dim=complex.points.shape[1],
        primal=primal,
        dual=dual,
        diagonals=diagonals,
        boundary_diagonal=bdiag,
    )


def hodge_matrix(metric: HodgeMetric, k: int) -> sparse.dia_matrix:
    return metric.M(k)


def star(metric: HodgeMetric, k: int) -> sparse.dia_matrix:
    """Primal k-cochains to dual (n-k)-cochains (indexed like the primal)."""
    return metric.M(k)


def star_inv(metric: HodgeMetric, j: int) -> sparse.dia_matrix:
    """Dual j-cochains back to primal (n-j)-cochains.

    Composing with :func:`star` gives ``(-1)**(k*(n-k))`` times the identity,
    the sign rule of the smooth Hodge star.
    """
    k = metric.dim - j
    sign = -1.0 if (k * j) % 2 else 1.0
    return sparse.diags(sign / metric.diagonals[k])


def inner_product(metric: HodgeMetric, a, b) -> float:
    """``a^T M_k b`` for two cochains of equal degree."""
    if a.degree != b.degree:
        raise ValueError(f"degree mismatch: {a.degree} vs {b.degree}")
    return float(a.values @ (metric.diagonals[a.degree] * b.values))


# ---------------------------------------------------------------------------
# Materials


@dataclass(frozen=True)
class MaterialFields:
    """Mass density per vertex and stiffness (Young modulus) per edge."""

    rho: np.ndarray
    young: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float).ravel()
        young = np.asarray(self.young, dtype=float).ravel()
        for name, a in (("rho", rho), ("young", young)):
            bad = np.flatnonzero(~(a > 0))
            if bad.size:
                raise ValueError(
                    f"{name} must be strictly positive; entry {bad[0]} is {a[bad[0]]}"
                )
            a.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "young", young)

    @classmethod
    def constant(cls, complex: SimplicialComplex, rho: float = 1.0, young: float = 1.0):
        nv, ne = complex.counts[0], complex.counts[1]
        return cls(np.full(nv, float(rho)), np.full(ne, float(young)))

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.rho == 1.0) and np.all(self.young == 1.0))


def material_matrices(metric: HodgeMetric, fields: MaterialFields):
    """Energy matrices ``(M_0 diag(1/rho), M_1 diag(young))``."""
    m0, m1 = metric.diagonals[0], metric.diagonals[1]
    if fields.rho.shape != m0.shape or fields.young.shape != m1.shape:
        raise ValueError("material field sizes do not match the complex")
    return sparse.diags(m0 / fields.rho), sparse.diags(m1 * fields.young)


def read_material_csv(path, count: int, default: float = 1.0) -> np.ndarray:
    """Read ``simplex_index,value`` rows; unlisted simplices get ``default``."""
    values = np.full(count, float(default))
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                i, v = int(row[0]), float(row[1])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: malformed row {row}") from None
            if not 0 <= i < count:
                raise ValueError(f"{path}:{lineno}: simplex index {i} out of range")
            values[i] = v
    return values
