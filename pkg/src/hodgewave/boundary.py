"""Boundary operator pairs (V1, V2): admissibility test and state constraints.

A pair acts on boundary data ``(theta, sigma)`` = (trace of the velocity
effort, normal trace of the strain effort) and imposes
``V1 theta + V2 sigma = 0``. The pair is admissible when

* ``theta^T Mb sigma <= 0`` for every ``(theta, sigma)`` in the kernel of
  ``[V1 V2]``, and
* ``V1 V2* + V2 V1* >= 0``, adjoints taken w.r.t. ``Mb`` on boundary
  cochains and the Euclidean product on the target space.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg, sparse

from .metric import MaterialFields
from .operators import TraceOperators

__all__ = [
    "BCSpec",
    "AdmissibilityReport",
    "velocity_zero",
    "normal_zero",
    "impedance",
    "custom",
    "check_admissible",
    "constraint_matrix",
    "read_matrix_csv",
]


@dataclass(frozen=True)
class BCSpec:
    V1: np.ndarray
    V2: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        V1 = np.atleast_2d(np.asarray(self.V1, dtype=float))
        V2 = np.atleast_2d(np.asarray(self.V2, dtype=float))
        if V1.shape != V2.shape:
            raise ValueError(f"V1 {V1.shape} and V2 {V2.shape} differ in shape")
        if not (np.any(V1) or np.any(V2)):
            raise ValueError("V1 and V2 are both zero; the condition imposes nothing")
        object.__setattr__(self, "V1", V1)
        object.__setattr__(self, "V2", V2)

    @property
    def K(self) -> int:
        return self.V1.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.V1.shape[1]


def velocity_zero(nb: int) -> BCSpec:
    """``tr omega = 0``: V1 = I, V2 = 0."""
    return BCSpec(np.eye(nb), np.zeros((nb, nb)), "velocity_zero")


def normal_zero(nb: int) -> BCSpec:
    """``tr* nu = 0``: V1 = 0, V2 = I."""
    return BCSpec(np.zeros((nb, nb)), np.eye(nb), "normal_zero")


def impedance(nb: int, c: float) -> BCSpec:
    """``tr omega + c tr* nu = 0``: V1 = I, V2 = c I."""
    return BCSpec(np.eye(nb), c * np.eye(nb), f"impedance(c={c:g})")


def custom(V1, V2, label: str = "custom") -> BCSpec:
    return BCSpec(V1, V2, label)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of :func:`check_admissible`.

    ``kernel_max_eig`` is the largest eigenvalue of the boundary pairing
    restricted to the constraint kernel (must be <= tol);
    ``operator_min_eig`` the smallest eigenvalue of V1 V2* + V2 V1* (must be
    >= -tol). ``conservative`` means the pairing vanishes on the kernel.
    """

    kernel_condition: bool
    kernel_max_eig: float
    kernel_tol: float
    operator_inequality: bool
    operator_min_eig: float
    operator_tol: float
    conservative: bool
    kernel_dim: int
    label: str = ""
    _pairing_eigs: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def admissible(self) -> bool:
        return self.kernel_condition and self.operator_inequality

    def lines(self) -> list[str]:
        def flag(ok):
            return "PASS" if ok else "FAIL"

        return [
            f"boundary condition: {self.label}",
            f"kernel condition: {flag(self.kernel_condition)} "
            f"(max eigenvalue {self.kernel_max_eig:.6e}, tol {self.kernel_tol:.3e}, "
            f"kernel dim {self.kernel_dim})",
            f"operator inequality: {flag(self.operator_inequality)} "
            f"(min eigenvalue {self.operator_min_eig:.6e}, tol {self.operator_tol:.3e})",
            f"conservative: {self.conservative}",
            f"admissible: {self.admissible}",
        ]


def check_admissible(bc: BCSpec, Mb, tol: float | None = None) -> AdmissibilityReport:
    """Test both admissibility conditions for ``bc``.

    Parameters
    ----------
    bc : BCSpec
    Mb : array_like or sparse matrix
        Boundary inner product (diagonal or full SPD), size ``bc.n_boundary``.
    tol : float, optional
        Relative tolerance; each test uses ``tol`` times a scale bound of the
        matrix whose eigenvalues it inspects. Defaults to 1e-10.
    """
    Mb = Mb.toarray() if sparse.issparse(Mb) else np.asarray(Mb, dtype=float)
    if Mb.ndim == 1:
        Mb = np.diag(Mb)
    nb = bc.n_boundary
    if Mb.shape != (nb, nb):
        raise ValueError(f"Mb has shape {Mb.shape}, BC acts on {nb} boundary values")
    rel = 1e-10 if tol is None else float(tol)

    # (a) pairing on the kernel of [V1 V2]
    Z = linalg.null_space(np.hstack([bc.V1, bc.V2]))
    theta, sigma = Z[:nb], Z[nb:]
    P = theta.T @ Mb @ sigma
    S = 0.5 * (P + P.T)
    eigs = linalg.eigvalsh(S) if S.size else np.zeros(0)
    # |S| <= ||Mb|| for orthonormal kernel bases
    ktol = rel * max(np.linalg.norm(Mb, 2), np.max(np.abs(eigs), initial=0.0))
    kmax = float(eigs.max()) if eigs.size else 0.0
    conservative = bool(np.max(np.abs(eigs), initial=0.0) <= ktol)

    # (b) V1 V2* + V2 V1*, with V* = Mb^{-1} V^T
    Mbinv_V1t = np.linalg.solve(Mb, bc.V1.T)
    Mbinv_V2t = np.linalg.solve(Mb, bc.V2.T)
    G = bc.V1 @ Mbinv_V2t + bc.V2 @ Mbinv_V1t
    G = 0.5 * (G + G.T)
    geigs = linalg.eigvalsh(G)
    scale = (
        np.linalg.norm(bc.V1, 2) * np.linalg.norm(bc.V2, 2) * np.linalg.norm(np.linalg.inv(Mb), 2)
    )
    gtol = rel * max(scale, np.max(np.abs(geigs), initial=0.0))
    gmin = float(geigs.min())

    return AdmissibilityReport(
        kernel_condition=bool(kmax <= ktol),
        kernel_max_eig=kmax,
        kernel_tol=float(ktol),
        operator_inequality=bool(gmin >= -gtol),
        operator_min_eig=gmin,
        operator_tol=float(gtol),
        conservative=conservative,
        kernel_dim=Z.shape[1],
        label=bc.label,
        _pairing_eigs=eigs,
    )


def constraint_matrix(
    bc: BCSpec, traces: TraceOperators, materials: MaterialFields | None = None
) -> sparse.csr_matrix:
    """Constraint ``C`` on the stacked state ``x = (omega, nu)``.

    ``C x = V1 T diag(1/rho) omega + V2 N diag(young) nu``: the condition is
    imposed on effort traces, which are the arguments of the boundary power.
    """
    nb, nv = traces.T.shape
    ne = traces.N.shape[1]
    if bc.n_boundary != nb:
        raise ValueError(f"BC acts on {bc.n_boundary} boundary values, mesh has {nb}")
    Tw = traces.T
    Nn = traces.N
    if materials is not None:
        Tw = Tw @ sparse.diags(1.0 / materials.rho)
        Nn = Nn @ sparse.diags(materials.young)
    V1 = sparse.csr_matrix(bc.V1)
    V2 = sparse.csr_matrix(bc.V2)
    C = sparse.hstack([V1 @ Tw, V2 @ Nn]).tocsr()
    C.eliminate_zeros()
    return C


def read_matrix_csv(path) -> np.ndarray:
    """Dense row-major matrix from CSV; a non-numeric first row is a header."""
    rows = []
    with open(Path(path), newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                if i == 0:
                    continue
                raise ValueError(f"{path}:{i + 1}: non-numeric entry") from None
    M = np.array(rows, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{path}: rows have inconsistent lengths")
    return M
