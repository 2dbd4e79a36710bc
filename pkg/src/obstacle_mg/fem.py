"""P1 assembly on the Courant mesh: parametric stiffness, mass, norms.

All operators act on interior degrees of freedom (homogeneous Dirichlet
boundary eliminated).  The coefficient enters each triangle through the
vertex average, which integrates the P1 interpolant of kappa exactly
against the piecewise-constant gradient product.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .fields import DegenerateCoefficientError
from .grid import GridLevel, coordinate_arrays, interior_mask, triangle_areas


class FemError(ValueError):
    pass


@dataclass(frozen=True)
class SparseOperator:
    matrix: sp.csr_matrix
    level: int

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def to_coo_text(self) -> str:
        coo = self.matrix.tocoo()
        return "\n".join(f"{i} {j} {v:.17g}"
                         for i, j, v in zip(coo.row, coo.col, coo.data))


def _element_geometry(level: GridLevel):
    """Per-triangle gradient coefficients: grad(lambda_i)|_T = (b_i, c_i)/(2|T|)."""
    tri = level.triangles
    x1, x2 = coordinate_arrays(level)
    x = x1[tri]  # (nt, 3)
    y = x2[tri]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = triangle_areas(level)
    return tri, b, c, area


def _scatter(level: GridLevel, local: np.ndarray) -> sp.csr_matrix:
    """Assemble (nt, 3, 3) element matrices into a full-grid sparse matrix."""
    tri = level.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = level.node_count
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return mat.tocsr()


def _restrict_interior(level: GridLevel, full: sp.csr_matrix) -> sp.csr_matrix:
    mask = interior_mask(level)
    idx = np.flatnonzero(mask)
    return full[np.ix_(idx, idx)].tocsr()


def assemble_operator(kappa: np.ndarray, level: GridLevel) -> SparseOperator:
    if kappa.shape != (level.node_count,):
        raise FemError("coefficient field has wrong length")
    kmin = np.min(kappa)
    if kmin <= 0.0:
        i = int(np.argmin(kappa))
        raise DegenerateCoefficientError(
            f"coefficient non-positive at node {i}: {kmin:.3e}")
    tri, b, c, area = _element_geometry(level)
    kbar = kappa[tri].mean(axis=1)
    scale = (kbar / (4.0 * area))[:, None, None]
    local = scale * (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :])
    full = _scatter(level, local)
    return SparseOperator(matrix=_restrict_interior(level, full), level=level.level)


@lru_cache(maxsize=32)
def _unit_matrices(level_num: int, n: int):
    # rebuilt from the level number alone; n keys the cache redundantly
    from .grid import build_level
    level = build_level(level_num)
    tri, b, c, area = _element_geometry(level)
    scale = (1.0 / (4.0 * area))[:, None, None]
    stiff_local = scale * (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :])
    mass_pattern = (np.ones((3, 3)) + np.eye(3)) / 12.0
    mass_local = area[:, None, None] * mass_pattern[None, :, :]
    stiff = _restrict_interior(level, _scatter(level, stiff_local))
    mass = _restrict_interior(level, _scatter(level, mass_local))
    return stiff, mass


def stiffness_matrix(level: GridLevel) -> SparseOperator:
    """Unit-coefficient stiffness matrix on interior dofs."""
    s, _ = _unit_matrices(level.level, level.nodes_per_side)
    return SparseOperator(matrix=s, level=level.level)


def mass_matrix(level: GridLevel) -> SparseOperator:
    """Exact P1 mass matrix on interior dofs."""
    _, m = _unit_matrices(level.level, level.nodes_per_side)
    return SparseOperator(matrix=m, level=level.level)


def assemble_rhs(f: np.ndarray, level: GridLevel) -> np.ndarray:
    """Tested right-hand side with vertex quadrature, exact for P1 f."""
    if f.shape != (level.node_count,):
        raise FemError("forcing field has wrong length")
    tri = level.triangles
    area = triangle_areas(level)
    fv = f[tri]  # (nt, 3)
    contrib = area[:, None] * (fv + fv.sum(axis=1, keepdims=True)) / 12.0
    out = np.zeros(level.node_count)
    np.add.at(out, tri.ravel(), contrib.ravel())
    return out[interior_mask(level)]


def quadratic_form(v: np.ndarray, op: SparseOperator) -> float:
    if v.shape[0] != op.dimension:
        raise FemError(f"dimension mismatch: {v.shape[0]} vs {op.dimension}")
    return float(v @ (op.matrix @ v))


def energy_norm(v: np.ndarray, a: SparseOperator) -> float:
    return float(np.sqrt(max(quadratic_form(v, a), 0.0)))


def l2_norm(v: np.ndarray, level: GridLevel) -> float:
    return energy_norm(v, mass_matrix(level))


def h1_norm(v: np.ndarray, level: GridLevel) -> float:
    s, m = _unit_matrices(level.level, level.nodes_per_side)
    q = float(v @ (s @ v)) + float(v @ (m @ v))
    return float(np.sqrt(max(q, 0.0)))


def sigma_max_bound(a: SparseOperator) -> float:
    """Gershgorin bound: max row sum of absolute values, >= sigma_max."""
    bound = float(np.max(np.abs(a.matrix).sum(axis=1)))
    if not np.isfinite(bound):
        raise FemError("non-finite Gershgorin bound")
    return bound


def power_iteration(a: SparseOperator, steps: int = 100, seed: int = 0) -> float:
    """Diagnostic sigma_max estimate; underestimates, never used for safety."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.dimension)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(steps):
        w = a.matrix @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est = nw
        v = w / nw
    return float(est)
