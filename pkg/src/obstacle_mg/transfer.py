"""Grid transfer: canonical P1 prolongation, its transpose, Galerkin
coarse operators, and the monotone (max) restriction of obstacles."""

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .fem import SparseOperator
from .grid import GridLevel, build_level, interior_mask


class TransferError(ValueError):
    pass


class RestrictionMode(enum.Enum):
    EXACT_SUPPORT = "exact"
    THREE_BY_THREE = "3x3"


# fine-node offsets relative to the coincident node (row, col); the NE/SW
# pair lies along the triangulation diagonal
_EXACT_OFFSETS = ((0, 0), (0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1))
_FULL_OFFSETS = tuple((di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1))


@dataclass(frozen=True)
class TransferPair:
    coarse: GridLevel
    fine: GridLevel
    prolongation: sp.csr_matrix  # interior-coarse -> interior-fine

    def __post_init__(self):
        if self.fine.nodes_per_side != 2 * self.coarse.nodes_per_side - 1:
            raise TransferError("levels are not consecutive")


def prolongation_full(coarse: GridLevel, fine: GridLevel) -> sp.csr_matrix:
    """Canonical embedding on ALL nodes (boundary included); preserves
    constants.  Test helper and building block for the interior matrix."""
    nc, nf = coarse.nodes_per_side, fine.nodes_per_side
    if nf != 2 * nc - 1:
        raise TransferError("levels are not consecutive")
    rows, cols, vals = [], [], []

    def fid(i, j):
        return i * nf + j

    def cid(i, j):
        return i * nc + j

    for i in range(nf):
        for j in range(nf):
            even_i, even_j = i % 2 == 0, j % 2 == 0
            if even_i and even_j:
                rows.append(fid(i, j)); cols.append(cid(i // 2, j // 2)); vals.append(1.0)
            elif even_i:
                for dj in (0, 1):
                    rows.append(fid(i, j)); cols.append(cid(i // 2, j // 2 + dj)); vals.append(0.5)
            elif even_j:
                for di in (0, 1):
                    rows.append(fid(i, j)); cols.append(cid(i // 2 + di, j // 2)); vals.append(0.5)
            else:
                # midpoint of the diagonal edge (I,J)-(I+1,J+1)
                for d in (0, 1):
                    rows.append(fid(i, j)); cols.append(cid(i // 2 + d, j // 2 + d)); vals.append(0.5)
    return sp.coo_matrix((vals, (rows, cols)), shape=(nf * nf, nc * nc)).tocsr()


@lru_cache(maxsize=16)
def _pair(coarse_level: int) -> TransferPair:
    coarse = build_level(coarse_level)
    fine = build_level(coarse_level + 1)
    full = prolongation_full(coarse, fine)
    fi = np.flatnonzero(interior_mask(fine))
    ci = np.flatnonzero(interior_mask(coarse))
    return TransferPair(coarse=coarse, fine=fine,
                        prolongation=full[np.ix_(fi, ci)].tocsr())


def transfer_pair(coarse: GridLevel) -> TransferPair:
    return _pair(coarse.level)


def _check(v: np.ndarray, count: int, what: str):
    if v.shape != (count,):
        raise TransferError(f"{what} vector has length {v.shape}, expected {count}")


def prolong(v: np.ndarray, pair: TransferPair) -> np.ndarray:
    _check(v, pair.coarse.interior_count, "coarse")
    return pair.prolongation @ v


def restrict_weighted(r: np.ndarray, pair: TransferPair) -> np.ndarray:
    _check(r, pair.fine.interior_count, "fine")
    return pair.prolongation.T @ r


def galerkin_coarse(a_fine: SparseOperator, pair: TransferPair) -> SparseOperator:
    if a_fine.dimension != pair.fine.interior_count:
        raise TransferError("operator does not live on the fine level")
    p = pair.prolongation
    coarse = (p.T @ a_fine.matrix @ p).tocsr()
    # symmetrize away roundoff so downstream symmetry checks are exact
    coarse = ((coarse + coarse.T) * 0.5).tocsr()
    return SparseOperator(matrix=coarse, level=pair.coarse.level)


def restrict_monotone(w: np.ndarray, pair: TransferPair,
                      mode: RestrictionMode = RestrictionMode.EXACT_SUPPORT) -> np.ndarray:
    """Componentwise max over the fine nodes assigned to each coarse node.
    Fine boundary positions contribute the Dirichlet datum 0."""
    _check(w, pair.fine.interior_count, "fine")
    nf = pair.fine.nodes_per_side
    nc = pair.coarse.nodes_per_side
    grid = np.zeros((nf, nf))
    grid[1:-1, 1:-1] = w.reshape(nf - 2, nf - 2)
    offsets = _EXACT_OFFSETS if mode == RestrictionMode.EXACT_SUPPORT else _FULL_OFFSETS
    ci = np.arange(1, nc - 1)
    fi = 2 * ci
    out = np.full((nc - 2, nc - 2), -np.inf)
    for di, dj in offsets:
        out = np.maximum(out, grid[np.ix_(fi + di, fi + dj)])
    return out.ravel()
