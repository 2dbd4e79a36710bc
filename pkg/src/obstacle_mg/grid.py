"""Nested uniform Courant triangulations of the unit square.

Level sizes follow n = 5*2**(level-1) + 1 nodes per side.  All squares are
split along the same diagonal, from (i, j) to (i+1, j+1) in (row, col)
index space, so every interior node belongs to exactly 6 triangles.
Vectors over nodes are row-major flattened: flat = i*n + j.
"""

from dataclasses import dataclass, field

import numpy as np

MAX_LEVELS = 12


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridLevel:
    level: int
    nodes_per_side: int
    spacing: float
    triangles: np.ndarray = field(repr=False, compare=False)

    @property
    def node_count(self) -> int:
        return self.nodes_per_side ** 2

    @property
    def interior_count(self) -> int:
        return (self.nodes_per_side - 2) ** 2


@dataclass(frozen=True)
class GridHierarchy:
    levels: tuple

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i) -> GridLevel:
        return self.levels[i]

    @property
    def finest(self) -> GridLevel:
        return self.levels[-1]


def nodes_per_side(level: int) -> int:
    return 5 * 2 ** (level - 1) + 1


def _triangles(n: int) -> np.ndarray:
    """Two triangles per grid square, both containing the diagonal
    (i, j)-(i+1, j+1).  Shape (2*(n-1)**2, 3), row-major node indices."""
    i, j = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    a = (i * n + j).ravel()          # (i, j)
    b = a + n                        # (i+1, j)
    c = a + n + 1                    # (i+1, j+1)
    d = a + 1                        # (i, j+1)
    lower = np.stack([a, b, c], axis=1)
    upper = np.stack([a, c, d], axis=1)
    return np.concatenate([lower, upper], axis=0)


def build_level(level: int) -> GridLevel:
    n = nodes_per_side(level)
    return GridLevel(level=level, nodes_per_side=n, spacing=1.0 / (n - 1),
                     triangles=_triangles(n))


def build_hierarchy(num_levels: int) -> GridHierarchy:
    if not 1 <= num_levels <= MAX_LEVELS:
        raise GridError(f"level count must be in [1, {MAX_LEVELS}], got {num_levels}")
    return GridHierarchy(tuple(build_level(l) for l in range(1, num_levels + 1)))


def interior_mask(level: GridLevel) -> np.ndarray:
    """Boolean over all nodes, True strictly inside the boundary."""
    n = level.nodes_per_side
    m = np.zeros((n, n), dtype=bool)
    m[1:-1, 1:-1] = True
    return m.ravel()


def node_coordinates(level: GridLevel, i: int, j: int) -> tuple:
    """(x1, x2) = (col/(n-1), row/(n-1)).  Shared nodes of consecutive
    levels get bit-identical coordinates (2j/(2(n-1)) rounds like j/(n-1))."""
    n = level.nodes_per_side
    if not (0 <= i < n and 0 <= j < n):
        raise GridError(f"node index ({i}, {j}) out of range for n={n}")
    return (j / (n - 1), i / (n - 1))


def coordinate_arrays(level: GridLevel):
    """x1 and x2 for every node, flattened row-major."""
    n = level.nodes_per_side
    t = np.arange(n) / (n - 1)
    x2, x1 = np.meshgrid(t, t, indexing="ij")
    return x1.ravel(), x2.ravel()


def triangle_areas(level: GridLevel) -> np.ndarray:
    n = level.nodes_per_side
    tri = level.triangles
    x1, x2 = coordinate_arrays(level)
    p = np.stack([x1[tri], x2[tri]], axis=2)  # (nt, 3, 2)
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    return 0.5 * np.abs(v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
