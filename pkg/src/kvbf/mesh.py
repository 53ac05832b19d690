"""Structured triangulations of rectangles with boundary and region tags."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

BOUNDARY_TAGS = ("left", "right", "top", "bottom")

MATRIX = 0
CHANNEL = 1
REGION_NAMES = {MATRIX: "matrix", CHANNEL: "channel"}

# Rectangles (x0, x1, y0, y1) forming the default channel network on (-1, 1)^2.
DEFAULT_CHANNELS = (
    (-1.0, 1.0, -0.1, 0.1),
    (-0.55, -0.45, -1.0, 1.0),
    (0.45, 0.55, -1.0, 1.0),
)


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation.

    Attributes
    ----------
    vertices : (n_v, 2) float array
    cells : (n_c, 3) int array, counter-clockwise
    boundary_edges : (n_b, 2) int array of vertex pairs
    boundary_tags : (n_b,) array of tag strings from ``BOUNDARY_TAGS``
    cell_region : (n_c,) int array, ``MATRIX`` or ``CHANNEL``
    """

    vertices: np.ndarray
    cells: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    cell_region: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.cell_region is None:
            object.__setattr__(self, "cell_region", np.full(len(self.cells), MATRIX, dtype=int))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def cell_coords(self) -> np.ndarray:
        """Vertex coordinates per cell, shape (n_c, 3, 2)."""
        return self.vertices[self.cells]

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.cell_coords.mean(axis=1)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.cell_coords
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def _edge_data(self) -> tuple[np.ndarray, np.ndarray]:
        # local edge k is opposite local vertex k
        local = np.array([[1, 2], [2, 0], [0, 1]])
        pairs = np.sort(self.cells[:, local].reshape(-1, 2), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    @property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs, shape (n_e, 2)."""
        return self._edge_data[0]

    @property
    def cell_edges(self) -> np.ndarray:
        """Global edge index of the local edge opposite each local vertex, shape (n_c, 3)."""
        return self._edge_data[1]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def boundary_vertices(self, tags: Sequence[str]) -> np.ndarray:
        """Sorted indices of vertices lying on boundary edges with any of `tags`."""
        mask = np.isin(self.boundary_tags, list(tags))
        return np.unique(self.boundary_edges[mask])

    def boundary_edge_ids(self, tags: Sequence[str]) -> np.ndarray:
        """Global edge indices of boundary edges with any of `tags`."""
        mask = np.isin(self.boundary_tags, list(tags))
        if not mask.any():
            return np.zeros(0, dtype=int)
        pairs = np.sort(self.boundary_edges[mask], axis=1)
        lookup = {tuple(e): i for i, e in enumerate(self.edges.tolist())}
        return np.array([lookup[tuple(p)] for p in pairs.tolist()], dtype=int)

    def validate(self) -> None:
        """Raise ValueError if the mesh violates orientation or conformity."""
        if self.n_cells == 0:
            raise ValueError("mesh has no cells")
        if np.any(self.signed_areas <= 0):
            raise ValueError("cells must have positive (counter-clockwise) area")
        _, inverse = self._edge_data
        counts = np.bincount(inverse.ravel(), minlength=self.n_edges)
        if counts.max() > 2:
            raise ValueError("non-conforming mesh: edge shared by more than two cells")
        bnd = {tuple(e) for e in np.sort(self.boundary_edges, axis=1).tolist()}
        single = {tuple(e) for e in self.edges[counts == 1].tolist()}
        if bnd != single:
            raise ValueError("boundary edges do not match edges owned by a single cell")
        if not set(np.unique(self.boundary_tags)) <= set(BOUNDARY_TAGS):
            raise ValueError("unknown boundary tag")
        if not set(np.unique(self.cell_region)) <= set(REGION_NAMES):
            raise ValueError("unknown cell region")


def build_structured(rect: Sequence[float], n: int) -> Mesh:
    """Triangulate ``rect = (x0, x1, y0, y1)`` with an n-by-n grid.

    Each grid square is split along its lower-left to upper-right diagonal,
    giving ``(n+1)**2`` vertices and ``2 n**2`` cells.
    """
    x0, x1, y0, y1 = map(float, rect)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate rectangle {rect!r}")
    n = int(n)
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys)  # row j is y_j
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.empty((2 * n * n, 3), dtype=int)
    cells[0::2] = lower
    cells[1::2] = upper

    k = np.arange(n)
    bottom = np.column_stack([vid(k, 0), vid(k + 1, 0)])
    right = np.column_stack([vid(n, k), vid(n, k + 1)])
    top = np.column_stack([vid(k + 1, n), vid(k, n)])
    left = np.column_stack([vid(0, k + 1), vid(0, k)])
    boundary_edges = np.vstack([bottom, right, top, left])
    boundary_tags = np.repeat(np.array(["bottom", "right", "top", "left"]), n)

    mesh = Mesh(vertices, cells, boundary_edges, boundary_tags)
    mesh.validate()
    return mesh


def tag_channel(mesh: Mesh, indicator: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Mesh:
    """Tag cells whose centroid satisfies `indicator(x, y)` as channel, the rest as matrix."""
    c = mesh.centroids
    inside = np.broadcast_to(np.asarray(indicator(c[:, 0], c[:, 1]), dtype=bool), (mesh.n_cells,))
    region = np.where(inside, CHANNEL, MATRIX)
    return replace(mesh, cell_region=region)


def rectangles_indicator(rects: Sequence[Sequence[float]] = DEFAULT_CHANNELS):
    """Indicator of a closed union of axis-aligned rectangles ``(x0, x1, y0, y1)``."""
    rects = [tuple(map(float, r)) for r in rects]

    def indicator(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for a, b, c, d in rects:
            out |= (x >= a) & (x <= b) & (y >= c) & (y <= d)
        return out

    return indicator


def mesh_size(mesh: Mesh) -> float:
    """Largest cell diameter (longest edge) over the mesh."""
    if mesh.n_cells == 0:
        raise ValueError("mesh has no cells")
    p = mesh.cell_coords
    lengths = np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2)
    return float(lengths.max())
