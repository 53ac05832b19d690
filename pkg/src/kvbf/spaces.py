"""Element families and DOF maps for velocity, vorticity and pressure.

Velocity coefficients are ordered component-blocked: the x-component of every
scalar velocity DOF first, then the y-component, so global velocity index
``c * n_scalar + i`` refers to component ``c`` of scalar DOF ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

import numpy as np

from .mesh import Mesh


class ElementFamily(str, Enum):
    TAYLOR_HOOD = "taylor_hood"
    MINI = "mini"


# ---------------------------------------------------------------------------
# reference elements (barycentric l0 = 1 - x - y, l1 = x, l2 = y)
# ---------------------------------------------------------------------------

_DBARY = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # grad of l0, l1, l2
_EDGE_VERTS = ((1, 2), (2, 0), (0, 1))  # local edge k is opposite vertex k


def _bary(ref_points):
    ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
    x, y = ref_points[:, 0], ref_points[:, 1]
    return np.stack([1.0 - x - y, x, y], axis=1)


def tabulate(element: str, ref_points) -> tuple[np.ndarray, np.ndarray]:
    """Values (nq, nloc) and reference gradients (nq, nloc, 2) of a scalar element.

    `element` is one of ``"P1"``, ``"P2"``, ``"P1B"`` (P1 plus cubic bubble).
    """
    lam = _bary(ref_points)
    nq = len(lam)
    if element == "P1":
        vals = lam.copy()
        grads = np.broadcast_to(_DBARY, (nq, 3, 2)).copy()
    elif element == "P2":
        vals = np.empty((nq, 6))
        grads = np.empty((nq, 6, 2))
        for i in range(3):
            vals[:, i] = lam[:, i] * (2 * lam[:, i] - 1)
            grads[:, i] = (4 * lam[:, i] - 1)[:, None] * _DBARY[i]
        for k, (a, b) in enumerate(_EDGE_VERTS):
            vals[:, 3 + k] = 4 * lam[:, a] * lam[:, b]
            grads[:, 3 + k] = 4 * (lam[:, a, None] * _DBARY[b] + lam[:, b, None] * _DBARY[a])
    elif element == "P1B":
        vals = np.empty((nq, 4))
        grads = np.empty((nq, 4, 2))
        vals[:, :3] = lam
        grads[:, :3] = _DBARY
        l0, l1, l2 = lam.T
        vals[:, 3] = 27 * l0 * l1 * l2
        grads[:, 3] = 27 * (
            (l1 * l2)[:, None] * _DBARY[0]
            + (l0 * l2)[:, None] * _DBARY[1]
            + (l0 * l1)[:, None] * _DBARY[2]
        )
    else:
        raise ValueError(f"unknown element {element!r}")
    return vals, grads


@dataclass(frozen=True)
class ScalarSpace:
    """Continuous scalar finite element space on a mesh.

    ``nodal`` marks DOFs defined by point evaluation at ``coords``; bubble
    DOFs are not nodal (their coordinate is the cell centroid).
    """

    element: str
    dofmap: np.ndarray  # (n_c, nloc)
    coords: np.ndarray  # (n_dofs, 2)
    nodal: np.ndarray  # (n_dofs,) bool

    @property
    def n_dofs(self) -> int:
        return len(self.coords)

    @property
    def n_local(self) -> int:
        return self.dofmap.shape[1]


def _p1_space(mesh: Mesh) -> ScalarSpace:
    return ScalarSpace("P1", mesh.cells.copy(), mesh.vertices.copy(), np.ones(mesh.n_vertices, bool))


def _p2_space(mesh: Mesh) -> ScalarSpace:
    nv = mesh.n_vertices
    dofmap = np.hstack([mesh.cells, nv + mesh.cell_edges])
    mids = mesh.vertices[mesh.edges].mean(axis=1)
    coords = np.vstack([mesh.vertices, mids])
    return ScalarSpace("P2", dofmap, coords, np.ones(len(coords), bool))


def _p1b_space(mesh: Mesh) -> ScalarSpace:
    nv = mesh.n_vertices
    dofmap = np.hstack([mesh.cells, nv + np.arange(mesh.n_cells)[:, None]])
    coords = np.vstack([mesh.vertices, mesh.centroids])
    nodal = np.r_[np.ones(nv, bool), np.zeros(mesh.n_cells, bool)]
    return ScalarSpace("P1B", dofmap, coords, nodal)


@dataclass(frozen=True, eq=False)
class SpaceSet:
    mesh: Mesh
    family: ElementFamily
    velocity: ScalarSpace  # scalar space; the vector space has two copies
    vorticity: ScalarSpace
    pressure: ScalarSpace

    @property
    def n_u(self) -> int:
        return 2 * self.velocity.n_dofs

    @property
    def n_w(self) -> int:
        return self.vorticity.n_dofs

    @property
    def n_p(self) -> int:
        return self.pressure.n_dofs

    @property
    def n_dofs(self) -> int:
        """n_u + n_w + n_p, excluding any pressure multiplier."""
        return self.n_u + self.n_w + self.n_p

    @property
    def velocity_dofmap(self) -> np.ndarray:
        """Vector velocity DOF map (n_c, 2 * nloc): x-component locals then y-component."""
        d = self.velocity.dofmap
        return np.hstack([d, d + self.velocity.n_dofs])


def build_spaces(mesh: Mesh, family: ElementFamily | str = ElementFamily.TAYLOR_HOOD) -> SpaceSet:
    family = ElementFamily(family)
    velocity = _p2_space(mesh) if family is ElementFamily.TAYLOR_HOOD else _p1b_space(mesh)
    return SpaceSet(mesh, family, velocity, _p1_space(mesh), _p1_space(mesh))


def scalar_boundary_dofs(spaces: SpaceSet, tags: Iterable[str]) -> np.ndarray:
    """Scalar velocity DOFs whose nodes lie on boundary sides `tags`."""
    tags = list(tags)
    if not tags:
        return np.zeros(0, dtype=int)
    mesh = spaces.mesh
    dofs = [mesh.boundary_vertices(tags)]
    if spaces.velocity.element == "P2":
        dofs.append(mesh.n_vertices + mesh.boundary_edge_ids(tags))
    return np.unique(np.concatenate(dofs)).astype(int)


def dirichlet_dofs(spaces: SpaceSet, tags: Iterable[str]) -> np.ndarray:
    """Global velocity DOFs (both components) on the sides `tags`, sorted."""
    s = scalar_boundary_dofs(spaces, tags)
    return np.concatenate([s, s + spaces.velocity.n_dofs])


def interpolate(spaces: SpaceSet, field: Callable, which: str) -> np.ndarray:
    """Nodal interpolant of `field(x, y)`.

    For ``which="velocity"`` the field returns a pair ``(u_x, u_y)`` and the
    result has length n_u; bubble coefficients are zero.
    """
    space = {"velocity": spaces.velocity, "vorticity": spaces.vorticity,
             "pressure": spaces.pressure}[which]
    x, y = space.coords[:, 0], space.coords[:, 1]
    if which == "velocity":
        ux, uy = field(x, y)
        out = np.concatenate([np.broadcast_to(ux, x.shape), np.broadcast_to(uy, x.shape)]).astype(float)
        nodal = np.tile(space.nodal, 2)
    else:
        out = np.array(np.broadcast_to(field(x, y), x.shape), dtype=float)
        nodal = space.nodal
    out[~nodal] = 0.0
    return out


# ---------------------------------------------------------------------------
# physical basis evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisEval:
    """Scalar basis values and physical gradients at reference points.

    values : (nq, nloc)
    grads : (n_c, nq, nloc, 2)
    """

    values: np.ndarray
    grads: np.ndarray

    def vector_div(self) -> np.ndarray:
        """Divergence of the vector basis (n_c, nq, 2*nloc): x-component then y-component."""
        return np.concatenate([self.grads[..., 0], self.grads[..., 1]], axis=-1)

    def vector_curl(self) -> np.ndarray:
        """Scalar curl dv2/dx - dv1/dy of the vector basis (n_c, nq, 2*nloc)."""
        return np.concatenate([-self.grads[..., 1], self.grads[..., 0]], axis=-1)


def inverse_jacobians(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell inverse Jacobians (n_c, 2, 2) and determinants (n_c,)."""
    p = mesh.cell_coords
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(np.abs(det) <= 0):
        raise ValueError("degenerate cell")
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1] / det
    inv[:, 1, 1] = jac[:, 0, 0] / det
    inv[:, 0, 1] = -jac[:, 0, 1] / det
    inv[:, 1, 0] = -jac[:, 1, 0] / det
    return inv, det


def basis_eval(space: ScalarSpace, mesh: Mesh, ref_points) -> BasisEval:
    vals, ref_grads = tabulate(space.element, ref_points)
    inv, _ = inverse_jacobians(mesh)
    # row-vector gradients transform as g_phys = g_ref @ J^{-1}
    grads = np.einsum("qia,cab->cqib", ref_grads, inv)
    return BasisEval(vals, grads)
