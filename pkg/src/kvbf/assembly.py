"""Finite element assembly for the velocity-vorticity-pressure system.

All cell loops are vectorised over cells with ``numpy.einsum``; local
contributions are scattered into CSR matrices in cell-index order, which
makes every assembled operator deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from .mesh import CHANNEL, MATRIX, Mesh
from .quadrature import rule_for_degree
from .spaces import BasisEval, SpaceSet, basis_eval, inverse_jacobians

ASSEMBLY_DEGREE = 8
ERROR_DEGREE = 10
SMALL_SPEED = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Physical coefficients.

    `darcy` and `forchheimer` map region ids (``MATRIX``, ``CHANNEL``) to
    positive values; a plain number applies to every region.
    """

    rho: float = 3.0
    nu: float = 1.0
    kappa: float = 1.0
    darcy: Mapping[int, float] | float = 1.0
    forchheimer: Mapping[int, float] | float = 10.0

    def __post_init__(self):
        if not 3.0 <= self.rho <= 4.0:
            raise ValueError(f"rho must lie in [3, 4], got {self.rho}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        for name in ("darcy", "forchheimer"):
            value = getattr(self, name)
            if not isinstance(value, Mapping):
                value = {MATRIX: float(value), CHANNEL: float(value)}
            value = {int(k): float(v) for k, v in value.items()}
            if any(v <= 0 for v in value.values()):
                raise ValueError(f"{name} coefficients must be positive, got {value}")
            object.__setattr__(self, name, value)

    def per_cell(self, name: str, mesh: Mesh) -> np.ndarray:
        table = getattr(self, name)
        try:
            return np.array([table[r] for r in mesh.cell_region.tolist()], dtype=float)
        except KeyError as exc:
            raise ValueError(f"no {name} coefficient for region {exc.args[0]}") from None

    @property
    def uniform(self) -> bool:
        return len(set(self.darcy.values())) == 1 and len(set(self.forchheimer.values())) == 1


@dataclass(frozen=True)
class BlockLayout:
    """Offsets of the blocks ``[u | w | p | lambda]`` in the global vector."""

    n_u: int
    n_w: int
    n_p: int
    multiplier: bool = False

    @classmethod
    def from_spaces(cls, spaces: SpaceSet, multiplier: bool) -> "BlockLayout":
        return cls(spaces.n_u, spaces.n_w, spaces.n_p, multiplier)

    @property
    def offsets(self) -> tuple[int, ...]:
        o = (0, self.n_u, self.n_u + self.n_w, self.n_u + self.n_w + self.n_p)
        return o + (o[-1] + 1,) if self.multiplier else o

    @property
    def size(self) -> int:
        return self.n_u + self.n_w + self.n_p + int(self.multiplier)

    @property
    def u(self) -> slice:
        return slice(0, self.n_u)

    @property
    def w(self) -> slice:
        return slice(self.n_u, self.n_u + self.n_w)

    @property
    def p(self) -> slice:
        return slice(self.n_u + self.n_w, self.n_u + self.n_w + self.n_p)

    @property
    def lam(self) -> slice | None:
        return slice(self.size - 1, self.size) if self.multiplier else None


# ---------------------------------------------------------------------------
# quadrature context
# ---------------------------------------------------------------------------

class CellQuadrature:
    """Quadrature points, weights and basis evaluations on every cell."""

    def __init__(self, spaces: SpaceSet, degree: int = ASSEMBLY_DEGREE):
        self.spaces = spaces
        self.mesh = spaces.mesh
        self.rule = rule_for_degree(degree)
        _, det = inverse_jacobians(self.mesh)
        self.weights = np.abs(det)[:, None] * self.rule.weights[None, :]  # (n_c, nq)
        # physical points (n_c, nq, 2)
        self.points = np.einsum("qk,ckd->cqd", self.rule.points, self.mesh.cell_coords)

    @cached_property
    def velocity(self) -> BasisEval:
        return basis_eval(self.spaces.velocity, self.mesh, self.rule.ref_points)

    @cached_property
    def vorticity(self) -> BasisEval:
        return basis_eval(self.spaces.vorticity, self.mesh, self.rule.ref_points)

    @cached_property
    def pressure(self) -> BasisEval:
        return basis_eval(self.spaces.pressure, self.mesh, self.rule.ref_points)

    def velocity_at_points(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Velocity (n_c, nq, 2) and gradient (n_c, nq, 2, 2) with ``G[..., a, d] = du_a/dx_d``."""
        ns = self.spaces.velocity.n_dofs
        local = np.asarray(u).reshape(2, ns)[:, self.spaces.velocity.dofmap]  # (2, n_c, nloc)
        ev = self.velocity
        vals = np.einsum("qi,aci->cqa", ev.values, local)
        grads = np.einsum("cqid,aci->cqad", ev.grads, local)
        return vals, grads

    def scalar_at_points(self, which: str, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Scalar field values (n_c, nq) and gradients (n_c, nq, 2)."""
        space = getattr(self.spaces, which)
        ev = getattr(self, which)
        local = np.asarray(coeffs)[space.dofmap]
        return np.einsum("qi,ci->cq", ev.values, local), np.einsum("cqid,ci->cqd", ev.grads, local)


@lru_cache(maxsize=8)
def cell_quadrature(spaces: SpaceSet, degree: int = ASSEMBLY_DEGREE) -> CellQuadrature:
    return CellQuadrature(spaces, degree)


def scatter_matrix(local: np.ndarray, rows: np.ndarray, cols: np.ndarray, shape) -> sp.csr_matrix:
    """Sum local matrices (n_c, r, c) into a CSR matrix with sorted, unique columns."""
    r = np.broadcast_to(rows[:, :, None], local.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], local.shape).ravel()
    mat = sp.coo_matrix((local.ravel(), (r, c)), shape=shape).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def scatter_vector(local: np.ndarray, rows: np.ndarray, size: int) -> np.ndarray:
    return np.bincount(rows.ravel(), weights=local.ravel(), minlength=size)


# ---------------------------------------------------------------------------
# linear blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearBlocks:
    """Constant operators of the weak form.

    C[i, j] = int w_j curl(phi_i) couples velocity rows to vorticity columns;
    B[i, j] = -int q_i div(phi_j); m[i] = int q_i.
    """

    M_u: sp.csr_matrix
    K_u: sp.csr_matrix
    M_D: sp.csr_matrix
    M_w: sp.csr_matrix
    C: sp.csr_matrix
    B: sp.csr_matrix
    m: np.ndarray


def _vector_block_diag(scalar: np.ndarray) -> np.ndarray:
    n_c, k, _ = scalar.shape
    out = np.zeros((n_c, 2 * k, 2 * k))
    out[:, :k, :k] = scalar
    out[:, k:, k:] = scalar
    return out


def assemble_linear_blocks(mesh: Mesh, spaces: SpaceSet, params: ModelParams,
                           degree: int = ASSEMBLY_DEGREE) -> LinearBlocks:
    if spaces.mesh is not mesh:
        raise ValueError("spaces were built on a different mesh")
    cq = cell_quadrature(spaces, degree)
    w = cq.weights
    vu, vw, vp = cq.velocity, cq.vorticity, cq.pressure
    vdm = spaces.velocity_dofmap
    wdm = spaces.vorticity.dofmap
    pdm = spaces.pressure.dofmap
    n_u, n_w, n_p = spaces.n_u, spaces.n_w, spaces.n_p

    mass = np.einsum("cq,qi,qj->cij", w, vu.values, vu.values)
    stiff = np.einsum("cq,cqid,cqjd->cij", w, vu.grads, vu.grads)
    darcy = params.per_cell("darcy", mesh)

    M_u = scatter_matrix(_vector_block_diag(mass), vdm, vdm, (n_u, n_u))
    K_u = scatter_matrix(_vector_block_diag(stiff), vdm, vdm, (n_u, n_u))
    M_D = scatter_matrix(_vector_block_diag(darcy[:, None, None] * mass), vdm, vdm, (n_u, n_u))

    wmass = np.einsum("cq,qi,qj->cij", w, vw.values, vw.values)
    M_w = scatter_matrix(wmass, wdm, wdm, (n_w, n_w))

    curl = vu.vector_curl()  # (n_c, nq, 2 nloc)
    C = scatter_matrix(np.einsum("cq,cqi,qj->cij", w, curl, vw.values), vdm, wdm, (n_u, n_w))

    div = vu.vector_div()
    B = scatter_matrix(-np.einsum("cq,qi,cqj->cij", w, vp.values, div), pdm, vdm, (n_p, n_u))

    m = scatter_vector(np.einsum("cq,qi->ci", w, vp.values), pdm, n_p)
    return LinearBlocks(M_u, K_u, M_D, M_w, C, B, m)


# ---------------------------------------------------------------------------
# nonlinear terms
# ---------------------------------------------------------------------------

def _vector_local_to_global(local: np.ndarray) -> np.ndarray:
    """(n_c, 2, k) -> (n_c, 2k) matching the vector DOF map."""
    return local.reshape(local.shape[0], -1)


def _weighted_pair_sum(coef: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``sum_q coef[c, q, a, b] phi[q, i] phi[q, j]`` as local matrices (n_c, 2k, 2k).

    The contraction over quadrature points is a single matrix product.
    """
    n_c, nq = coef.shape[:2]
    k = phi.shape[1]
    pp = (phi[:, :, None] * phi[:, None, :]).reshape(nq, k * k)
    out = coef.transpose(0, 2, 3, 1).reshape(-1, nq) @ pp  # (c a b, i j)
    return out.reshape(n_c, 2, 2, k, k).transpose(0, 1, 3, 2, 4).reshape(n_c, 2 * k, 2 * k)


def assemble_forchheimer(spaces: SpaceSet, params: ModelParams, u_coeffs: np.ndarray,
                         degree: int = ASSEMBLY_DEGREE, jacobian: bool = True):
    """Residual ``F int |u|^(rho-2) u . phi_i`` and its Jacobian over velocity DOFs."""
    u_coeffs = np.asarray(u_coeffs, dtype=float)
    if u_coeffs.shape != (spaces.n_u,):
        raise ValueError(f"u_coeffs must have length {spaces.n_u}")
    cq = cell_quadrature(spaces, degree)
    phi = cq.velocity.values
    vdm = spaces.velocity_dofmap
    fw = params.per_cell("forchheimer", spaces.mesh)[:, None] * cq.weights  # (n_c, nq)
    rho = params.rho

    u, _ = cq.velocity_at_points(u_coeffs)
    speed = np.sqrt(np.einsum("cqa,cqa->cq", u, u))
    s = speed ** (rho - 2.0)
    res_local = np.einsum("cqa,qi->cai", (fw * s)[..., None] * u, phi)
    res = scatter_vector(_vector_local_to_global(res_local), vdm, spaces.n_u)
    if not jacobian:
        return res, None

    big = speed >= SMALL_SPEED
    t = np.zeros_like(speed)
    t[big] = (rho - 2.0) * speed[big] ** (rho - 4.0)
    tensor = t[..., None, None] * u[..., :, None] * u[..., None, :]
    tensor[..., 0, 0] += s
    tensor[..., 1, 1] += s
    jac_local = _weighted_pair_sum(fw[..., None, None] * tensor, phi)
    jac = scatter_matrix(jac_local, vdm, vdm, (spaces.n_u, spaces.n_u))
    return res, jac


def assemble_convection(spaces: SpaceSet, u_coeffs: np.ndarray,
                        degree: int = ASSEMBLY_DEGREE, jacobian: bool = True):
    """Residual of ``((grad u) u, v) + 1/2 (div(u) u, v)`` and its derivative in u."""
    u_coeffs = np.asarray(u_coeffs, dtype=float)
    if u_coeffs.shape != (spaces.n_u,):
        raise ValueError(f"u_coeffs must have length {spaces.n_u}")
    cq = cell_quadrature(spaces, degree)
    w = cq.weights
    phi = cq.velocity.values
    dphi = cq.velocity.grads
    n_c, k = spaces.velocity.dofmap.shape
    nq = len(phi)
    vdm = spaces.velocity_dofmap

    u, G = cq.velocity_at_points(u_coeffs)
    div = G[..., 0, 0] + G[..., 1, 1]
    integrand = np.einsum("cqad,cqd->cqa", G, u) + 0.5 * div[..., None] * u
    res_local = np.einsum("cqa,qi->cai", w[..., None] * integrand, phi)
    res = scatter_vector(_vector_local_to_global(res_local), vdm, spaces.n_u)
    if not jacobian:
        return res, None

    # d/du of (grad u) u + 1/2 div(u) u in direction phi_j e_b:
    #   (grad u) phi_j e_b + (u . grad phi_j) e_b + 1/2 div(u) phi_j e_b + 1/2 d_b phi_j u
    eye = np.eye(2)
    coef = w[..., None, None] * (G + 0.5 * div[..., None, None] * eye)
    jac_local = _weighted_pair_sum(coef, phi)
    wphi = w[:, :, None] * phi[None]  # (n_c, nq, k)
    adv = np.einsum("cqd,cqjd->cqj", u, dphi)  # u . grad phi_j
    diag = np.matmul(wphi.transpose(0, 2, 1), adv)  # (n_c, k, k)
    jac_local[:, :k, :k] += diag
    jac_local[:, k:, k:] += diag
    # 1/2 u_a phi_i d_b phi_j, contracted per cell as (a i, q) @ (q, j b)
    left = (0.5 * wphi[:, :, None, :] * u[..., None]).reshape(n_c, nq, 2 * k)
    right = dphi.transpose(0, 1, 3, 2).reshape(n_c, nq, 2 * k)  # (q, b j)
    jac_local += np.matmul(left.transpose(0, 2, 1), right)
    jac = scatter_matrix(jac_local, vdm, vdm, (spaces.n_u, spaces.n_u))
    return res, jac


def assemble_load(spaces: SpaceSet, f: Callable, t: float, degree: int = ASSEMBLY_DEGREE) -> np.ndarray:
    """Load vector ``int f(x, t) . phi_i``; `f(x, y, t)` returns ``(f_x, f_y)``."""
    cq = cell_quadrature(spaces, degree)
    x, y = cq.points[..., 0], cq.points[..., 1]
    fx, fy = f(x, y, t)
    fq = np.stack([np.broadcast_to(fx, x.shape), np.broadcast_to(fy, x.shape)], axis=-1)
    local = np.einsum("cq,cqa,qi->cai", cq.weights, fq, cq.velocity.values)
    return scatter_vector(_vector_local_to_global(local), spaces.velocity_dofmap, spaces.n_u)


def assemble_curl_rhs(spaces: SpaceSet, u_coeffs: np.ndarray, blocks: LinearBlocks | None = None) -> np.ndarray:
    """Vector ``int curl(u_h) psi_j`` over vorticity DOFs."""
    if blocks is not None:
        return blocks.C.T @ u_coeffs
    cq = cell_quadrature(spaces)
    _, G = cq.velocity_at_points(u_coeffs)
    curl = G[..., 1, 0] - G[..., 0, 1]
    local = np.einsum("cq,cq,qj->cj", cq.weights, curl, cq.vorticity.values)
    return scatter_vector(local, spaces.vorticity.dofmap, spaces.n_w)


# ---------------------------------------------------------------------------
# boundary conditions
# ---------------------------------------------------------------------------

def apply_dirichlet(A, b: np.ndarray, dofs: np.ndarray, values) -> tuple[sp.csr_matrix, np.ndarray]:
    """Symmetric elimination of prescribed DOFs.

    Returns a new matrix with constrained rows and columns zeroed and a unit
    diagonal, and a right-hand side with the lifted values moved across.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    dofs = np.asarray(dofs, dtype=int)
    if dofs.size and (dofs.min() < 0 or dofs.max() >= n):
        raise IndexError("Dirichlet DOF index out of range")
    values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
    b = np.array(b, dtype=float, copy=True)
    if dofs.size == 0:
        return A.copy(), b
    lifted = np.zeros(n)
    lifted[dofs] = values
    b -= A @ lifted
    free = np.ones(n)
    free[dofs] = 0.0
    keep = sp.diags(free)
    fixed = sp.diags(1.0 - free)
    out = (keep @ A @ keep + fixed).tocsr()
    out.sort_indices()
    b[dofs] = values
    return out, b
