"""Backward Euler time stepping of the velocity-vorticity-pressure system."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .assembly import (BlockLayout, LinearBlocks, ModelParams, assemble_convection,
                       assemble_forchheimer, assemble_linear_blocks, assemble_load,
                       cell_quadrature, scatter_vector)
from .mesh import BOUNDARY_TAGS
from .solver import NewtonError, NewtonReport, linear_solve, newton_solve
from .spaces import SpaceSet, dirichlet_dofs, interpolate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if self.N < 1 or not self.T > 0:
            raise ValueError("need T > 0 and N >= 1")

    @classmethod
    def from_dt(cls, T: float, dt: float) -> "TimeGrid":
        n = round(T / dt)
        if n < 1 or abs(n * dt - T) > 1e-12 * max(1.0, abs(T)) * max(1, n):
            raise ValueError(f"dt={dt} does not divide T={T}")
        return cls(float(T), int(n))

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt


@dataclass
class SystemState:
    """Coefficient vector ``[u | w | p | lambda]`` at time `t`."""

    vector: np.ndarray
    layout: BlockLayout
    t: float = 0.0

    def __post_init__(self):
        if self.vector.shape != (self.layout.size,):
            raise ValueError(f"state vector must have length {self.layout.size}")

    @property
    def u(self) -> np.ndarray:
        return self.vector[self.layout.u]

    @property
    def w(self) -> np.ndarray:
        return self.vector[self.layout.w]

    @property
    def p(self) -> np.ndarray:
        return self.vector[self.layout.p]

    @property
    def lam(self) -> float:
        return float(self.vector[-1]) if self.layout.multiplier else 0.0


@dataclass(frozen=True)
class DirichletBC:
    """Velocity prescribed on `tags`; `value(x, y, t)` returns ``(u_x, u_y)``, None means zero."""

    tags: tuple[str, ...] = BOUNDARY_TAGS
    value: Callable | None = None

    @property
    def full(self) -> bool:
        return set(self.tags) == set(BOUNDARY_TAGS)


@dataclass
class Trajectory:
    states: list[SystemState] = field(default_factory=list)
    reports: list[NewtonReport] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def average_iterations(self) -> float:
        if not self.reports:
            return float("nan")
        return float(np.mean([r.iterations for r in self.reports]))


class TransientError(RuntimeError):
    def __init__(self, message: str, trajectory: Trajectory, step: int):
        super().__init__(message)
        self.trajectory = trajectory
        self.step = step


def _embed(block: sp.csr_matrix, size: int) -> sp.csr_matrix:
    """Place a square CSR block in the top-left corner of a size x size matrix."""
    n = block.shape[0]
    indptr = np.concatenate([block.indptr, np.full(size - n, block.indptr[-1])])
    return sp.csr_matrix((block.data, block.indices, indptr), shape=(size, size))


class KVBFProblem:
    """Discrete problem on a fixed mesh: operators, boundary data and forcing.

    Parameters
    ----------
    spaces : SpaceSet
    params : ModelParams
    f : callable or None
        Body force ``f(x, y, t) -> (f_x, f_y)``; None means zero.
    bc : DirichletBC
        A pressure mean-value multiplier is added exactly when `bc` covers the
        whole boundary.
    """

    def __init__(self, spaces: SpaceSet, params: ModelParams, f: Callable | None = None,
                 bc: DirichletBC = DirichletBC(), tol: float = 1e-6, maxit: int = 25,
                 blocks: LinearBlocks | None = None):
        self.spaces = spaces
        self.mesh = spaces.mesh
        self.params = params
        self.f = f
        self.bc = bc
        self.tol = tol
        self.maxit = maxit
        self.blocks = blocks or assemble_linear_blocks(self.mesh, spaces, params)
        self.layout = BlockLayout.from_spaces(spaces, multiplier=bc.full)
        self.fixed = dirichlet_dofs(spaces, bc.tags)
        self._static: dict = {}

    # -- helpers ----------------------------------------------------------
    def zero_state(self, t: float = 0.0) -> SystemState:
        return SystemState(np.zeros(self.layout.size), self.layout, t)

    def boundary_values(self, t: float) -> np.ndarray:
        if self.bc.value is None or self.fixed.size == 0:
            return np.zeros(self.fixed.size)
        g = interpolate(self.spaces, lambda x, y: self.bc.value(x, y, t), "velocity")
        return g[self.fixed]

    def energy(self, state: SystemState) -> float:
        """u^T (M_u + kappa^2 K_u) u."""
        b = self.blocks
        u = state.u
        return float(u @ (b.M_u @ u) + self.params.kappa**2 * (u @ (b.K_u @ u)))

    def load(self, t: float) -> np.ndarray:
        if self.f is None:
            return np.zeros(self.spaces.n_u)
        return assemble_load(self.spaces, self.f, t)

    def _static_matrix(self, uu: sp.spmatrix) -> sp.csr_matrix:
        """Global matrix with velocity block `uu` and the constant couplings."""
        b, nu, lay = self.blocks, self.params.nu, self.layout
        rows = [
            [uu, nu * b.C, b.B.T],
            [-nu * b.C.T, nu * b.M_w, None],
            [b.B, None, None],
        ]
        if lay.multiplier:
            m = sp.csr_matrix(b.m[:, None])
            rows = [r + [None] for r in rows]
            rows[2][3] = m
            rows.append([None, None, m.T, None])
        mat = sp.bmat(rows, format="csr")
        mat.sort_indices()
        return mat

    def _linear_residual(self, x: np.ndarray, uu_lin: sp.spmatrix) -> np.ndarray:
        b, nu, lay = self.blocks, self.params.nu, self.layout
        u, w, p = x[lay.u], x[lay.w], x[lay.p]
        r = np.empty_like(x)
        r[lay.u] = uu_lin @ u + nu * (b.C @ w) + b.B.T @ p
        r[lay.w] = nu * (b.M_w @ w) - nu * (b.C.T @ u)
        r[lay.p] = b.B @ u
        if lay.multiplier:
            r[lay.p] += b.m * x[-1]
            r[-1] = b.m @ p
        return r

    def _nonlinear(self, u: np.ndarray, jacobian: bool):
        rf, jf = assemble_forchheimer(self.spaces, self.params, u, jacobian=jacobian)
        rc, jc = assemble_convection(self.spaces, u, jacobian=jacobian)
        return rf + rc, (jf + jc if jacobian else None)

    # -- time step --------------------------------------------------------
    def step_operators(self, dt: float):
        key = ("step", dt)
        if key not in self._static:
            b, k2 = self.blocks, self.params.kappa**2
            mass = (b.M_u + k2 * b.K_u) / dt
            uu = (mass + b.M_D).tocsr()
            self._static[key] = (mass.tocsr(), uu, self._static_matrix(uu))
        return self._static[key]

    def step_residual(self, x: np.ndarray, prev: SystemState, t: float, dt: float,
                      load: np.ndarray | None = None) -> np.ndarray:
        mass, uu, _ = self.step_operators(dt)
        lay = self.layout
        r = self._linear_residual(x, uu)
        nl, _ = self._nonlinear(x[lay.u], jacobian=False)
        r[lay.u] += nl - mass @ prev.u - (self.load(t) if load is None else load)
        return r

    def step_jacobian(self, x: np.ndarray, dt: float) -> sp.csr_matrix:
        _, _, static = self.step_operators(dt)
        _, jnl = self._nonlinear(x[self.layout.u], jacobian=True)
        return static + _embed(jnl, self.layout.size)

    def step(self, prev: SystemState, t: float, dt: float | None = None) -> tuple[SystemState, NewtonReport]:
        """Advance from `prev` to time `t` (one backward Euler step)."""
        dt = t - prev.t if dt is None else dt
        if not dt > 0:
            raise ValueError("time step must be positive")
        load = self.load(t)
        x0 = prev.vector.copy()
        x0[self.fixed] = self.boundary_values(t)
        x, report = newton_solve(
            lambda x: self.step_residual(x, prev, t, dt, load),
            lambda x: self.step_jacobian(x, dt),
            x0, tol=self.tol, maxit=self.maxit, fixed_dofs=self.fixed,
        )
        return SystemState(x, self.layout, t), report

    # -- initial data -----------------------------------------------------
    def initial_state(self, u0: Callable, mode: str = "interpolate", grad_u0: Callable | None = None,
                      t0: float = 0.0) -> SystemState:
        """Discrete initial data.

        ``interpolate``: nodal interpolant of `u0`, vorticity as the L2
        projection of curl(u_h0), zero pressure.
        ``discrete_problem``: solve the stationary Stokes-augmented nonlinear
        system whose exact solution is (u0, curl u0, 0); needs `grad_u0`.
        """
        if mode == "interpolate":
            state = self.zero_state(t0)
            u = interpolate(self.spaces, u0, "velocity")
            state.vector[self.layout.u] = u
            rhs = self.blocks.C.T @ u
            state.vector[self.layout.w] = linear_solve(self.blocks.M_w, rhs) if np.any(rhs) else 0.0
            return state
        if mode == "discrete_problem":
            if grad_u0 is None:
                raise ValueError("discrete_problem mode needs grad_u0")
            return self._initial_problem(u0, grad_u0, t0)
        raise ValueError(f"unknown initial data mode {mode!r}")

    def _initial_rhs(self, u0: Callable, grad_u0: Callable) -> np.ndarray:
        # ((1 + nu) grad u0, grad v) + (D u0 + F |u0|^(rho-2) u0 + (grad u0) u0, v)
        sp_ = self.spaces
        cq = cell_quadrature(sp_)
        x, y = cq.points[..., 0], cq.points[..., 1]
        u = np.stack(np.broadcast_arrays(*u0(x, y)), axis=-1)
        (a, b), (c, d) = grad_u0(x, y)
        G = np.stack([np.stack(np.broadcast_arrays(a, b), -1), np.stack(np.broadcast_arrays(c, d), -1)], -2)
        D = self.params.per_cell("darcy", self.mesh)[:, None]
        F = self.params.per_cell("forchheimer", self.mesh)[:, None]
        speed = np.sqrt(np.sum(u * u, axis=-1))
        val = (D + F * speed ** (self.params.rho - 2))[..., None] * u + np.einsum("cqad,cqd->cqa", G, u)
        ev = cq.velocity
        local = np.einsum("cq,cqa,qi->cai", cq.weights, val, ev.values) \
            + (1 + self.params.nu) * np.einsum("cq,cqad,cqid->cai", cq.weights, G, ev.grads)
        return scatter_vector(local.reshape(local.shape[0], -1), sp_.velocity_dofmap, sp_.n_u)

    def _initial_problem(self, u0, grad_u0, t0) -> SystemState:
        b = self.blocks
        uu = (b.K_u + b.M_D).tocsr()
        static = self._static_matrix(uu)
        rhs = self._initial_rhs(u0, grad_u0)
        lay = self.layout

        def residual(x):
            r = self._linear_residual(x, uu)
            nl, _ = self._nonlinear(x[lay.u], jacobian=False)
            r[lay.u] += nl - rhs
            return r

        def jacobian(x):
            _, jnl = self._nonlinear(x[lay.u], jacobian=True)
            return static + _embed(jnl, lay.size)

        x0 = np.zeros(lay.size)
        x0[lay.u] = interpolate(self.spaces, u0, "velocity")
        x, _ = newton_solve(residual, jacobian, x0, tol=self.tol, maxit=self.maxit, fixed_dofs=self.fixed)
        return SystemState(x, lay, t0)

    # -- driver -----------------------------------------------------------
    def run(self, initial: SystemState, grid: TimeGrid,
            callback: Callable[[int, SystemState, NewtonReport | None], None] | None = None) -> Trajectory:
        traj = Trajectory([initial], [])
        if callback:
            callback(0, initial, None)
        state = initial
        for n in range(1, grid.N + 1):
            t = initial.t + n * grid.dt
            try:
                state, report = self.step(state, t, grid.dt)
            except NewtonError as exc:
                raise TransientError(f"step {n} (t={t:.6g}) failed: {exc}", traj, n) from exc
            traj.states.append(state)
            traj.reports.append(report)
            log.info("step %d/%d t=%.4g newton=%d", n, grid.N, t, report.iterations)
            if callback:
                callback(n, state, report)
        return traj


def run_transient(problem: KVBFProblem, u0: Callable, grid: TimeGrid, mode: str = "interpolate",
                  grad_u0: Callable | None = None, callback=None) -> Trajectory:
    """Build initial data and march `grid.N` backward Euler steps."""
    initial = problem.initial_state(u0, mode, grad_u0=grad_u0)
    return problem.run(initial, grid, callback)
