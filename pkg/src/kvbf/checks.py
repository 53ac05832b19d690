"""Invariant and property checks run by ``kvbf check``.

Each check returns a `CheckResult`; none of them raise on a failed property.
The checks use small meshes so the whole suite runs in seconds.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import (ModelParams, assemble_convection, assemble_forchheimer,
                       assemble_linear_blocks)
from .mesh import Mesh, build_structured
from .quadrature import MAX_DEGREE, rule_for_degree
from .spaces import ElementFamily, SpaceSet, build_spaces, dirichlet_dofs
from .timeloop import DirichletBC, KVBFProblem, TimeGrid

RHOS = (3.0, 3.5, 4.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def monomial_integral(a: int, b: int) -> float:
    """Integral of x^a y^b over the reference triangle, a! b! / (a + b + 2)!."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def check_quadrature(tol: float = 1e-13) -> tuple[bool, str]:
    worst = 0.0
    for d in range(1, MAX_DEGREE + 1):
        rule = rule_for_degree(d)
        x, y = rule.ref_points.T
        for a in range(d + 1):
            for b in range(d + 1 - a):
                exact = monomial_integral(a, b)
                worst = max(worst, abs(rule.weights @ (x**a * y**b) - exact) / exact)
    return bool(worst <= tol), f"max relative monomial error {worst:.1e} (tol {tol:.0e})"


def single_cell_mesh(coords) -> Mesh:
    coords = np.asarray(coords, dtype=float)
    edges = np.array([[0, 1], [1, 2], [2, 0]])
    return Mesh(coords, np.array([[0, 1, 2]]), edges, np.array(["bottom", "right", "left"]))


def p1_cell_matrices(coords) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form P1 mass and stiffness matrices of one triangle."""
    p = np.asarray(coords, dtype=float)
    area = 0.5 * abs((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1]))
    mass = area / 12.0 * (np.ones((3, 3)) + np.eye(3))
    # edge vectors opposite each vertex, rotated, give area-scaled gradients
    e = np.array([p[2] - p[1], p[0] - p[2], p[1] - p[0]])
    stiff = (e @ e.T) / (4.0 * area)
    return mass, stiff


def check_element_matrices(tol: float = 1e-12, seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        coords = rng.uniform(-1, 1, (3, 2))
        e1, e2 = coords[1] - coords[0], coords[2] - coords[0]
        if e1[0] * e2[1] - e1[1] * e2[0] < 0:
            coords = coords[[0, 2, 1]]
        mesh = single_cell_mesh(coords)
        spaces = build_spaces(mesh, ElementFamily.MINI)
        blocks = assemble_linear_blocks(mesh, spaces, ModelParams())
        mass, stiff = p1_cell_matrices(coords)
        # vorticity is P1: M_w is the P1 mass; velocity vertex block of K is the P1 stiffness
        got_m = blocks.M_w.toarray()
        got_k = blocks.K_u.toarray()[:3, :3]
        worst = max(worst, np.abs(got_m - mass).max() / np.abs(mass).max(),
                    np.abs(got_k - stiff).max() / np.abs(stiff).max())
    return worst <= tol, f"max relative deviation from closed-form P1 matrices {worst:.1e} (tol {tol:.0e})"


def _random_spaces(family, n: int = 3) -> SpaceSet:
    return build_spaces(build_structured((0.0, 1.0, 0.0, 1.0), n), family)


def check_jacobians(family=ElementFamily.TAYLOR_HOOD, n_states: int = 20, tol: float = 1e-6,
                    seed: int = 1) -> tuple[bool, str]:
    """Directional central differences of both nonlinear terms on random states."""
    rng = np.random.default_rng(seed)
    spaces = _random_spaces(family)
    worst = 0.0
    for i in range(n_states):
        rho = RHOS[i % len(RHOS)]
        params = ModelParams(rho=rho)
        u = rng.standard_normal(spaces.n_u)
        d = rng.standard_normal(spaces.n_u)
        h = 1e-6 * np.linalg.norm(u) / np.linalg.norm(d)
        for fn in (lambda v: assemble_forchheimer(spaces, params, v),
                   lambda v: assemble_convection(spaces, v)):
            _, jac = fn(u)
            fd = (fn(u + h * d)[0] - fn(u - h * d)[0]) / (2 * h)
            worst = max(worst, np.linalg.norm(jac @ d - fd) / np.linalg.norm(fd))
    return worst <= tol, f"max relative Jacobian-vs-FD mismatch {worst:.1e} over {n_states} states (tol {tol:.0e})"


def check_skew_symmetry(family=ElementFamily.TAYLOR_HOOD, n_states: int = 20, tol: float = 1e-11,
                        seed: int = 2) -> tuple[bool, str]:
    """Convection tested with its own argument vanishes for velocities zero on the boundary."""
    rng = np.random.default_rng(seed)
    spaces = _random_spaces(family, 4)
    bnd = dirichlet_dofs(spaces, ("left", "right", "top", "bottom"))
    worst = 0.0
    for _ in range(n_states):
        u = rng.standard_normal(spaces.n_u)
        u[bnd] = 0.0
        res, _ = assemble_convection(spaces, u, jacobian=False)
        worst = max(worst, abs(res @ u) / (np.linalg.norm(u) * np.linalg.norm(res)))
    return worst <= tol, f"max |c(u)u| / (|u| |c(u)|) = {worst:.1e} (tol {tol:.0e})"


def check_monotonicity(family=ElementFamily.TAYLOR_HOOD, n_pairs: int = 50, slack: float = 1e-12,
                       seed: int = 3) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    spaces = _random_spaces(family)
    worst = math.inf
    for i in range(n_pairs):
        params = ModelParams(rho=RHOS[i % len(RHOS)])
        u = rng.standard_normal(spaces.n_u)
        v = rng.standard_normal(spaces.n_u) * rng.uniform(0.1, 10)
        ru, _ = assemble_forchheimer(spaces, params, u, jacobian=False)
        rv, _ = assemble_forchheimer(spaces, params, v, jacobian=False)
        worst = min(worst, (ru - rv) @ (u - v))
    return worst >= -slack, f"min (N_F(u) - N_F(v)).(u - v) = {worst:.3e} over {n_pairs} pairs"


def smooth_random_field(seed: int = 4, modes: int = 3):
    """Velocity field vanishing on the boundary of the unit square."""
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((2, modes, modes))

    def u0(x, y):
        out = []
        for c in range(2):
            acc = np.zeros(np.broadcast(x, y).shape)
            for k in range(modes):
                for l in range(modes):
                    acc = acc + coef[c, k, l] * np.sin((k + 1) * np.pi * x) * np.sin((l + 1) * np.pi * y)
            out.append(acc)
        return tuple(out)

    return u0


@dataclass
class TransientProbe:
    energies: list
    div_norms: list
    mean_pressures: list
    vorticity_defects: list


def run_transient_probe(family=ElementFamily.TAYLOR_HOOD, n: int = 6, steps: int = 50, dt: float = 0.01,
                        params: ModelParams | None = None, seed: int = 4) -> TransientProbe:
    """Unforced run with homogeneous Dirichlet data recording invariants each step."""
    spaces = build_spaces(build_structured((0.0, 1.0, 0.0, 1.0), n), family)
    problem = KVBFProblem(spaces, params or ModelParams(), None, DirichletBC())
    b = problem.blocks
    probe = TransientProbe([], [], [], [])

    def record(step, state, report):
        probe.energies.append(problem.energy(state))
        probe.div_norms.append(float(np.linalg.norm(b.B @ state.u)))
        probe.mean_pressures.append(float(abs(b.m @ state.p)))
        rhs = b.C.T @ state.u
        scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
        probe.vorticity_defects.append(float(np.linalg.norm(b.M_w @ state.w - rhs) / scale))

    initial = problem.initial_state(smooth_random_field(seed), "interpolate")
    problem.run(initial, TimeGrid(steps * dt, steps), record)
    return probe


def check_energy_decay(probe: TransientProbe, slack: float = 1e-12) -> tuple[bool, str]:
    e = np.array(probe.energies)
    jumps = np.diff(e)
    worst = jumps.max()
    return bool(np.all(jumps <= slack)), f"max E^n - E^(n-1) = {worst:.2e} over {len(jumps)} steps (E^0 = {e[0]:.3e})"


def check_incompressibility(probe: TransientProbe, tol: float = 1e-9) -> tuple[bool, str]:
    # skip the initial interpolant, which is not discretely divergence free
    div = max(probe.div_norms[1:])
    mean = max(probe.mean_pressures[1:])
    return div <= tol and mean <= tol, f"max |B u^n| = {div:.1e}, max |m.p^n| = {mean:.1e} (tol {tol:.0e})"


def check_vorticity_consistency(probe: TransientProbe, tol: float = 1e-8) -> tuple[bool, str]:
    worst = max(probe.vorticity_defects[1:])
    return worst <= tol, f"max |M_w w^n - C^T u^n| / |C^T u^n| = {worst:.1e} (tol {tol:.0e})"


def run_checks(family=ElementFamily.TAYLOR_HOOD) -> list[CheckResult]:
    family = ElementFamily(family)
    results = [
        _timed("quadrature exactness", check_quadrature),
        _timed("element matrices", check_element_matrices),
        _timed("nonlinear Jacobians", lambda: check_jacobians(family)),
        _timed("convection skew-symmetry", lambda: check_skew_symmetry(family)),
        _timed("Forchheimer monotonicity", lambda: check_monotonicity(family)),
    ]
    t0 = time.perf_counter()
    probe = run_transient_probe(family)
    setup = time.perf_counter() - t0
    for name, fn in (("energy decay", check_energy_decay),
                     ("incompressibility and mean pressure", check_incompressibility),
                     ("vorticity projection", check_vorticity_consistency)):
        res = _timed(name, lambda fn=fn: fn(probe))
        results.append(CheckResult(res.name, res.passed, res.detail, res.seconds + setup / 3))
    return results
