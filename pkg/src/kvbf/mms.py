"""Manufactured solutions, forcing synthesis, error norms and observed rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .assembly import ERROR_DEGREE, ModelParams, cell_quadrature
from .mesh import mesh_size
from .spaces import SpaceSet


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution fields, each vectorised as ``fn(x, y, t)``.

    Vector-valued fields return tuples of components; ``grad_u`` returns
    ``((du1/dx, du1/dy), (du2/dx, du2/dy))``.
    """

    u: Callable
    grad_u: Callable
    dt_u: Callable
    lap_u: Callable
    dt_lap_u: Callable
    p: Callable
    grad_p: Callable
    omega: Callable
    grad_omega: Callable
    name: str = "exact"

    def u0(self, x, y):
        return self.u(x, y, 0.0)

    def grad_u0(self, x, y):
        return self.grad_u(x, y, 0.0)

    def dirichlet(self, x, y, t):
        return self.u(x, y, t)


def example1() -> ExactSolution:
    """Smooth solution on (0, 1)^2 used for the spatial convergence study."""
    pi = np.pi

    def u(x, y, t):
        e = np.exp(t)
        return e * np.sin(pi * x) * np.cos(pi * y), -e * np.cos(pi * x) * np.sin(pi * y)

    def grad_u(x, y, t):
        e = np.exp(t) * pi
        cc = np.cos(pi * x) * np.cos(pi * y)
        ss = np.sin(pi * x) * np.sin(pi * y)
        return (e * cc, -e * ss), (e * ss, -e * cc)

    def lap_u(x, y, t):
        u1, u2 = u(x, y, t)
        return -2 * pi**2 * u1, -2 * pi**2 * u2

    def p(x, y, t):
        return np.exp(t) * np.cos(pi * x) * np.sin(pi * y / 2)

    def grad_p(x, y, t):
        e = np.exp(t)
        return (-e * pi * np.sin(pi * x) * np.sin(pi * y / 2),
                e * pi / 2 * np.cos(pi * x) * np.cos(pi * y / 2))

    def omega(x, y, t):
        return 2 * pi * np.exp(t) * np.sin(pi * x) * np.sin(pi * y)

    def grad_omega(x, y, t):
        e = 2 * pi**2 * np.exp(t)
        return e * np.cos(pi * x) * np.sin(pi * y), e * np.sin(pi * x) * np.cos(pi * y)

    # every field carries exp(t), so time derivatives reproduce the field
    return ExactSolution(u, grad_u, u, lap_u, lap_u, p, grad_p, omega, grad_omega, name="example1")


def shear_flow() -> ExactSolution:
    """Steady u = (y, 0), p = 0, with vorticity -1."""
    zero = lambda x, y, t: np.zeros(np.broadcast(x, y).shape)  # noqa: E731

    def u(x, y, t):
        return y + 0.0 * x, zero(x, y, t)

    def grad_u(x, y, t):
        z = zero(x, y, t)
        return (z, z + 1.0), (z, z)

    def vzero(x, y, t):
        z = zero(x, y, t)
        return z, z

    return ExactSolution(u, grad_u, vzero, vzero, vzero, zero, vzero,
                         lambda x, y, t: zero(x, y, t) - 1.0, vzero, name="shear")


def forcing_from_exact(params: ModelParams, exact: ExactSolution) -> Callable:
    """Body force making `exact` solve the strong momentum equation.

    f = d_t u - kappa^2 d_t lap u + D u + F |u|^(rho-2) u + (grad u) u
        + nu curl(omega) + grad p,  with curl(omega) = (d_y omega, -d_x omega).
    """
    if not params.uniform:
        raise ValueError("manufactured forcing needs spatially uniform D and F")
    D = next(iter(params.darcy.values()))
    F = next(iter(params.forchheimer.values()))
    rho, nu, k2 = params.rho, params.nu, params.kappa**2

    def f(x, y, t):
        u1, u2 = exact.u(x, y, t)
        (u1x, u1y), (u2x, u2y) = exact.grad_u(x, y, t)
        du1, du2 = exact.dt_u(x, y, t)
        dl1, dl2 = exact.dt_lap_u(x, y, t)
        wx, wy = exact.grad_omega(x, y, t)
        px, py = exact.grad_p(x, y, t)
        speed = np.sqrt(u1**2 + u2**2)
        drag = D + F * speed ** (rho - 2)
        f1 = du1 - k2 * dl1 + drag * u1 + (u1x * u1 + u1y * u2) + nu * wy + px
        f2 = du2 - k2 * dl2 + drag * u2 + (u2x * u1 + u2y * u2) - nu * wx + py
        return f1, f2

    return f


# ---------------------------------------------------------------------------
# error norms
# ---------------------------------------------------------------------------

@dataclass
class ErrorReport:
    eu_linf_h1: float
    eu_l2_l2: float
    ew_l2_l2: float
    ep_l2_l2: float
    h: float
    dof: int
    iter: float = float("nan")
    per_step: dict = field(default_factory=dict, repr=False)


def field_errors(spaces: SpaceSet, exact: ExactSolution, u, w, p, t: float,
                 degree: int = ERROR_DEGREE) -> dict[str, float]:
    """L2/H1 velocity, L2 vorticity and L2 pressure errors at one time."""
    cq = cell_quadrature(spaces, degree)
    x, y = cq.points[..., 0], cq.points[..., 1]
    wts = cq.weights
    uh, Gh = cq.velocity_at_points(u)
    ue = np.stack(np.broadcast_arrays(*exact.u(x, y, t)), axis=-1)
    (a, b), (c, d) = exact.grad_u(x, y, t)
    Ge = np.stack([np.stack(np.broadcast_arrays(a, b), -1), np.stack(np.broadcast_arrays(c, d), -1)], -2)
    wh, _ = cq.scalar_at_points("vorticity", w)
    ph, _ = cq.scalar_at_points("pressure", p)
    we = np.broadcast_to(exact.omega(x, y, t), x.shape)
    pe = np.broadcast_to(exact.p(x, y, t), x.shape)
    u_l2 = np.sum(wts * np.sum((uh - ue) ** 2, axis=-1))
    grad_l2 = np.sum(wts * np.sum((Gh - Ge) ** 2, axis=(-2, -1)))
    return {
        "u_l2": math.sqrt(u_l2),
        "u_h1": math.sqrt(u_l2 + grad_l2),
        "w_l2": math.sqrt(np.sum(wts * (wh - we) ** 2)),
        "p_l2": math.sqrt(np.sum(wts * (ph - pe) ** 2)),
    }


def error_norms(trajectory, exact: ExactSolution, spaces: SpaceSet,
                degree: int = ERROR_DEGREE) -> ErrorReport:
    """Discrete-in-time error norms of a trajectory.

    The l-infinity norm runs over n = 0..N; the l2 norms are
    ``sqrt(dt * sum_{n=1}^N e_n^2)``.
    """
    states = trajectory.states
    steps = [field_errors(spaces, exact, s.u, s.w, s.p, s.t, degree) for s in states]
    per_step = {k: np.array([e[k] for e in steps]) for k in steps[0]}
    dt = np.diff([s.t for s in states])

    def l2(key):
        return float(math.sqrt(np.sum(dt * per_step[key][1:] ** 2)))

    return ErrorReport(
        eu_linf_h1=float(per_step["u_h1"].max()),
        eu_l2_l2=l2("u_l2"),
        ew_l2_l2=l2("w_l2"),
        ep_l2_l2=l2("p_l2"),
        h=mesh_size(spaces.mesh),
        dof=spaces.n_dofs,
        iter=trajectory.average_iterations,
        per_step=per_step,
    )


NORM_KEYS = ("eu_linf_h1", "eu_l2_l2", "ew_l2_l2", "ep_l2_l2")


def observed_rates(reports: Sequence[ErrorReport], keys: Sequence[str] = NORM_KEYS) -> list[dict]:
    """Convergence rates between consecutive levels.

    Returns one dict per level mapping each norm key to its rate; the first
    level has ``None`` and a zero error gives ``math.inf``.
    """
    if len(reports) < 2:
        raise ValueError("need at least two levels")
    hs = [r.h for r in reports]
    if any(h1 <= h2 for h1, h2 in zip(hs, hs[1:])):
        raise ValueError("mesh sizes must be strictly decreasing")
    rows = [{k: None for k in keys}]
    for prev, cur in zip(reports, reports[1:]):
        row = {}
        for k in keys:
            e0, e1 = getattr(prev, k), getattr(cur, k)
            row[k] = math.inf if e1 == 0 or e0 == 0 else math.log(e0 / e1) / math.log(prev.h / cur.h)
        rows.append(row)
    return rows
