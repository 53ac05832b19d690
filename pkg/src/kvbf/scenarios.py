"""Built-in scenarios: manufactured-solution ladder and the channel network demo."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import cell_quadrature
from .config import RunConfig
from .mesh import CHANNEL, MATRIX, Mesh, build_structured, rectangles_indicator, tag_channel
from .mms import ErrorReport, ExactSolution, error_norms, example1, forcing_from_exact
from .spaces import SpaceSet, build_spaces
from .timeloop import DirichletBC, KVBFProblem, SystemState, TimeGrid, Trajectory

log = logging.getLogger(__name__)

UNIT_SQUARE = (0.0, 1.0, 0.0, 1.0)
CHANNEL_DOMAIN = (-1.0, 1.0, -1.0, 1.0)


# ---------------------------------------------------------------------------
# manufactured solution
# ---------------------------------------------------------------------------

def mms_problem(cfg: RunConfig, n: int, exact: ExactSolution | None = None) -> tuple[KVBFProblem, ExactSolution]:
    """Example 1 problem on an n-by-n mesh of the unit square."""
    exact = exact or example1()
    params = cfg.model_params()
    spaces = build_spaces(build_structured(UNIT_SQUARE, n), cfg.element)
    problem = KVBFProblem(spaces, params, forcing_from_exact(params, exact),
                          DirichletBC(value=exact.dirichlet), tol=cfg.tol, maxit=cfg.maxit)
    return problem, exact


def run_mms_level(cfg: RunConfig, n: int, exact: ExactSolution | None = None,
                  callback: Callable | None = None) -> tuple[ErrorReport, Trajectory]:
    problem, exact = mms_problem(cfg, n, exact)
    grid = TimeGrid.from_dt(cfg.T, cfg.dt)
    initial = problem.initial_state(exact.u0, cfg.initial_data, grad_u0=exact.grad_u0)
    traj = problem.run(initial, grid, callback)
    return error_norms(traj, exact, problem.spaces), traj


def run_convergence(cfg: RunConfig, exact: ExactSolution | None = None) -> list[ErrorReport]:
    """Error reports for every mesh level in `cfg.levels`."""
    reports = []
    for n in cfg.levels:
        t0 = time.perf_counter()
        report, _ = run_mms_level(cfg, n, exact)
        log.info("level n=%d dof=%d h=%.4f iter=%.2f eu_h1=%.3e (%.1fs)", n, report.dof, report.h,
                 report.iter, report.eu_linf_h1, time.perf_counter() - t0)
        reports.append(report)
    return reports


# ---------------------------------------------------------------------------
# channel network
# ---------------------------------------------------------------------------

def channel_mesh(cfg: RunConfig, n: int) -> Mesh:
    return tag_channel(build_structured(CHANNEL_DOMAIN, n), rectangles_indicator(cfg.channels))


def channel_problem(cfg: RunConfig, n: int, kappa: float | None = None,
                    spaces: SpaceSet | None = None) -> KVBFProblem:
    """Inflow ``cfg.inflow`` on the left side, natural conditions elsewhere, no body force."""
    spaces = spaces or build_spaces(channel_mesh(cfg, n), cfg.element)
    ux, uy = cfg.inflow

    def inflow(x, y, t):
        return np.full(np.shape(x), ux), np.full(np.shape(x), uy)

    return KVBFProblem(spaces, cfg.model_params(kappa), None, DirichletBC(("left",), inflow),
                       tol=cfg.tol, maxit=cfg.maxit)


def region_mean_speed(spaces: SpaceSet, u: np.ndarray) -> dict[str, float]:
    """Area-weighted mean of |u| over channel cells and over matrix cells."""
    cq = cell_quadrature(spaces)
    vals, _ = cq.velocity_at_points(u)
    speed = np.sqrt(np.sum(vals**2, axis=-1))
    cell_int = np.sum(cq.weights * speed, axis=1)
    cell_area = np.sum(cq.weights, axis=1)
    region = spaces.mesh.cell_region
    out = {}
    for name, rid in (("channel", CHANNEL), ("matrix", MATRIX)):
        mask = region == rid
        out[name] = float(cell_int[mask].sum() / cell_area[mask].sum()) if mask.any() else float("nan")
    return out


@dataclass
class ChannelRun:
    kappa: float
    rows: list[dict] = field(default_factory=list)
    final: SystemState | None = None
    iterations: float = float("nan")

    @property
    def ratio(self) -> float:
        last = self.rows[-1]
        return last["mean_speed_channel"] / last["mean_speed_matrix"]


def run_channel(cfg: RunConfig, kappa: float | None = None, n: int | None = None,
                on_state: Callable[[int, SystemState], None] | None = None,
                spaces: SpaceSet | None = None) -> ChannelRun:
    """March the channel scenario from rest and record mean speeds per step."""
    kappa = cfg.kappa if kappa is None else kappa
    problem = channel_problem(cfg, n or cfg.levels[-1], kappa, spaces)
    grid = TimeGrid.from_dt(cfg.T, cfg.dt)
    run = ChannelRun(kappa)

    def callback(step, state, report):
        speeds = region_mean_speed(problem.spaces, state.u)
        run.rows.append({
            "kappa": kappa, "step": step, "t": state.t,
            "mean_speed_channel": speeds["channel"], "mean_speed_matrix": speeds["matrix"],
            "newton_iterations": 0 if report is None else report.iterations,
        })
        if on_state:
            on_state(step, state)

    traj = problem.run(problem.zero_state(), grid, callback)
    run.final = traj.states[-1]
    run.iterations = traj.average_iterations
    return run
