import numpy as np
import pytest

from kvbf.config import RunConfig
from kvbf.mesh import CHANNEL, MATRIX
from kvbf.scenarios import channel_mesh, region_mean_speed, run_channel, run_convergence
from kvbf.spaces import build_spaces, interpolate


def test_channel_mesh_regions():
    mesh = channel_mesh(RunConfig(scenario="channel"), 20)
    assert set(np.unique(mesh.cell_region).tolist()) == {MATRIX, CHANNEL}


def test_region_mean_speed_constant_field():
    spaces = build_spaces(channel_mesh(RunConfig(scenario="channel"), 10), "taylor_hood")
    u = interpolate(spaces, lambda x, y: (0 * x + 0.3, 0 * x - 0.4), "velocity")
    speeds = region_mean_speed(spaces, u)
    assert speeds["channel"] == pytest.approx(0.5, rel=1e-12)
    assert speeds["matrix"] == pytest.approx(0.5, rel=1e-12)


def test_region_mean_speed_missing_region():
    cfg = RunConfig(scenario="channel", channels=((5.0, 6.0, 5.0, 6.0),))
    spaces = build_spaces(channel_mesh(cfg, 4), "mini")
    assert np.isnan(region_mean_speed(spaces, np.zeros(spaces.n_u))["channel"])


def test_channel_run_short():
    cfg = RunConfig(scenario="channel", element="mini", darcy={"matrix": 1000.0, "channel": 1.0},
                    forchheimer={"matrix": 1.0, "channel": 10.0}, T=0.03, dt=0.01, levels=(8,))
    run = run_channel(cfg)
    assert [r["step"] for r in run.rows] == [0, 1, 2, 3]
    assert run.ratio > 1.0
    assert run.iterations <= 3


def test_convergence_ladder_small():
    cfg = RunConfig(levels=(2, 4), T=2e-4, dt=1e-4)
    reports = run_convergence(cfg)
    assert [r.dof for r in reports] == [2 * 25 + 9 + 9, 2 * 81 + 25 + 25]
    assert reports[1].eu_linf_h1 < reports[0].eu_linf_h1
