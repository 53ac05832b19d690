from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvbf.config import ConfigError, RunConfig, dump, from_dict, load, loads
from kvbf.mesh import CHANNEL, MATRIX

EXAMPLES = Path(__file__).resolve().parent.parent / "examples"


@pytest.mark.parametrize("name", ["example1_th.toml", "example1_mini.toml", "example3.toml"])
def test_shipped_examples_parse_and_round_trip(name):
    cfg = load(EXAMPLES / name)
    text = cfg.dumps()
    assert loads(text) == cfg
    assert loads(text).dumps() == text


def test_example3_values():
    cfg = load(EXAMPLES / "example3.toml")
    assert cfg.scenario == "channel" and cfg.steps == 100
    params = cfg.model_params()
    assert params.darcy == {MATRIX: 1000.0, CHANNEL: 1.0}
    assert params.forchheimer == {MATRIX: 1.0, CHANNEL: 10.0}
    assert cfg.kappa_sweep == (3.0, 2.0, 1.0, 0.1, 0.01)


def test_defaults():
    cfg = loads("")
    assert cfg == RunConfig()
    assert cfg.initial_data == "interpolate"
    assert cfg.steps == 10


def test_scalar_coefficient_applies_to_all_regions():
    cfg = loads("[model]\ndarcy = 4\n")
    assert cfg.darcy == {"matrix": 4.0, "channel": 4.0}


@given(rho=st.floats(3, 4), nu=st.floats(1e-3, 1e3), kappa=st.floats(1e-3, 10),
       n=st.lists(st.integers(1, 200), min_size=1, max_size=5, unique=True),
       steps=st.integers(1, 1000), vtk=st.booleans(), element=st.sampled_from(["taylor_hood", "mini"]))
@settings(max_examples=50, deadline=None)
def test_round_trip_idempotent(rho, nu, kappa, n, steps, vtk, element):
    cfg = RunConfig(element=element, rho=rho, nu=nu, kappa=kappa, levels=tuple(sorted(n)), T=0.5,
                    dt=0.5 / steps, vtk=vtk)
    again = loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()


def test_dump_and_load(tmp_path):
    cfg = RunConfig(scenario="channel", kappa_sweep=(1.0, 0.1))
    dump(cfg, tmp_path / "c.toml")
    assert load(tmp_path / "c.toml") == cfg


def test_with_overrides_validates():
    cfg = RunConfig()
    assert cfg.with_overrides(levels=(2, 4)).levels == (2, 4)
    with pytest.raises(ConfigError):
        cfg.with_overrides(rho=5.0)


@pytest.mark.parametrize("text, match", [
    ("[model]\nrho = 2.0\n", "rho"),
    ("[model]\nkappa = 0.0\n", "kappa"),
    ("[model]\nscenario = \"cavity\"\n", "scenario"),
    ("[model]\nelement = \"p1p1\"\n", "element"),
    ("[model]\ndarcy = {matrix = 1.0}\n", "missing"),
    ("[model]\ndarcy = {matrix = 1.0, channel = 1.0, rock = 2.0}\n", "unknown regions"),
    ("[model]\nrho = \"three\"\n", "number"),
    ("[model]\nrho = true\n", "number"),
    ("[model]\ninflow = [0.2]\n", "two components"),
    ("[model]\nkappa_sweep = [1.0, 0.0]\n", "kappa"),
    ("[time]\ndt = 0.3\nT = 1.0\n", "divide"),
    ("[time]\ndt = -0.1\n", "positive"),
    ("[time]\ninitial_data = \"random\"\n", "initial_data"),
    ("[mesh]\nlevels = [8, 4]\n", "increasing"),
    ("[mesh]\nlevels = []\n", "non-empty"),
    ("[mesh]\nlevels = [4.5]\n", "integer"),
    ("[mesh]\nchannels = [[0.0, -1.0, 0.0, 1.0]]\n", "channels"),
    ("[newton]\nmaxit = 0\n", "maxit"),
    ("[output]\nvtk = \"yes\"\n", "true or false"),
    ("[solver]\nx = 1\n", "unknown sections"),
    ("[model]\nrhoo = 3.0\n", "unknown keys"),
    ("model = 3\n", "must be a table"),
    ("[model\n", "invalid TOML"),
])
def test_validation_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load(tmp_path / "nope.toml")


def test_from_dict_rejects_non_table():
    with pytest.raises(ConfigError):
        from_dict([1, 2])
