import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vilab.config import CHECKS, ConfigError, ExperimentConfig, SweepAxes, load_config, parse_config


def test_empty_config_is_preset():
    cfg = parse_config({})
    c, g = cfg.construction, cfg.grid
    assert (c.M, c.N, c.N0, c.p) == (3.0, 3, 1, 2.5)
    assert (g.L, g.n) == (8.0, 1024)
    assert cfg.solver.dt is None
    assert c.T_horizon == pytest.approx(1 / 27)
    assert cfg.t0 == c.T_horizon
    assert cfg.selected_checks() == CHECKS


def test_m_sets_horizon():
    cfg = parse_config({"construction": {"M": 4}})
    assert cfg.construction.M == 4 and cfg.construction.T_horizon == 0.015625


@pytest.mark.parametrize("data, path", [
    ({"construction": {"p": 1.5}}, "$.construction.p"),
    ({"grid": {"n": 1000}}, "$.grid.n"),
    ({"grid": {"n": 256}}, "$.grid"),
    ({"solver": {"cfl": 2}}, "$.solver.cfl"),
    ({"construction": {"bogus": 1}}, "$.construction.bogus"),
    ({"bogus": 1}, "$.bogus"),
    ({"checks": ["all", "nope"]}, "$.checks[1]"),
    ({"sweep": {"M": list(range(2, 20)), "N": list(range(1, 20))}}, "$.sweep"),
    ({"experiments": {"x_star": "maybe"}}, "$.experiments.x_star"),
    ({"output": 3}, "$.output"),
])
def test_errors_name_the_path(data, path):
    with pytest.raises(ConfigError) as e:
        parse_config(data)
    assert str(e.value).startswith(path + ":")


def test_p_message():
    with pytest.raises(ConfigError, match=r"p must lie in \(2, 3\]"):
        parse_config({"construction": {"p": 1.5}})


def test_explicit_x_star_is_manual():
    cfg = parse_config({"construction": {"x_star": [0.8, 1.1]}})
    assert cfg.construction.x_star == (0.8, 1.1)
    assert cfg.experiments.x_star == "manual"
    assert parse_config({}).experiments.x_star == "auto"


@given(st.lists(st.sampled_from([2.0, 3.0, 4.0]), min_size=1, max_size=3, unique=True),
       st.lists(st.integers(1, 8), min_size=1, max_size=8, unique=True))
def test_sweep_cells_are_cartesian(Ms, ns):
    ax = SweepAxes(M=Ms, n_pert=ns)
    cells = ax.cells()
    assert len(cells) == ax.size == len(Ms) * len(ns)
    assert {(c["M"], c["n_pert"]) for c in cells} == {(m, n) for m in Ms for n in ns}


def test_sweep_cap():
    with pytest.raises(ValueError, match="cap"):
        SweepAxes(n_pert=list(range(1, 10)), cap=8)
    assert SweepAxes().size == 0


def test_round_trip_through_dict():
    cfg = parse_config({"construction": {"M": 4}, "checks": ["cos2"], "sweep": {"n_pert": [1, 2]}})
    d = json.loads(json.dumps(cfg.to_dict()))
    assert d["construction"]["M"] == 4 and d["checks"] == ["cos2"]
    again = parse_config({k: d[k] for k in ("checks", "output")})
    assert isinstance(again, ExperimentConfig)


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"construction": {"N": 2}}')
    assert load_config(p).construction.N == 2
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "missing.json")
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)
