import math

import pytest

from pmbm.config import (
    DEFAULTS,
    PAPER_CLUTTER_GRID,
    PAPER_P_D_GRID,
    build_run_config,
    load_run_config,
    parse_config_text,
)


def test_parse_basic_and_comments():
    text = "# leading comment\nseed = 7\nnum_runs=3  # trailing\n\np_d = 0.8\n"
    out = parse_config_text(text)
    assert out == {"seed": "7", "num_runs": "3", "p_d": "0.8"}


def test_parse_rejects_unknown_key_with_line_number():
    with pytest.raises(ValueError, match="line 2.*not_a_key"):
        parse_config_text("seed = 1\nnot_a_key = 2\n", source="f.cfg")


def test_parse_rejects_bare_line():
    with pytest.raises(ValueError, match="line 1"):
        parse_config_text("seed\n")


def test_parse_last_value_wins():
    assert parse_config_text("seed = 1\nseed = 2\n")["seed"] == "2"


def test_defaults_build_standard_setup():
    cfg = build_run_config()
    assert cfg.scenario.num_steps == 81
    assert cfg.scenario.midpoint_step == 41
    assert cfg.scenario.model.p_d == 0.9
    assert cfg.scenario.model.clutter_rate == 10.0
    assert cfg.scenario.model.clutter_density == pytest.approx(10.0 / 90000.0)
    assert cfg.num_runs == int(DEFAULTS["num_runs"])
    assert cfg.estimators == (1, 2, 3)
    assert cfg.filter.max_globals == 200
    assert cfg.ospa.c == 10.0 and cfg.ospa.position_indices == (0, 2)
    assert cfg.p_d_grid == (0.9,)
    assert cfg.clutter_grid == (10.0,)
    assert cfg.output_path is None


def test_overrides_flow_through():
    cfg = build_run_config(
        {
            "seed": "5",
            "num_runs": "7",
            "estimators": "2,3",
            "p_d": "0.8",
            "clutter_rate": "20",
            "max_globals": "inf",
            "ospa_positions": "all",
            "output": "out.csv",
            "p_d_grid": "0.9,0.8",
            "clutter_grid": "10,20",
        }
    )
    assert cfg.seed == 5
    assert cfg.num_runs == 7
    assert cfg.estimators == (2, 3)
    assert cfg.scenario.model.p_d == 0.8
    assert cfg.scenario.model.clutter_density == pytest.approx(20.0 / 90000.0)
    assert math.isinf(cfg.filter.max_globals)
    assert cfg.ospa.position_indices is None
    assert cfg.output_path == "out.csv"
    assert cfg.p_d_grid == (0.9, 0.8)
    assert cfg.clutter_grid == (10.0, 20.0)


def test_scenario_geometry_overrides():
    cfg = build_run_config(
        {
            "area": "0:100,0:200",
            "births_deaths": "1:10,2:5",
            "num_steps": "10",
            "midpoint_mean": "50,0,100,0",
            "midpoint_cov_scale": "2.0",
        }
    )
    assert cfg.scenario.area == ((0.0, 100.0), (0.0, 200.0))
    assert cfg.scenario.target_births_deaths == ((1, 10), (2, 5))
    assert cfg.scenario.area_measure() == pytest.approx(20000.0)
    # clutter density follows the actual area, not the reference one
    assert cfg.scenario.model.clutter_density == pytest.approx(10.0 / 20000.0)
    assert cfg.scenario.midpoint_cov[0, 0] == pytest.approx(2.0)


def test_config_validation_errors():
    with pytest.raises(ValueError):
        build_run_config({"num_runs": "0"})
    with pytest.raises(ValueError):
        build_run_config({"estimators": "1,4"})


def test_cell_model_rebuilds_clutter():
    cfg = build_run_config()
    m = cfg.cell_model(0.6, 20.0)
    assert m.p_d == 0.6
    assert m.clutter_rate == 20.0
    assert m.clutter_density == pytest.approx(20.0 / 90000.0)
    # the base model is untouched
    assert cfg.scenario.model.p_d == 0.9


def test_paper_grids():
    assert PAPER_P_D_GRID == (0.95, 0.9, 0.8, 0.7, 0.6)
    assert PAPER_CLUTTER_GRID == (10.0, 15.0, 20.0)


def test_load_run_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 9\nnum_runs = 4\n")
    cfg = load_run_config(str(path), {"num_runs": "6"})
    assert cfg.seed == 9
    assert cfg.num_runs == 6
    # no file at all is fine
    assert load_run_config(None, {}).seed == int(DEFAULTS["seed"])
    with pytest.raises(ValueError):
        load_run_config(str(path), {"bogus": "1"})
