import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qamp.cli import main
from qamp.config import ScenarioConfig, from_mapping, parse_config, serialize_config
from qamp.errors import ConfigError
from qamp.scenario import preset_configs, read_thermo_csv, run_scenario
from qamp.thermo import CSV_COLUMNS

SMALL = """\
scenario_id = small
lambda_over_gamma = 20
field_dim = 30
t_max = 1
sample_interval = 0.25
snapshots = 0, 1
grid_radius = 6
grid_points = 41
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_describe_reference_run():
    c = parse_config("interaction_order = 2\n")
    assert c == ScenarioConfig()
    m = c.build_model()
    assert m.order == 2 and m.field_dim == 100 and m.gamma_h == pytest.approx(1e-3)
    assert c.atom_level == 2 and c.field_state == "vacuum"


def test_comments_and_auto_values():
    c = parse_config("# header\ndt = auto   # default step\ngrid_radius = 4.5\nsnapshots = 0; 2.5\n")
    assert c.dt is None and c.grid_radius == 4.5 and c.snapshots == (0.0, 2.5)


@pytest.mark.parametrize(
    "text,field",
    [
        ("field_state = fock\nfock_n = 4\nfield_dim = 3\nguard_levels = 1\n", "fock_n"),
        ("bogus = 1\n", "bogus"),
        ("t_max = 1\nt_max = 2\n", "t_max"),
        ("interaction_order = 3\n", "interaction_order"),
        ("field_dim = 12.5\n", "field_dim"),
        ("snapshots = 20\n", "snapshots"),
        ("phase_space = Q, P\n", "phase_space"),
        ("detuning_over_lambda = 0.5\n", "frame"),
    ],
)
def test_invalid_configs_name_the_field(text, field):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.field == field


def test_missing_equals_sign():
    with pytest.raises(ConfigError):
        parse_config("t_max 3\n")


def test_truncated_initial_state_is_config_error():
    c = parse_config("field_state = poisson_mixed\nfield_mean = 4\nfield_dim = 10\n")
    with pytest.raises(ConfigError) as err:
        c.initial_state()
    assert err.value.field == "field_dim"


configs = st.builds(
    ScenarioConfig,
    interaction_order=st.sampled_from([1, 2]),
    lambda_over_gamma=st.floats(1, 1e4),
    nbar_h=st.floats(0, 50),
    nbar_c=st.floats(0, 5),
    field_dim=st.integers(10, 200),
    t_max=st.floats(0, 20),
    dt=st.one_of(st.none(), st.floats(1e-4, 1e-2)),
    phase_space=st.sampled_from([(), ("Q",), ("W",), ("Q", "W")]),
    grid_radius=st.one_of(st.none(), st.floats(1, 20)),
)


@given(configs)
def test_serialize_roundtrip(config):
    assert parse_config(serialize_config(config)) == config
    assert from_mapping(config.to_dict()) == config


def test_t_max_zero_gives_single_row(tmp_path):
    c = parse_config(SMALL).with_(t_max=0.0, snapshots=(0.0,))
    res = run_scenario(c, tmp_path / "zero")
    data = read_thermo_csv(res.out_dir / "thermo.csv")
    assert data["t"].shape == (1,)
    assert res.status == "ok"


def test_run_artifacts_and_bitwise_rerun(tmp_path):
    c = parse_config(SMALL)
    a = run_scenario(c, tmp_path / "a")
    header = (a.out_dir / "thermo.csv").read_text().splitlines()[0]
    assert header.split(",") == list(CSV_COLUMNS)
    assert sorted(p.name for p in (a.out_dir / "snapshots").iterdir()) == [
        "Q_t0.csv", "Q_t0.json", "Q_t1.csv", "Q_t1.json", "W_t0.csv", "W_t0.json", "W_t1.csv", "W_t1.json",
    ]
    meta = json.loads((a.out_dir / "meta.json").read_text())
    assert meta["status"] == "ok" and meta["units"]["time"] == "1/Gamma_H"
    again = parse_config((a.out_dir / "meta.json").read_text())
    assert again == c
    b = run_scenario(again, tmp_path / "b")
    for rel in ("thermo.csv", "snapshots/W_t1.csv", "snapshots/Q_t1.csv"):
        assert (a.out_dir / rel).read_bytes() == (b.out_dir / rel).read_bytes()
    data = read_thermo_csv(a.out_dir / "thermo.csv")
    np.testing.assert_allclose(data["t"], [0, 0.25, 0.5, 0.75, 1.0])


def test_cli_simulate_ok(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "meta.json").exists()
    assert "small: ok" in capsys.readouterr().out


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert main(["simulate", "--config", str(write(tmp_path, "nope = 1\n"))]) == 2
    assert "nope" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_abort_exit_code(tmp_path):
    text = SMALL.replace("field_dim = 30", "field_dim = 8").replace("t_max = 1", "t_max = 4").replace("snapshots = 0, 1", "")
    cfg = write(tmp_path, text + "guard_levels = 2\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 3
    meta = json.loads((tmp_path / "out" / "meta.json").read_text())
    assert meta["status"] == "aborted" and meta["error"]["metric"] == "tail_mass"
    assert (tmp_path / "out" / "thermo.csv").exists()


def test_cli_semiclassical_json(tmp_path, capsys):
    cfg = write(tmp_path, "")
    assert main(["semiclassical", "--config", str(cfg)]) == 0
    doc = json.loads(capsys.readouterr().out)
    for key in ("qdot_h_sc", "qdot_c_sc", "p_sc", "eta_sc", "aggregates", "numeric", "max_rel_discrepancy", "params"):
        assert key in doc
    assert doc["eta_sc"] == pytest.approx(5 / 6, rel=1e-12)
    assert doc["max_rel_discrepancy"] < 1e-8
    out = tmp_path / "sc.json"
    assert main(["semiclassical", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["p_sc"] == doc["p_sc"]


def test_preset_configs():
    branches = preset_configs("fig5", fast=True)
    assert [b for b, _ in branches] == ["fock", "mixed"]
    fock, mixed = branches[0][1], branches[1][1]
    assert fock.scenario_id == "fig5_fast_fock" and fock.field_dim == 60 and fock.lambda_over_gamma == 100
    assert mixed.field_state == "poisson_mixed" and mixed.field_mean == 4.0 and mixed.atom_level == 1
    assert preset_configs("fig6")[0][1].interaction_order == 1
    with pytest.raises(ConfigError):
        preset_configs("fig9")


@pytest.mark.slow
def test_cli_reproduce_fig2_fast(tmp_path, monkeypatch):
    monkeypatch.setenv("QAMP_OUTPUT_ROOT", str(tmp_path / "root"))
    assert main(["reproduce", "fig2", "--fast", "--jobs", "2"]) == 0
    summary = json.loads((tmp_path / "root" / "fig2_fast" / "summary.json").read_text())
    for branch in ("order2", "order1"):
        fw = summary["branches"][branch]["final_window"]
        assert summary["branches"][branch]["status"] == "ok"
        assert fw["eta"] == pytest.approx(5 / 6, rel=5e-3)
    data = read_thermo_csv(tmp_path / "root" / "fig2_fast" / "order2" / "thermo.csv")
    assert list(data) == list(CSV_COLUMNS)
    assert data["t"][-1] == pytest.approx(10.0)


def test_cli_reproduce_semiclassical_table(tmp_path):
    assert main(["reproduce", "semiclassical_table", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "semiclassical_table" / "semiclassical.json").read_text())
    assert math.isclose(doc["eta_formula"], 5 / 6)
