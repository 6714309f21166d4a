import json

import pytest

import config
from channel.scenario import scenario_from_dict, with_axis_value
from experiments.cli import main, mpmath_reference
from experiments.presets import figure_presets, get_preset, preset_names, reference_scenario
from experiments.runner import (
    ExperimentSpec,
    evaluate_engine,
    experiment_from_dict,
    load_experiment,
    run,
    summarize,
)
from save.result_store import ResultStore
from simulation.montecarlo import McConfig
from specfun.meijer import MeijerGSpec
from utils.errors import ValidationError
from utils.math_utils import db_to_linear


def test_eight_presets():
    assert preset_names() == [f"fig{k}" for k in range(2, 10)]
    for spec in figure_presets()[:4]:
        assert spec.axis == "omega_sr_db" and "montecarlo" in spec.engines
        assert spec.grid == config.OMEGA_SR_GRID_DB
    for spec in figure_presets()[4:]:
        assert spec.axis == "omega_rd_db" and "asymptotic" in spec.engines
        assert spec.grid == config.OMEGA_RD_GRID_DB


def test_fig2_parameters():
    spec = get_preset("fig2")
    scenario = spec.scenario
    assert (scenario.rf_d.n_antennas, scenario.rf_d.eta, scenario.rf_d.m) == (3, 3.0, 2)
    assert (scenario.fso.a, scenario.fso.b) == config.WEAK_TURBULENCE
    assert scenario.rf_d.alpha == 0.5
    assert scenario.rf_d.omega == pytest.approx(db_to_linear(5.0))
    assert scenario.rf_e.omega == pytest.approx(1.0)
    variants = dict(spec.variant_scenarios())
    assert set(variants) == {"r1_xi1.1", "r2_xi1.1", "r1_xi0.8", "r2_xi0.8"}
    assert variants["r2_xi0.8"].fso.r == 2 and variants["r2_xi0.8"].fso.xi == 0.8


def test_fig6_parameters():
    spec = get_preset("fig6")
    scenario = spec.scenario
    assert scenario.rf_d.n_antennas == 1 and scenario.rf_d.eta == 3.0
    assert scenario.fso.r == 1 and scenario.fso.xi == 1.1
    assert scenario.rf_e.omega == pytest.approx(db_to_linear(3.0))
    assert scenario.varphi == 1.0
    assert [label for label, _ in spec.variants] == ["m1", "m2", "m3"]
    assert [s.rf_e.m for _, s in spec.variant_scenarios()] == [1, 2, 3]


def test_fig5_and_fig9_turbulence_variants():
    fig5 = dict(get_preset("fig5").variant_scenarios())
    assert (fig5["nd1_strong"].fso.a, fig5["nd1_strong"].fso.b) == config.STRONG_TURBULENCE
    fig9 = dict(get_preset("fig9").variant_scenarios())
    assert fig9["r2_weak"].fso.r == 2 and fig9["r2_weak"].fso.xi == 1.1


def test_unknown_preset():
    with pytest.raises(ValidationError):
        get_preset("fig10")


@pytest.mark.parametrize("changes", [
    {"grid": ()},
    {"engines": ()},
    {"engines": ("analytic", "guesswork")},
    {"axis": "temperature"},
    {"variants": (("a", {"nd": 1}), ("a", {"nd": 2}))},
    {"variants": (("a", {"colour": 1}),)},
    {"engines": ("analytic", "asymptotic")},
    {"engines": ("asymptotic",), "axis": "omega_sr_db", "grid": (50.0,)},
])
def test_spec_validation(changes):
    fields = {"name": "demo", "scenario": reference_scenario(), "axis": "rs", "grid": (0.1,)}
    with pytest.raises(ValidationError):
        ExperimentSpec(**{**fields, **changes})


def test_with_mc_ignores_unset_flags():
    spec = get_preset("fig3")
    assert spec.with_mc(master_seed=None) is spec
    assert spec.with_mc(master_seed=5, n_samples=2000).mc == McConfig(n_samples=2000, master_seed=5)


def _experiment(scenario_dict, **changes):
    return {"name": "demo", "scenario": scenario_dict, "axis": "rs", "grid": [0.01, 0.1],
            "engines": ["analytic"], **changes}


def test_experiment_from_dict(scenario_dict, tmp_path):
    spec = experiment_from_dict(_experiment(scenario_dict, variants={"pair": {"ab": [2.064, 1.342]}}))
    assert spec.grid == (0.01, 0.1)
    assert spec.variants == (("pair", {"ab": (2.064, 1.342)}),)
    (tmp_path / "scenario.json").write_text(json.dumps(scenario_dict), encoding="utf-8")
    from_path = experiment_from_dict(_experiment("scenario.json"), base_dir=str(tmp_path))
    assert from_path.scenario == scenario_from_dict(scenario_dict)
    with pytest.raises(ValidationError):
        experiment_from_dict(_experiment(scenario_dict, colour="blue"))
    with pytest.raises(ValidationError):
        experiment_from_dict({"scenario": scenario_dict})
    with pytest.raises(ValidationError):
        load_experiment(tmp_path / "missing.json")


def test_run_is_independent_of_worker_count(scenario_dict, tmp_path):
    spec = experiment_from_dict(_experiment(scenario_dict, variants={"nd1": {"nd": 1}, "nd3": {"nd": 3}}))
    path_one, rows = run(spec, out=str(tmp_path / "one.csv"), n_workers=1)
    path_many, _ = run(spec, out=str(tmp_path / "many.csv"), n_workers=3)
    with open(path_one, "rb") as one, open(path_many, "rb") as many:
        assert one.read() == many.read()
    assert [(row["variant"], row["axis_value"]) for row in rows] == [
        ("nd1", 0.01), ("nd1", 0.1), ("nd3", 0.01), ("nd3", 0.1)]
    assert all(row["status"] == "ok" and row["series_terms"] > 0 for row in rows)
    assert "wall_time_ms" not in rows[0]
    assert rows[1]["sop"] >= rows[0]["sop"]


def test_run_records_failures(scenario_dict, tmp_path):
    scenario = scenario_from_dict({**scenario_dict, "rs_nats": 5.0})
    spec = ExperimentSpec("guard", scenario, "omega_rd_db", (0.0,), engines=("asymptotic",))
    path, rows = run(spec, out=str(tmp_path / "guard.csv"), timing=True)
    assert rows[0]["status"] == "error:3:OutsideAsymptoticRegimeError"
    assert rows[0]["wall_time_ms"] >= 0
    stored = ResultStore(path).read()
    assert stored[0]["sop"] == ""
    assert "no successful rows" in summarize(spec, rows)[1]


def test_asymptotic_engine_refuses_an_independent_omega_sr():
    scenario = with_axis_value(reference_scenario(), "omega_sr_db", 50.0)
    with pytest.raises(ValidationError):
        evaluate_engine("asymptotic", scenario)
    assert evaluate_engine("analytic", scenario)["sop"] > 0.0


def test_run_reports_power_laws_past_unity(tmp_path):
    spec = get_preset("fig8")
    low = ExperimentSpec("fig8_low", spec.scenario, "omega_rd_db", (0.0, 40.0), engines=("asymptotic",),
                         variants=(("xi0.8", {"xi": 0.8}),))
    _, rows = run(spec=low, out=str(tmp_path / "low.csv"))
    assert rows[0]["status"] == "error:3:OutsideAsymptoticRegimeError"
    assert rows[1]["status"] == "ok" and 0.0 <= rows[1]["sop"] <= 1.0


def test_summary_reports_slope(scenario_dict):
    spec = ExperimentSpec("slope", scenario_from_dict(scenario_dict), "omega_rd_db", (50.0, 60.0),
                          engines=("asymptotic",))
    rows = [
        {"variant": "base", "engine": "asymptotic", "axis_value": 50.0, "sop": 1e-5, "status": "ok"},
        {"variant": "base", "engine": "asymptotic", "axis_value": 60.0, "sop": 1e-6, "status": "ok"},
    ]
    assert "slope 1.000" in summarize(spec, rows)[1]


def test_cli_run(scenario_dict, tmp_path, capsys):
    experiment = tmp_path / "demo.json"
    experiment.write_text(json.dumps(_experiment(scenario_dict)), encoding="utf-8")
    out = tmp_path / "demo.csv"
    assert main(["run", str(experiment), "--out", str(out)]) == config.EXIT_OK
    assert f"wrote {out}" in capsys.readouterr().out
    assert len(ResultStore(out).read()) == 2


def test_cli_errors(tmp_path, capsys):
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    assert main(["run", str(broken)]) == config.EXIT_VALIDATION
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["preset", "fig10"])


def test_cli_oracle(scenario_dict, tmp_path, capsys):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({**scenario_dict, "rs_nats": 0.1}), encoding="utf-8")
    assert main(["oracle", "h11", str(path)]) == config.EXIT_OK
    assert capsys.readouterr().out.startswith("h11 ")
    assert main(["oracle", "G1", str(path), "--args", "1", "2"]) == config.EXIT_OK
    assert main(["oracle", "G1", str(path)]) == config.EXIT_VALIDATION


def test_cli_specfun(tmp_path, capsys):
    description = {"m": 2, "n": 0, "a_params": [], "b_params": [0.9, 0.2], "argument": 1.5}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(description), encoding="utf-8")
    assert main(["specfun", "eval", str(path), "--reference"]) == config.EXIT_OK
    output = capsys.readouterr().out
    assert output.startswith("G = ") and "mpmath" in output
    value = float(output.split()[2])
    assert value == pytest.approx(mpmath_reference(MeijerGSpec.from_dict(description)), rel=1e-9)
