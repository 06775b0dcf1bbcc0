import json
import math

import numpy as np
import pytest

from uavpower import coordinator, io, model
from uavpower.bench import ExperimentSpec, gen_scenario


def doc(**extra):
    d = {
        "terminals": [
            {"position": [12.5, -40.0], "min_rate": {"value": 3, "unit": "Mbps"}, "max_power": {"value": 20, "unit": "dBm"}},
            {"position": [{"value": 0.1, "unit": "km"}, 0], "min_rate": 5e5, "max_power": {"value": 50, "unit": "mW"}},
        ]
    }
    d.update(extra)
    return d


def test_unit_tags_convert_to_si():
    scn = io.scenario_from_dict(
        doc(
            total_bandwidth={"value": 20, "unit": "MHz"},
            noise_density={"value": -170, "unit": "dBm/Hz"},
            theta_max={"value": 80, "unit": "deg"},
        )
    )
    assert scn.gts[0].min_rate == 3e6
    assert scn.gts[0].max_power == pytest.approx(0.1)
    assert scn.gts[1].position == (100.0, 0.0)
    assert scn.gts[1].max_power == pytest.approx(0.05)
    assert scn.total_bandwidth == 20e6
    assert scn.noise_density == pytest.approx(1e-20)
    assert scn.theta_max == pytest.approx(math.radians(80))


def test_omitted_fields_take_defaults():
    scn = io.scenario_from_dict(doc())
    assert scn.h_min == 50.0 and scn.pathloss_exp == 2.0


@pytest.mark.parametrize(
    "bad",
    [
        [],
        {"terminals": []},
        doc(extra_field=1),
        doc(format="other/9"),
        doc(total_bandwidth={"value": 1, "unit": "dBm"}),
        doc(total_bandwidth={"value": "ten"}),
        doc(total_bandwidth={"value": 1, "unit": "MHz", "scale": 2}),
        doc(h_min=True),
        doc(pathloss_exp=1.0),
        {"terminals": [{"position": [0, 0], "min_rate": 1}]},
        {"terminals": [{"position": [0], "min_rate": 1, "max_power": 1}]},
        {"terminals": [{"position": [0, 0], "min_rate": -1, "max_power": 1}]},
        {"terminals": [{"position": [0, 0], "min_rate": 1, "max_power": {"value": 1e400, "unit": "W"}}]},
    ],
)
def test_malformed_documents_raise_scenario_error(bad):
    with pytest.raises(io.ScenarioError):
        io.scenario_from_dict(bad)


def test_round_trip_through_dict():
    scn = gen_scenario(ExperimentSpec(K=7), 5, rate=2e6)
    for unit in ("dBm", "W"):
        back = io.scenario_from_dict(json.loads(io.dumps(io.scenario_to_dict(scn, unit))))
        assert back.K == scn.K
        np.testing.assert_allclose(back.positions, scn.positions, rtol=0, atol=0)
        np.testing.assert_allclose(back.caps, scn.caps, rtol=1e-12)
        assert back.noise_density == pytest.approx(scn.noise_density, rel=1e-12)
        assert back.theta_max == scn.theta_max


def test_load_scenario_errors(tmp_path):
    with pytest.raises(io.ScenarioError, match="cannot read"):
        io.load_scenario(str(tmp_path / "missing.json"))
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(io.ScenarioError, match="invalid JSON"):
        io.load_scenario(str(p))


def test_solution_json_is_deterministic_and_finite():
    scn = gen_scenario(ExperimentSpec(K=6), 1, rate=1e6)
    a = io.dumps(io.solution_to_dict(coordinator.solve(scn)))
    b = io.dumps(io.solution_to_dict(coordinator.solve(scn)))
    assert a == b and a.endswith("\n")
    d = json.loads(a)
    assert d["status"] == "converged"
    assert d["sum_power_w"] == pytest.approx(sum(d["powers_w"]), rel=1e-12)
    assert d["sum_power_dbm"] == pytest.approx(model.watt_to_dbm(d["sum_power_w"]))
    assert [t["block"] for t in d["trace"][:3]] == ["altbeam", "location", "bandwidth"]


def test_infeasible_solution_serialises_nulls():
    gts = tuple(model.GroundTerminal((x, 0.0), 5e7, 1e-9) for x in (-200.0, 200.0))
    d = io.solution_to_dict(coordinator.solve(model.Scenario(gts)))
    assert d["status"] == "infeasible"
    json.loads(io.dumps(d))  # no NaN or Infinity tokens
