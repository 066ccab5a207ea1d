import json
from dataclasses import replace

import numpy as np
import pytest

from satpower.ese import solve_ese
from satpower.game import rate_vector
from satpower.harness import (
    TRACE_HEADER,
    DemandChange,
    ScenarioError,
    read_scenario,
    run,
    scenario_from_dict,
    scenario_to_dict,
    trace_to_csv,
    with_overrides,
    write_scenario,
    write_trace,
)
from satpower.learners import LearnerKind
from satpower.scenarios import builtin_scenarios, scenario, singular_pair

ALL = sorted(builtin_scenarios())


@pytest.mark.parametrize("name", ALL)
def test_scenario_dict_round_trip(name):
    s = scenario(name)
    assert scenario_from_dict(scenario_to_dict(s)) == s


def test_file_round_trip(tmp_path):
    s = scenario("bp_demand_change")
    write_scenario(s, tmp_path / "s.json")
    assert read_scenario(tmp_path / "s.json") == s


def test_shipped_scenario_files_match_builtins():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "scenarios"
    for name, s in builtin_scenarios().items():
        assert read_scenario(root / f"{name}.json") == s
    assert read_scenario(root / "singular_pair.json") == singular_pair()


def _mutated(path_keys, value):
    d = scenario_to_dict(scenario("bp_demands"))
    node = d
    for k in path_keys[:-1]:
        node = node[k]
    node[path_keys[-1]] = value
    return d


@pytest.mark.parametrize(
    "keys,value,field",
    [
        (("game", "noise"), -1.0, "game.noise"),
        (("game", "gains"), [1.0, 1.0], "game.demands"),
        (("channel", "kind"), "rician", "channel.kind"),
        (("algorithm", "kind"), "qlearning", "algorithm.kind"),
        (("algorithm", "params", "lam"), 2.0, "algorithm.params"),
        (("horizon",), 0, "horizon"),
        (("horizon",), 1.5, "horizon"),
        (("schema_version",), 99, "schema_version"),
        (("initial_powers",), [1.0, 1.0, 50.0], "initial_powers"),
    ],
)
def test_malformed_scenarios_name_field(keys, value, field):
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(_mutated(keys, value))
    assert err.value.field == field


def test_unknown_key_rejected():
    d = scenario_to_dict(scenario("bp_demands"))
    d["game"]["colour"] = 1
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(d)
    assert err.value.field == "game.colour"


def test_bad_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"a": 1,\n  oops}')
    with pytest.raises(ScenarioError, match="line 2"):
        read_scenario(p)


def test_trace_shape_and_consistency():
    s = scenario("bp_block_fading")
    tr = run(s)
    assert tr.n_steps == s.horizon
    r = rate_vector(tr.powers, tr.gains, s.game.noise)
    np.testing.assert_allclose(tr.throughput, r, rtol=0, atol=1e-12)


def test_csv_layout():
    s = replace(scenario("bp_demands"), horizon=5)
    tr = run(s)
    lines = trace_to_csv(tr).splitlines()
    assert tuple(lines[0].split(",")) == TRACE_HEADER
    assert len(lines) == 1 + tr.n_steps * 3
    t, u, p, g, r, d, ok = lines[1].split(",")
    assert (t, u, float(p), float(g), float(d)) == ("0", "0", 1.0, 1.0, 0.1)
    assert ok in ("0", "1")


def test_converged_flag_consistent():
    tr = run(scenario("bp_demands"))
    assert tr.converged and tr.stopped_early
    assert np.max(np.abs(tr.powers[-1] - tr.powers[-2])) < tr.rho
    np.testing.assert_allclose(tr.final_powers, solve_ese(scenario("bp_demands").game).powers, atol=1e-6)


def test_fading_runs_full_horizon():
    s = scenario("mann_fast_fading")
    tr = run(replace(s, horizon=300))
    assert tr.n_steps == 300 and not tr.stopped_early


def test_demand_event_applied_at_t():
    s = replace(scenario("bp_demands"), demand_changes=(DemandChange(5, 2, 0.25),), horizon=10)
    tr = run(s)
    assert tr.demands[4, 2] == 0.3 and tr.demands[5, 2] == 0.25


def test_trace_csv_byte_identical(tmp_path):
    s = with_overrides(scenario("bm_discrete_levels"), horizon=400)
    write_trace(run(s), tmp_path / "a.csv")
    write_trace(run(s), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_seed_override_changes_fading_trace():
    s = with_overrides(scenario("mann_fast_fading"), horizon=50)
    a = trace_to_csv(run(s))
    b = trace_to_csv(run(with_overrides(s, seed=99)))
    assert a != b


def test_observer_sees_every_step():
    seen = []
    s = with_overrides(scenario("mann_fast_fading"), horizon=40)
    run(s, observer=lambda t, st: seen.append(t))
    assert seen == list(range(40))


def test_summary_is_json_serialisable():
    json.dumps(run(scenario("bp_unequal_gains")).summary())


def test_progressive_stops_only_when_demands_frozen():
    s = replace(scenario("capacity_discovery"), game=replace(scenario("capacity_discovery").game, capacity=0.9))
    tr = run(s)
    assert tr.stopped_early
    assert tr.final_demands.sum() <= 0.9 + 1e-12
    assert tr.final_state.kind is LearnerKind.PROGRESSIVE_BP
