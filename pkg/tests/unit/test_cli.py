import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from hybrid_contraction.catalog import BuiltinSystem
from hybrid_contraction.catalog import builtin_system
from hybrid_contraction.catalog import get_builtin_systems
from hybrid_contraction.cli import EXIT_CONFIGURATION
from hybrid_contraction.cli import EXIT_EXPECTATION
from hybrid_contraction.cli import EXIT_OK
from hybrid_contraction.cli import parse_parameters
from hybrid_contraction.cli import parse_point
from hybrid_contraction.cli import parse_state
from hybrid_contraction.cli import run
from hybrid_contraction.lib import ConfigurationError

_SMALL = ["--state-samples", "16", "--guard-samples", "4"]


def _read(path: Path) -> Any:  # noqa: ANN401 # arbitrary JSON document
    return json.loads(path.read_text(encoding="utf-8"))


def test_simulate_writes_trajectory_and_events(tmp_path: Path):
    exit_code = run(["simulate", "--system", "mech-1dof", "--t-end", "5", "--out-dir", str(tmp_path)])

    assert exit_code == EXIT_OK
    assert (tmp_path / "trajectory.csv").exists()
    events = _read(tmp_path / "events.json")
    assert events["config"]["system"] == "mech-1dof"
    assert events["status"] == "completed"
    assert [(event["source"], event["target"]) for event in events["events"]] == [("free", "contact")]


def test_zero_horizon_writes_only_the_initial_row(tmp_path: Path):
    exit_code = run(["simulate", "--system", "traffic", "--t-end", "0", "--out-dir", str(tmp_path)])

    assert exit_code == EXIT_OK
    lines = (tmp_path / "trajectory.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2  # noqa: PLR2004 # header and the initial state


def test_degenerate_window_falls_back_to_a_fixed_horizon(tmp_path: Path):
    exit_code = run(["simulate", "--system", "example1", "--out-dir", str(tmp_path)])

    assert exit_code == EXIT_OK
    events = _read(tmp_path / "events.json")
    assert events["config"]["options"]["t_end"] == pytest.approx(2.0)
    assert events["final_state"]["mode"] == "L"


def test_parameters_may_be_given_as_flags(tmp_path: Path):
    exit_code = run(["simulate", "--system", "periodic-kick", "--out-dir", str(tmp_path), "--gain", "0.5"])

    assert exit_code == EXIT_OK
    assert _read(tmp_path / "events.json")["config"]["parameters"]["gain"] == pytest.approx(0.5)


def test_missing_definition_file_is_a_configuration_error(tmp_path: Path):
    exit_code = run(["simulate", "--config", str(tmp_path / "absent.json"), "--out-dir", str(tmp_path)])

    assert exit_code == EXIT_CONFIGURATION


def test_definition_file_needs_an_initial_state(tmp_path: Path):
    definition = {
        "name": "decay",
        "modes": [{"id": "a", "dim": 1, "field": ["-x1"], "region": {"lower": [0.0], "upper": [1.0]}}],
    }
    path = tmp_path / "decay.json"
    _ = path.write_text(json.dumps(definition), encoding="utf-8")

    assert run(["simulate", "--config", str(path), "--out-dir", str(tmp_path)]) == EXIT_CONFIGURATION
    assert run(["simulate", "--config", str(path), "--init", "a:1", "--out-dir", str(tmp_path)]) == EXIT_OK


@pytest.mark.parametrize(
    "arguments",
    [
        pytest.param(["--param", "kappa"], id="assignment-without-value"),
        pytest.param(["--kappa", "stiff"], id="non-numeric-flag"),
        pytest.param(["--param", "zeta=1"], id="unknown-parameter"),
    ],
)
def test_bad_parameters_are_configuration_errors(tmp_path: Path, arguments: list[str]):
    exit_code = run(["simulate", "--system", "mech-1dof", "--out-dir", str(tmp_path), *arguments])

    assert exit_code == EXIT_CONFIGURATION


def test_distance_through_the_moving_guard(tmp_path: Path):
    exit_code = run(
        [
            "distance",
            "--system",
            "toy-moving-guard",
            "--a",
            "1:0.8",
            "--b",
            "2:0.8",
            "--time",
            "0.3",
            "--dump-path",
            "--out-dir",
            str(tmp_path),
        ]
    )

    assert exit_code == EXIT_OK
    assert _read(tmp_path / "distance.json")["estimate"]["value"] == pytest.approx(1.0, abs=1e-4)
    assert len(_read(tmp_path / "distance_path.json")["path"]["jumps"]) == 1


def test_traffic_certifies_as_contractive(tmp_path: Path):
    exit_code = run(["certify", "--system", "traffic", "--expect-contractive", "--out-dir", str(tmp_path), *_SMALL])

    assert exit_code == EXIT_OK
    assert _read(tmp_path / "certificate.json")["verdict"] == "contractive_nonexpansive_resets"
    assert (tmp_path / "certificate.csv").exists()


def test_expanding_kicks_fail_the_expectation(tmp_path: Path):
    exit_code = run(
        ["certify", "--system", "periodic-kick", "--expect-contractive", "--out-dir", str(tmp_path), *_SMALL]
    )

    assert exit_code == EXIT_EXPECTATION


def test_saltation_at_a_named_point(tmp_path: Path):
    exit_code = run(["saltation", "--system", "traffic", "--at", "x1=80,x2=xbar", "--out-dir", str(tmp_path)])

    assert exit_code == EXIT_OK
    records = _read(tmp_path / "saltation.json")["records"]
    assert [(record["source"], record["target"]) for record in records] == [("nSnC", "nSC")]
    assert records[0]["induced_norm"] == pytest.approx(1.0)


def test_saltation_needs_a_guard_through_the_point(tmp_path: Path):
    exit_code = run(["saltation", "--system", "example1", "--at", "x1=2,x2=1", "--out-dir", str(tmp_path)])

    assert exit_code == EXIT_CONFIGURATION


def test_validate_builtin(tmp_path: Path):
    exit_code = run(["validate", "--system", "example1", "--out-dir", str(tmp_path), *_SMALL])

    assert exit_code == EXIT_OK
    assert _read(tmp_path / "validation.json")["diagnostics"] == []


def test_experiment_with_an_explicit_pair(tmp_path: Path):
    exit_code = run(
        [
            "experiment",
            "--system",
            "example1",
            "--a",
            "L:0.5,1.0",
            "--b",
            "L:0.3,0.4",
            "--time-samples",
            "3",
            "--depth",
            "0",
            "--out-dir",
            str(tmp_path),
            *_SMALL,
        ]
    )

    assert exit_code == EXIT_OK
    assert _read(tmp_path / "experiment.json")["report"]["max_ratio"] == pytest.approx(1.0, abs=1e-6)
    assert (tmp_path / "experiment.csv").exists()


def test_parse_parameters_merges_both_forms():
    assert parse_parameters(["a=1"], ["--b", "2", "--c=3"]) == {"a": 1.0, "b": 2.0, "c": 3.0}


def test_parse_parameters_needs_a_value():
    with pytest.raises(ConfigurationError, match="is missing a value"):
        _ = parse_parameters([], ["--b"])


def test_points_may_name_parameters():
    np.testing.assert_allclose(parse_point("x1=80,x2=xbar", {"xbar": 65.0}), [80.0, 65.0])


def test_points_must_set_every_coordinate():
    with pytest.raises(ConfigurationError, match="leaves coordinates"):
        _ = parse_point("x2=1", {})


def test_bare_mode_is_a_zero_dimensional_state():
    state = parse_state("contact:", 0.5, {})

    assert state.mode == "contact"
    assert state.x.shape == (0,)
    assert state.t == pytest.approx(0.5)


def test_unknown_builtin_is_rejected():
    with pytest.raises(ConfigurationError, match="Unknown built-in system 'nope'"):
        _ = builtin_system("nope")


@pytest.mark.parametrize("entry", get_builtin_systems(), ids=lambda entry: entry.name)
def test_every_builtin_starts_inside_its_initial_mode(entry: BuiltinSystem):
    system = entry.build()
    state = entry.initial_state()

    assert system.mode(state.mode).contains(state.t, state.x, tolerance=1e-9)
