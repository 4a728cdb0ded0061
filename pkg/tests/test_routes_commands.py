import importlib
import json

import pytest
from typer.testing import CliRunner

import main
from main import app
from utils.loaders import fixture_path
from utils.settings import FIXTURES_DIR, get_settings

runner = CliRunner()


def _fixture(kind, name) -> str:
    return str(fixture_path(kind, name, FIXTURES_DIR))


@pytest.mark.parametrize(
    "args, exit_code",
    [
        pytest.param(["toric", _fixture("fans", "p2")], 0, id="toric-ok"),
        pytest.param(["resolution", _fixture("strata", "a2")], 0, id="resolution-ok"),
        pytest.param(["arc", _fixture("strata", "a1_blown"), "--dim", "2"], 0, id="arc-ok"),
        pytest.param(["toric", "/nowhere/fan.json"], 2, id="missing-file"),
        pytest.param(["toric", _fixture("fans", "not_q_gorenstein")], 3, id="not-q-gorenstein"),
        pytest.param(["--box-cap", "1", "toric", _fixture("fans", "a1_cone")], 4, id="cap-exceeded"),
        pytest.param(["check", "--checks", "nope"], 2, id="unknown-check"),
    ],
)
def test_exit_codes(args, exit_code):

    # Act
    result = runner.invoke(app, args)

    # Assert
    assert result.exit_code == exit_code, result.output


def test_invalid_resolution_data_exits_2(write_json):

    # Arrange
    path = write_json("bad.json", {"dim": 1, "divisors": [{"name": "D", "a": -1}], "strata": [{"J": [], "E": [[1, 1, 1]]}]})

    # Act
    result = runner.invoke(app, ["resolution", str(path)])

    # Assert
    assert result.exit_code == 2
    assert "LogTerminalViolation" in result.stderr


def test_malformed_json_exits_2(tmp_path):

    # Arrange
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")

    # Act
    result = runner.invoke(app, ["toric", str(path)])

    # Assert
    assert result.exit_code == 2
    assert "not valid JSON" in result.stderr


def test_json_output_of_toric_command():
    """Happy path: --output json prints the report as one JSON document."""

    # Act
    result = runner.invoke(app, ["--output", "json", "toric", _fixture("fans", "p112")])

    # Assert
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    entries = {entry["name"]: entry for entry in report["entries"]}
    assert report["title"] == "toric p112"
    assert entries["e_st"]["payload"]["e_st"] == "4/1"
    assert entries["duality"]["status"] == "pass"


def test_latex_output_of_resolution_command():

    # Act
    result = runner.invoke(app, ["--output", "latex", "resolution", _fixture("strata", "a2")])

    # Assert
    assert result.exit_code == 0
    assert result.stdout.startswith("\\begin{itemize}")
    assert "\\frac{5}{3}" in result.stdout
    assert "e\\_st" in result.stdout


def test_text_output_shows_table():

    # Act
    result = runner.invoke(app, ["resolution", _fixture("strata", "quadric_cone_d4")])

    # Assert
    assert result.exit_code == 0
    assert "resolution quadric_cone_d4" in result.stdout
    assert "16/3" in result.stdout


def test_check_exits_1_on_failure(tmp_path):

    # Arrange
    for folder in ("fans", "strata", "refinements"):
        (tmp_path / folder).mkdir()
    (tmp_path / "strata" / "p2.json").write_text(
        json.dumps({"dim": 2, "strata": [{"J": [], "E": [[2, 2, 1], [1, 1, 1], [0, 0, 1]]}], "expect": {"e_st": "7"}}),
        encoding="utf-8",
    )

    # Act
    result = runner.invoke(app, ["--output", "json", "check", "--checks", "euler,crepant", "--fixtures", str(tmp_path)])

    # Assert
    assert result.exit_code == 1
    statuses = {entry["name"]: entry["status"] for entry in json.loads(result.stdout)["entries"]}
    assert statuses == {"euler": "fail", "crepant": "pass"}


def test_check_passes_on_corpus_subset():

    # Act
    result = runner.invoke(app, ["--output", "json", "check", "--checks", "fano,gorenstein"])

    # Assert
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert [entry["name"] for entry in report["entries"]] == ["fano", "gorenstein"]
    assert all(entry["status"] == "pass" for entry in report["entries"])


def test_settings_box_cap_from_environment(monkeypatch):
    """Edge case: the environment sets the default cap, which the flag still overrides."""

    # Arrange
    monkeypatch.setenv("STRINGY_BOX_CAP", "1")
    get_settings.cache_clear()
    reloaded = importlib.reload(main)

    # Act
    capped = runner.invoke(reloaded.app, ["toric", _fixture("fans", "a1_cone")])
    overridden = runner.invoke(reloaded.app, ["--box-cap", "5", "toric", _fixture("fans", "a1_cone")])

    # Assert
    assert capped.exit_code == 4
    assert overridden.exit_code == 0

    monkeypatch.delenv("STRINGY_BOX_CAP")
    get_settings.cache_clear()
    importlib.reload(main)


def test_no_arguments_shows_help():

    # Act
    result = runner.invoke(app, [])

    # Assert
    assert "toric" in result.output
    assert "resolution" in result.output
