import json

import pytest

from controllers import stringy_controller as ctrl
from controllers.stringy_controller import (
    CHECK_NAMES,
    Command,
    Corpus,
    Report,
    ReportEntry,
    Status,
    build_config,
    run,
)
from stringy.errors import InvalidInput, InvalidResolutionData, NotQGorenstein, PoleError
from utils.loaders import fixture_path
from utils.settings import FIXTURES_DIR


def _entries(report: Report) -> dict[str, ReportEntry]:
    return {entry.name: entry for entry in report.entries}


def _config(command, kind=None, name=None, **values):
    paths = [fixture_path(kind, name, FIXTURES_DIR)] if kind else []
    return build_config(command=command, paths=paths, **values)


def _corpus(tmp_path, strata=None, fans=None):
    for folder in ("fans", "strata", "refinements"):
        (tmp_path / folder).mkdir()
    for name, payload in (strata or {}).items():
        (tmp_path / "strata" / f"{name}.json").write_text(json.dumps(payload), encoding="utf-8")
    for name, payload in (fans or {}).items():
        (tmp_path / "fans" / f"{name}.json").write_text(json.dumps(payload), encoding="utf-8")
    return tmp_path


P2_STRATA = {
    "dim": 2,
    "projective": True,
    "strata": [{"J": [], "E": [[2, 2, 1], [1, 1, 1], [0, 0, 1]]}],
}


# ---------------------------------------------------------------------------
# configuration


def test_build_config_defaults():

    # Act
    config = build_config(command="check")

    # Assert
    assert config.command == Command.CHECK
    assert config.checks == list(CHECK_NAMES)
    assert config.box_cap == 10_000_000
    assert config.fixtures_dir == FIXTURES_DIR


@pytest.mark.parametrize(
    "values, message",
    [
        pytest.param({"command": "toric", "paths": ["/nowhere/fan.json"]}, "Input file not found", id="missing-file"),
        pytest.param({"command": "check", "checks": ["nope"]}, "unknown checks", id="unknown-check"),
        pytest.param({"command": "check", "box_cap": 0}, "greater than 0", id="non-positive-cap"),
        pytest.param({"command": "draw"}, "Input should be", id="unknown-command"),
    ],
)
def test_build_config_rejects_bad_values(values, message):

    # Act / Assert
    with pytest.raises(InvalidInput) as err:
        build_config(**values)
    assert message in err.value.detail


def test_report_failed_flag():

    # Arrange
    report = Report(title="t")
    report.add("a", Status.PASS)
    report.add("b", Status.REPORTED, value=1)

    # Act / Assert
    assert not report.failed
    report.add("c", Status.FAIL)
    assert report.failed


# ---------------------------------------------------------------------------
# commands


def test_cmd_toric_projective_plane():
    """Happy path: P^2 reports its E-polynomial, e_st = 3 and a passing duality."""

    # Act
    report = run(_config("toric", "fans", "p2"))

    # Assert
    entries = _entries(report)
    assert entries["classification"].payload == {"q_gorenstein": True, "gorenstein": True, "root_index": 1}
    assert entries["E_st"].payload["E_st"] == {"N": 1, "num": [[0, 0, 0, 1], [0, 0, 1, 1], [0, 0, 2, 1]], "den": []}
    assert entries["e_st"].payload["e_st"] == "3/1"
    assert entries["hodge"].payload["rows"] == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert entries["duality"].status == Status.PASS
    assert entries["shed_volume"].status == Status.PASS
    assert entries["shed_volume"].payload["volume"] == 3
    assert not report.failed


def test_cmd_toric_affine_cone_skips_duality():

    # Act
    entries = _entries(run(_config("toric", "fans", "a1_cone")))

    # Assert
    assert entries["duality"].status == Status.SKIPPED
    assert entries["hodge"].payload["exists"] is True


def test_cmd_toric_not_q_gorenstein():
    with pytest.raises(NotQGorenstein):
        run(_config("toric", "fans", "not_q_gorenstein"))


def test_cmd_resolution_a2():

    # Act
    report = run(_config("resolution", "strata", "a2"))

    # Assert
    entries = _entries(report)
    assert entries["classification"].payload["classification"] == "canonical-gorenstein"
    assert entries["e_st"].payload["e_st"] == "5/3"
    assert entries["hodge"].payload["exists"] is False
    assert entries["E_st"].payload["E_st"]["den"] == [[3, 1]]
    assert entries["duality"].status == Status.SKIPPED
    assert entries["closed_form"].status == Status.PASS
    assert entries["denominator"].payload == {"denominator": 3, "threefold_expected": True, "factorial_integral": True}


def test_cmd_resolution_rejects_invalid_data(write_json):

    # Arrange
    path = write_json("bad.json", {"dim": 1, "divisors": [{"name": "D", "a": -1}], "strata": [{"J": [], "E": [[1, 1, 1]]}]})

    # Act / Assert
    with pytest.raises(InvalidResolutionData):
        run(build_config(command="resolution", paths=[path]))


def test_cmd_arc_reports_identity():

    # Act
    report = run(_config("arc", "strata", "a1_blown"))

    # Assert
    entries = _entries(report)
    assert entries["arc-identity"].status == Status.PASS
    assert entries["lognorm"].payload["value"] == "0/1"
    assert entries["integral"].payload["integral"]["M"] == 1
    assert "whole_space_volume" not in entries


def test_cmd_arc_whole_space_volume_without_divisors():

    # Act
    entries = _entries(run(_config("arc", "strata", "p2", dim=3)))

    # Assert
    assert entries["whole_space_volume"].payload["volume"]["num"] == [[0, 2, 1, 1], [0, 4, 1, 1], [0, 6, 1, 1]]
    assert entries["lognorm"].payload["value"] == "2/1"


# ---------------------------------------------------------------------------
# check suite


@pytest.mark.parametrize("name", [pytest.param(name, id=name) for name in CHECK_NAMES])
def test_check_suite_passes_on_fixture_corpus(name):
    """Happy path: every check passes on the shipped corpus."""

    # Act
    report = run(build_config(command="check", checks=[name]))

    # Assert
    (entry,) = report.entries
    assert entry.status == Status.PASS, entry.payload
    assert entry.payload["cases"] > 0
    assert entry.payload["failures"] == []


def test_fixture_corpus_sizes():

    # Arrange
    corpus = Corpus(FIXTURES_DIR, 10_000_000)

    # Act
    q_gorenstein = list(corpus.q_gorenstein_fans())
    crepant = [name for name, (_, _, expect) in corpus.refinements.items() if expect.get("crepant")]

    # Assert
    assert len(q_gorenstein) >= 20
    assert len(crepant) >= 5
    assert isinstance(corpus.toric_results["not_q_gorenstein"], NotQGorenstein)


def test_virasoro_suite_reports_non_calabi_yau():

    # Act
    (entry,) = run(build_config(command="check", checks=["virasoro"])).entries

    # Assert
    assert entry.payload["reported"]["p2"] == {"lhs": "2/1", "rhs": "1/2"}


def test_check_fails_on_wrong_expectation(tmp_path):

    # Arrange
    root = _corpus(tmp_path, strata={"p2": {**P2_STRATA, "expect": {"e_st": "4"}}})

    # Act
    report = run(build_config(command="check", checks=["euler"], fixtures_dir=root))

    # Assert
    (entry,) = report.entries
    assert entry.status == Status.FAIL
    assert entry.payload["failures"] == ["strata/p2"]
    assert report.failed


def test_check_counts_raised_errors_as_failures(tmp_path, monkeypatch):
    """Edge case: a StringyError inside a case fails that case instead of aborting the run."""

    # Arrange
    root = _corpus(tmp_path, strata={"p2": P2_STRATA})

    def boom(result):
        raise PoleError("pole at u = v = 0")

    monkeypatch.setattr("controllers.stringy_controller.check_duality", boom)

    # Act
    (entry,) = run(build_config(command="check", checks=["duality"], fixtures_dir=root)).entries

    # Assert
    assert entry.status == Status.FAIL
    assert entry.payload["failures"] == ["strata/p2"]


def test_check_with_no_cases_is_skipped(tmp_path):

    # Arrange
    root = _corpus(tmp_path)

    # Act
    (entry,) = run(build_config(command="check", checks=["crepant"], fixtures_dir=root)).entries

    # Assert
    assert entry.status == Status.SKIPPED
    assert entry.payload["cases"] == 0


def test_check_missing_corpus_folder(tmp_path):
    with pytest.raises(FileNotFoundError):
        run(build_config(command="check", checks=["euler"], fixtures_dir=tmp_path))


def test_corpus_results_are_computed_once(tmp_path, monkeypatch):

    # Arrange
    root = _corpus(tmp_path, strata={"p2": P2_STRATA})
    calls = []
    real = ctrl.stringy_e

    def counting(data):
        calls.append(data.name)
        return real(data)

    monkeypatch.setattr("controllers.stringy_controller.stringy_e", counting)

    # Act
    run(build_config(command="check", checks=["duality", "euler", "crepant"], fixtures_dir=root))

    # Assert
    assert calls == ["p2"]
