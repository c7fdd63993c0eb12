import json
from pathlib import Path

import pytest

from config import settings
from gen import instance_generator
from main import main
from market_core import dump_market_document
from models import GenParams
from reports import parse_report, render_report


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, "--format", "json", *argv)
    return code, parse_report(out)


def test_stable_set_of_full_profile(capsys, fixture_path):
    code, report = run_json(capsys, "stable", fixture_path("example2_P.json"))
    assert code == 0
    assert report.payload["stable_set"] == [["z"], ["x", "y", "z"]]


def test_pseudo_certificate(capsys, fixture_path):
    code, report = run_json(capsys, "pseudo", "--agent", "h", fixture_path("example1.json"))
    assert code == 0
    assert report.payload["certificate"] == [["z"], ["x", "y"], ["x"], ["y"], []]


def test_subpref_breach_exits_one(capsys, fixture_path):
    code, report = run_json(
        capsys, "subpref", "--sub", fixture_path("ptilde.json"), "--agent", "h", fixture_path("example1.json")
    )
    assert code == 1
    assert report.verdicts[0].witness == {"kind": "blocking-breach", "menu": ["x", "y"], "contract": "z"}


def test_flags_after_the_verb(capsys, fixture_path):
    code, out, _ = run(capsys, "pseudo", "--agent", "h", "--format", "json", fixture_path("example1.json"))
    assert code == 0
    assert parse_report(out).command == "pseudo"


def test_not_pseudo_exits_one(capsys, fixture_path):
    code, report = run_json(capsys, "pseudo", "--agent", "h", fixture_path("xy_x.json"))
    assert code == 1
    assert report.payload["refutation"][0]["one_way"] == "xy: x -> y"


def test_guard_exit_code(capsys, fixture_path):
    code, out, err = run(capsys, "--guard-contracts", "2", "pseudo", "--agent", "h", fixture_path("example1.json"))
    assert code == 3
    assert out == ""
    assert "agent_contracts" in err


def test_invalid_document_exits_two(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "doctors": ["d1"], "hospitals": ["h"],
        "contracts": [{"id": "x", "doctor": "d1", "hospital": "h"}],
        "preferences": {"d1": [["x"]], "h": [["x"], []]},
    }))
    code, report = run_json(capsys, "validate", str(path))
    assert code == 2
    assert report.payload["violations"][0]["code"] == "missing-empty-set"
    code, _, err = run(capsys, "stable", str(path))
    assert code == 2
    assert "missing-empty-set" in err


def test_unknown_agent_exits_two(capsys, fixture_path):
    code, _, err = run(capsys, "pseudo", "--agent", "nobody", fixture_path("example1.json"))
    assert code == 2
    assert "nobody" in err


def test_corewise_table(capsys, fixture_path):
    code, report = run_json(capsys, "stable", "--corewise", fixture_path("nonbinding.json"))
    assert code == 0
    assert report.payload["corewise_stable"] == ["wz"]


def test_single_allocation(capsys, fixture_path):
    code, report = run_json(
        capsys, "stable", "--corewise", "--allocation", "x,y", fixture_path("nonbinding.json")
    )
    assert code == 1
    pairwise, corewise = report.verdicts
    assert pairwise.holds
    assert not corewise.holds
    assert corewise.witness == {"deviation": ["w", "z"]}


def test_inclusion(capsys, fixture_path):
    code, report = run_json(
        capsys, "inclusion", "--sub", fixture_path("example2_Ppp.json"), fixture_path("example2_P.json")
    )
    assert code == 0
    assert report.payload["stable_sets"] == {"sub": ["z"], "profile": ["z", "xyz"]}


def test_classify_rows(capsys, fixture_path):
    code, report = run_json(capsys, "classify", fixture_path("bilateral_not_pseudo.json"))
    assert code == 0
    row = report.payload["classification"][0]
    assert (row["substitutable"], row["pseudo"], row["bilateral"], row["completable"]) == (False, False, True, True)


def test_counterexample_writes_a_valid_market(capsys, fixture_path, tmp_path):
    output = tmp_path / "built.json"
    code, report = run_json(capsys, "counterexample", "--agent", "h", "-o", str(output), fixture_path("xy_x.json"))
    assert code == 0
    assert report.payload["stable_set"] == []
    assert report.payload["witness"]["case"] == "single-pair"
    code, report = run_json(capsys, "stable", str(output))
    assert report.payload["stable_set"] == []


def test_reference_rows(capsys):
    code, report = run_json(capsys, "counterexample", "--reference", "overlapping-chain")
    assert code == 0
    assert all(row["listed_blocks"] for row in report.payload["rows"])
    code, _, _ = run(capsys, "counterexample", "--reference", "no-such-case")
    assert code == 2


def test_claim1(capsys, fixture_path):
    code, report = run_json(capsys, "claim1", "--agent", "h", fixture_path("xy_x.json"))
    assert code == 0
    assert report.payload["inputs"]["remainder"] == "∅"


def test_choice_at_one_menu(capsys, fixture_path):
    code, report = run_json(capsys, "choice", "--agent", "h", "--offer", "x,z", fixture_path("example1.json"))
    assert code == 0
    assert report.payload["choice"]["chosen"] == ["z"]


def test_generation_is_deterministic(capsys):
    first = run(capsys, "--seed", "7", "--format", "json", "gen", "--contracts", "4")
    second = run(capsys, "--seed", "7", "--format", "json", "gen", "--contracts", "4")
    assert first == second
    assert first[0] == 0


@pytest.mark.parametrize("argv", [
    ("substitutable", "example1.json"),
    ("minimal", "--agent", "h", "example1.json"),
    ("classify", "completable_not_pseudo.json"),
])
def test_table_and_json_views_come_from_one_report(capsys, fixture_path, argv):
    args = [fixture_path(a) if a.endswith(".json") else a for a in argv]
    code, out, _ = run(capsys, "--format", "json", *args)
    report = parse_report(out)
    assert render_report(report, "json") == out
    table_code, table, _ = run(capsys, *args)
    assert table_code == code
    assert table == render_report(report, "table", color=False)


@pytest.mark.parametrize("argv, field", [
    (("--seed", "-1", "gen"), "seed"),
    (("gen", "--bias", "2"), "acceptance_bias"),
    (("gen", "--doctors", "-3"), "doctors"),
])
def test_invalid_generator_parameters_exit_two(capsys, argv, field):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert "Invalid generator parameters" in err
    assert field in err


def test_seed_42_reproduces_the_golden_document(capsys, fixture_path, tmp_path):
    target = tmp_path / "out.json"
    code, _, _ = run(
        capsys, "--seed", "42", "gen", "--doctors", "3", "--hospitals", "1", "--contracts", "3", "-o", str(target)
    )
    assert code == 0
    assert target.read_bytes() == Path(fixture_path("gen_seed42.json")).read_bytes()


FIXTURE_NAMES = sorted(p.name for p in (Path(__file__).parent.parent / settings.fixtures_dir).glob("*.json"))


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_reports_are_byte_identical_across_runs(capsys, fixture_path, name):
    path = fixture_path(name)
    agent = "h1" if name == "gen_seed42.json" else "h"
    for argv in (("stable", path), ("pseudo", "--agent", agent, path), ("classify", path)):
        first = run(capsys, "--format", "json", *argv)[:2]
        second = run(capsys, "--format", "json", *argv)[:2]
        assert first == second


@pytest.mark.parametrize("corpus_seed", range(1, 51))
def test_generated_reports_are_byte_identical_across_runs(capsys, tmp_path, corpus_seed):
    market, profile = instance_generator.random_instance(
        GenParams(seed=corpus_seed, doctors=3, hospitals=2, contracts=5)
    )
    path = tmp_path / f"seed{corpus_seed}.json"
    path.write_text(dump_market_document(market, profile), encoding="utf-8")
    for argv in (("stable", str(path)), ("pseudo", "--agent", "h1", str(path)), ("classify", str(path))):
        first = run(capsys, "--format", "json", *argv)[:2]
        second = run(capsys, "--format", "json", *argv)[:2]
        assert first == second
