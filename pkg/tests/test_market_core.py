import json

import pytest

from errors import MarketValidationError, UnknownAgentError, UsageError
from market_core import (
    agent_scope,
    choice,
    choice_table,
    collect_violations,
    dump_market_document,
    feasible_sets,
    is_feasible_for,
    market_from_dict,
    parse_market_document,
    restrict,
)
from models import PreferenceRelation, ViolationCode, format_set


def _document(**overrides):
    document = {
        "doctors": ["d1", "d2"],
        "hospitals": ["h"],
        "contracts": [
            {"id": "x", "doctor": "d1", "hospital": "h"},
            {"id": "y", "doctor": "d2", "hospital": "h"},
        ],
        "preferences": {"d1": [["x"], []], "d2": [["y"], []], "h": [["x", "y"], ["x"], []]},
    }
    document.update(overrides)
    return document


def _codes(document):
    return {v.code for v in collect_violations(parse_market_document(json.dumps(document)))}


def test_valid_document_has_no_violations():
    assert _codes(_document()) == set()


def test_every_rule_is_reported():
    document = _document(
        doctors=["d1", "d1"],
        contracts=[
            {"id": "x", "doctor": "d1", "hospital": "h"},
            {"id": "x", "doctor": "d2", "hospital": "h"},
            {"id": "q", "doctor": "d9", "hospital": "h"},
        ],
        preferences={"d1": [["x"], [], ["x"]], "h": [["x", "x"], ["w"], ["x"]]},
    )
    codes = _codes(document)
    assert ViolationCode.DUPLICATE_AGENT in codes
    assert ViolationCode.DUPLICATE_ID in codes
    assert ViolationCode.UNKNOWN_AGENT in codes
    assert ViolationCode.UNKNOWN_CONTRACT in codes
    assert ViolationCode.DUPLICATE_MEMBER in codes
    assert ViolationCode.EMPTY_SET_NOT_LAST in codes
    assert ViolationCode.MISSING_EMPTY_SET in codes
    assert ViolationCode.DUPLICATE_ENTRY in codes


def test_missing_preference_and_foreign_contract():
    document = _document(preferences={"d1": [["y"], []], "h": [[]]})
    codes = _codes(document)
    assert codes == {ViolationCode.FOREIGN_CONTRACT, ViolationCode.MISSING_PREFERENCE}


def test_infeasible_entry_with_two_contracts_of_one_doctor():
    document = _document(
        contracts=[
            {"id": "x", "doctor": "d1", "hospital": "h"},
            {"id": "z", "doctor": "d1", "hospital": "h"},
            {"id": "y", "doctor": "d2", "hospital": "h"},
        ],
        preferences={"d1": [["x"], []], "d2": [["y"], []], "h": [["x", "z"], []]},
    )
    assert _codes(document) == {ViolationCode.INFEASIBLE_ENTRY}


def test_market_from_dict_raises_with_all_violations():
    with pytest.raises(MarketValidationError) as err:
        market_from_dict(_document(preferences={"h": [["x"]]}))
    assert len(err.value.violations) == 3
    assert err.value.exit_code == 2


def test_malformed_json_is_a_usage_error():
    with pytest.raises(UsageError):
        parse_market_document("{not json")


def test_extra_keys_are_ignored():
    market, _ = market_from_dict(_document(note="anything"))
    assert market.contract_ids == ("x", "y")


def test_dump_is_canonical():
    market, profile = market_from_dict(_document(preferences={
        "d1": [["x"], []], "d2": [["y"], []], "h": [["y", "x"], ["x"], []]
    }))
    text = dump_market_document(market, profile)
    assert json.loads(text)["preferences"]["h"] == [["x", "y"], ["x"], []]
    again = market_from_dict(json.loads(text))
    assert again == (market, profile)


def test_choice_picks_best_contained_entry(load):
    market, profile = load("example1.json")
    h = profile.for_agent("h")
    assert choice(h, ["x", "y", "z"]) == ("x", "y", "z")
    assert choice(h, ["x", "z"]) == ("z",)
    assert choice(h, ["x", "y"]) == ("x", "y")
    assert choice(h, []) == ()


def test_choice_ignores_foreign_offers(load):
    market, profile = load("example1.json")
    assert choice(profile.for_agent("d1"), ["x", "y", "z"]) == ("x",)


def test_restrict_and_feasibility(load):
    market, _ = load("completable_pseudo.json")
    assert restrict(market, ["x", "y", "z"], "d1") == ("x", "z")
    assert not is_feasible_for(market, "h", ["x", "z"])
    assert is_feasible_for(market, "h", ["x", "y"])
    assert feasible_sets(market, "h") == [(), ("x",), ("y",), ("z",), ("x", "y"), ("y", "z")]


def test_unknown_agent(load):
    market, _ = load("example1.json")
    with pytest.raises(UnknownAgentError):
        agent_scope(market, "nobody")


def test_choice_table_matches_choice(load):
    market, profile = load("example1.json")
    h = profile.for_agent("h")
    table = choice_table(market, h)
    scope = table.scope
    for menu in range(scope.full + 1):
        assert scope.members(table.choose(menu)) == choice(h, scope.members(menu))


def test_acceptable_sets_of_chain(load):
    market, profile = load("example1.json")
    table = choice_table(market, profile.for_agent("h"))
    assert [format_set(table.scope.members(m)) for m in table.acceptable()] == ["∅", "x", "y", "z", "xy", "xyz"]


def test_relation_of_appends_empty_set():
    relation = PreferenceRelation.of("h", [["y", "x"], ["x"]])
    assert relation.chain == (("x", "y"), ("x",), ())
    assert relation.to_display() == "xy, x, ∅"
