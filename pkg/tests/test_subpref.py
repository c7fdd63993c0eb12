import pytest

from choice_analysis import choice_analyzer
from config import GuardLimits
from errors import GuardExceeded, PreconditionViolated
from market_core import choice_table, market_from_dict
from models import PreferenceRelation, SubprefBreachKind, SubprefWitness
from subpref import FamilyOrders, SubPreferenceSearch, closed_under_subsets


@pytest.fixture
def search():
    return SubPreferenceSearch()


@pytest.fixture
def example1(load):
    market, profile = load("example1.json")
    return market, profile.for_agent("h")


def _rel(*entries):
    return PreferenceRelation.of("h", [e.split() if e else [] for e in entries])


P_PRIME = _rel("x y z", "x y", "z", "x", "y")
P_SECOND = _rel("z", "x y", "x", "y")
P_TILDE = _rel("x y", "z", "x", "y")


def test_every_relation_is_a_subpreference_of_itself(search, example1):
    market, h = example1
    assert search.is_subpreference(market, h, h) == (True, None)


def test_stated_subpreferences_hold(search, example1):
    market, h = example1
    assert search.is_subpreference(market, P_PRIME, h)[0]
    assert search.is_subpreference(market, P_SECOND, h)[0]
    assert search.is_subpreference(market, P_SECOND, P_PRIME)[0]


def test_blocking_breach_witness(search, example1):
    market, h = example1
    holds, witness = search.is_subpreference(market, P_TILDE, h)
    assert not holds
    assert witness == SubprefWitness(kind=SubprefBreachKind.BLOCKING, menu=("x", "y"), contract="z")


def test_acceptability_breach_comes_first(search, example1):
    market, h = example1
    holds, witness = search.is_subpreference(market, _rel("x z", "z"), h)
    assert not holds
    assert witness.kind == SubprefBreachKind.ACCEPTABILITY.value
    assert witness.menu == ("x", "z")


def test_relations_of_different_agents(search, example1):
    market, h = example1
    with pytest.raises(PreconditionViolated):
        search.is_subpreference(market, PreferenceRelation.of("d1", [["x"]]), h)


def test_transitivity_on_the_stated_chain(search, example1):
    market, h = example1
    assert search.verify_transitivity(market, P_SECOND, P_PRIME, h)
    with pytest.raises(PreconditionViolated):
        search.verify_transitivity(market, P_TILDE, P_PRIME, h)


def test_canonicalize_drops_dominated_entries(search, example1):
    market, _ = example1
    relation = _rel("x", "x y", "y")
    assert search.canonicalize(market, relation).chain == (("x",), ("y",), ())


def test_enumeration_yields_only_subpreferences(search, example1):
    market, h = example1
    found = search.enumerate_canonical_subpreferences(market, h)
    assert found
    assert all(search.is_subpreference(market, r, h)[0] for r in found)
    assert search.canonicalize(market, h) in found
    assert len({r.chain for r in found}) == len(found)


def test_enumeration_respects_family_guard(search, example1):
    market, h = example1
    with pytest.raises(GuardExceeded):
        search.enumerate_canonical_subpreferences(market, h, max_family=3)


def test_oracle_guards():
    market, profile = market_from_dict({
        "doctors": ["d1", "d2", "d3"],
        "hospitals": ["h"],
        "contracts": [{"id": c, "doctor": d, "hospital": "h"} for c, d in (("x", "d1"), ("y", "d2"), ("z", "d3"))],
        "preferences": {"d1": [[]], "d2": [[]], "d3": [[]], "h": [["x", "y", "z"], ["x"], ["y"], ["z"], []]},
    })
    with pytest.raises(GuardExceeded) as err:
        SubPreferenceSearch(GuardLimits(agent_contracts=2)).is_pseudo_substitutable(market, profile.for_agent("h"))
    assert err.value.guard == "agent_contracts"
    with pytest.raises(GuardExceeded) as err:
        SubPreferenceSearch(GuardLimits(family=4)).is_pseudo_substitutable(market, profile.for_agent("h"))
    assert err.value.guard == "family"


def test_first_certificate(search, example1):
    market, h = example1
    certificate = search.find_substitutable_subpreference(market, h)
    assert certificate == P_SECOND


def test_pseudo_verdict_with_certificate(search, example1):
    market, h = example1
    verdict = search.is_pseudo_substitutable(market, h)
    assert verdict.holds
    assert search.is_subpreference(market, verdict.certificate, h)[0]
    assert choice_analyzer.is_substitutable(market, verdict.certificate)[0]


def test_empty_relation_certifies_xz(search, load):
    market, profile = load("xz_pseudo_not_bilateral.json")
    verdict = search.is_pseudo_substitutable(market, profile.for_agent("h"))
    assert verdict.holds
    assert verdict.certificate.chain == ((),)


def test_refutation_lists_minimal_subpreferences(search, load):
    market, profile = load("xy_x.json")
    verdict = search.is_pseudo_substitutable(market, profile.for_agent("h"))
    assert not verdict.holds
    assert verdict.certificate is None
    assert [r.minimal_sub.chain for r in verdict.refutation] == [(("x", "y"), ("x",), ())]
    record = verdict.refutation[0].record
    assert (record.support, record.dependent) == ("x", "y")


def test_refutation_without_one_way_pair_at_a_base(search, load):
    market, profile = load("completable_not_pseudo.json")
    verdict = search.is_pseudo_substitutable(market, profile.for_agent("h"))
    assert not verdict.holds
    assert verdict.refutation
    assert all(r.record is None for r in verdict.refutation)


def test_bilateral_relation_is_not_pseudo(search, load):
    market, profile = load("bilateral_not_pseudo.json")
    assert not search.is_pseudo_substitutable(market, profile.for_agent("h")).holds


def test_completable_relation_certificate(search, load):
    market, profile = load("completable_pseudo.json")
    verdict = search.is_pseudo_substitutable(market, profile.for_agent("h"))
    assert verdict.certificate.to_display() == "z, xy, x, y, ∅"


def test_minimality(search, example1):
    market, h = example1
    assert search.is_minimal(market, P_SECOND, h)
    assert not search.is_minimal(market, P_PRIME, h)
    with pytest.raises(PreconditionViolated):
        search.is_minimal(market, P_TILDE, h)


def test_minimal_subpreferences_share_one_family(search, example1):
    market, h = example1
    minimal = search.minimal_subpreferences(market, h)
    assert P_SECOND in minimal
    families = {tuple(choice_analyzer.acceptable_sets(market, m)) for m in minimal}
    assert families == {((), ("x",), ("y",), ("z",), ("x", "y"))}


def test_reduce_minimal_matches_certificate(search, example1):
    market, h = example1
    assert search.reduce_minimal(market, h) == P_SECOND
    assert search.fast_path_verdict(market, h)
    assert search.fast_path_agrees(market, h)


def test_fast_path_is_sound_but_incomplete(search):
    market, profile = market_from_dict({
        "doctors": ["d1", "d2", "d3"],
        "hospitals": ["h"],
        "contracts": [{"id": c, "doctor": d, "hospital": "h"} for c, d in (("a", "d1"), ("b", "d2"), ("c", "d3"))],
        "preferences": {"d1": [[]], "d2": [[]], "d3": [[]], "h": [["a", "b"], ["c"], ["a"], ["b"], []]},
    })
    h = profile.for_agent("h")
    assert search.find_substitutable_subpreference(market, h) is not None
    assert not search.fast_path_verdict(market, h)
    assert not search.fast_path_agrees(market, h)


def test_shared_structure_of_certificates(search, load):
    market, profile = load("blair_incomparable.json")
    h = profile.for_agent("h")
    certificates = search.substitutable_subpreferences(market, h)
    assert len(certificates) > 1
    assert all(c.chain[0] == ("z",) for c in certificates)
    assert search.verify_shared_structure(market, h)


def test_family_orders_requirements(example1):
    market, h = example1
    table = choice_table(market, h)
    scope = table.scope
    family = [scope.mask(s) for s in (("x",), ("y",), ("z",), ("x", "y"))]
    orders = list(FamilyOrders(table, family).orders())
    assert orders
    assert all(order[0] == scope.mask(("z",)) for order in orders)
    assert not FamilyOrders(table, [scope.mask(("x", "y"))]).realizable()


def test_closed_under_subsets():
    assert closed_under_subsets([0b001, 0b010, 0b011])
    assert not closed_under_subsets([0b011])
