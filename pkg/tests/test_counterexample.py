import pytest

from counterexample import CounterexampleBuilder, gadget_layout, linear_chains
from errors import CannotOccurError, MalformedWitnessError, PreconditionViolated
from models import ComplementarityPair, OverlapCase, PreferenceRelation, UnidirectionalWitness
from stability import stability_checker


@pytest.fixture
def builder():
    return CounterexampleBuilder()


def _pairs(*arrows):
    return [ComplementarityPair(support=s, dependent=d) for s, d in (a.split("->") for a in arrows)]


@pytest.mark.parametrize("arrows, case, labels", [
    (["a->b"], OverlapCase.SINGLE_PAIR, ["a", "b"]),
    (["a->b", "c->d"], OverlapCase.DISJOINT_PAIRS, ["a", "b", "c", "d"]),
    (["a->b", "b->c"], OverlapCase.OVERLAPPING_CHAIN, ["a", "b", "c"]),
    (["b->c", "a->b"], OverlapCase.OVERLAPPING_CHAIN, ["a", "b", "c"]),
    (["a->b", "c->b"], OverlapCase.OVERLAPPING_SHARED_DEPENDENT, ["a", "b", "c"]),
    (["a->b", "a->c"], OverlapCase.OVERLAPPING_SHARED_SUPPORT, ["a", "b", "c"]),
    (["a->b", "b->a"], OverlapCase.OVERLAPPING_CYCLIC, []),
])
def test_gadget_layout(arrows, case, labels):
    found, order, _ = gadget_layout(_pairs(*arrows))
    assert found == case
    assert order == labels


def test_layout_needs_a_pair():
    with pytest.raises(MalformedWitnessError):
        gadget_layout([])


def test_witness_for_a_single_pair(builder, load):
    market, profile = load("xy_x.json")
    witness = builder.find_unidirectional_witness(market, profile.for_agent("h"))
    assert witness.base == ("x", "y")
    assert witness.pairs == (ComplementarityPair(support="x", dependent="y"),)
    assert witness.overlap_case == OverlapCase.SINGLE_PAIR.value
    assert witness.menu is None
    assert witness.remainder == ()


def test_witness_needs_a_hospital_that_is_not_pseudo(builder, load):
    market, profile = load("example1.json")
    with pytest.raises(PreconditionViolated):
        builder.find_unidirectional_witness(market, profile.for_agent("h"))
    with pytest.raises(PreconditionViolated):
        builder.find_unidirectional_witness(market, profile.for_agent("d1"))


def test_single_pair_market_has_no_stable_allocation(builder, load):
    market, profile = load("xy_x.json")
    h = profile.for_agent("h")
    constructed = builder.build_counterexample(market, h, builder.find_unidirectional_witness(market, h))
    assert constructed.case == OverlapCase.SINGLE_PAIR.value
    assert constructed.partner == "h'"
    assert constructed.links == (("x", "y1"), ("y", "y2"))
    built = constructed.profile
    assert built.for_agent("h'").chain == (("y2",), ("y1",), ())
    assert built.for_agent("d1").chain == (("y1",), ("x",), ())
    assert built.for_agent("d2").chain == (("y",), ("y2",), ())
    assert builder.verify_empty_stable(constructed)


def test_single_pair_blocking_rows(builder, load):
    market, profile = load("xy_x.json")
    h = profile.for_agent("h")
    constructed = builder.build_counterexample(market, h, builder.find_unidirectional_witness(market, h))
    rows = {(r.hospital_part, r.partner_part): r.blockers for r in builder.blocking_table(constructed)}
    expected = {
        (("x", "y"), ()): "y1",
        (("x",), ("y2",)): "y",
        (("x",), ()): "y",
        ((), ("y2",)): "x",
        ((), ("y1",)): "y2",
        ((), ()): "y2",
    }
    for key, blocker in expected.items():
        assert blocker in rows[key]
    assert all(blockers for blockers in rows.values())


def test_menu_level_fallback_witness(builder, load):
    market, profile = load("completable_not_pseudo.json")
    witness = builder.find_unidirectional_witness(market, profile.for_agent("h"))
    assert witness.menu == ("x", "y", "z")
    assert witness.pairs == (ComplementarityPair(support="y", dependent="x"),)
    assert witness.base == ("x", "y")


def test_fallback_recipe_is_not_certified(builder, load):
    market, profile = load("completable_not_pseudo.json")
    h = profile.for_agent("h")
    constructed = builder.build_counterexample(market, h, builder.find_unidirectional_witness(market, h))
    assert not builder.verify_empty_stable(constructed)


def test_malformed_witness_is_rejected(builder, load):
    market, profile = load("xy_x.json")
    h = profile.for_agent("h")
    witness = UnidirectionalWitness(
        minimal_sub=h, base=("x", "y"), pairs=(ComplementarityPair(support="y", dependent="x"),),
        overlap_case=OverlapCase.SINGLE_PAIR,
    )
    with pytest.raises(MalformedWitnessError):
        builder.build_counterexample(market, h, witness)
    not_sub = witness.model_copy(update={"minimal_sub": PreferenceRelation.of("h", [["x"]])})
    with pytest.raises(MalformedWitnessError):
        builder.build_counterexample(market, h, not_sub)


def test_cyclic_pairs_cannot_be_built(builder):
    with pytest.raises(CannotOccurError):
        builder.reference_instance(OverlapCase.OVERLAPPING_CYCLIC)


@pytest.mark.parametrize("case", [
    OverlapCase.SINGLE_PAIR, OverlapCase.DISJOINT_PAIRS, OverlapCase.OVERLAPPING_CHAIN,
])
def test_documented_rows_hold(builder, case):
    checks = builder.check_reference_rows(case)
    assert checks
    assert all(c.listed_blocks and c.blocked for c in checks)


def test_shared_dependent_row_lists_the_wrong_blocker(builder):
    checks = builder.check_reference_rows(OverlapCase.OVERLAPPING_SHARED_DEPENDENT)
    row = next(c for c in checks if c.hospital_part == ("x1",) and c.partner_part == ())
    assert row.listed_blocker == "x2"
    assert not row.listed_blocks
    assert row.blocked


def test_reference_single_pair_is_certified(builder):
    constructed = builder.reference_instance(OverlapCase.SINGLE_PAIR)
    assert constructed.remainder == ()
    assert builder.verify_empty_stable(constructed)


def test_remainder_contracts_are_kept_one_by_one(builder, load):
    market, profile = load("example1.json")
    certificate = PreferenceRelation.of("h", [["z"], ["x", "y"], ["x"], ["y"]])
    assert builder.verify_claim1(market, certificate, ["x", "y"])
    assert builder.verify_claim1(market, certificate, [])
    assert not builder.verify_claim1(market, PreferenceRelation.of("h", [["x", "y"]]), ["x", "y"])


def test_linear_chains():
    chains = linear_chains(["a", "b"])
    assert chains[0] == ()
    assert (("b",), ("a",)) in chains
    assert len(chains) == 5


def test_synthesis_for_single_pair(builder, load):
    market, profile = load("xy_x.json")
    synthesized = builder.synthesize(market, profile.for_agent("h"))
    assert synthesized is not None
    assert synthesized.case is None
    assert not builder.stability.stable_set(synthesized.market, synthesized.profile)


def test_shared_dependent_has_one_wrong_row(builder):
    checks = builder.check_reference_rows(OverlapCase.OVERLAPPING_SHARED_DEPENDENT)
    wrong = [(c.hospital_part, c.partner_part) for c in checks if not c.listed_blocks]
    assert wrong == [(("x1",), ())]
    assert all(c.blocked for c in checks)


def test_shared_support_wrong_rows(builder):
    checks = builder.check_reference_rows(OverlapCase.OVERLAPPING_SHARED_SUPPORT)
    wrong = {(c.hospital_part, c.partner_part, c.listed_blocker) for c in checks if not c.listed_blocks}
    assert wrong == {
        (("x1", "x2", "x3"), (), "y2"),
        ((), ("y2",), "y1"),
        ((), ("y3",), "y1"),
    }
    assert all(c.blocked for c in checks)


def test_shared_support_top_row_is_blocked_by_y1(builder):
    constructed = builder.reference_instance(OverlapCase.OVERLAPPING_SHARED_SUPPORT)
    report = builder.stability.report(constructed.market, constructed.profile, ["x1", "x2", "x3"])
    assert "y1" in report.blockers


def test_b_rows_skip_the_listed_contract(builder):
    checks = builder.check_reference_rows(OverlapCase.OVERLAPPING_SHARED_SUPPORT)
    b_rows = [c for c in checks if c.hospital_part == () and c.listed_blocker == "y1"]
    assert sorted(c.partner_part for c in b_rows) == [(), ("y2",), ("y3",)]


@pytest.mark.parametrize("case, doctors", [
    (OverlapCase.SINGLE_PAIR, 2),
    (OverlapCase.DISJOINT_PAIRS, 4),
    (OverlapCase.OVERLAPPING_CHAIN, 3),
    (OverlapCase.OVERLAPPING_SHARED_DEPENDENT, 3),
    (OverlapCase.OVERLAPPING_SHARED_SUPPORT, 3),
])
def test_reference_instances_are_certified(builder, case, doctors):
    constructed = builder.reference_instance(case)
    assert len(constructed.market.doctors) == doctors
    assert constructed.market.hospitals == ("h", "h'")
    assert builder.verify_empty_stable(constructed)


def test_linear_co_agents_cannot_empty_the_completable_relation(builder, load):
    market, profile = load("completable_not_pseudo.json")
    assert builder.synthesize(market, profile.for_agent("h")) is None


def test_single_pair_construction_fixture_matches_the_recipe(builder, load):
    market, profile = load("single_pair_construction.json")
    constructed = builder.reference_instance(OverlapCase.SINGLE_PAIR)
    assert market == constructed.market
    for agent in market.agents:
        assert profile.for_agent(agent) == constructed.profile.for_agent(agent)
    assert stability_checker.stable_set(market, profile) == []


@pytest.mark.parametrize("case", [
    OverlapCase.SINGLE_PAIR, OverlapCase.DISJOINT_PAIRS, OverlapCase.OVERLAPPING_CHAIN,
    OverlapCase.OVERLAPPING_SHARED_DEPENDENT, OverlapCase.OVERLAPPING_SHARED_SUPPORT,
])
def test_blocking_rows_are_individually_rational(builder, case):
    constructed = builder.reference_instance(case)
    rows = builder.blocking_table(constructed)
    assert rows
    for row in rows:
        allocation = row.hospital_part + row.partner_part
        assert stability_checker.is_individually_rational(constructed.market, constructed.profile, allocation)[0]
