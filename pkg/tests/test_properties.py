"""Seeded property suite; seeds 1-40 by default, 1-500 with --full-corpus."""
import pytest

from choice_analysis import choice_analyzer
from gen import corpus_params, instance_generator
from stability import stability_checker
from subpref import subpref_search

pytestmark = pytest.mark.corpus


def _instance(seed):
    return instance_generator.random_instance(corpus_params(seed))


def _hospital_pair(seed, market):
    """(sub, sup) for the first hospital with contracts, sup being its relation in the corpus profile."""
    params = corpus_params(seed)
    for hospital in market.hospitals:
        if market.contracts_of(hospital):
            return instance_generator.random_subpreference_pair(seed, market, agent=hospital, params=params)
    return None


def test_substitutability_formulations_agree(seed):
    market, profile = _instance(seed)
    for relation in profile.relations:
        assert choice_analyzer.verify_remark1(market, relation)


def test_substitutable_is_path_independent(seed):
    market, profile = _instance(seed)
    for relation in profile.relations:
        if choice_analyzer.is_substitutable(market, relation)[0]:
            assert choice_analyzer.is_path_independent(market, relation)[0]


def test_subpreference_is_transitive(seed):
    market, _ = _instance(seed)
    pair = _hospital_pair(seed, market)
    if pair is None:
        pytest.skip("no hospital with contracts")
    middle, top = pair
    bottom = subpref_search.reduce_minimal(market, middle)
    assert subpref_search.verify_transitivity(market, bottom, middle, top)


def test_stable_sets_shrink_under_subpreferences(seed):
    market, profile = _instance(seed)
    pair = _hospital_pair(seed, market)
    if pair is None:
        pytest.skip("no hospital with contracts")
    sub, sup = pair
    assert profile.for_agent(sup.agent) == sup
    assert stability_checker.verify_inclusion(market, profile.replace(sub), profile)


def test_certificates_are_minimal(seed):
    market, profile = _instance(seed)
    for relation in profile.relations:
        verdict = subpref_search.is_pseudo_substitutable(market, relation)
        if verdict.holds:
            assert subpref_search.is_subpreference(market, verdict.certificate, relation)[0]
            assert choice_analyzer.is_substitutable(market, verdict.certificate)[0]
            assert subpref_search.is_minimal(market, verdict.certificate, relation)
        if choice_analyzer.is_substitutable(market, relation)[0]:
            assert verdict.holds


def test_pseudo_substitutable_profiles_have_stable_allocations(seed):
    market, profile = _instance(seed)
    if all(subpref_search.is_pseudo_substitutable(market, r).holds for r in profile.relations):
        assert stability_checker.stable_set(market, profile)


def test_corewise_stable_allocations_are_pairwise_stable(seed):
    market, profile = _instance(seed)
    for report in stability_checker.reports(market, profile, corewise=True):
        if report.corewise_stable:
            assert report.pairwise_stable


def test_fast_path_is_sound(seed):
    market, profile = _instance(seed)
    for relation in profile.relations:
        if subpref_search.fast_path_verdict(market, relation):
            assert subpref_search.find_substitutable_subpreference(market, relation) is not None
