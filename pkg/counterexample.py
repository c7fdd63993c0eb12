"""Markets without stable allocations, built around a hospital that is not pseudo-substitutable.

The recipe picks a minimal sub-preference P' of the hospital's relation and a
smallest acceptable base carrying one-way complementary pairs, then adds a
second hospital h' with one contract y per gadget doctor. Gadget doctors whose
contract is a dependent rank their original contract first; pure supports rank
the new contract first. Every construction is certified by enumeration.
"""
import logging
from itertools import permutations, product
from math import prod
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from choice_analysis import ChoiceAnalyzer
from config import GuardLimits, settings
from errors import CannotOccurError, MalformedWitnessError, PreconditionViolated, check_guard
from market_core import bits_of, choice, choice_table, is_feasible_for, submasks
from models import (
    BlockingRow,
    ComplementarityKind,
    ComplementarityPair,
    ConstructedMarket,
    Contract,
    ContractSet,
    Market,
    OverlapCase,
    PreferenceProfile,
    PreferenceRelation,
    ReferenceRowCheck,
    UnidirectionalWitness,
    contract_set,
)
from stability import StabilityChecker
from subpref import SubPreferenceSearch

logger = logging.getLogger(__name__)


# Stated hospital orders (remainder empty) and their pairs, support first.
REFERENCE_ORDERS: Dict[OverlapCase, List[str]] = {
    OverlapCase.SINGLE_PAIR: ["x1 x2", "x1"],
    OverlapCase.DISJOINT_PAIRS: [
        "x1 x2 x3 x4", "x1 x3 x4", "x1 x2 x3", "x1 x4", "x3 x4", "x1 x2",
        "x2 x3", "x1 x3", "x1", "x2", "x3", "x4",
    ],
    OverlapCase.OVERLAPPING_CHAIN: ["x1 x2 x3", "x1 x3", "x1 x2", "x1", "x2", "x3"],
    OverlapCase.OVERLAPPING_SHARED_DEPENDENT: ["x1 x2 x3", "x1 x3", "x1", "x3"],
    OverlapCase.OVERLAPPING_SHARED_SUPPORT: ["x1 x2 x3", "x1 x2", "x1 x3", "x1", "x2", "x3"],
}

REFERENCE_PAIRS: Dict[OverlapCase, List[Tuple[str, str]]] = {
    OverlapCase.SINGLE_PAIR: [("x1", "x2")],
    OverlapCase.DISJOINT_PAIRS: [("x1", "x2"), ("x3", "x4")],
    OverlapCase.OVERLAPPING_CHAIN: [("x1", "x2"), ("x2", "x3")],
    OverlapCase.OVERLAPPING_SHARED_DEPENDENT: [("x1", "x2"), ("x3", "x2")],
    OverlapCase.OVERLAPPING_SHARED_SUPPORT: [("x1", "x2"), ("x1", "x3")],
}

# Documented rows (Y_h, Y_h', blocking contract); "B" stands for every partner
# part that keeps the row an allocation, except the listed contract itself.
REFERENCE_ROWS: Dict[OverlapCase, List[Tuple[str, str, str]]] = {
    OverlapCase.SINGLE_PAIR: [
        ("x1 x2", "", "y1"),
        ("x1", "y2", "x2"),
        ("x1", "", "x2"),
        ("", "y2", "x1"),
        ("", "y1", "y2"),
        ("", "", "y2"),
    ],
    OverlapCase.DISJOINT_PAIRS: [
        ("x1 x2 x3 x4", "", "y1"),
        ("x1 x3 x4", "y2", "x2"),
        ("x1 x3 x4", "", "x2"),
        ("x1 x2 x3", "y4", "x4"),
        ("x1 x2 x3", "", "x4"),
        ("x1 x3", "y2", "x2"),
        ("x1 x3", "y4", "x2"),
        ("x1 x3", "", "x2"),
        ("x1 x4", "y3", "y2"),
        ("x1 x4", "y2", "x3"),
        ("x1 x4", "", "x3"),
        ("x3 x4", "y1", "y2"),
        ("x3 x4", "y2", "x1"),
        ("x3 x4", "", "x1"),
        ("x1 x2", "y3", "y4"),
        ("x1 x2", "y4", "x3"),
        ("x1 x2", "", "x3"),
        ("x2 x3", "y1", "y4"),
        ("x2 x3", "y4", "x1"),
        ("x2 x3", "", "x1"),
        ("x1", "y2", "x3"),
        ("x1", "y3", "x2"),
        ("x1", "y4", "x2"),
        ("x1", "", "x2"),
        ("x2", "y1", "x3"),
        ("x2", "y3", "x1"),
        ("x2", "y4", "x1"),
        ("x2", "", "x1"),
        ("x3", "B", "x2"),
        ("x4", "B", "x2"),
        ("", "B", "x2"),
    ],
    OverlapCase.OVERLAPPING_CHAIN: [
        ("x1 x2 x3", "", "y1"),
        ("x1 x2", "y3", "x3"),
        ("x1 x2", "", "x3"),
        ("x1 x3", "y2", "x2"),
        ("x1 x3", "", "x2"),
        ("x1", "y2", "x2"),
        ("x1", "y3", "x2"),
        ("x1", "", "y2"),
        ("x2", "y1", "y3"),
        ("x2", "y3", "x1"),
        ("x2", "", "y3"),
        ("x3", "y1", "y2"),
        ("x3", "y2", "x1"),
        ("x3", "", "y1"),
        ("", "B", "x2"),
    ],
    OverlapCase.OVERLAPPING_SHARED_DEPENDENT: [
        ("x1 x2 x3", "", "y1"),
        ("x1 x3", "y2", "x2"),
        ("x1 x3", "", "x2"),
        ("x1", "y2", "x3"),
        ("x1", "y3", "y2"),
        ("x1", "", "x2"),
        ("x3", "y1", "y2"),
        ("x3", "y2", "x1"),
        ("x3", "", "x1"),
        ("", "B", "y2"),
    ],
    OverlapCase.OVERLAPPING_SHARED_SUPPORT: [
        ("x1 x2 x3", "", "y2"),
        ("x1 x2", "y3", "x3"),
        ("x1 x2", "", "x3"),
        ("x1 x3", "y2", "x2"),
        ("x1 x3", "", "x2"),
        ("x1", "y2", "x2"),
        ("x1", "y3", "x2"),
        ("x1", "", "x2"),
        ("x2", "y1", "y3"),
        ("x2", "y3", "x1"),
        ("x2", "", "x1"),
        ("x3", "y1", "y2"),
        ("x3", "y2", "x1"),
        ("x3", "", "y1"),
        ("", "B", "y1"),
    ],
}


def _fresh(name: str, taken: Set[str]) -> str:
    while name in taken:
        name += "'"
    return name


def _has_cycle(pairs: Sequence[ComplementarityPair]) -> bool:
    graph: Dict[str, List[str]] = {}
    for p in pairs:
        graph.setdefault(p.support, []).append(p.dependent)
    state: Dict[str, int] = {}

    def visit(node: str) -> bool:
        state[node] = 1
        for nxt in graph.get(node, []):
            if state.get(nxt) == 1 or (nxt not in state and visit(nxt)):
                return True
        state[node] = 2
        return False

    return any(node not in state and visit(node) for node in list(graph))


def gadget_layout(pairs: Sequence[ComplementarityPair]) -> Tuple[OverlapCase, List[str], Set[str]]:
    """Overlap case, gadget contracts in x^1, x^2, ... order, and the dependents among them."""
    if not pairs:
        raise MalformedWitnessError("Witness carries no complementary pair")
    if _has_cycle(pairs):
        return OverlapCase.OVERLAPPING_CYCLIC, [], set()
    if len(pairs) == 1:
        p = pairs[0]
        return OverlapCase.SINGLE_PAIR, [p.support, p.dependent], {p.dependent}

    overlap = next(
        ((p, q) for i, p in enumerate(pairs) for q in pairs[i + 1:]
         if {p.support, p.dependent} & {q.support, q.dependent}),
        None,
    )
    if overlap is None:
        labels = [c for p in pairs for c in (p.support, p.dependent)]
        return OverlapCase.DISJOINT_PAIRS, labels, {p.dependent for p in pairs}

    p, q = overlap
    if p.dependent == q.support:
        return OverlapCase.OVERLAPPING_CHAIN, [p.support, p.dependent, q.dependent], {p.dependent, q.dependent}
    if q.dependent == p.support:
        return OverlapCase.OVERLAPPING_CHAIN, [q.support, q.dependent, p.dependent], {q.dependent, p.dependent}
    if p.dependent == q.dependent:
        return OverlapCase.OVERLAPPING_SHARED_DEPENDENT, [p.support, p.dependent, q.support], {p.dependent}
    return OverlapCase.OVERLAPPING_SHARED_SUPPORT, [p.support, p.dependent, q.dependent], {p.dependent, q.dependent}


def linear_chains(ids: Sequence[str]) -> List[Tuple[ContractSet, ...]]:
    """Every chain of distinct singletons over ``ids``, shortest first."""
    chains = []
    for k in range(len(ids) + 1):
        chains.extend(tuple((c,) for c in seq) for seq in permutations(ids, k))
    return chains


class CounterexampleBuilder:
    """Builds and certifies markets with an empty stable set."""

    def __init__(self, guards: Optional[GuardLimits] = None):
        self.guards = guards or settings.guards
        self.analyzer = ChoiceAnalyzer(self.guards)
        self.search = SubPreferenceSearch(self.guards)
        self.stability = StabilityChecker(self.guards)

    # -------------------------------------------------------------------------
    # Witness
    # -------------------------------------------------------------------------

    def classify_overlap(self, pairs: Sequence[ComplementarityPair]) -> OverlapCase:
        case, _, _ = gadget_layout(pairs)
        return case

    def find_unidirectional_witness(self, market: Market, pref: PreferenceRelation) -> UnidirectionalWitness:
        """
        Pick a minimal sub-preference and its smallest acceptable base with one-way pairs.

        When no minimal sub-preference shows a one-way pair at an acceptable set,
        the first menu-level pair is used instead and the base is the choice at
        that menu.

        Args:
            market: Market the relation lives in
            pref: Hospital relation that is not pseudo-substitutable

        Returns:
            The witness, with its overlap case
        """
        if not market.is_hospital(pref.agent):
            raise PreconditionViolated(f"{pref.agent} is not a hospital")
        verdict = self.search.is_pseudo_substitutable(market, pref)
        if verdict.holds:
            raise PreconditionViolated(
                f"{pref.agent} is pseudo-substitutable (certificate {verdict.certificate.to_display()})"
            )

        for refutation in verdict.refutation:
            records = [r for r in self.analyzer.complementarity_report(market, refutation.minimal_sub)
                       if r.kind == ComplementarityKind.ONE_WAY]
            if not records:
                continue
            base = records[0].base
            pairs = tuple(ComplementarityPair(support=r.support, dependent=r.dependent)
                          for r in records if r.base == base)
            return UnidirectionalWitness(
                minimal_sub=refutation.minimal_sub, base=base, pairs=pairs,
                overlap_case=self.classify_overlap(pairs),
            )

        for refutation in verdict.refutation:
            found = self.analyzer.menu_complementarities(market, refutation.minimal_sub)
            if not found:
                continue
            menu = found[0][0]
            pairs = tuple(pair for m, pair in found if m == menu)
            logger.warning(
                f"No one-way pair at an acceptable set of {refutation.minimal_sub.to_display()}; "
                f"using pairs observed at menu {menu}"
            )
            return UnidirectionalWitness(
                minimal_sub=refutation.minimal_sub,
                base=choice(refutation.minimal_sub, menu),
                pairs=pairs,
                overlap_case=self.classify_overlap(pairs),
                menu=menu,
            )
        raise MalformedWitnessError(f"No complementary pair found for {pref.agent}")

    def _check_witness(self, market: Market, pref: PreferenceRelation, witness: UnidirectionalWitness) -> None:
        sub = witness.minimal_sub
        if sub.agent != pref.agent:
            raise MalformedWitnessError(f"Witness belongs to {sub.agent}, not {pref.agent}")
        holds, breach = self.search.is_subpreference(market, sub, pref)
        if not holds:
            raise MalformedWitnessError(f"Witness relation is not a sub-preference: {breach}")
        table = choice_table(market, sub)
        scope = table.scope
        at = scope.mask(witness.menu if witness.menu is not None else witness.base)
        if witness.menu is None and table.table[at] != at:
            raise MalformedWitnessError(f"Base {witness.base} is not acceptable")
        for pair in witness.pairs:
            if pair.support not in scope.contracts or pair.dependent not in scope.contracts:
                raise MalformedWitnessError(f"Pair {pair} names contracts outside X_{pref.agent}")
            s, d = scope.bit(pair.support), scope.bit(pair.dependent)
            if (table.table[at] & (s | d)) != (s | d):
                raise MalformedWitnessError(f"Pair {pair} is not chosen together")
            if not table.table[at ^ d] & s or table.table[at ^ s] & d:
                raise MalformedWitnessError(f"Pair {pair} is not one-way complementary")

    # -------------------------------------------------------------------------
    # Construction
    # -------------------------------------------------------------------------

    def build_counterexample(
        self, market: Market, pref: PreferenceRelation, witness: UnidirectionalWitness
    ) -> ConstructedMarket:
        """Apply the case recipe for ``witness`` around the hospital of ``pref``."""
        self._check_witness(market, pref, witness)
        case, labels, dependents = gadget_layout(witness.pairs)
        if case == OverlapCase.OVERLAPPING_CYCLIC:
            raise CannotOccurError("Cyclic complementary pairs do not occur in a minimal sub-preference")
        return self._assemble(market, witness.minimal_sub, witness.base, case, labels, dependents)

    def _assemble(
        self,
        market: Market,
        relation: PreferenceRelation,
        base: ContractSet,
        case: OverlapCase,
        labels: List[str],
        dependents: Set[str],
    ) -> ConstructedMarket:
        hospital = relation.agent
        partner = _fresh(f"{hospital}'", set(market.agents))
        own = [c for c in market.contracts if c.hospital == hospital]
        doctors = tuple(d for d in market.doctors if any(c.doctor == d for c in own))

        taken = set(market.contract_ids)
        added: Dict[str, str] = {}
        for i, label in enumerate(labels, 1):
            added[label] = _fresh(f"y{i}", taken)
            taken.add(added[label])
        new_contracts = [Contract(id=added[l], doctor=market.contract(l).doctor, hospital=partner) for l in labels]
        built = Market(doctors=doctors, hospitals=(hospital, partner), contracts=tuple(own + new_contracts))

        if case == OverlapCase.OVERLAPPING_CHAIN:
            partner_order = [added[l] for l in reversed(labels)]
        else:
            partner_order = [added[l] for l in labels if l in dependents]
            partner_order += [added[l] for l in reversed(labels) if l not in dependents]

        remainder = tuple(c for c in base if c not in labels)
        gadget_of = {market.contract(l).doctor: l for l in labels}
        remainder_of = {market.contract(z).doctor: z for z in remainder}

        relations = {
            hospital: PreferenceRelation(agent=hospital, chain=relation.chain),
            partner: PreferenceRelation.of(partner, [(y,) for y in partner_order]),
        }
        for d in doctors:
            if d in gadget_of:
                label = gadget_of[d]
                if label in dependents:
                    entries = [(label,), (added[label],)]
                else:
                    entries = [(added[label],), (label,)]
            elif d in remainder_of:
                entries = [(remainder_of[d],)]
            else:
                entries = []
            relations[d] = PreferenceRelation.of(d, entries)

        profile = PreferenceProfile(relations=tuple(relations[a] for a in built.agents))
        logger.info(f"Built {case} market around {hospital} with {len(labels)} gadget doctor(s)")
        return ConstructedMarket(
            market=built, profile=profile, case=case, hospital=hospital, partner=partner,
            remainder=remainder, links=tuple((l, added[l]) for l in labels),
        )

    # -------------------------------------------------------------------------
    # Certification
    # -------------------------------------------------------------------------

    def verify_empty_stable(self, constructed: ConstructedMarket) -> bool:
        """No pairwise stable allocation, and every agent but the hospital is pseudo-substitutable."""
        market, profile = constructed.market, constructed.profile
        stable = self.stability.stable_set(market, profile)
        if stable:
            logger.warning(f"Construction has stable allocation(s): {[str(a) for a in stable]}")
            return False
        for agent in market.agents:
            if agent == constructed.hospital:
                continue
            if not self.search.is_pseudo_substitutable(market, profile.for_agent(agent)).holds:
                logger.warning(f"Co-agent {agent} is not pseudo-substitutable")
                return False
        return True

    def verify_claim1(self, market: Market, minimal_sub: PreferenceRelation, remainder: Iterable[str]) -> bool:
        """Each z of the remainder is kept when offered next to a proper part of the remainder without z."""
        table = choice_table(market, minimal_sub)
        rest = table.scope.mask(remainder)
        for part in submasks(rest):
            if part == rest:
                continue
            for z in bits_of(rest & ~part):
                if not table.table[part | z] & z:
                    logger.debug(f"{table.scope.contract_of(z)} rejected at {table.scope.members(part | z)}")
                    return False
        return True

    def blocking_table(self, constructed: ConstructedMarket) -> List[BlockingRow]:
        """Every individually rational allocation, split by hospital, with its blocking contracts."""
        rows = []
        for report in self.stability.reports(constructed.market, constructed.profile):
            if not report.individually_rational:
                continue
            members = report.allocation.contracts
            rows.append(BlockingRow(
                hospital_part=tuple(c for c in members
                                    if constructed.market.contract(c).hospital == constructed.hospital),
                partner_part=tuple(c for c in members
                                   if constructed.market.contract(c).hospital == constructed.partner),
                blockers=report.blockers,
            ))
        return rows

    # -------------------------------------------------------------------------
    # Documented instances
    # -------------------------------------------------------------------------

    def reference_instance(self, case: OverlapCase) -> ConstructedMarket:
        """The recipe applied to the stated hospital order of ``case`` with an empty remainder."""
        case = OverlapCase(case)
        if case == OverlapCase.OVERLAPPING_CYCLIC:
            raise CannotOccurError("No construction exists for cyclic complementary pairs")
        pairs = [ComplementarityPair(support=s, dependent=d) for s, d in REFERENCE_PAIRS[case]]
        _, labels, dependents = gadget_layout(pairs)
        ids = sorted({c for p in pairs for c in (p.support, p.dependent)})
        doctors = tuple(f"d{i}" for i in range(1, len(ids) + 1))
        market = Market(
            doctors=doctors,
            hospitals=("h",),
            contracts=tuple(Contract(id=cid, doctor=d, hospital="h") for cid, d in zip(ids, doctors)),
        )
        relation = PreferenceRelation.of("h", [entry.split() for entry in REFERENCE_ORDERS[case]])
        return self._assemble(market, relation, tuple(ids), case, labels, dependents)

    def check_reference_rows(self, case: OverlapCase) -> List[ReferenceRowCheck]:
        """Check each documented row: is the listed contract blocking, is the allocation blocked at all."""
        constructed = self.reference_instance(case)
        market, profile = constructed.market, constructed.profile
        partner_ids = [y for _, y in constructed.links]
        checks = []
        for hospital_text, partner_text, listed in REFERENCE_ROWS[OverlapCase(case)]:
            hospital_part = tuple(hospital_text.split())
            if partner_text == "B":
                options = [()] + [(y,) for y in partner_ids if y != listed]
            else:
                options = [tuple(partner_text.split())]
            for partner_part in options:
                allocation = contract_set(hospital_part + partner_part)
                if not all(is_feasible_for(market, a, allocation) for a in market.agents):
                    continue
                report = self.stability.report(market, profile, allocation)
                check = ReferenceRowCheck(
                    hospital_part=hospital_part,
                    partner_part=partner_part,
                    listed_blocker=listed,
                    listed_blocks=listed in report.blockers,
                    blocked=not report.pairwise_stable,
                )
                if not check.listed_blocks:
                    logger.warning(
                        f"Row ({hospital_text or '∅'}, {partner_part or '∅'}) lists {listed}; "
                        f"blockers are {report.blockers}, IR={report.individually_rational}"
                    )
                checks.append(check)
        return checks

    # -------------------------------------------------------------------------
    # Synthesis
    # -------------------------------------------------------------------------

    def synthesize(self, market: Market, pref: PreferenceRelation) -> Optional[ConstructedMarket]:
        """
        Search linear co-agent profiles for an empty stable set.

        One new hospital gets one contract with every doctor of ``pref``'s
        hospital; the new hospital and every doctor get a chain of singletons.

        Returns:
            The first market (profiles in lexicographic enumeration order) with
            no stable allocation, or None
        """
        hospital = pref.agent
        if not market.is_hospital(hospital):
            raise PreconditionViolated(f"{hospital} is not a hospital")
        partner = _fresh(f"{hospital}'", set(market.agents))
        own = [c for c in market.contracts if c.hospital == hospital]
        doctors = tuple(d for d in market.doctors if any(c.doctor == d for c in own))
        taken = set(market.contract_ids)
        added = []
        for i, d in enumerate(doctors, 1):
            cid = _fresh(f"y{i}", taken)
            taken.add(cid)
            added.append(Contract(id=cid, doctor=d, hospital=partner))
        built = Market(doctors=doctors, hospitals=(hospital, partner), contracts=tuple(own + added))
        check_guard("pairwise_contracts", self.guards.pairwise_contracts, len(built.contracts))

        agents = list(doctors) + [partner]
        options = [
            linear_chains(sorted(c.id for c in built.contracts_of(a))) for a in agents
        ]
        check_guard("synthesis_profiles", self.guards.synthesis_profiles, prod(len(o) for o in options))

        fixed = PreferenceRelation(agent=hospital, chain=pref.chain)
        for combo in product(*options):
            relations = {a: PreferenceRelation.of(a, chain) for a, chain in zip(agents, combo)}
            relations[hospital] = fixed
            profile = PreferenceProfile(relations=tuple(relations[a] for a in built.agents))
            if not self.stability.stable_set(built, profile):
                logger.info(f"Synthesized co-agent profile with an empty stable set around {hospital}")
                return ConstructedMarket(
                    market=built, profile=profile, case=None, hospital=hospital, partner=partner,
                )
        logger.info(f"No linear co-agent profile empties the stable set around {hospital}")
        return None


# Global builder instance
counterexample_builder = CounterexampleBuilder()
