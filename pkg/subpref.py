"""Sub-preferences, minimality and pseudo-substitutability.

A sub-preference only matters through its choice function, and every choice
function induced by a chain is induced by a canonical chain (each entry above
all of its own subsets). The searches therefore range over pairs
(family F of sup-acceptable sets, linear extension of F in which supersets
come first). For a fixed family the second condition of the sub-preference
relation turns into requirements of the form "the first listed subset of menu
M must contain the contracts R(M)", which prune the extension search as soon
as a set is placed.
"""
import logging
from itertools import combinations
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from choice_analysis import ChoiceAnalyzer, substitutability_violation
from config import GuardLimits, settings
from errors import GuardExceeded, PreconditionViolated, check_guard
from market_core import ChoiceTable, bits_of, choice_table, relation_from_masks, tabulate
from models import (
    ComplementarityKind,
    Market,
    MinimalRefutation,
    PreferenceRelation,
    PseudoVerdict,
    SubprefBreachKind,
    SubprefWitness,
    set_order_key,
)

logger = logging.getLogger(__name__)


class FamilyOrders:
    """Canonical chains over one fixed family that are sub-preferences of ``sup``."""

    def __init__(self, sup: ChoiceTable, family: Sequence[int]):
        self.sup = sup
        self.family = tuple(family)
        full = sup.scope.full
        requirements: Dict[int, int] = {}
        for base in (0,) + self.family:
            for bit in bits_of(full & ~base):
                menu = base | bit
                if sup.table[menu] & bit:
                    requirements[menu] = requirements.get(menu, 0) | bit
        self.requirements = requirements

    def satisfiable(self) -> bool:
        """Every requirement has at least one family member that could meet it."""
        for menu, needed in self.requirements.items():
            if not any(not s & ~menu and not needed & ~s for s in self.family):
                return False
        return True

    def orders(self) -> Iterator[Tuple[int, ...]]:
        """Linear extensions (supersets first) meeting every requirement, lexicographically."""
        if not self.satisfiable():
            return
        menus = list(self.requirements)
        remaining = list(self.family)
        placed: List[int] = []
        covered = set()

        def extend() -> Iterator[Tuple[int, ...]]:
            if not remaining:
                yield tuple(placed)
                return
            for idx, entry in enumerate(remaining):
                if any(other != entry and (other & entry) == entry for other in remaining):
                    continue
                newly = [m for m in menus if m not in covered and not entry & ~m]
                if any(self.requirements[m] & ~entry for m in newly):
                    continue
                covered.update(newly)
                placed.append(entry)
                del remaining[idx]
                yield from extend()
                remaining.insert(idx, entry)
                placed.pop()
                covered.difference_update(newly)

        yield from extend()

    def realizable(self) -> bool:
        return next(self.orders(), None) is not None


def closed_under_subsets(family: Sequence[int]) -> bool:
    """Each member minus any one contract is again a member (or empty)."""
    members = set(family)
    for entry in family:
        for bit in bits_of(entry):
            smaller = entry ^ bit
            if smaller and smaller not in members:
                return False
    return True


class SubPreferenceSearch:
    """Exhaustive oracle for sub-preferences and pseudo-substitutability."""

    def __init__(self, guards: Optional[GuardLimits] = None):
        self.guards = guards or settings.guards
        self.analyzer = ChoiceAnalyzer(self.guards)

    def _guarded_table(self, market: Market, sup: PreferenceRelation) -> ChoiceTable:
        table = choice_table(market, sup)
        check_guard("agent_contracts", self.guards.agent_contracts, table.scope.size)
        check_guard("family", self.guards.family, len(table.acceptable()))
        return table

    def _families(self, table: ChoiceTable) -> Iterator[Tuple[int, ...]]:
        """Families of nonempty sup-acceptable sets by increasing size, then set order."""
        acceptable = table.acceptable()[1:]
        for size in range(len(acceptable) + 1):
            yield from combinations(acceptable, size)

    # -------------------------------------------------------------------------
    # The relation itself
    # -------------------------------------------------------------------------

    def is_subpreference(
        self, market: Market, sub: PreferenceRelation, sup: PreferenceRelation
    ):
        """
        Decide sub ⊑ sup.

        Args:
            market: Market both relations live in
            sub: Candidate sub-preference
            sup: Original preference

        Returns:
            (holds, witness); acceptability breaches are reported before
            blocking breaches, each in the fixed set order
        """
        if sub.agent != sup.agent:
            raise PreconditionViolated(f"Relations belong to different agents: {sub.agent} vs {sup.agent}")
        sub_table = choice_table(market, sub)
        sup_table = choice_table(market, sup)
        scope = sub_table.scope
        accepted = sub_table.acceptable()

        for menu in accepted:
            if sup_table.table[menu] != menu:
                return False, SubprefWitness(kind=SubprefBreachKind.ACCEPTABILITY, menu=scope.members(menu))

        for menu in accepted:
            for i, cid in enumerate(scope.contracts):
                bit = 1 << i
                if menu & bit:
                    continue
                grown = menu | bit
                if sup_table.table[grown] & bit and not sub_table.table[grown] & bit:
                    return False, SubprefWitness(
                        kind=SubprefBreachKind.BLOCKING, menu=scope.members(menu), contract=cid
                    )
        return True, None

    def canonicalize(self, market: Market, pref: PreferenceRelation) -> PreferenceRelation:
        """Drop the entries ranked below one of their own subsets."""
        table = choice_table(market, pref)
        kept = [m for m in table.chain if table.table[m] == m]
        return relation_from_masks(table.scope, kept)

    # -------------------------------------------------------------------------
    # Enumeration
    # -------------------------------------------------------------------------

    def iter_canonical_subpreferences(
        self, market: Market, sup: PreferenceRelation
    ) -> Iterator[Tuple[Tuple[int, ...], PreferenceRelation]]:
        table = self._guarded_table(market, sup)
        for family in self._families(table):
            for chain in FamilyOrders(table, family).orders():
                yield family, relation_from_masks(table.scope, chain)

    def enumerate_canonical_subpreferences(
        self, market: Market, sup: PreferenceRelation, max_family: Optional[int] = None
    ) -> List[PreferenceRelation]:
        """All canonical sub-preferences of ``sup``, families by size, extensions lexicographic."""
        table = choice_table(market, sup)
        if max_family is not None:
            check_guard("family", max_family, len(table.acceptable()))
        found = []
        for _, relation in self.iter_canonical_subpreferences(market, sup):
            holds, witness = self.is_subpreference(market, relation, sup)
            if not holds:
                raise AssertionError(f"Enumerated chain {relation.to_display()} is not a sub-preference: {witness}")
            found.append(relation)
        logger.debug(f"{len(found)} canonical sub-preferences of {sup.to_display()}")
        return found

    def _realizable(self, table: ChoiceTable, family: Sequence[int]) -> bool:
        return FamilyOrders(table, family).realizable()

    def is_minimal(self, market: Market, sub: PreferenceRelation, sup: PreferenceRelation) -> bool:
        """No sub-preference of ``sup`` has an acceptable family strictly inside A(sub)."""
        holds, witness = self.is_subpreference(market, sub, sup)
        if not holds:
            raise PreconditionViolated(f"{sub.to_display()} is not a sub-preference of {sup.to_display()}: {witness}")
        table = self._guarded_table(market, sup)
        family = choice_table(market, sub).acceptable()[1:]
        for size in range(len(family)):
            for smaller in combinations(family, size):
                if self._realizable(table, smaller):
                    return False
        return True

    def minimal_subpreferences(self, market: Market, sup: PreferenceRelation) -> List[PreferenceRelation]:
        """Every minimal sub-preference (all orders of every minimal family)."""
        table = self._guarded_table(market, sup)
        realizable: List[frozenset] = []
        found: List[PreferenceRelation] = []
        for family in self._families(table):
            members = frozenset(family)
            if any(earlier < members for earlier in realizable):
                continue
            orders = list(FamilyOrders(table, family).orders())
            if not orders:
                continue
            realizable.append(members)
            for chain in orders:
                found.append(relation_from_masks(table.scope, chain))
                if len(found) > self.guards.refutation_entries:
                    raise GuardExceeded("refutation_entries", self.guards.refutation_entries, len(found))
        return found

    # -------------------------------------------------------------------------
    # Pseudo-substitutability
    # -------------------------------------------------------------------------

    def _substitutable_chains(self, table: ChoiceTable) -> Iterator[Tuple[int, ...]]:
        for family in self._families(table):
            # acceptable families of substitutable relations are closed under subsets
            if not closed_under_subsets(family):
                continue
            for chain in FamilyOrders(table, family).orders():
                if substitutability_violation(tabulate(table.scope, chain)) is None:
                    yield chain

    def find_substitutable_subpreference(
        self, market: Market, sup: PreferenceRelation
    ) -> Optional[PreferenceRelation]:
        """First substitutable sub-preference in enumeration order, if any."""
        table = self._guarded_table(market, sup)
        chain = next(self._substitutable_chains(table), None)
        if chain is None:
            return None
        return relation_from_masks(table.scope, chain)

    def substitutable_subpreferences(self, market: Market, sup: PreferenceRelation) -> List[PreferenceRelation]:
        table = self._guarded_table(market, sup)
        return [relation_from_masks(table.scope, chain) for chain in self._substitutable_chains(table)]

    def reduce_minimal(self, market: Market, sup: PreferenceRelation) -> PreferenceRelation:
        """Drop bi-complementary acceptable sets until none can be dropped."""
        self._guarded_table(market, sup)
        current = self.canonicalize(market, sup)
        while True:
            records = self.analyzer.complementarity_report(market, current)
            bases = sorted(
                {r.base for r in records if r.kind == ComplementarityKind.BI_COMPLEMENTARY},
                key=set_order_key,
            )
            for base in bases:
                candidate = current.with_chain(e for e in current.chain if e != base)
                if self.is_subpreference(market, candidate, sup)[0]:
                    logger.debug(f"Dropped bi-complementary set {base} from {current.to_display()}")
                    current = candidate
                    break
            else:
                return current

    def is_pseudo_substitutable(self, market: Market, pref: PreferenceRelation) -> PseudoVerdict:
        certificate = self.find_substitutable_subpreference(market, pref)
        if certificate is not None:
            return PseudoVerdict(holds=True, certificate=certificate)

        refutation = []
        for minimal in self.minimal_subpreferences(market, pref):
            one_way = next(
                (r for r in self.analyzer.complementarity_report(market, minimal)
                 if r.kind == ComplementarityKind.ONE_WAY),
                None,
            )
            if one_way is None:
                logger.warning(
                    f"Minimal sub-preference {minimal.to_display()} of {pref.agent} is not substitutable "
                    f"but has no one-way pair at an acceptable set"
                )
            refutation.append(MinimalRefutation(minimal_sub=minimal, record=one_way))
        return PseudoVerdict(holds=False, refutation=tuple(refutation))

    def fast_path_verdict(self, market: Market, sup: PreferenceRelation) -> bool:
        """Whether the bi-complementary reduction alone reaches a substitutable relation."""
        reduced = self.reduce_minimal(market, sup)
        return substitutability_violation(choice_table(market, reduced)) is None

    def fast_path_agrees(self, market: Market, sup: PreferenceRelation) -> bool:
        oracle = self.find_substitutable_subpreference(market, sup) is not None
        fast = self.fast_path_verdict(market, sup)
        if oracle != fast:
            logger.warning(
                f"Fast path says {fast}, oracle says {oracle} for {sup.agent}: {sup.to_display()}"
            )
        return oracle == fast

    # -------------------------------------------------------------------------
    # Structural checks
    # -------------------------------------------------------------------------

    def verify_transitivity(
        self, market: Market, p3: PreferenceRelation, p2: PreferenceRelation, p1: PreferenceRelation
    ) -> bool:
        if not self.is_subpreference(market, p3, p2)[0] or not self.is_subpreference(market, p2, p1)[0]:
            raise PreconditionViolated("Transitivity check needs p3 ⊑ p2 and p2 ⊑ p1")
        return self.is_subpreference(market, p3, p1)[0]

    def verify_shared_structure(self, market: Market, sup: PreferenceRelation) -> bool:
        """Substitutable sub-preferences share their acceptable family and its Blair order, and are minimal."""
        certificates = self.substitutable_subpreferences(market, sup)
        if not certificates:
            return True
        tables = [choice_table(market, c) for c in certificates]
        family = tables[0].acceptable()
        for cert, table in zip(certificates, tables):
            if table.acceptable() != family:
                logger.warning(f"Certificate {cert.to_display()} has a different acceptable family")
                return False
        first = tables[0]
        for a, b in combinations(family, 2):
            union = a | b
            for table in tables[1:]:
                if (first.table[union] == a) != (table.table[union] == a):
                    return False
                if (first.table[union] == b) != (table.table[union] == b):
                    return False
        # minimality depends on the family alone
        return self.is_minimal(market, certificates[0], sup)


# Global search instance
subpref_search = SubPreferenceSearch()
