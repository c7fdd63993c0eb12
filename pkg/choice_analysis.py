"""Structural predicates on a single preference relation.

All checks are exhaustive over the menus of the agent's own contracts; a
choice function depends only on the offered contracts that involve the agent,
so quantifying over subsets of X_a is enough.
"""
import logging
from typing import List, Optional, Tuple

from config import GuardLimits, settings
from errors import PreconditionViolated, check_guard
from market_core import ChoiceTable, bits_of, choice_table, submasks
from models import (
    BlairVerdict,
    ComplementarityKind,
    ComplementarityPair,
    ComplementarityRecord,
    ContractSet,
    Market,
    PathIndependenceWitness,
    PreferenceRelation,
    SubstitutabilityWitness,
)

logger = logging.getLogger(__name__)


def substitutability_violation(table: ChoiceTable) -> Optional[Tuple[int, int, int]]:
    """First (menu, removed bit, dropped bit) breaking substitutability, or None."""
    for menu in table.scope.order:
        chosen = table.table[menu]
        if not chosen:
            continue
        for removed in bits_of(menu):
            kept = table.table[menu ^ removed]
            lost = chosen & ~removed & ~kept
            if lost:
                return menu, removed, lost & -lost
    return None


def menu_pairs(table: ChoiceTable) -> List[Tuple[int, int, int]]:
    """(menu, support bit, dependent bit) one-way pairs observed at any menu.

    Both contracts are chosen at the menu; the support is still chosen once
    the dependent is withdrawn, the dependent is rejected once the support is.
    """
    found = []
    for menu in table.scope.order:
        chosen = table.table[menu]
        for support in bits_of(chosen):
            for dependent in bits_of(chosen & ~support):
                if table.table[menu ^ dependent] & support and not table.table[menu ^ support] & dependent:
                    found.append((menu, support, dependent))
    return found


class ChoiceAnalyzer:
    """Decides substitutability-type properties of one preference relation."""

    def __init__(self, guards: Optional[GuardLimits] = None):
        self.guards = guards or settings.guards

    def _table(self, market: Market, pref: PreferenceRelation) -> ChoiceTable:
        table = choice_table(market, pref)
        check_guard("analysis_contracts", self.guards.analysis_contracts, table.scope.size)
        return table

    def acceptable_sets(self, market: Market, pref: PreferenceRelation) -> List[ContractSet]:
        """A(P): the sets the agent keeps in full, in the fixed set order."""
        table = self._table(market, pref)
        return [table.scope.members(m) for m in table.acceptable()]

    def choice_menu_table(self, market: Market, pref: PreferenceRelation) -> List[Tuple[ContractSet, ContractSet]]:
        """Every menu of X_a with its choice."""
        table = self._table(market, pref)
        scope = table.scope
        return [(scope.members(m), scope.members(table.table[m])) for m in scope.order]

    def is_substitutable(
        self, market: Market, pref: PreferenceRelation
    ) -> Tuple[bool, Optional[SubstitutabilityWitness]]:
        """
        Check that no contract is dropped because another one was withdrawn.

        Args:
            market: Market the relation lives in
            pref: Preference relation to check

        Returns:
            (holds, witness); the witness is the smallest menu, then smallest
            removed id, then smallest dropped id
        """
        table = self._table(market, pref)
        scope = table.scope
        for menu in scope.order:
            chosen = table.table[menu]
            if not chosen:
                continue
            for i, cid in enumerate(scope.contracts):
                removed = 1 << i
                if not menu & removed:
                    continue
                lost = chosen & ~removed & ~table.table[menu ^ removed]
                if lost:
                    return False, SubstitutabilityWitness(
                        menu=scope.members(menu),
                        removed=cid,
                        dropped=scope.contract_of(lost & -lost),
                    )
        return True, None

    def inclusion_form_holds(self, market: Market, pref: PreferenceRelation) -> bool:
        """C(X'') ∩ X' ⊆ C(X') for every X' ⊆ X''."""
        table = self._table(market, pref)
        for outer in range(table.scope.full + 1):
            chosen = table.table[outer]
            for inner in submasks(outer):
                if chosen & inner & ~table.table[inner]:
                    return False
        return True

    def verify_remark1(self, market: Market, pref: PreferenceRelation) -> bool:
        """The single-removal and inclusion formulations agree on this relation."""
        holds, _ = self.is_substitutable(market, pref)
        agree = holds == self.inclusion_form_holds(market, pref)
        if not agree:
            logger.warning(f"Substitutability formulations disagree for {pref.agent}: {pref.to_display()}")
        return agree

    def is_path_independent(
        self, market: Market, pref: PreferenceRelation
    ) -> Tuple[bool, Optional[PathIndependenceWitness]]:
        """C(X' ∪ X'') = C(C(X') ∪ X'') for all X', X'' ⊆ X_a."""
        table = self._table(market, pref)
        scope = table.scope
        for first in scope.order:
            chosen_first = table.table[first]
            for second in scope.order:
                if table.table[first | second] != table.table[chosen_first | second]:
                    return False, PathIndependenceWitness(
                        first=scope.members(first), second=scope.members(second)
                    )
        return True, None

    def verify_consistency(self, market: Market, pref: PreferenceRelation) -> bool:
        """C(Z) = C(X') whenever C(X') ⊆ Z ⊆ X'."""
        table = self._table(market, pref)
        for menu in range(table.scope.full + 1):
            chosen = table.table[menu]
            for extra in submasks(menu & ~chosen):
                if table.table[chosen | extra] != chosen:
                    return False
        return True

    def blair_compare(
        self, market: Market, pref: PreferenceRelation, first: ContractSet, second: ContractSet
    ) -> BlairVerdict:
        """Compare two feasible sets under the order induced by choosing from their union."""
        table = self._table(market, pref)
        scope = table.scope
        a, b = scope.mask(first), scope.mask(second)
        for label, m in (("first", a), ("second", b)):
            if not scope.feasible[m]:
                raise PreconditionViolated(f"{label} set {scope.members(m)} is infeasible for {pref.agent}")
        if a == b:
            return BlairVerdict.EQUAL
        joint = table.table[a | b]
        if joint == a:
            return BlairVerdict.FIRST_PREFERRED
        if joint == b:
            return BlairVerdict.SECOND_PREFERRED
        return BlairVerdict.INCOMPARABLE

    def complementarity_report(self, market: Market, pref: PreferenceRelation) -> List[ComplementarityRecord]:
        """One-way and bi-complementary pairs inside every acceptable set."""
        table = self._table(market, pref)
        scope = table.scope
        records = []
        for base in table.acceptable():
            members = list(bits_of(base))
            for i, low in enumerate(members):
                for high in members[i + 1:]:
                    low_kept = bool(table.table[base ^ high] & low)
                    high_kept = bool(table.table[base ^ low] & high)
                    if low_kept and high_kept:
                        continue
                    if not low_kept and not high_kept:
                        kind, dependent, support = ComplementarityKind.BI_COMPLEMENTARY, low, high
                    elif low_kept:
                        kind, dependent, support = ComplementarityKind.ONE_WAY, high, low
                    else:
                        kind, dependent, support = ComplementarityKind.ONE_WAY, low, high
                    records.append(ComplementarityRecord(
                        base=scope.members(base),
                        kind=kind,
                        dependent=scope.contract_of(dependent),
                        support=scope.contract_of(support),
                    ))
        return records

    def menu_complementarities(
        self, market: Market, pref: PreferenceRelation
    ) -> List[Tuple[ContractSet, ComplementarityPair]]:
        """One-way pairs observed at any menu, acceptable or not, in the fixed menu order."""
        table = self._table(market, pref)
        scope = table.scope
        return [
            (scope.members(menu), ComplementarityPair(
                support=scope.contract_of(support), dependent=scope.contract_of(dependent)))
            for menu, support, dependent in menu_pairs(table)
        ]


# Global analyzer instance
choice_analyzer = ChoiceAnalyzer()
