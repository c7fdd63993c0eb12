"""Bilateral substitutability, substitutable completions and domain classification."""
import logging
from itertools import combinations
from typing import Iterator, List, Optional, Set, Tuple

from choice_analysis import ChoiceAnalyzer, substitutability_violation
from config import GuardLimits, settings
from errors import check_guard
from market_core import AgentScope, agent_scope, bits_of, choice_table, submasks, tabulate
from models import (
    BilateralWitness,
    ContractSet,
    DomainClassification,
    Market,
    PreferenceRelation,
)
from subpref import SubPreferenceSearch

logger = logging.getLogger(__name__)


class PrefixTable:
    """Choice table of a growing chain prefix, undone entry by entry.

    A menu is decided once some prefix entry fits inside it; undecided menus
    read 0. Only menus decided by both sides of a pair can break
    substitutability, since later entries never change a decided menu.
    """

    def __init__(self, scope: AgentScope):
        self.scope = scope
        self.table: List[int] = [0] * (scope.full + 1)
        self._decided: List[List[int]] = []

    def push(self, entry: int) -> bool:
        """Append ``entry``; True when the longer prefix fixes a substitutability violation."""
        fresh: List[int] = []
        if entry:
            for extra in submasks(self.scope.full & ~entry):
                menu = entry | extra
                if not self.table[menu]:
                    self.table[menu] = entry
                    fresh.append(menu)
        self._decided.append(fresh)
        return any(self._breaks(menu) for menu in fresh)

    def pop(self) -> None:
        for menu in self._decided.pop():
            self.table[menu] = 0

    def _breaks(self, menu: int) -> bool:
        table = self.table
        chosen = table[menu]
        for removed in bits_of(menu):
            smaller = table[menu ^ removed]
            if smaller and chosen & ~removed & ~smaller:
                return True
        for added in bits_of(self.scope.full & ~menu):
            larger = table[menu | added]
            if larger and larger & ~added & ~chosen:
                return True
        return False


class DomainClassifier:
    """Places a preference relation in the comparison domains."""

    def __init__(self, guards: Optional[GuardLimits] = None):
        self.guards = guards or settings.guards
        self.analyzer = ChoiceAnalyzer(self.guards)
        self.search = SubPreferenceSearch(self.guards)

    def is_bilaterally_substitutable(
        self, market: Market, pref: PreferenceRelation
    ) -> Tuple[bool, Optional[BilateralWitness]]:
        """
        Look for x, z and Y (counterparts of x and z absent from Y) where z is
        rejected at Y ∪ {z} but chosen at Y ∪ {x, z}.

        Args:
            market: Market the relation lives in
            pref: Relation to check (stated for hospitals; doctors use the mirrored condition)

        Returns:
            (holds, witness) with the witness minimal in Y, then x, then z
        """
        table = choice_table(market, pref)
        scope = table.scope
        check_guard("analysis_contracts", self.guards.analysis_contracts, scope.size)

        for menu in scope.order:
            present = {scope.counterparts[i] for i in range(scope.size) if menu >> i & 1}
            outside = [i for i in range(scope.size) if scope.counterparts[i] not in present]
            for xi in outside:
                x = 1 << xi
                for zi in outside:
                    if zi == xi:
                        continue
                    z = 1 << zi
                    if table.table[menu | z] & z:
                        continue
                    if table.table[menu | x | z] & z:
                        return False, BilateralWitness(
                            x=scope.contracts[xi], z=scope.contracts[zi], menu=scope.members(menu)
                        )
        return True, None

    # -------------------------------------------------------------------------
    # Completion
    # -------------------------------------------------------------------------

    def _interleavings(
        self, scope: AgentScope, chain: Tuple[int, ...], inserts: Tuple[int, ...]
    ) -> Iterator[Tuple[int, ...]]:
        """Orders keeping ``chain`` as a subsequence, next chain entry tried before inserts."""
        placed: List[int] = []
        pending: List[int] = list(inserts)
        prefix = PrefixTable(scope)

        def extend(position: int) -> Iterator[Tuple[int, ...]]:
            if position == len(chain) and not pending:
                yield tuple(placed)
                return
            options: List[Tuple[int, Optional[int]]] = []
            if position < len(chain):
                options.append((chain[position], None))
            options.extend((entry, idx) for idx, entry in enumerate(pending))
            for entry, idx in options:
                if idx is not None and any(p != entry and not p & ~entry for p in placed):
                    # an insert listed below one of its subsets is never chosen
                    continue
                placed.append(entry)
                if idx is not None:
                    del pending[idx]
                if not prefix.push(entry):
                    yield from extend(position + (1 if idx is None else 0))
                prefix.pop()
                if idx is not None:
                    pending.insert(idx, entry)
                placed.pop()

        yield from extend(0)

    def has_substitutable_completion(
        self, market: Market, pref: PreferenceRelation, strict: bool = True
    ) -> Tuple[bool, Optional[Tuple[ContractSet, ...]]]:
        """
        Search for a ranking over all subsets of X_a that agrees with ``pref``
        on feasible sets and whose choice function is substitutable.

        Args:
            market: Market the relation lives in
            pref: Relation to complete
            strict: Only insert infeasible sets; when False, feasible sets missing
                from the chain may be promoted as well

        Returns:
            (holds, completion chain ending with the empty set)
        """
        scope = agent_scope(market, pref.agent)
        check_guard("completion_contracts", self.guards.completion_contracts, scope.size)
        chain = tuple(scope.mask(entry) for entry in pref.chain if entry)
        listed: Set[int] = set(chain)
        pool = tuple(
            m for m in scope.order
            if m and m not in listed and (not scope.feasible[m] or not strict)
        )
        logger.debug(f"Completing {pref.to_display()} with a pool of {len(pool)} set(s)")

        for size in range(len(pool) + 1):
            for inserts in combinations(pool, size):
                for order in self._interleavings(scope, chain, inserts):
                    if substitutability_violation(tabulate(scope, order)) is None:
                        completion = tuple(scope.members(m) for m in order) + ((),)
                        return True, completion
        return False, None

    def classify(self, market: Market, pref: PreferenceRelation, strict: bool = True) -> DomainClassification:
        """Run the four membership checks on one relation."""
        substitutable, _ = self.analyzer.is_substitutable(market, pref)
        pseudo = self.search.is_pseudo_substitutable(market, pref)
        bilateral, _ = self.is_bilaterally_substitutable(market, pref)
        completable, completion = self.has_substitutable_completion(market, pref, strict=strict)
        logger.info(
            f"{pref.agent}: substitutable={substitutable} pseudo={pseudo.holds} "
            f"bilateral={bilateral} completable={completable}"
        )
        return DomainClassification(
            agent=pref.agent,
            substitutable=substitutable,
            pseudo_substitutable=pseudo.holds,
            bilaterally_substitutable=bilateral,
            substitutably_completable=completable,
            completion_witness=completion,
        )


# Global classifier instance
domain_classifier = DomainClassifier()
