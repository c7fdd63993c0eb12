"""Allocations, blocking contracts and stability by exhaustive enumeration."""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Tuple

from config import GuardLimits, settings
from errors import PreconditionViolated, check_guard
from market_core import ChoiceTable, choice_table
from models import (
    Allocation,
    ContractSet,
    Market,
    PreferenceProfile,
    StabilityReport,
)
from subpref import SubPreferenceSearch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProfileTables:
    """Every agent's choice table, wired to global contract bits."""
    ids: Tuple[str, ...]
    agents: Tuple[str, ...]
    tables: Tuple[ChoiceTable, ...]
    local_bits: Tuple[Tuple[int, ...], ...]
    signatories: Tuple[Tuple[int, int], ...]
    order: Tuple[int, ...]

    @property
    def full(self) -> int:
        return (1 << len(self.ids)) - 1

    def localize(self, k: int, mask: int) -> int:
        local = 0
        for i, gbit in enumerate(self.local_bits[k]):
            if mask & gbit:
                local |= 1 << i
        return local

    def mask(self, members: Iterable[str]) -> int:
        m = 0
        for cid in members:
            m |= 1 << self.ids.index(cid)
        return m

    def members(self, mask: int) -> ContractSet:
        return tuple(cid for i, cid in enumerate(self.ids) if mask >> i & 1)

    def feasible(self, mask: int) -> bool:
        return all(self.tables[k].scope.feasible[self.localize(k, mask)] for k in range(len(self.agents)))

    def rejecting_agent(self, mask: int) -> Optional[str]:
        """First agent (doctors, then hospitals) that would not keep all of its part of ``mask``."""
        for k, agent in enumerate(self.agents):
            local = self.localize(k, mask)
            if self.tables[k].table[local] != local:
                return agent
        return None

    def blocking(self, mask: int) -> int:
        blockers = 0
        for i in range(len(self.ids)):
            bit = 1 << i
            if mask & bit:
                continue
            if all(self._keeps(k, mask | bit, bit) for k in self.signatories[i]):
                blockers |= bit
        return blockers

    def _keeps(self, k: int, menu: int, bit: int) -> bool:
        local_menu = self.localize(k, menu)
        return bool(self.tables[k].table[local_menu] & self.localize(k, bit))

    def deviation(self, mask: int) -> Optional[int]:
        """Smallest X' disjoint from ``mask`` that every involved agent keeps in full at mask ∪ X'."""
        for candidate in self.order:
            if not candidate or candidate & mask or not self.feasible(candidate):
                continue
            menu = mask | candidate
            if all(
                not (self.localize(k, candidate) & ~self.tables[k].table[self.localize(k, menu)])
                for k in range(len(self.agents))
                if self.localize(k, candidate)
            ):
                return candidate
        return None


@lru_cache(maxsize=256)
def profile_tables(market: Market, profile: PreferenceProfile) -> ProfileTables:
    ids = market.contract_ids
    agents = market.agents
    tables = tuple(choice_table(market, profile.for_agent(a)) for a in agents)
    local_bits = tuple(
        tuple(1 << ids.index(cid) for cid in table.scope.contracts) for table in tables
    )
    signatories = tuple(
        (agents.index(market.contract(cid).doctor), agents.index(market.contract(cid).hospital)) for cid in ids
    )
    n = len(ids)
    order = tuple(sorted(range(1 << n), key=lambda m: (bin(m).count("1"), tuple(i for i in range(n) if m >> i & 1))))
    return ProfileTables(ids=ids, agents=agents, tables=tables, local_bits=local_bits,
                         signatories=signatories, order=order)


class StabilityChecker:
    """Pairwise and corewise stability for small markets."""

    def __init__(self, guards: Optional[GuardLimits] = None):
        self.guards = guards or settings.guards
        self.search = SubPreferenceSearch(self.guards)

    def _tables(self, market: Market, profile: PreferenceProfile, corewise: bool = False) -> ProfileTables:
        check_guard("pairwise_contracts", self.guards.pairwise_contracts, len(market.contracts))
        if corewise:
            check_guard("corewise_contracts", self.guards.corewise_contracts, len(market.contracts))
        return profile_tables(market, profile)

    def _allocation_mask(self, tables: ProfileTables, allocation: Iterable[str]) -> int:
        members = list(allocation)
        unknown = [cid for cid in members if cid not in tables.ids]
        if unknown:
            raise PreconditionViolated(f"Allocation names unknown contracts: {unknown}")
        mask = tables.mask(members)
        if not tables.feasible(mask):
            raise PreconditionViolated(f"{tables.members(mask)} is not feasible for every agent")
        return mask

    def enumerate_allocations(self, market: Market, profile: PreferenceProfile) -> List[Allocation]:
        tables = self._tables(market, profile)
        return [Allocation(contracts=tables.members(m)) for m in tables.order if tables.feasible(m)]

    def is_individually_rational(
        self, market: Market, profile: PreferenceProfile, allocation: Iterable[str]
    ) -> Tuple[bool, Optional[str]]:
        tables = self._tables(market, profile)
        violator = tables.rejecting_agent(self._allocation_mask(tables, allocation))
        return violator is None, violator

    def blocking_contracts(
        self, market: Market, profile: PreferenceProfile, allocation: Iterable[str]
    ) -> ContractSet:
        tables = self._tables(market, profile)
        return tables.members(tables.blocking(self._allocation_mask(tables, allocation)))

    def stable_set(self, market: Market, profile: PreferenceProfile) -> List[Allocation]:
        """S(P): individually rational allocations without a blocking contract."""
        tables = self._tables(market, profile)
        stable = [
            Allocation(contracts=tables.members(m))
            for m in tables.order
            if tables.feasible(m) and tables.rejecting_agent(m) is None and not tables.blocking(m)
        ]
        logger.debug(f"{len(stable)} pairwise stable allocation(s)")
        return stable

    def is_corewise_stable(
        self, market: Market, profile: PreferenceProfile, allocation: Iterable[str]
    ) -> Tuple[bool, Optional[ContractSet]]:
        tables = self._tables(market, profile, corewise=True)
        mask = self._allocation_mask(tables, allocation)
        if tables.rejecting_agent(mask) is not None:
            return False, None
        deviation = tables.deviation(mask)
        if deviation is None:
            return True, None
        return False, tables.members(deviation)

    def report(
        self, market: Market, profile: PreferenceProfile, allocation: Iterable[str], corewise: bool = False
    ) -> StabilityReport:
        tables = self._tables(market, profile, corewise=corewise)
        mask = self._allocation_mask(tables, allocation)
        return self._report(tables, mask, corewise)

    def _report(self, tables: ProfileTables, mask: int, corewise: bool) -> StabilityReport:
        violator = tables.rejecting_agent(mask)
        blockers = tables.members(tables.blocking(mask))
        core: Optional[bool] = None
        deviation = None
        if corewise:
            if violator is not None:
                core = False
            else:
                found = tables.deviation(mask)
                core = found is None
                deviation = None if found is None else tables.members(found)
        return StabilityReport(
            allocation=Allocation(contracts=tables.members(mask)),
            individually_rational=violator is None,
            ir_violator=violator,
            blockers=blockers,
            pairwise_stable=violator is None and not blockers,
            corewise_stable=core,
            deviation=deviation,
        )

    def reports(self, market: Market, profile: PreferenceProfile, corewise: bool = False) -> List[StabilityReport]:
        """One report per allocation, in the fixed set order."""
        tables = self._tables(market, profile, corewise=corewise)
        return [self._report(tables, m, corewise) for m in tables.order if tables.feasible(m)]

    def verify_inclusion(
        self, market: Market, subprofile: PreferenceProfile, profile: PreferenceProfile
    ) -> bool:
        """S(P') ⊆ S(P) when every agent's relation in P' is a sub-preference of its relation in P."""
        for agent in market.agents:
            holds, witness = self.search.is_subpreference(
                market, subprofile.for_agent(agent), profile.for_agent(agent)
            )
            if not holds:
                raise PreconditionViolated(f"Relation of {agent} is not a sub-preference: {witness}")
        smaller = {a.contracts for a in self.stable_set(market, subprofile)}
        larger = {a.contracts for a in self.stable_set(market, profile)}
        return smaller <= larger


# Global checker instance
stability_checker = StabilityChecker()
