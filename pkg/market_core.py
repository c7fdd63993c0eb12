"""Markets, feasible sets and preference-induced choice.

Market documents are parsed into ``MarketDocument``, checked rule by rule,
and turned into immutable ``Market`` / ``PreferenceProfile`` values. The
searches in the other modules work on ``ChoiceTable``: an agent's choice
function tabulated over every menu of its own contracts, menus encoded as
bitmasks over the agent's contracts sorted by id.
"""
import json
import logging
import os
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Tuple, Union

from pydantic import ValidationError

from errors import MarketValidationError, UnknownAgentError, UsageError
from models import (
    Contract,
    ContractSet,
    Market,
    MarketDocument,
    PreferenceProfile,
    PreferenceRelation,
    Violation,
    ViolationCode,
    contract_set,
)

logger = logging.getLogger(__name__)


# =============================================================================
# Documents
# =============================================================================

def parse_market_document(text: str, source: str = "<string>") -> MarketDocument:
    """Parse JSON text into the raw document shape."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{source} is not valid JSON: {e}")
    try:
        return MarketDocument.model_validate(data)
    except ValidationError as e:
        raise UsageError(f"{source} does not have the market document shape: {e}")


def load_market_document(path: Union[str, Path]) -> MarketDocument:
    """Read a market document from disk."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"Cannot read market document {path}: {e}")
    return parse_market_document(text, source=str(path))


def collect_violations(document: MarketDocument) -> List[Violation]:
    """Check every validity rule and return all violations found."""
    violations: List[Violation] = []

    def add(code: ViolationCode, entity: str, message: str) -> None:
        violations.append(Violation(code=code, entity=entity, message=message))

    # Agents
    for group, tokens in (("doctor", document.doctors), ("hospital", document.hospitals)):
        for token, count in Counter(tokens).items():
            if count > 1:
                add(ViolationCode.DUPLICATE_AGENT, token, f"{group} {token!r} listed {count} times")
    for token in sorted(set(document.doctors) & set(document.hospitals)):
        add(ViolationCode.DUPLICATE_AGENT, token, f"{token!r} is both a doctor and a hospital")

    doctors = set(document.doctors)
    hospitals = set(document.hospitals)

    # Contracts
    for cid, count in Counter(c.id for c in document.contracts).items():
        if count > 1:
            add(ViolationCode.DUPLICATE_ID, cid, f"contract id {cid!r} used {count} times")
    contracts: Dict[str, Any] = {}
    for entry in document.contracts:
        contracts.setdefault(entry.id, entry)
        if entry.doctor not in doctors:
            add(ViolationCode.UNKNOWN_AGENT, entry.id, f"contract {entry.id!r} names unknown doctor {entry.doctor!r}")
        if entry.hospital not in hospitals:
            add(ViolationCode.UNKNOWN_AGENT, entry.id, f"contract {entry.id!r} names unknown hospital {entry.hospital!r}")

    # Preferences
    agents = list(document.doctors) + [h for h in document.hospitals if h not in doctors]
    for agent in document.preferences:
        if agent not in doctors and agent not in hospitals:
            add(ViolationCode.UNKNOWN_AGENT, agent, f"preference given for unknown agent {agent!r}")
    for agent in agents:
        if agent not in document.preferences:
            add(ViolationCode.MISSING_PREFERENCE, agent, f"no preference relation for {agent!r}")

    for agent, chain in document.preferences.items():
        if agent not in doctors and agent not in hospitals:
            continue
        if not chain or chain[-1]:
            add(ViolationCode.MISSING_EMPTY_SET, agent, f"chain of {agent!r} does not end with []")
        seen = set()
        for position, entry in enumerate(chain):
            label = f"entry {position} of {agent!r}"
            if not entry and position != len(chain) - 1:
                add(ViolationCode.EMPTY_SET_NOT_LAST, agent, f"{label} is [] but not last")
            if len(set(entry)) != len(entry):
                add(ViolationCode.DUPLICATE_MEMBER, agent, f"{label} repeats a contract: {entry}")
            known = True
            counterparts = []
            for cid in entry:
                contract = contracts.get(cid)
                if contract is None:
                    add(ViolationCode.UNKNOWN_CONTRACT, agent, f"{label} names unknown contract {cid!r}")
                    known = False
                elif agent not in (contract.doctor, contract.hospital):
                    add(ViolationCode.FOREIGN_CONTRACT, agent, f"{label} contains {cid!r}, which does not involve {agent!r}")
                    known = False
                else:
                    counterparts.append(contract.hospital if agent == contract.doctor else contract.doctor)
            if known and len(set(counterparts)) != len(set(entry)):
                add(ViolationCode.INFEASIBLE_ENTRY, agent, f"{label} {sorted(entry)} has two contracts with one counterpart")
            key = frozenset(entry)
            if key in seen:
                add(ViolationCode.DUPLICATE_ENTRY, agent, f"{label} {sorted(entry)} appears twice")
            seen.add(key)

    return violations


def validate_market(document: MarketDocument) -> Tuple[Market, PreferenceProfile]:
    """Return the validated market and profile, or raise with every violation."""
    violations = collect_violations(document)
    if violations:
        logger.info(f"Market document rejected with {len(violations)} violation(s)")
        raise MarketValidationError(violations)

    market = Market(
        doctors=tuple(document.doctors),
        hospitals=tuple(document.hospitals),
        contracts=tuple(Contract(id=c.id, doctor=c.doctor, hospital=c.hospital) for c in document.contracts),
    )
    profile = PreferenceProfile(relations=tuple(
        PreferenceRelation(agent=agent, chain=document.preferences[agent]) for agent in market.agents
    ))
    return market, profile


def market_from_dict(data: Dict[str, Any]) -> Tuple[Market, PreferenceProfile]:
    """Validate an in-memory document (used by tests and the generator)."""
    try:
        document = MarketDocument.model_validate(data)
    except ValidationError as e:
        raise UsageError(f"Malformed market document: {e}")
    return validate_market(document)


def load_market(path: Union[str, Path]) -> Tuple[Market, PreferenceProfile]:
    return validate_market(load_market_document(path))


def market_to_dict(market: Market, profile: PreferenceProfile) -> Dict[str, Any]:
    """Canonical document: fixed key order, arrays in market order, set members sorted."""
    return {
        "doctors": list(market.doctors),
        "hospitals": list(market.hospitals),
        "contracts": [{"id": c.id, "doctor": c.doctor, "hospital": c.hospital} for c in market.contracts],
        "preferences": {
            agent: profile.for_agent(agent).to_document() for agent in market.agents
        },
    }


def dump_market_document(market: Market, profile: PreferenceProfile) -> str:
    return json.dumps(market_to_dict(market, profile), indent=2, ensure_ascii=False) + "\n"


def write_text_atomic(path: Union[str, Path], text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# =============================================================================
# Set-level operations
# =============================================================================

def _require_agent(market: Market, agent: str) -> None:
    if not market.has_agent(agent):
        raise UnknownAgentError(agent)


def restrict(market: Market, members: Iterable[str], agent: str) -> ContractSet:
    """X'_a: the contracts of ``members`` that involve ``agent``."""
    own = {c.id for c in market.contracts if c.involves(agent)}
    return contract_set(cid for cid in members if cid in own)


def is_feasible_for(market: Market, agent: str, members: Iterable[str]) -> bool:
    """At most one contract per counterpart (unitarity)."""
    own = restrict(market, members, agent)
    counterparts = [market.contract(cid).counterpart(agent) for cid in own]
    return len(set(counterparts)) == len(counterparts)


def feasible_sets(market: Market, agent: str) -> List[ContractSet]:
    """All feasible subsets of X_a, in the fixed set order."""
    scope = agent_scope(market, agent)
    return [scope.members(mask) for mask in scope.order if scope.feasible[mask]]


def choice(pref: PreferenceRelation, offers: Iterable[str]) -> ContractSet:
    """The best chain entry contained in the offers (the empty set if none is)."""
    available = set(offers)
    for entry in pref.chain:
        if available.issuperset(entry):
            return entry
    return ()


# =============================================================================
# Bitmask tables
# =============================================================================

def bits_of(mask: int) -> Iterator[int]:
    """Single-bit masks contained in ``mask``, lowest first."""
    while mask:
        low = mask & -mask
        yield low
        mask ^= low


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` (including 0 and ``mask``)."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass(frozen=True)
class AgentScope:
    """An agent's contracts X_a with bit positions and per-menu feasibility."""
    agent: str
    contracts: Tuple[str, ...]
    counterparts: Tuple[str, ...]
    feasible: Tuple[bool, ...]
    order: Tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.contracts)

    @property
    def full(self) -> int:
        return (1 << len(self.contracts)) - 1

    def bit(self, contract_id: str) -> int:
        return 1 << self.contracts.index(contract_id)

    def mask(self, members: Iterable[str]) -> int:
        """Encode ``members``; ids outside X_a are ignored (restriction)."""
        m = 0
        for cid in members:
            if cid in self.contracts:
                m |= 1 << self.contracts.index(cid)
        return m

    def members(self, mask: int) -> ContractSet:
        return tuple(cid for i, cid in enumerate(self.contracts) if mask >> i & 1)

    def contract_of(self, bit: int) -> str:
        return self.contracts[bit.bit_length() - 1]

    def order_key(self, mask: int) -> Tuple[int, Tuple[int, ...]]:
        return (bin(mask).count("1"), tuple(i for i in range(len(self.contracts)) if mask >> i & 1))


@lru_cache(maxsize=1024)
def agent_scope(market: Market, agent: str) -> AgentScope:
    _require_agent(market, agent)
    own = market.contracts_of(agent)
    ids = tuple(c.id for c in own)
    counterparts = tuple(c.counterpart(agent) for c in own)
    n = len(ids)
    feasible = []
    for mask in range(1 << n):
        seen = [counterparts[i] for i in range(n) if mask >> i & 1]
        feasible.append(len(set(seen)) == len(seen))
    order = sorted(
        range(1 << n),
        key=lambda m: (bin(m).count("1"), tuple(i for i in range(n) if m >> i & 1)),
    )
    return AgentScope(agent=agent, contracts=ids, counterparts=counterparts,
                      feasible=tuple(feasible), order=tuple(order))


@dataclass(frozen=True)
class ChoiceTable:
    """The choice function of one chain, tabulated over every menu of X_a."""
    scope: AgentScope
    chain: Tuple[int, ...]
    table: Tuple[int, ...]

    def choose(self, menu: int) -> int:
        return self.table[menu]

    def acceptable(self) -> List[int]:
        """A(P) as masks, in the fixed set order (starts with the empty set)."""
        return [m for m in self.scope.order if self.table[m] == m]

    def relation(self) -> PreferenceRelation:
        return relation_from_masks(self.scope, self.chain)


def tabulate(scope: AgentScope, chain: Iterable[int]) -> ChoiceTable:
    """Tabulate the choice function of a chain of masks (the empty set may be omitted)."""
    chain = tuple(m for m in chain if m)
    full = scope.full
    table: List[int] = [-1] * (full + 1)
    for entry in chain:
        for extra in submasks(full & ~entry):
            menu = entry | extra
            if table[menu] < 0:
                table[menu] = entry
    return ChoiceTable(scope=scope, chain=chain, table=tuple(0 if t < 0 else t for t in table))


@lru_cache(maxsize=4096)
def choice_table(market: Market, pref: PreferenceRelation) -> ChoiceTable:
    """Compile ``pref`` against the agent's contracts in ``market``."""
    scope = agent_scope(market, pref.agent)
    return tabulate(scope, (scope.mask(entry) for entry in pref.chain))


def relation_from_masks(scope: AgentScope, chain: Iterable[int]) -> PreferenceRelation:
    entries = [scope.members(m) for m in chain if m]
    entries.append(())
    return PreferenceRelation(agent=scope.agent, chain=tuple(entries))
