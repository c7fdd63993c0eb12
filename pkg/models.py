"""Pydantic models for markets, preference relations, verdicts and reports."""
from typing import Any, Dict, Iterable, List, Optional, Tuple
from enum import Enum
from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator


# A set of contract ids, kept sorted so that equal sets compare and serialize equally.
ContractSet = Tuple[str, ...]


def contract_set(ids: Iterable[str]) -> ContractSet:
    """Normalize any iterable of contract ids into a ``ContractSet``."""
    return tuple(sorted(set(ids)))


def set_order_key(members: ContractSet) -> Tuple[int, ContractSet]:
    """The fixed set order: by size, then lexicographically by sorted ids."""
    return (len(members), tuple(sorted(members)))


def format_set(members: Iterable[str]) -> str:
    """Compact display: ``xyz`` for single-letter ids, ``{x1,y2}`` otherwise, ``∅`` when empty."""
    ids = sorted(members)
    if not ids:
        return "∅"
    if all(len(i) == 1 for i in ids):
        return "".join(ids)
    return "{" + ",".join(ids) + "}"


# =============================================================================
# Market description
# =============================================================================

class ViolationCode(str, Enum):
    """Validity rules a market document can break."""
    DUPLICATE_ID = "duplicate-id"
    DUPLICATE_AGENT = "duplicate-agent"
    UNKNOWN_AGENT = "unknown-agent"
    UNKNOWN_CONTRACT = "unknown-contract"
    FOREIGN_CONTRACT = "foreign-contract"
    DUPLICATE_MEMBER = "duplicate-member"
    INFEASIBLE_ENTRY = "infeasible-entry"
    DUPLICATE_ENTRY = "duplicate-entry"
    MISSING_EMPTY_SET = "missing-empty-set"
    EMPTY_SET_NOT_LAST = "empty-set-not-last"
    MISSING_PREFERENCE = "missing-preference"


class Violation(BaseModel):
    """One broken validity rule, naming the offending entity."""
    model_config = ConfigDict(frozen=True, use_enum_values=True)

    code: ViolationCode = Field(..., description="Rule that was broken")
    entity: str = Field(..., description="Contract id or agent token at fault")
    message: str = Field(..., description="Human-readable explanation")


class ContractEntry(BaseModel):
    """A contract as written in a market document."""
    id: str = Field(..., min_length=1)
    doctor: str = Field(..., min_length=1)
    hospital: str = Field(..., min_length=1)


class MarketDocument(BaseModel):
    """Raw shape of the JSON market document, before semantic validation."""
    doctors: List[str] = Field(default_factory=list)
    hospitals: List[str] = Field(default_factory=list)
    contracts: List[ContractEntry] = Field(default_factory=list)
    preferences: Dict[str, List[List[str]]] = Field(default_factory=dict)


class Contract(BaseModel):
    """A doctor-hospital agreement token."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1, description="Contract id, unique within the market")
    doctor: str = Field(..., description="Signing doctor (x_D)")
    hospital: str = Field(..., description="Signing hospital (x_H)")

    def involves(self, agent: str) -> bool:
        return agent == self.doctor or agent == self.hospital

    def counterpart(self, agent: str) -> str:
        """The other signatory of the contract."""
        return self.hospital if agent == self.doctor else self.doctor


class Market(BaseModel):
    """Finite universe of doctors, hospitals and contracts."""
    model_config = ConfigDict(frozen=True)

    doctors: Tuple[str, ...] = Field(default_factory=tuple, description="Doctors D, in input order")
    hospitals: Tuple[str, ...] = Field(default_factory=tuple, description="Hospitals H, in input order")
    contracts: Tuple[Contract, ...] = Field(default_factory=tuple, description="Contracts X, in input order")

    @property
    def agents(self) -> Tuple[str, ...]:
        return self.doctors + self.hospitals

    @property
    def contract_ids(self) -> ContractSet:
        return contract_set(c.id for c in self.contracts)

    def has_agent(self, agent: str) -> bool:
        return agent in self.doctors or agent in self.hospitals

    def is_hospital(self, agent: str) -> bool:
        return agent in self.hospitals

    def contract(self, contract_id: str) -> Contract:
        for c in self.contracts:
            if c.id == contract_id:
                return c
        raise KeyError(contract_id)

    def contracts_of(self, agent: str) -> List[Contract]:
        """Contracts involving ``agent`` (X_a), sorted by id."""
        return sorted((c for c in self.contracts if c.involves(agent)), key=lambda c: c.id)


class PreferenceRelation(BaseModel):
    """An agent's acceptable chain of contract sets, best first, ending with the empty set."""
    model_config = ConfigDict(frozen=True)

    agent: str = Field(..., description="Agent whose preference this is")
    chain: Tuple[ContractSet, ...] = Field(..., description="Acceptable sets, best first; last is ()")

    @field_validator("chain", mode="before")
    @classmethod
    def normalize_chain(cls, value):
        return tuple(contract_set(entry) for entry in value)

    @classmethod
    def of(cls, agent: str, entries: Iterable[Iterable[str]]) -> "PreferenceRelation":
        """Build a relation; the terminal empty set is appended when missing."""
        chain = [contract_set(e) for e in entries]
        if not chain or chain[-1]:
            chain.append(())
        return cls(agent=agent, chain=tuple(chain))

    def with_chain(self, chain: Iterable[ContractSet]) -> "PreferenceRelation":
        return PreferenceRelation(agent=self.agent, chain=tuple(chain))

    def to_display(self) -> str:
        """Render as ``xyz, z, xy, x, y, ∅``."""
        return ", ".join(format_set(entry) for entry in self.chain)

    def to_document(self) -> List[List[str]]:
        return [list(entry) for entry in self.chain]


class PreferenceProfile(BaseModel):
    """One preference relation per agent."""
    model_config = ConfigDict(frozen=True)

    relations: Tuple[PreferenceRelation, ...] = Field(default_factory=tuple)

    def for_agent(self, agent: str) -> PreferenceRelation:
        for relation in self.relations:
            if relation.agent == agent:
                return relation
        raise KeyError(agent)

    def replace(self, relation: PreferenceRelation) -> "PreferenceProfile":
        """Return a profile with ``relation`` substituted for the agent's current one."""
        return PreferenceProfile(relations=tuple(
            relation if r.agent == relation.agent else r for r in self.relations
        ))


# =============================================================================
# Single-relation verdicts
# =============================================================================

class SubstitutabilityWitness(BaseModel):
    """Removing ``removed`` from ``menu`` makes the agent drop ``dropped``."""
    model_config = ConfigDict(frozen=True)

    menu: ContractSet
    removed: str
    dropped: str


class PathIndependenceWitness(BaseModel):
    """C(first ∪ second) differs from C(C(first) ∪ second)."""
    model_config = ConfigDict(frozen=True)

    first: ContractSet
    second: ContractSet


class ComplementarityKind(str, Enum):
    ONE_WAY = "one-way"
    BI_COMPLEMENTARY = "bi-complementary"


class ComplementarityRecord(BaseModel):
    """A complementary pair inside an acceptable base set."""
    model_config = ConfigDict(frozen=True, use_enum_values=True)

    base: ContractSet = Field(..., description="Acceptable set the pair lives in")
    kind: ComplementarityKind
    dependent: str = Field(..., description="Contract rejected once the support is removed")
    support: str = Field(..., description="Contract kept once the dependent is removed (for one-way pairs)")

    def arrow(self) -> str:
        link = "<->" if self.kind == ComplementarityKind.BI_COMPLEMENTARY else "->"
        return f"{self.support} {link} {self.dependent}"


class BlairVerdict(str, Enum):
    FIRST_PREFERRED = "first-preferred"
    SECOND_PREFERRED = "second-preferred"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


class SubprefBreachKind(str, Enum):
    ACCEPTABILITY = "acceptability-breach"
    BLOCKING = "blocking-breach"


class SubprefWitness(BaseModel):
    """Why a relation is not a sub-preference of another."""
    model_config = ConfigDict(frozen=True, use_enum_values=True)

    kind: SubprefBreachKind
    menu: ContractSet
    contract: Optional[str] = None


class MinimalRefutation(BaseModel):
    """A minimal sub-preference together with one of its one-way pairs (if any)."""
    model_config = ConfigDict(frozen=True)

    minimal_sub: PreferenceRelation
    record: Optional[ComplementarityRecord] = None


class PseudoVerdict(BaseModel):
    """Outcome of the pseudo-substitutability oracle."""
    model_config = ConfigDict(frozen=True)

    holds: bool
    certificate: Optional[PreferenceRelation] = None
    refutation: Tuple[MinimalRefutation, ...] = ()

    @model_validator(mode="after")
    def certificate_iff_holds(self):
        if self.holds != (self.certificate is not None):
            raise ValueError("certificate must be present exactly when the verdict holds")
        return self


class BilateralWitness(BaseModel):
    """Offering ``x`` next to ``z`` at ``menu`` makes the hospital take ``z``."""
    model_config = ConfigDict(frozen=True)

    x: str
    z: str
    menu: ContractSet


class DomainClassification(BaseModel):
    """Membership of one relation in the four comparison domains."""
    model_config = ConfigDict(frozen=True)

    agent: str
    substitutable: bool
    pseudo_substitutable: bool
    bilaterally_substitutable: bool
    substitutably_completable: bool
    completion_witness: Optional[Tuple[ContractSet, ...]] = None

    @model_validator(mode="after")
    def substitutable_is_central(self):
        if self.substitutable and not (
            self.pseudo_substitutable and self.bilaterally_substitutable and self.substitutably_completable
        ):
            raise ValueError(f"substitutable relation of {self.agent} fell outside a containing domain")
        return self


# =============================================================================
# Allocations and stability
# =============================================================================

class Allocation(BaseModel):
    """A contract set feasible for every agent."""
    model_config = ConfigDict(frozen=True)

    contracts: ContractSet

    def __str__(self) -> str:
        return format_set(self.contracts)


class StabilityReport(BaseModel):
    """Individual rationality and blocking analysis of one allocation."""
    model_config = ConfigDict(frozen=True)

    allocation: Allocation
    individually_rational: bool
    ir_violator: Optional[str] = Field(None, description="First agent (doctors, then hospitals) rejecting part of Y")
    blockers: ContractSet = ()
    pairwise_stable: bool
    corewise_stable: Optional[bool] = Field(None, description="None when corewise stability was not evaluated")
    deviation: Optional[ContractSet] = None

    @model_validator(mode="after")
    def pairwise_matches_parts(self):
        if self.pairwise_stable != (self.individually_rational and not self.blockers):
            raise ValueError("pairwise stability must equal IR and no blocking contract")
        return self


# =============================================================================
# Counterexample construction
# =============================================================================

class OverlapCase(str, Enum):
    SINGLE_PAIR = "single-pair"
    DISJOINT_PAIRS = "disjoint-pairs"
    OVERLAPPING_CHAIN = "overlapping-chain"
    OVERLAPPING_SHARED_DEPENDENT = "overlapping-shared-dependent"
    OVERLAPPING_SHARED_SUPPORT = "overlapping-shared-support"
    OVERLAPPING_CYCLIC = "overlapping-cyclic"


class ComplementarityPair(BaseModel):
    """``support`` is kept without ``dependent``; ``dependent`` is rejected without ``support``."""
    model_config = ConfigDict(frozen=True)

    support: str
    dependent: str

    def __str__(self) -> str:
        return f"{self.support} -> {self.dependent}"


class UnidirectionalWitness(BaseModel):
    """One-way complementarity found in a minimal sub-preference."""
    model_config = ConfigDict(frozen=True, use_enum_values=True)

    minimal_sub: PreferenceRelation
    base: ContractSet = Field(..., description="Acceptable set holding the pairs")
    pairs: Tuple[ComplementarityPair, ...]
    overlap_case: OverlapCase
    menu: Optional[ContractSet] = Field(
        None, description="Menu the pairs were observed at, when they do not show at any acceptable base"
    )

    @property
    def remainder(self) -> ContractSet:
        """X̄: the base without the contracts named by the pairs."""
        named = {p.support for p in self.pairs} | {p.dependent for p in self.pairs}
        return tuple(c for c in self.base if c not in named)


class ConstructedMarket(BaseModel):
    """A market built around a non-pseudo-substitutable hospital."""
    model_config = ConfigDict(frozen=True, use_enum_values=True)

    market: Market
    profile: PreferenceProfile
    case: Optional[OverlapCase] = Field(None, description="Recipe case; None for synthesized markets")
    hospital: str
    partner: str = Field(..., description="The added hospital h'")
    remainder: ContractSet = ()
    links: Tuple[Tuple[str, str], ...] = Field(
        default_factory=tuple, description="(original contract, added contract with the partner) per gadget doctor"
    )


class BlockingRow(BaseModel):
    """One individually rational allocation of a constructed market, split by hospital."""
    model_config = ConfigDict(frozen=True)

    hospital_part: ContractSet
    partner_part: ContractSet
    blockers: ContractSet


class ReferenceRowCheck(BaseModel):
    """A documented table row checked against the computed blockers."""
    model_config = ConfigDict(frozen=True)

    hospital_part: ContractSet
    partner_part: ContractSet
    listed_blocker: str
    listed_blocks: bool
    blocked: bool


# =============================================================================
# Generation
# =============================================================================

class GenParams(BaseModel):
    """Parameters of the seeded generator."""
    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0, lt=2 ** 64)
    doctors: int = Field(3, ge=0)
    hospitals: int = Field(1, ge=0)
    contracts: int = Field(3, ge=0)
    chain_length_max: int = Field(4, ge=0)
    acceptance_bias: float = Field(0.5, ge=0.0, le=1.0)


# =============================================================================
# Reports
# =============================================================================

class Verdict(BaseModel):
    """A structured predicate result."""
    predicate: str
    subject: str = ""
    holds: bool
    witness: Optional[Dict[str, Any]] = None


class Report(BaseModel):
    """Everything one command prints; the table view and JSON view both render from it."""
    command: str
    inputs: List[str] = Field(default_factory=list)
    verdicts: List[Verdict] = Field(default_factory=list)
    payload: Dict[str, Any] = Field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(v.holds for v in self.verdicts)
