"""Seeded generation of markets, preference relations and sub-preference pairs.

Every random stream is a ``random.Random`` seeded with a string built from the
seed and a purpose label, so results depend only on (seed, params) and are
the same on every platform and interpreter run.
"""
import logging
import random
from typing import List, Optional, Tuple

from config import GuardLimits, settings
from errors import PreconditionViolated, check_guard
from market_core import agent_scope
from models import Contract, GenParams, Market, PreferenceProfile, PreferenceRelation
from subpref import SubPreferenceSearch

logger = logging.getLogger(__name__)


def seeded_rng(*labels) -> random.Random:
    """Independent deterministic stream for one purpose."""
    return random.Random("/".join(str(label) for label in labels))


def _ids(prefix: str, count: int) -> List[str]:
    width = len(str(count)) if count > 9 else 1
    return [f"{prefix}{i:0{width}d}" for i in range(1, count + 1)]


def corpus_params(seed: int) -> GenParams:
    """Instance size for corpus seed ``seed``: up to 4 doctors, 3 hospitals and 8 contracts."""
    rng = seeded_rng("corpus", seed)
    return GenParams(
        seed=seed,
        doctors=rng.randint(1, 4),
        hospitals=rng.randint(1, 3),
        contracts=rng.randint(1, 8),
        chain_length_max=rng.randint(1, 5),
        acceptance_bias=rng.choice([0.3, 0.5, 0.7]),
    )


class InstanceGenerator:
    """Deterministic instance factory for property corpora."""

    def __init__(self, guards: Optional[GuardLimits] = None):
        self.guards = guards or settings.guards
        self.search = SubPreferenceSearch(self.guards)

    def _check_params(self, params: GenParams) -> None:
        check_guard("gen_agents", self.guards.gen_agents, params.doctors)
        check_guard("gen_agents", self.guards.gen_agents, params.hospitals)
        check_guard("gen_contracts", self.guards.gen_contracts, params.contracts)
        check_guard("gen_chain_length", self.guards.gen_chain_length, params.chain_length_max)

    def random_market(self, params: GenParams) -> Market:
        """
        Draw a market; contract endpoints are uniform over the pairs whose
        agents still have room under the ``agent_contracts`` guard.

        Args:
            params: Generation parameters

        Returns:
            Market with ids ``d1..``, ``h1..``, ``x1..`` (zero-padded past nine)
        """
        self._check_params(params)
        if params.contracts and not (params.doctors and params.hospitals):
            raise PreconditionViolated("Contracts need at least one doctor and one hospital")
        rng = seeded_rng("market", params.seed)
        doctors = _ids("d", params.doctors)
        hospitals = _ids("h", params.hospitals)
        load = {a: 0 for a in doctors + hospitals}
        cap = self.guards.agent_contracts

        contracts = []
        for cid in _ids("x", params.contracts):
            pairs = [(d, h) for d in doctors for h in hospitals if load[d] < cap and load[h] < cap]
            if not pairs:
                logger.debug(f"Every agent is full; market keeps {len(contracts)} contract(s)")
                break
            d, h = rng.choice(pairs)
            load[d] += 1
            load[h] += 1
            contracts.append(Contract(id=cid, doctor=d, hospital=h))
        return Market(doctors=tuple(doctors), hospitals=tuple(hospitals), contracts=tuple(contracts))

    def random_preference(self, seed: int, agent: str, market: Market, params: GenParams) -> PreferenceRelation:
        """Random canonical chain: a random acceptable family, then a random supersets-first order."""
        check_guard("gen_chain_length", self.guards.gen_chain_length, params.chain_length_max)
        rng = seeded_rng("preference", seed, agent)
        scope = agent_scope(market, agent)
        candidates = [m for m in scope.order if m and scope.feasible[m]]
        family = [m for m in candidates if rng.random() < params.acceptance_bias]
        rng.shuffle(family)
        remaining = family[:params.chain_length_max]

        chain = []
        while remaining:
            tops = [m for m in remaining if not any(o != m and o & m == m for o in remaining)]
            tops.sort(key=scope.order_key)
            pick = rng.choice(tops)
            chain.append(pick)
            remaining.remove(pick)
        entries = [scope.members(m) for m in chain] + [()]
        return PreferenceRelation(agent=agent, chain=tuple(entries))

    def random_profile(self, market: Market, params: GenParams) -> PreferenceProfile:
        return PreferenceProfile(relations=tuple(
            self.random_preference(params.seed, agent, market, params) for agent in market.agents
        ))

    def random_instance(self, params: GenParams) -> Tuple[Market, PreferenceProfile]:
        market = self.random_market(params)
        return market, self.random_profile(market, params)

    def random_subpreference_pair(
        self, seed: int, market: Market, agent: Optional[str] = None, params: Optional[GenParams] = None
    ) -> Tuple[PreferenceRelation, PreferenceRelation]:
        """
        Draw sup at random and derive sub ⊑ sup from it.

        sub starts from the canonical form of sup (or its bi-complementary
        reduction, on a coin flip) and drops random entries, keeping each drop
        only when the result is still a sub-preference of sup.

        Args:
            seed: Seed of the pair
            market: Market to draw in
            agent: Agent to draw for; a random agent when omitted
            params: Chain parameters (defaults with ``seed``)

        Returns:
            (sub, sup)
        """
        params = params or GenParams(seed=seed)
        rng = seeded_rng("pair", seed)
        if agent is None:
            if not market.agents:
                raise PreconditionViolated("Market has no agents")
            agent = rng.choice(market.agents)
        sup = self.random_preference(seed, agent, market, params)
        current = self.search.canonicalize(market, sup)
        if rng.random() < 0.5 and agent_scope(market, agent).size <= self.guards.agent_contracts:
            current = self.search.reduce_minimal(market, sup)

        entries = [e for e in current.chain if e]
        rng.shuffle(entries)
        for entry in entries:
            if rng.random() >= 0.5:
                continue
            candidate = current.with_chain(e for e in current.chain if e != entry)
            if self.search.is_subpreference(market, candidate, sup)[0]:
                current = candidate
        return current, sup


# Global generator instance
instance_generator = InstanceGenerator()
