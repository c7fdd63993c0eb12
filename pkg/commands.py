"""Command handlers behind the CLI verbs.

Each handler takes the parsed arguments and returns the ``Report`` to print
together with the exit code (0 when every verdict holds, 1 otherwise).
"""
import logging
from argparse import Namespace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from pydantic import ValidationError

from choice_analysis import ChoiceAnalyzer
from config import Settings
from counterexample import CounterexampleBuilder
from domains import DomainClassifier
from errors import ToolkitError, UnknownAgentError, UsageError
from gen import InstanceGenerator
from market_core import (
    agent_scope,
    choice,
    collect_violations,
    dump_market_document,
    load_market,
    load_market_document,
    market_to_dict,
    validate_market,
    write_text_atomic,
)
from models import (
    ConstructedMarket,
    GenParams,
    Market,
    OverlapCase,
    PreferenceProfile,
    PreferenceRelation,
    Report,
    contract_set,
    format_set,
)
from reports import jsonable, verdict
from stability import StabilityChecker
from subpref import SubPreferenceSearch

logger = logging.getLogger(__name__)

Outcome = Tuple[Report, int]


def split_ids(text: Optional[str]) -> List[str]:
    """``"x,y"`` -> ``["x", "y"]``; empty or missing text is the empty set."""
    if not text:
        return []
    return [part.strip() for part in text.split(",") if part.strip()]


def _outcome(report: Report) -> Outcome:
    return report, 0 if report.all_hold else 1


def _profile_rows(market: Market, profile: PreferenceProfile) -> List[dict]:
    return [{"agent": a, "chain": profile.for_agent(a).to_display()} for a in market.agents]


class CommandHandlers:
    """One method per CLI verb, sharing services built from one ``Settings``."""

    def __init__(self, cfg: Settings):
        self.cfg = cfg
        guards = cfg.guards
        self.analyzer = ChoiceAnalyzer(guards)
        self.search = SubPreferenceSearch(guards)
        self.stability = StabilityChecker(guards)
        self.classifier = DomainClassifier(guards)
        self.builder = CounterexampleBuilder(guards)
        self.generator = InstanceGenerator(guards)

    # -------------------------------------------------------------------------
    # Input helpers
    # -------------------------------------------------------------------------

    def _relation(self, market: Market, profile: PreferenceProfile, agent: Optional[str]) -> PreferenceRelation:
        if not agent:
            raise UsageError("--agent is required for this command")
        if not market.has_agent(agent):
            raise UnknownAgentError(agent)
        return profile.for_agent(agent)

    def _external_relation(self, path: str, market: Market, agent: str) -> PreferenceRelation:
        """Relation of ``agent`` read from another market document over the same contracts."""
        _, other = load_market(path)
        try:
            relation = other.for_agent(agent)
        except KeyError:
            raise UsageError(f"{path} has no relation for {agent!r}")
        own = set(agent_scope(market, agent).contracts)
        foreign = sorted({cid for entry in relation.chain for cid in entry} - own)
        if foreign:
            raise UsageError(f"{path} ranks contracts {foreign} that {agent!r} does not sign in this market")
        return relation

    # -------------------------------------------------------------------------
    # Verbs
    # -------------------------------------------------------------------------

    def validate(self, args: Namespace) -> Outcome:
        document = load_market_document(args.file)
        violations = collect_violations(document)
        report = Report(command="validate", inputs=[args.file])
        report.verdicts.append(verdict("valid", not violations))
        if violations:
            report.payload["violations"] = jsonable([v.model_dump(mode="json") for v in violations])
            return report, 2
        market, profile = validate_market(document)
        report.payload["market"] = {
            "doctors": len(market.doctors),
            "hospitals": len(market.hospitals),
            "contracts": len(market.contracts),
        }
        return report, 0

    def choice(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        pref = self._relation(market, profile, args.agent)
        report = Report(command="choice", inputs=[args.file])
        if args.offer is not None:
            offers = split_ids(args.offer)
            unknown = sorted(set(offers) - set(market.contract_ids))
            if unknown:
                raise UsageError(f"Unknown contracts in --offer: {unknown}")
            report.payload["choice"] = {"agent": pref.agent, "offers": contract_set(offers),
                                        "chosen": list(choice(pref, offers))}
        if args.all or args.offer is None:
            report.payload["menus"] = jsonable([
                {"menu": list(menu), "chosen": list(chosen)}
                for menu, chosen in self.analyzer.choice_menu_table(market, pref)
            ])
        report.payload = jsonable(report.payload)
        return _outcome(report)

    def substitutable(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        agents = [args.agent] if args.agent else list(market.agents)
        report = Report(command="substitutable", inputs=[args.file])
        rows = []
        for agent in agents:
            pref = self._relation(market, profile, agent)
            holds, witness = self.analyzer.is_substitutable(market, pref)
            report.verdicts.append(verdict("substitutable", holds, subject=agent, witness=witness))
            path_independent, _ = self.analyzer.is_path_independent(market, pref)
            rows.append({
                "agent": agent,
                "chain": pref.to_display(),
                "acceptable": ", ".join(format_set(s) for s in self.analyzer.acceptable_sets(market, pref)),
                "path_independent": path_independent,
                "complementarities": "; ".join(
                    f"{format_set(r.base)}: {r.arrow()}" for r in self.analyzer.complementarity_report(market, pref)
                ) or "-",
            })
        report.payload["relations"] = jsonable(rows)
        return _outcome(report)

    def pseudo(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        pref = self._relation(market, profile, args.agent)
        result = self.search.is_pseudo_substitutable(market, pref)
        report = Report(command="pseudo", inputs=[args.file])
        if result.holds:
            report.verdicts.append(verdict(
                "pseudo-substitutable", True, subject=pref.agent,
                witness={"certificate": result.certificate.to_display()},
            ))
            report.payload["certificate"] = jsonable(result.certificate.to_document())
            if args.certificate:
                write_text_atomic(args.certificate, dump_market_document(market, profile.replace(result.certificate)))
                logger.info(f"Certificate written to {args.certificate}")
        else:
            report.verdicts.append(verdict("pseudo-substitutable", False, subject=pref.agent))
            report.payload["refutation"] = jsonable([
                {
                    "minimal_subpreference": r.minimal_sub.to_display(),
                    "one_way": None if r.record is None else f"{format_set(r.record.base)}: {r.record.arrow()}",
                }
                for r in result.refutation
            ])
        return _outcome(report)

    def subpref(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        sup = self._relation(market, profile, args.agent)
        sub = self._external_relation(args.sub, market, sup.agent)
        holds, witness = self.search.is_subpreference(market, sub, sup)
        report = Report(command="subpref", inputs=[args.file, args.sub])
        report.verdicts.append(verdict("sub-preference", holds, subject=sup.agent, witness=witness))
        report.payload["relations"] = {"sub": sub.to_display(), "sup": sup.to_display()}
        return _outcome(report)

    def minimal(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        sup = self._relation(market, profile, args.agent)
        report = Report(command="minimal", inputs=[args.file] + ([args.sub] if args.sub else []))
        if args.sub:
            sub = self._external_relation(args.sub, market, sup.agent)
            report.verdicts.append(verdict("minimal", self.search.is_minimal(market, sub, sup), subject=sup.agent))
        report.payload["minimal_subpreferences"] = [
            m.to_display() for m in self.search.minimal_subpreferences(market, sup)
        ]
        return _outcome(report)

    def classify(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        agents = [args.agent] if args.agent else list(market.hospitals)
        report = Report(command="classify", inputs=[args.file])
        rows = []
        for agent in agents:
            pref = self._relation(market, profile, agent)
            result = self.classifier.classify(market, pref, strict=not args.permissive_completion)
            rows.append({
                "agent": result.agent,
                "substitutable": result.substitutable,
                "pseudo": result.pseudo_substitutable,
                "bilateral": result.bilaterally_substitutable,
                "completable": result.substitutably_completable,
                "completion": None if result.completion_witness is None
                else ", ".join(format_set(s) for s in result.completion_witness),
            })
        report.payload["classification"] = jsonable(rows)
        return _outcome(report)

    def stable(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        report = Report(command="stable", inputs=[args.file])
        if args.allocation is not None:
            single = self.stability.report(market, profile, split_ids(args.allocation), corewise=args.corewise)
            report.verdicts.append(verdict(
                "pairwise-stable", single.pairwise_stable, subject=str(single.allocation),
                witness=None if single.pairwise_stable else {
                    "ir_violator": single.ir_violator, "blockers": list(single.blockers)},
            ))
            if args.corewise:
                report.verdicts.append(verdict(
                    "corewise-stable", bool(single.corewise_stable), subject=str(single.allocation),
                    witness=None if single.deviation is None else {"deviation": list(single.deviation)},
                ))
            return _outcome(report)

        rows = []
        for r in self.stability.reports(market, profile, corewise=args.corewise):
            row = {
                "allocation": str(r.allocation),
                "ir": r.individually_rational,
                "violator": r.ir_violator,
                "blockers": format_set(r.blockers) if r.blockers else None,
                "pairwise": r.pairwise_stable,
            }
            if args.corewise:
                row["corewise"] = r.corewise_stable
                row["deviation"] = None if r.deviation is None else format_set(r.deviation)
            rows.append(row)
        report.payload["allocations"] = jsonable(rows)
        report.payload["stable_set"] = [list(a.contracts) for a in self.stability.stable_set(market, profile)]
        if args.corewise:
            report.payload["corewise_stable"] = [
                row["allocation"] for row in rows if row.get("corewise")
            ]
        return _outcome(report)

    def inclusion(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        sub_market, subprofile = load_market(args.sub)
        if sub_market != market:
            raise UsageError(f"{args.sub} describes a different market than {args.file}")
        holds = self.stability.verify_inclusion(market, subprofile, profile)
        report = Report(command="inclusion", inputs=[args.file, args.sub])
        report.verdicts.append(verdict("stable-set-inclusion", holds))
        report.payload["stable_sets"] = {
            "sub": [str(a) for a in self.stability.stable_set(market, subprofile)],
            "profile": [str(a) for a in self.stability.stable_set(market, profile)],
        }
        return _outcome(report)

    def counterexample(self, args: Namespace) -> Outcome:
        if args.reference:
            return self._reference(args.reference)
        if not args.file:
            raise UsageError("counterexample needs a market document or --reference CASE")
        market, profile = load_market(args.file)
        pref = self._relation(market, profile, args.agent)
        witness = self.builder.find_unidirectional_witness(market, pref)
        constructed = self.builder.build_counterexample(market, pref, witness)
        certified = self.builder.verify_empty_stable(constructed)

        report = Report(command="counterexample", inputs=[args.file])
        report.verdicts.append(verdict("empty-stable-set", certified, subject=str(constructed.case)))
        report.payload["witness"] = jsonable({
            "minimal_subpreference": witness.minimal_sub.to_display(),
            "base": format_set(witness.base),
            "menu": None if witness.menu is None else format_set(witness.menu),
            "pairs": ", ".join(str(p) for p in witness.pairs),
            "case": witness.overlap_case,
            "remainder": format_set(constructed.remainder),
        })
        report.payload["profile"] = _profile_rows(constructed.market, constructed.profile)
        report.payload["blocking_table"] = jsonable([
            {"Y_h": format_set(row.hospital_part), "Y_partner": format_set(row.partner_part),
             "blockers": format_set(row.blockers) if row.blockers else None}
            for row in self.builder.blocking_table(constructed)
        ])
        report.payload["stable_set"] = [
            str(a) for a in self.stability.stable_set(constructed.market, constructed.profile)
        ]
        original = constructed.profile.replace(PreferenceRelation(agent=pref.agent, chain=pref.chain))
        report.payload["stable_set_under_original"] = [
            str(a) for a in self.stability.stable_set(constructed.market, original)
        ]

        chosen: ConstructedMarket = constructed
        if not certified and args.synthesize:
            synthesized = self.builder.synthesize(market, pref)
            report.verdicts.append(verdict("synthesized-empty-stable-set", synthesized is not None, subject=pref.agent))
            if synthesized is not None:
                chosen = synthesized
                report.payload["synthesized_profile"] = _profile_rows(synthesized.market, synthesized.profile)

        if args.output:
            write_text_atomic(args.output, dump_market_document(chosen.market, chosen.profile))
            logger.info(f"Constructed market written to {args.output}")
        return _outcome(report)

    def _reference(self, case: str) -> Outcome:
        try:
            overlap = OverlapCase(case)
        except ValueError:
            raise UsageError(f"Unknown case {case!r}; choose from {[c.value for c in OverlapCase]}")
        checks = self.builder.check_reference_rows(overlap)
        report = Report(command="counterexample", inputs=[f"reference:{overlap.value}"])
        report.verdicts.append(verdict("reference-rows", all(c.listed_blocks for c in checks), subject=overlap.value))
        report.payload["rows"] = jsonable([
            {"Y_h": format_set(c.hospital_part), "Y_partner": format_set(c.partner_part),
             "listed": c.listed_blocker, "listed_blocks": c.listed_blocks, "blocked": c.blocked}
            for c in checks
        ])
        return _outcome(report)

    def claim1(self, args: Namespace) -> Outcome:
        market, profile = load_market(args.file)
        pref = self._relation(market, profile, args.agent)
        if args.sub:
            minimal = self._external_relation(args.sub, market, pref.agent)
            remainder = contract_set(split_ids(args.remainder))
        else:
            witness = self.builder.find_unidirectional_witness(market, pref)
            minimal = witness.minimal_sub
            remainder = contract_set(split_ids(args.remainder)) if args.remainder is not None else witness.remainder
        holds = self.builder.verify_claim1(market, minimal, remainder)
        report = Report(command="claim1", inputs=[args.file] + ([args.sub] if args.sub else []))
        report.verdicts.append(verdict("claim1", holds, subject=pref.agent))
        report.payload["inputs"] = {"minimal_subpreference": minimal.to_display(), "remainder": format_set(remainder)}
        return _outcome(report)

    def gen(self, args: Namespace) -> Outcome:
        try:
            params = GenParams(
                seed=args.seed if args.seed is not None else self.cfg.seed,
                doctors=args.doctors,
                hospitals=args.hospitals,
                contracts=args.contracts,
                chain_length_max=args.chain_length,
                acceptance_bias=args.bias,
            )
        except ValidationError as e:
            problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
            raise UsageError(f"Invalid generator parameters: {problems}") from e
        market, profile = self.generator.random_instance(params)
        report = Report(command="gen", inputs=[f"seed:{params.seed}"])
        if args.output:
            write_text_atomic(args.output, dump_market_document(market, profile))
            report.payload["written"] = str(Path(args.output))
        else:
            report.payload["document"] = market_to_dict(market, profile)
        return _outcome(report)

    def handler(self, command: str) -> Callable[[Namespace], Outcome]:
        handlers: Dict[str, Callable[[Namespace], Outcome]] = {
            "validate": self.validate,
            "choice": self.choice,
            "substitutable": self.substitutable,
            "pseudo": self.pseudo,
            "subpref": self.subpref,
            "minimal": self.minimal,
            "classify": self.classify,
            "stable": self.stable,
            "inclusion": self.inclusion,
            "counterexample": self.counterexample,
            "claim1": self.claim1,
            "gen": self.gen,
        }
        if command not in handlers:
            raise UsageError(f"Unknown command: {command}")
        return handlers[command]


def run_command(command: str, args: Namespace, cfg: Settings) -> Outcome:
    """Dispatch one verb; toolkit errors pass through with their exit codes."""
    handlers = CommandHandlers(cfg)
    try:
        return handlers.handler(command)(args)
    except ToolkitError:
        raise
    except ValidationError as e:
        raise UsageError(f"{command} failed: {e}") from e
    except Exception:
        logger.exception(f"{command} failed")
        raise
