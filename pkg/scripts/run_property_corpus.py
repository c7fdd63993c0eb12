"""
Property Corpus Runner

Generates one seeded market per seed and checks the structural properties of
pseudo-substitutability on it. Failing instances are written next to the log
so they can be replayed with the CLI.

Usage:
    # Default corpus (seeds 1-500)
    python scripts/run_property_corpus.py

    # A slice of the corpus
    python scripts/run_property_corpus.py --first 1 --last 50
"""

import sys
import json
import logging
import argparse
from pathlib import Path
from typing import Callable, Dict, List, Tuple
from datetime import datetime
from collections import Counter

# Setup paths
sys.path.append(str(Path(__file__).parent.parent))

# Third-party imports
from tqdm import tqdm

# Local imports
from choice_analysis import ChoiceAnalyzer
from config import settings
from errors import GuardExceeded
from gen import InstanceGenerator, corpus_params
from market_core import dump_market_document, write_text_atomic
from models import Market, PreferenceProfile
from stability import StabilityChecker
from subpref import SubPreferenceSearch

# Setup logging
log_dir = settings.logs_dir
log_dir.mkdir(parents=True, exist_ok=True)
log_file = log_dir / "property_corpus.log"

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(log_file),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger(__name__)

analyzer = ChoiceAnalyzer()
search = SubPreferenceSearch()
checker = StabilityChecker()
generator = InstanceGenerator()

Check = Callable[[int, Market, PreferenceProfile], List[str]]


def check_remark1(seed: int, market: Market, profile: PreferenceProfile) -> List[str]:
    return [f"formulations disagree for {r.agent}" for r in profile.relations
            if not analyzer.verify_remark1(market, r)]


def check_path_independence(seed: int, market: Market, profile: PreferenceProfile) -> List[str]:
    failures = []
    for r in profile.relations:
        if analyzer.is_substitutable(market, r)[0] and not analyzer.is_path_independent(market, r)[0]:
            failures.append(f"{r.agent} substitutable but not path independent")
    return failures


def _pair(seed: int, market: Market):
    for hospital in market.hospitals:
        if market.contracts_of(hospital):
            return generator.random_subpreference_pair(seed, market, agent=hospital, params=corpus_params(seed))
    return None


def check_transitivity(seed: int, market: Market, profile: PreferenceProfile) -> List[str]:
    pair = _pair(seed, market)
    if pair is None:
        return []
    middle, top = pair
    bottom = search.reduce_minimal(market, middle)
    if not search.verify_transitivity(market, bottom, middle, top):
        return [f"{bottom.to_display()} ⊑ {middle.to_display()} ⊑ {top.to_display()} but not transitively"]
    return []


def check_inclusion(seed: int, market: Market, profile: PreferenceProfile) -> List[str]:
    pair = _pair(seed, market)
    if pair is None:
        return []
    sub, _ = pair
    if not checker.verify_inclusion(market, profile.replace(sub), profile):
        return [f"S grows when {sub.agent} moves to {sub.to_display()}"]
    return []


def check_minimal_certificates(seed: int, market: Market, profile: PreferenceProfile) -> List[str]:
    failures = []
    for r in profile.relations:
        verdict = search.is_pseudo_substitutable(market, r)
        if verdict.holds and not search.is_minimal(market, verdict.certificate, r):
            failures.append(f"certificate {verdict.certificate.to_display()} of {r.agent} is not minimal")
    return failures


def check_existence(seed: int, market: Market, profile: PreferenceProfile) -> List[str]:
    if all(search.is_pseudo_substitutable(market, r).holds for r in profile.relations):
        if not checker.stable_set(market, profile):
            return ["pseudo-substitutable profile without a stable allocation"]
    return []


def check_corewise(seed: int, market: Market, profile: PreferenceProfile) -> List[str]:
    return [f"{r.allocation} corewise but not pairwise stable"
            for r in checker.reports(market, profile, corewise=True)
            if r.corewise_stable and not r.pairwise_stable]


def check_fast_path(seed: int, market: Market, profile: PreferenceProfile) -> List[str]:
    failures = []
    for r in profile.relations:
        if search.fast_path_agrees(market, r):
            continue
        if search.fast_path_verdict(market, r):
            failures.append(f"fast path certifies {r.agent}: {r.to_display()} but the oracle does not")
        else:
            # incompleteness is a finding, not a failure
            logger.warning(f"Seed {seed}: fast path misses the certificate of {r.agent}: {r.to_display()}")
    return failures


CHECKS: Dict[str, Check] = {
    "a-removal-forms": check_remark1,
    "b-path-independence": check_path_independence,
    "c-transitivity": check_transitivity,
    "d-inclusion": check_inclusion,
    "e-minimal-certificates": check_minimal_certificates,
    "f-existence": check_existence,
    "g-corewise": check_corewise,
    "h-fast-path": check_fast_path,
}


def run_seed(seed: int) -> Tuple[Market, PreferenceProfile, Dict[str, List[str]]]:
    market, profile = generator.random_instance(corpus_params(seed))
    return market, profile, {name: check(seed, market, profile) for name, check in CHECKS.items()}


def main():
    parser = argparse.ArgumentParser(description='Seeded property corpus for pseudo-substitutability')
    parser.add_argument('--first', type=int, default=1, help='First seed')
    parser.add_argument('--last', type=int, default=500, help='Last seed (inclusive)')
    parser.add_argument('--failures-dir', default=str(log_dir / "failures"),
                        help='Directory for failing instances')

    args = parser.parse_args()

    logger.info("=" * 60)
    logger.info("Property Corpus")
    logger.info("=" * 60)
    logger.info(f"Seeds: {args.first}-{args.last}")
    logger.info(f"Checks: {', '.join(CHECKS)}")
    logger.info("=" * 60)

    started = datetime.now()
    failed: Counter = Counter()
    skipped = 0

    for seed in tqdm(range(args.first, args.last + 1), desc="Seeds"):
        try:
            market, profile, results = run_seed(seed)
        except GuardExceeded as e:
            logger.warning(f"Seed {seed} skipped: {e}")
            skipped += 1
            continue

        for name, failures in results.items():
            if not failures:
                continue
            failed[name] += 1
            for failure in failures:
                logger.error(f"❌ Seed {seed} [{name}]: {failure}")
            path = Path(args.failures_dir) / f"seed_{seed}_{name}.json"
            write_text_atomic(path, dump_market_document(market, profile))

    elapsed = (datetime.now() - started).total_seconds()

    # Summary
    logger.info("\n" + "=" * 60)
    logger.info("Corpus Complete!")
    logger.info("=" * 60)
    logger.info(f"Seeds run: {args.last - args.first + 1 - skipped}")
    logger.info(f"Seeds skipped by guards: {skipped}")
    for name in CHECKS:
        mark = "❌" if failed[name] else "✅"
        logger.info(f"  {mark} {name}: {failed[name]} failing seed(s)")
    logger.info(f"Elapsed: {elapsed:.1f}s")
    logger.info(json.dumps({"failed": dict(failed), "skipped": skipped}))
    logger.info("=" * 60)

    return 1 if failed else 0


if __name__ == '__main__':
    sys.exit(main())
