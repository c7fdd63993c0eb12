"""
Write the seeded instance corpus as market documents.

Each seed gives one document, sized the same way the property corpus sizes
it, so a failing seed can be inspected with the CLI.

Usage:
    python scripts/generate_corpus.py --output data/corpus --first 1 --last 50
"""

import sys
import argparse
from pathlib import Path

sys.path.append(str(Path(__file__).parent.parent))

from tqdm import tqdm

from gen import corpus_params, instance_generator
from market_core import dump_market_document, write_text_atomic


def main():
    parser = argparse.ArgumentParser(
        description='Write seeded market documents'
    )
    parser.add_argument(
        '--output',
        type=str,
        default='data/corpus',
        help='Output directory (default: data/corpus)'
    )
    parser.add_argument('--first', type=int, default=1, help='First seed (default: 1)')
    parser.add_argument('--last', type=int, default=50, help='Last seed, inclusive (default: 50)')

    args = parser.parse_args()

    output_dir = Path(args.output)
    print("🧪 Generating seeded market documents...")
    print(f"   Seeds: {args.first}-{args.last}")
    print(f"   Output: {output_dir}")

    for seed in tqdm(range(args.first, args.last + 1), desc="Seeds"):
        market, profile = instance_generator.random_instance(corpus_params(seed))
        write_text_atomic(output_dir / f"seed_{seed:04d}.json", dump_market_document(market, profile))

    print(f"✅ Wrote {args.last - args.first + 1} document(s) to {output_dir}")
    print()
    print("📋 Next steps:")
    print(f"   python main.py stable {output_dir / f'seed_{args.first:04d}.json'}")
    return 0


if __name__ == '__main__':
    sys.exit(main())
