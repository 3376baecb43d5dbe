"""Optimize prompts against three conflicting mock objectives and look at
what came out.

    python demos/quickstart.py [run-dir]

Everything runs offline: the generator, the word suggester and the three
scorers are deterministic mocks.  Re-running with the same seed reproduces
the run byte for byte.
"""

import logging
import sys
from pathlib import Path

from mopo import catalogs
from mopo.core import RunConfig
from mopo.engine import balanced_best, hypervolume_of, run


def report(record):
    # called after every generation, before the next one starts
    bests = [max(e.fitness.scores[j] for e in record.selected) for j in range(3)]
    print(f"generation {record.generation}: {len(record.population)} evaluated, "
          f"bests {' '.join(f'{b:.3f}' for b in bests)}, "
          f"hypervolume {hypervolume_of(record.selected):.4f}")


def main():
    # the population cap trims offspring every generation; that is expected here
    logging.basicConfig(level=logging.ERROR)
    run_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else None
    config = RunConfig.from_dict({"objectives": list(catalogs.MOCK_OBJECTIVES), "rng_seed": 7})
    result = run(config, run_dir=run_dir, on_generation=report, force=True)

    seeds = [e for e in result.records[0].population if e.prompt.generation_born == 0]
    before, after = balanced_best(seeds), balanced_best(result.final)
    print()
    print(f"best seed prompt for all three objectives (worst score {before.fitness.worst:.3f}):")
    print(f"  {before.prompt.text}")
    print(f"best optimized prompt (worst score {after.fitness.worst:.3f}):")
    print(f"  {after.prompt.text}")
    if run_dir is not None:
        print(f"\nrun saved to {run_dir}; try `mopo front {run_dir} --balanced`")


if __name__ == "__main__":
    main()
