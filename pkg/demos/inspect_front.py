"""Read a finished run directory and show its final front three ways.

    python demos/quickstart.py /tmp/mopo-demo
    python demos/inspect_front.py /tmp/mopo-demo
"""

import sys

from mopo.cli import export_table
from mopo.engine import load_result, operator_contribution


def show(title, table, limit=3):
    print(title)
    for row in table.rows[:limit]:
        scores = " ".join(f"{s:.3f}" for s in row.scores)
        print(f"  [{scores}] rank {row.pareto_rank} {row.operator_kind:<20} {row.text[:70]}")
    print()


def main():
    result = load_result(sys.argv[1])
    names = result.config.objective_ids
    show("default order (rank, then mean score):", export_table(result.final, names))
    show("fits every objective (max of the worst score):", export_table(result.final, names, balanced=True))
    for name in names:
        show(f"best for {name}:", export_table(result.final, names, sort_objective=name), limit=1)

    shares = operator_contribution(result)["overall"]
    print("where the selected prompts came from:")
    for kind, share in sorted(shares.items(), key=lambda kv: -kv[1]):
        print(f"  {kind:<22} {share:6.1%}")


if __name__ == "__main__":
    main()
