"""Switch off each prompt operation in turn and compare hypervolumes.

    python demos/ablation.py

Only one operation can be disabled at a time; with both gone nothing new
is ever produced, so that configuration is refused.
"""

import logging

from mopo import catalogs
from mopo.core import ConfigError, RunConfig
from mopo.engine import ablate, hypervolume_of, operator_contribution, run


def main():
    # the population cap trims offspring every generation; that is expected here
    logging.basicConfig(level=logging.ERROR)
    config = RunConfig.from_dict({"objectives": list(catalogs.MOCK_OBJECTIVES), "rng_seed": 7})
    variants = {"full": config,
                "no combine": ablate(config, "no_combine"),
                "no paraphrase": ablate(config, "no_paraphrase")}
    for name, variant in variants.items():
        result = run(variant)
        shares = operator_contribution(result)["overall"]
        used = ", ".join(f"{k} {v:.0%}" for k, v in shares.items() if v)
        print(f"{name:<14} hypervolume {hypervolume_of(result.final):.4f}  ({used})")

    try:
        ablate(ablate(config, "no_combine"), "no_paraphrase")
    except ConfigError as exc:
        print(f"\nboth disabled: refused ({exc})")


if __name__ == "__main__":
    main()
