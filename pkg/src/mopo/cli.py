"""Command-line entry point: ``mopo run | front | stats``.

stdout carries data, stderr carries logs (level from ``MOPO_LOG``).
Exit codes: 0 ok, 2 invalid configuration, 3 backend failure, 4 corrupt or
missing run state.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from mopo import engine
from mopo.backends.mock import LexiconScorer
from mopo.core import (
    BackendError,
    BackendSpec,
    ConfigError,
    CorruptStateError,
    EvaluatedPrompt,
    ObjectiveSpec,
    RunConfig,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_STATE = 4

log = logging.getLogger("mopo.cli")


# ---------------------------------------------------------------------------
# export table


@dataclass(frozen=True)
class ExportRow:
    id: str
    text: str
    scores: tuple[float, ...]
    average: float
    pareto_rank: int | None
    operator_kind: str
    generation_born: int

    @property
    def worst(self) -> float:
        return min(self.scores)


@dataclass(frozen=True)
class ExportTable:
    objectives: tuple[str, ...]
    rows: tuple[ExportRow, ...]

    @property
    def header(self) -> list[str]:
        return ["id", "text", *self.objectives, "average", "pareto_rank", "operator_kind",
                "generation_born"]

    def records(self) -> list[list]:
        return [
            [r.id, r.text, *r.scores, r.average, r.pareto_rank, r.operator_kind, r.generation_born]
            for r in self.rows
        ]

    def to_delimited(self, delimiter: str) -> str:
        out = io.StringIO()
        writer = csv.writer(out, delimiter=delimiter, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(self.header)
        for rec in self.records():
            writer.writerow(["" if v is None else v for v in rec])
        return out.getvalue()

    def to_json(self) -> str:
        doc = {
            "objectives": list(self.objectives),
            "rows": [dict(zip(self.header, rec)) for rec in self.records()],
        }
        return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExportTable":
        doc = json.loads(text)
        objectives = tuple(doc["objectives"])
        rows = tuple(
            ExportRow(
                id=r["id"], text=r["text"],
                scores=tuple(float(r[o]) for o in objectives),
                average=float(r["average"]), pareto_rank=r["pareto_rank"],
                operator_kind=r["operator_kind"], generation_born=r["generation_born"],
            )
            for r in doc["rows"]
        )
        return cls(objectives, rows)


def export_table(front: Sequence[EvaluatedPrompt], objectives: Sequence[str],
                 sort_objective: str | None = None, balanced: bool = False) -> ExportTable:
    """Rows ordered by rank asc, average desc, id asc unless a view says otherwise."""
    rows = [
        ExportRow(
            id=e.id, text=e.prompt.text, scores=tuple(e.fitness.scores), average=e.fitness.mean,
            pareto_rank=e.pareto_rank, operator_kind=e.prompt.operator_kind.value,
            generation_born=e.prompt.generation_born,
        )
        for e in front
    ]

    def default(r: ExportRow):
        return (r.pareto_rank if r.pareto_rank is not None else 0, -r.average, r.id)

    if sort_objective is not None:
        j = list(objectives).index(sort_objective)
        rows.sort(key=lambda r: (-r.scores[j], *default(r)))
    elif balanced:
        rows.sort(key=lambda r: (-r.worst, *default(r)))
    else:
        rows.sort(key=default)
    return ExportTable(tuple(objectives), tuple(rows))


# ---------------------------------------------------------------------------
# stats tables


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def stats_tables(result: engine.RunResult) -> dict[str, str]:
    objectives = list(result.config.objective_ids)
    shares = engine.operator_contribution(result)
    kinds = list(shares["overall"])
    contribution = [["overall", *shares["overall"].values()]]
    contribution += [[str(i), *s.values()] for i, s in enumerate(shares["per_generation"])]

    fitness = []
    for r in result.records:
        for j, name in enumerate(objectives):
            values = [e.fitness.scores[j] for e in r.selected]
            fitness.append([r.generation, name, max(values), sum(values) / len(values)])

    hv = [[r.generation, engine.hypervolume_of(r.selected)] for r in result.records]

    ledger = []
    for r in result.records:
        for prompt_id, s in sorted(r.ledger.entries.items()):
            ledger.append([r.generation, prompt_id, s.offspring_produced, s.offspring_selected,
                           s.mean_offspring_fitness])
    return {
        "contribution.csv": _csv(["scope", *kinds], contribution),
        "fitness.csv": _csv(["generation", "objective", "best", "mean"], fitness),
        "hypervolume.csv": _csv(["generation", "hypervolume"], hv),
        "ledger.csv": _csv(["generation", "layer2_id", "offspring_produced", "offspring_selected",
                            "mean_offspring_fitness"], ledger),
    }


# ---------------------------------------------------------------------------
# commands


def _mock_everything(config: RunConfig) -> RunConfig:
    objectives = []
    for o in config.objectives:
        if o.backend.is_mock:
            objectives.append(o)
        else:
            style = o.name if o.name in LexiconScorer.STYLES else "plain"
            objectives.append(ObjectiveSpec(o.name, BackendSpec(mock={"style": style})))
    return config.replace(objectives=tuple(objectives), generator=BackendSpec(),
                          suggester=BackendSpec())


def _summary(record: engine.GenerationRecord, objectives: Sequence[str]) -> str:
    best = ",".join(
        f"{name}:{max(e.fitness.scores[j] for e in record.selected):.4f}"
        for j, name in enumerate(objectives)
    )
    hv = engine.hypervolume_of(record.selected)
    hv_text = "n/a" if hv is None else f"{hv:.6f}"
    return f"gen={record.generation}\tpop={len(record.population)}\tbest={best}\thv={hv_text}"


def _build_config(args) -> RunConfig | None:
    if args.config is None:
        return None
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    try:
        config = RunConfig.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError([f"config is not valid: {exc}"]) from exc
    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    if args.mock:
        config = _mock_everything(config)
    if args.no_combine:
        config = config.replace(ablation=dataclasses.replace(config.ablation, enable_combine=False))
    if args.no_paraphrase:
        config = config.replace(ablation=dataclasses.replace(config.ablation, enable_paraphrase=False))
    return config


def cmd_run(args) -> int:
    config = _build_config(args)
    if args.resume is None and config is None:
        raise ConfigError(["--config is required unless --resume is given"])

    objectives = (config or engine.load_config_from_run(args.resume)).objective_ids

    def report(record: engine.GenerationRecord) -> None:
        print(_summary(record, objectives), flush=True)

    if args.resume is not None:
        result = engine.resume(args.resume, config=config, on_generation=report)
        out = Path(args.resume)
    else:
        out = Path(args.out) if args.out else Path(f"mopo-run-{config.digest()[:12]}")
        if out.exists() and any(out.iterdir()) and not args.force:
            raise ConfigError([f"{out} is not empty; pass --force to overwrite"])
        result = engine.run(config, run_dir=out, on_generation=report, force=args.force)
    log.info("final front of %d prompts written to %s", len(result.final), out / engine.FINAL_FILE)
    return EXIT_OK


def _load(run_dir: str) -> engine.RunResult:
    if not Path(run_dir).is_dir():
        raise CorruptStateError(f"{run_dir} is not a run directory")
    return engine.load_result(run_dir)


def cmd_front(args) -> int:
    result = _load(args.run_dir)
    objectives = result.config.objective_ids
    if args.objective is not None and args.objective not in objectives:
        raise ConfigError([f"unknown objective {args.objective!r}; have {', '.join(objectives)}"])
    table = export_table(result.final, objectives, args.objective, args.balanced)
    if args.format == "json":
        sys.stdout.write(table.to_json())
    else:
        sys.stdout.write(table.to_delimited("\t" if args.format == "tsv" else ","))
    return EXIT_OK


def cmd_stats(args) -> int:
    tables = stats_tables(_load(args.run_dir))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in tables.items():
            (out / name).write_text(text, encoding="utf-8")
            print(out / name)
    else:
        sys.stdout.write("\n".join(f"# {name}\n{text}" for name, text in tables.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mopo", description="Multi-objective prompt optimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run or resume an optimization")
    p.add_argument("--config", help="RunConfig JSON file")
    p.add_argument("--mock", action="store_true", help="replace every backend with its mock")
    p.add_argument("--no-combine", action="store_true", help="disable the combine operation")
    p.add_argument("--no-paraphrase", action="store_true", help="disable the paraphrase operation")
    p.add_argument("--resume", metavar="DIR", help="continue an interrupted run")
    p.add_argument("--out", metavar="DIR", help="run directory to create")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--force", action="store_true", help="overwrite a non-empty run directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("front", help="export the final front")
    p.add_argument("run_dir")
    p.add_argument("--format", choices=("tsv", "csv", "json"), default="tsv")
    view = p.add_mutually_exclusive_group()
    view.add_argument("--objective", help="sort by this objective, best first")
    view.add_argument("--balanced", action="store_true", help="sort by worst objective score, best first")
    p.set_defaults(func=cmd_front)

    p = sub.add_parser("stats", help="export diagnostics as csv")
    p.add_argument("run_dir")
    p.add_argument("--out", metavar="DIR", help="write one csv file per table here")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("MOPO_LOG", "WARNING").upper()
    logging.basicConfig(
        level=level if isinstance(logging.getLevelName(level), int) else "WARNING",
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.violations:
            log.error("config: %s", problem)
        return EXIT_CONFIG
    except BackendError as exc:
        log.error("backend: %s", exc)
        return EXIT_BACKEND
    except CorruptStateError as exc:
        log.error("run state: %s", exc)
        return EXIT_STATE


if __name__ == "__main__":
    sys.exit(main())
