"""The optimization loop, run-directory persistence and resume.

Run directory layout::

    config.json        the RunConfig document
    gen-0000.jsonl     one line per evaluated prompt, then one generation line
    ...
    final.json         final selection over all per-generation selections
    timing.json        wall-clock seconds per generation (not part of results)

A generation file is written atomically once the generation is complete,
so a killed run always leaves a resumable prefix.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from mopo import genetic
from mopo.backends import Backends, build_backends
from mopo.core import (
    BackendError,
    ConfigError,
    CorruptStateError,
    EvaluatedPrompt,
    OperatorKind,
    Prompt,
    PromptLayer,
    RunConfig,
    derive_seed,
    make_id,
    normalize_text,
    seed_prompt,
    validate_config,
)
from mopo.fitness import evaluate
from mopo.pareto import hypervolume, pareto_selection

log = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
FINAL_FILE = "final.json"
TIMING_FILE = "timing.json"


def generation_file(i: int) -> str:
    return f"gen-{i:04d}.jsonl"


@dataclass
class GenerationRecord:
    generation: int
    population: list[EvaluatedPrompt]
    selected: list[EvaluatedPrompt]
    combine_pool: list[Prompt]
    paraphrase_pool: list[Prompt]
    layer2_created: list[Prompt]
    ledger: genetic.Layer2Ledger
    layer2_scores: dict[str, tuple[int, float]]
    best_ids: dict[str, list[str]]
    rng_digest: str
    backend_calls: dict[str, int]
    offspring_produced: int
    offspring_trimmed: int
    config_digest: str
    wall_clock_s: float | None = field(default=None, compare=False)

    def header(self) -> dict[str, Any]:
        return {
            "kind": "generation",
            "generation": self.generation,
            "config_digest": self.config_digest,
            "selected": [
                {"id": e.id, "pareto_rank": e.pareto_rank,
                 "crowding": "inf" if e.crowding == float("inf") else e.crowding}
                for e in self.selected
            ],
            "combine_pool": [p.to_dict() for p in self.combine_pool],
            "paraphrase_pool": [p.to_dict() for p in self.paraphrase_pool],
            "layer2_created": [p.to_dict() for p in self.layer2_created],
            "ledger": self.ledger.to_dict(),
            "layer2_scores": {k: list(v) for k, v in sorted(self.layer2_scores.items())},
            "best_ids": self.best_ids,
            "rng_digest": self.rng_digest,
            "backend_calls": self.backend_calls,
            "offspring_produced": self.offspring_produced,
            "offspring_trimmed": self.offspring_trimmed,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps({"kind": "evaluated", **e.to_dict()}, ensure_ascii=False)
                 for e in self.population]
        lines.append(json.dumps(self.header(), ensure_ascii=False))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str, objective_ids: Sequence[str]) -> "GenerationRecord":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or rows[-1].get("kind") != "generation":
            raise ValueError("generation line missing")
        head = rows[-1]
        population = [EvaluatedPrompt.from_dict(r, objective_ids) for r in rows[:-1]]
        by_id = {e.id: e for e in population}
        selected = []
        for s in head["selected"]:
            crowd = s["crowding"]
            selected.append(dataclasses.replace(
                by_id[s["id"]], pareto_rank=s["pareto_rank"],
                crowding=float("inf") if crowd == "inf" else crowd))
        return cls(
            generation=head["generation"],
            population=population,
            selected=selected,
            combine_pool=[Prompt.from_dict(p) for p in head["combine_pool"]],
            paraphrase_pool=[Prompt.from_dict(p) for p in head["paraphrase_pool"]],
            layer2_created=[Prompt.from_dict(p) for p in head["layer2_created"]],
            ledger=genetic.Layer2Ledger.from_dict(head["ledger"]),
            layer2_scores={k: (v[0], v[1]) for k, v in head["layer2_scores"].items()},
            best_ids=head["best_ids"],
            rng_digest=head["rng_digest"],
            backend_calls=head["backend_calls"],
            offspring_produced=head["offspring_produced"],
            offspring_trimmed=head["offspring_trimmed"],
            config_digest=head["config_digest"],
        )


@dataclass
class RunResult:
    final: list[EvaluatedPrompt]
    records: list[GenerationRecord]
    config: RunConfig

    def final_document(self) -> dict[str, Any]:
        return {
            "config_digest": self.config.digest(),
            "objectives": list(self.config.objective_ids),
            "generations": len(self.records),
            "final": [e.to_dict() for e in self.final],
        }

    def final_json(self) -> str:
        return json.dumps(self.final_document(), indent=1, ensure_ascii=False) + "\n"

    def transcript(self) -> str:
        """Everything except timing, serialized; equal runs give equal bytes."""
        return "".join(r.to_jsonl() for r in self.records) + self.final_json()


# ---------------------------------------------------------------------------


class _CallCounter:
    def __init__(self):
        self._lock = threading.Lock()
        self.counts: dict[str, int] = {}

    def bump(self, key: str) -> None:
        with self._lock:
            self.counts[key] = self.counts.get(key, 0) + 1

    def reset(self) -> dict[str, int]:
        with self._lock:
            out, self.counts = dict(sorted(self.counts.items())), {}
        return out


class _Counted:
    """Forwards one capability method and counts calls under ``key``."""

    def __init__(self, inner, method: str, key: str, counter: _CallCounter):
        self._inner = inner
        self._method = method
        self._key = key
        self._counter = counter
        self.name = getattr(inner, "name", key)

    def __getattr__(self, attr):
        if attr != self._method:
            return getattr(self._inner, attr)

        def call(request):
            self._counter.bump(self._key)
            return getattr(self._inner, self._method)(request)

        return call


def ablate(config: RunConfig, which: str) -> RunConfig:
    """Turn off one genetic operation (``no_combine`` or ``no_paraphrase``)."""
    flags = {"no_combine": "enable_combine", "no_paraphrase": "enable_paraphrase"}
    if which not in flags:
        raise ConfigError([f"unknown ablation {which!r}"])
    ablation = dataclasses.replace(config.ablation, **{flags[which]: False})
    if not (ablation.enable_combine or ablation.enable_paraphrase):
        raise ConfigError(["at least one of enable_combine/enable_paraphrase must be true"])
    return config.replace(ablation=ablation)


def _trim_offspring(parents: Sequence[Prompt], offspring: Sequence[Prompt], cap: int,
                    rng: random.Random) -> list[Prompt]:
    """Seeded subsample of offspring down to ``cap`` total members.

    A kept offspring brings its same-generation ancestors with it so that
    lineage always resolves to recorded prompts.
    """
    room = cap - len(parents)
    if len(offspring) <= room:
        return list(offspring)
    by_id = {p.id: p for p in offspring}
    order = list(offspring)
    rng.shuffle(order)
    keep: set[str] = set()
    for p in order:
        if len(keep) >= room:
            break
        needed, stack = [], [p]
        while stack:
            q = stack.pop()
            if q.id in keep or q in needed:
                continue
            needed.append(q)
            stack.extend(by_id[a] for a in q.lineage if a in by_id)
        if len(keep) + len(needed) <= room:
            keep.update(q.id for q in needed)
    return [p for p in offspring if p.id in keep]


class _Engine:
    def __init__(self, config: RunConfig, backends: Backends | None, run_dir: Path | None,
                 on_generation: Callable[[GenerationRecord], None] | None):
        problems = validate_config(config)
        if problems:
            raise ConfigError(problems)
        self.config = config
        self.digest = config.digest()
        self.run_dir = run_dir
        self.on_generation = on_generation
        self.counter = _CallCounter()
        backends = backends or build_backends(config)
        self.generator = _Counted(backends.generator, "generate", "generate", self.counter)
        self.suggester = _Counted(backends.suggester, "suggest", "suggest", self.counter)
        self.scorers = [_Counted(s, "score", f"score:{s.name}", self.counter) for s in backends.scorers]
        if [s.name for s in self.scorers] != list(config.objective_ids):
            raise ConfigError(["scorer names must match the configured objectives in order"])
        self.cache_enabled = config.all_mock
        self.cache: dict[str, EvaluatedPrompt] = {}

        seed = config.rng_seed
        self.seeds = [seed_prompt(t, PromptLayer.LAYER1, i, seed) for i, t in enumerate(config.seed_prompts)]
        self.fixed = [seed_prompt(t, PromptLayer.LAYER3_FIXED, i, seed) for i, t in enumerate(config.fixed_prompts)]
        self.combine_pool = [seed_prompt(t, PromptLayer.LAYER2_COMBINE, i, seed)
                             for i, t in enumerate(config.combine_prompts)]
        self.paraphrase_pool = [seed_prompt(t, PromptLayer.LAYER2_PARAPHRASE, i, seed)
                                for i, t in enumerate(config.paraphrase_prompts)]
        self.combine_cap = config.layer2_pool_size or max(1, len(self.combine_pool))
        self.paraphrase_cap = config.layer2_pool_size or max(1, len(self.paraphrase_pool))
        self.layer2_scores: dict[str, tuple[int, float]] = {}
        self.records: list[GenerationRecord] = []

    # -- state ------------------------------------------------------------------

    def restore(self, records: list[GenerationRecord]) -> None:
        self.records = list(records)
        if not records:
            return
        last = records[-1]
        self.combine_pool = list(last.combine_pool)
        self.paraphrase_pool = list(last.paraphrase_pool)
        self.layer2_scores = dict(last.layer2_scores)
        if self.cache_enabled:
            for r in records:
                for e in r.population:
                    self.cache.setdefault(normalize_text(e.prompt.text), e)

    def _p_opt(self) -> list[Prompt]:
        if not self.records:
            return list(self.seeds)
        return [e.prompt for e in self.records[-1].selected]

    # -- evaluation -------------------------------------------------------------

    def _evaluate_one(self, prompt: Prompt) -> EvaluatedPrompt:
        c = self.config
        return evaluate(prompt, self.generator, self.scorers, c.emotions, c.texts_per_prompt,
                        c.bleu_threshold, c.rng_seed)

    def _evaluate(self, prompts: Sequence[Prompt]) -> list[EvaluatedPrompt]:
        results: dict[str, EvaluatedPrompt] = {}
        todo = []
        for p in prompts:
            hit = self.cache.get(normalize_text(p.text)) if self.cache_enabled else None
            if hit is None:
                todo.append(p)
            else:
                samples = tuple(dataclasses.replace(s, prompt_id=p.id) for s in hit.samples)
                results[p.id] = EvaluatedPrompt(p, hit.fitness, samples, hit.per_emotion)
        if self.config.parallelism > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.config.parallelism) as pool:
                fresh = list(pool.map(self._evaluate_one, todo))
        else:
            fresh = [self._evaluate_one(p) for p in todo]
        for e in fresh:
            results[e.id] = e
            if self.cache_enabled:
                self.cache.setdefault(normalize_text(e.prompt.text), e)
        return [results[p.id] for p in prompts]

    # -- one generation -----------------------------------------------------

    def step(self, i: int) -> GenerationRecord:
        c = self.config
        seed = c.rng_seed
        started = time.perf_counter()
        self.counter.reset()
        rng = random.Random(derive_seed(seed, "generation", i))

        parents = self._p_opt()
        existing = {normalize_text(p.text) for p in parents}
        combined: list[Prompt] = []
        paraphrased: list[Prompt] = []
        layer2_created: list[Prompt] = []
        best: dict[str, list[Prompt]] = {}

        k = c.best_per_objective_k if len(c.objectives) > 1 else max(2, c.best_per_objective_k)
        if c.ablation.enable_combine:
            before = {p.id for p in self.combine_pool}
            self.combine_pool = genetic.mutate_layer2(self.combine_pool, self.fixed, self.generator, rng, seed, i)
            layer2_created += [p for p in self.combine_pool if p.id not in before]
            if self.records:
                best = genetic.best_per_objective(self.records[-1].population, k)
            else:
                best = genetic.random_best_per_objective(parents, c.objective_ids, k, rng)
            pairs = genetic.pair_sample(best)
            combined = genetic.combine(pairs, self.combine_pool, c.offspring_per_operator,
                                       self.generator, existing, seed, i)

        if c.ablation.enable_paraphrase:
            before = {p.id for p in self.paraphrase_pool}
            self.paraphrase_pool = genetic.mutate_layer2(self.paraphrase_pool, self.fixed, self.generator, rng, seed, i)
            layer2_created += [p for p in self.paraphrase_pool if p.id not in before]
            for parent in parents + combined:
                paraphrased += genetic.sentence_paraphrase(
                    parent, self.paraphrase_pool, c.offspring_per_operator, self.generator, existing, seed, i)
                if len(parent.text.split()) >= 2:
                    paraphrased += genetic.word_paraphrase(
                        parent, c.offspring_per_operator, self.suggester, rng, existing, seed, i)

        offspring = combined + paraphrased
        kept = _trim_offspring(parents, offspring, c.max_population, rng)
        if len(kept) < len(offspring):
            log.warning("generation %d: population cap %d hit, trimmed %d of %d offspring",
                        i, c.max_population, len(offspring) - len(kept), len(offspring))

        population = self._evaluate(parents + kept)
        selected = pareto_selection(population, c.generation_size, c.top_n_per_objective)

        born_now = [e for e in population if e.prompt.generation_born == i + 1
                    and e.prompt.operator_kind is not OperatorKind.SEED]
        ledger = genetic.Layer2Ledger.tally(offspring, born_now, (e.id for e in selected))
        if c.ablation.enable_combine:
            self.combine_pool = genetic.select_layer2(self.combine_pool, ledger, self.combine_cap, self.layer2_scores)
        if c.ablation.enable_paraphrase:
            self.paraphrase_pool = genetic.select_layer2(
                self.paraphrase_pool, ledger, self.paraphrase_cap, self.layer2_scores)
        self.layer2_scores = genetic.update_layer2_scores(self.layer2_scores, ledger)

        record = GenerationRecord(
            generation=i,
            population=population,
            selected=selected,
            combine_pool=list(self.combine_pool),
            paraphrase_pool=list(self.paraphrase_pool),
            layer2_created=layer2_created,
            ledger=ledger,
            layer2_scores=dict(self.layer2_scores),
            best_ids={name: [p.id for p in ps] for name, ps in best.items()},
            rng_digest=make_id(rng.getstate()),
            backend_calls=self.counter.reset(),
            offspring_produced=len(offspring),
            offspring_trimmed=len(offspring) - len(kept),
            config_digest=self.digest,
            wall_clock_s=time.perf_counter() - started,
        )
        self.records.append(record)
        return record

    def finish(self) -> RunResult:
        candidates: dict[str, EvaluatedPrompt] = {}
        for r in self.records:
            for e in r.selected:
                key = normalize_text(e.prompt.text)
                if key not in candidates or e.fitness.mean > candidates[key].fitness.mean:
                    candidates[key] = e
        final = pareto_selection(list(candidates.values()), self.config.generation_size,
                                 self.config.top_n_per_objective)
        return RunResult(final, list(self.records), self.config)

    def loop(self, start: int, stop_after: int | None) -> RunResult | None:
        for i in range(start, self.config.generations):
            record = self.step(i)
            if self.run_dir is not None:
                _write_record(self.run_dir, record)
            if self.on_generation is not None:
                self.on_generation(record)
            if stop_after is not None and i + 1 >= stop_after and i + 1 < self.config.generations:
                return None
        result = self.finish()
        if self.run_dir is not None:
            _atomic_write(self.run_dir / FINAL_FILE, result.final_json())
        return result


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_record(run_dir: Path, record: GenerationRecord) -> None:
    _atomic_write(run_dir / generation_file(record.generation), record.to_jsonl())
    timing_path = run_dir / TIMING_FILE
    timing = json.loads(timing_path.read_text()) if timing_path.exists() else {}
    timing[str(record.generation)] = record.wall_clock_s
    _atomic_write(timing_path, json.dumps(timing, indent=1, sort_keys=True) + "\n")


def run(
    config: RunConfig,
    backends: Backends | None = None,
    run_dir: str | Path | None = None,
    *,
    on_generation: Callable[[GenerationRecord], None] | None = None,
    stop_after: int | None = None,
    force: bool = False,
) -> RunResult | None:
    """Run the full optimization; returns None only when ``stop_after``
    halts the loop early (the run directory is then resumable)."""
    problems = validate_config(config)
    if problems:
        raise ConfigError(problems)
    path = Path(run_dir) if run_dir is not None else None
    if path is not None:
        if path.exists() and any(path.iterdir()) and not force:
            raise FileExistsError(f"{path} is not empty; pass force=True to overwrite")
        path.mkdir(parents=True, exist_ok=True)
        for stale in list(path.glob("gen-*.jsonl")) + [path / FINAL_FILE, path / TIMING_FILE]:
            stale.unlink(missing_ok=True)
    engine = _Engine(config, backends, path, on_generation)
    if path is not None:
        _atomic_write(path / CONFIG_FILE, config.to_json())
    return engine.loop(0, stop_after)


def load_records(run_dir: str | Path, config: RunConfig) -> list[GenerationRecord]:
    """Load every complete generation record, refusing anything inconsistent."""
    path = Path(run_dir)
    records: list[GenerationRecord] = []
    digest = config.digest()
    files = sorted(path.glob("gen-*.jsonl"))
    for expected, file in enumerate(files):
        last_valid = expected - 1
        if file.name != generation_file(expected):
            raise CorruptStateError(
                f"{file.name} out of sequence; last valid generation is {last_valid}", last_valid)
        try:
            record = GenerationRecord.from_jsonl(file.read_text(encoding="utf-8"), config.objective_ids)
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptStateError(
                f"{file.name} is corrupt ({exc}); last valid generation is {last_valid}", last_valid
            ) from exc
        if record.generation != expected:
            raise CorruptStateError(f"{file.name} records generation {record.generation}; "
                                    f"last valid generation is {last_valid}", last_valid)
        if record.config_digest != digest:
            raise ConfigError([f"config digest mismatch in {file.name}"])
        records.append(record)
    timing_path = path / TIMING_FILE
    if timing_path.exists():
        timing = json.loads(timing_path.read_text())
        for r in records:
            r.wall_clock_s = timing.get(str(r.generation))
    return records


def load_config_from_run(run_dir: str | Path) -> RunConfig:
    path = Path(run_dir) / CONFIG_FILE
    if not path.exists():
        raise CorruptStateError(f"{path} missing")
    try:
        return RunConfig.from_json(path.read_text(encoding="utf-8"))
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptStateError(f"{path} unreadable: {exc}") from exc


def resume(
    run_dir: str | Path,
    backends: Backends | None = None,
    *,
    config: RunConfig | None = None,
    on_generation: Callable[[GenerationRecord], None] | None = None,
    stop_after: int | None = None,
) -> RunResult | None:
    """Continue a run from its last complete generation.

    ``config``, when given, must match the stored one exactly.
    """
    path = Path(run_dir)
    stored = load_config_from_run(path)
    if config is not None and config.digest() != stored.digest():
        raise ConfigError(["config digest mismatch: resume needs the original configuration"])
    records = load_records(path, stored)
    if len(records) > stored.generations:
        raise CorruptStateError("more generation records than configured generations",
                                stored.generations - 1)
    engine = _Engine(stored, backends, path, on_generation)
    engine.restore(records)
    return engine.loop(len(records), stop_after)


def load_result(run_dir: str | Path) -> RunResult:
    """Read a finished run back from disk."""
    path = Path(run_dir)
    config = load_config_from_run(path)
    records = load_records(path, config)
    final_path = path / FINAL_FILE
    if not final_path.exists():
        raise CorruptStateError(f"{final_path} missing", len(records) - 1 if records else None)
    try:
        doc = json.loads(final_path.read_text(encoding="utf-8"))
        final = [EvaluatedPrompt.from_dict(e, config.objective_ids) for e in doc["final"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptStateError(f"{final_path} unreadable: {exc}") from exc
    if doc.get("config_digest") != config.digest():
        raise CorruptStateError("final.json belongs to a different configuration")
    return RunResult(final, records, config)


# ---------------------------------------------------------------------------
# diagnostics


def _shares(prompts: Iterable[EvaluatedPrompt]) -> dict[str, float]:
    prompts = list(prompts)
    counts = {k.value: 0 for k in OperatorKind}
    for e in prompts:
        counts[e.prompt.operator_kind.value] += 1
    total = len(prompts)
    return {k: (v / total if total else 0.0) for k, v in counts.items()}


def operator_contribution(result: RunResult) -> dict[str, Any]:
    """Share of selected prompts born from each operator kind.

    ``per_generation`` covers each generation's selected set, ``overall``
    the final front.
    """
    if not result.final and not result.records:
        raise ValueError("empty result")
    return {
        "overall": _shares(result.final),
        "per_generation": [_shares(r.selected) for r in result.records],
    }


def hypervolume_of(prompts: Sequence[EvaluatedPrompt]) -> float | None:
    """Hypervolume against the origin, or None beyond three objectives."""
    if not prompts:
        return 0.0
    m = len(prompts[0].fitness)
    if m > 3:
        return None
    return hypervolume([e.fitness for e in prompts], [0.0] * m)


def balanced_best(prompts: Sequence[EvaluatedPrompt]) -> EvaluatedPrompt:
    """The prompt maximizing its worst objective score (ties: mean, id)."""
    return min(prompts, key=lambda e: (-e.fitness.worst, -e.fitness.mean, e.id))
