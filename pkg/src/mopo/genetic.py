"""Crossover and mutation of Layer-1 prompts, and upkeep of Layer-2 pools.

Operators never emit a Layer-1 prompt without ``<em>`` or one whose
normalized text is already in ``existing``; they add what they accept to
``existing`` so later operators in the same generation see it.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from mopo.backends import GenerateRequest, Generator, SuggestRequest, Suggester
from mopo.core import (
    EMOTION_PLACEHOLDER,
    MASK,
    SLOT_1,
    SLOT_2,
    BackendError,
    ContractViolation,
    EvaluatedPrompt,
    OperatorKind,
    Prompt,
    PromptLayer,
    derive_seed,
    has_markers,
    make_id,
    normalize_text,
)

log = logging.getLogger(__name__)


@dataclass
class Layer2Stats:
    offspring_produced: int = 0
    offspring_selected: int = 0
    mean_offspring_fitness: float = 0.0

    def to_dict(self) -> dict:
        return {
            "offspring_produced": self.offspring_produced,
            "offspring_selected": self.offspring_selected,
            "mean_offspring_fitness": self.mean_offspring_fitness,
        }


@dataclass
class Layer2Ledger:
    """Per Layer-2 prompt credit for one generation."""

    entries: dict[str, Layer2Stats] = field(default_factory=dict)

    def __getitem__(self, prompt_id: str) -> Layer2Stats:
        return self.entries.setdefault(prompt_id, Layer2Stats())

    def __contains__(self, prompt_id: str) -> bool:
        return prompt_id in self.entries

    @classmethod
    def tally(cls, produced: Iterable[Prompt], evaluated: Iterable[EvaluatedPrompt],
              selected_ids: Iterable[str]) -> "Layer2Ledger":
        """Credit each offspring's operator prompt.

        ``mean_offspring_fitness`` averages, over evaluated offspring, the
        unweighted mean of their objective scores.
        """
        ledger = cls()
        selected = set(selected_ids)
        for p in produced:
            if p.operator_id is not None:
                ledger[p.operator_id].offspring_produced += 1
        sums: dict[str, list[float]] = {}
        for e in evaluated:
            op = e.prompt.operator_id
            if op is None or e.prompt.operator_kind is OperatorKind.SEED:
                continue
            sums.setdefault(op, []).append(e.fitness.mean)
            if e.id in selected:
                ledger[op].offspring_selected += 1
        for op, values in sums.items():
            ledger[op].mean_offspring_fitness = sum(values) / len(values)
        return ledger

    def to_dict(self) -> dict:
        return {k: v.to_dict() for k, v in sorted(self.entries.items())}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Layer2Ledger":
        return cls({k: Layer2Stats(**v) for k, v in data.items()})


def _accept(text: str, existing: set[str]) -> str | None:
    """Normalized text if it is a new, valid Layer-1 prompt, else None."""
    norm = normalize_text(text)
    if not norm or EMOTION_PLACEHOLDER not in norm or norm in existing:
        return None
    return norm


def mutate_layer2(
    pool: Sequence[Prompt],
    fixed: Sequence[Prompt],
    generator: Generator,
    rng: random.Random,
    run_seed: int = 0,
    generation: int = 0,
) -> list[Prompt]:
    """Rewrite every pool member once through a random Layer-3 prompt.

    Rewrites are appended; originals stay.  A rewrite that drops a slot
    marker or duplicates a pool text is discarded, as is any rewrite whose
    generator call fails.
    """
    if not pool or not fixed:
        raise ContractViolation("mutate_layer2 needs a non-empty pool and fixed prompts")
    out = list(pool)
    seen = {normalize_text(p.text) for p in pool}
    for member in pool:
        template = fixed[rng.randrange(len(fixed))]
        request = GenerateRequest(
            template.text.replace(SLOT_1, member.text), 1,
            derive_seed(run_seed, generation, template.id, member.id),
        )
        try:
            text = generator.generate(request).texts[0]
        except BackendError as exc:
            log.warning("layer-2 mutation of %s skipped: %s", member.id, exc)
            continue
        norm = normalize_text(text)
        if not has_markers(norm, member.layer) or norm in seen:
            continue
        seen.add(norm)
        out.append(Prompt(
            id=make_id(run_seed, generation, template.id, member.id, 0),
            layer=member.layer,
            text=norm,
            generation_born=generation + 1,
            lineage=(member.id,),
            operator_id=template.id,
            operator_kind=OperatorKind.SENTENCE_PARAPHRASE,
        ))
    return out


def best_per_objective(
    evaluated: Sequence[EvaluatedPrompt], k: int
) -> dict[str, list[Prompt]]:
    """Top ``k`` prompts on each objective (score desc, id asc)."""
    if not evaluated:
        return {}
    out = {}
    for j, name in enumerate(evaluated[0].fitness.objective_ids):
        ranked = sorted(evaluated, key=lambda e: (-e.fitness.scores[j], e.id))
        out[name] = [e.prompt for e in ranked[:k]]
    return out


def random_best_per_objective(
    population: Sequence[Prompt], objective_ids: Sequence[str], k: int, rng: random.Random
) -> dict[str, list[Prompt]]:
    """Stand-in for :func:`best_per_objective` before anything is evaluated."""
    return {
        name: rng.sample(list(population), min(k, len(population)))
        for name in objective_ids
    }


def pair_sample(best: Mapping[str, Sequence[Prompt]]) -> list[tuple[Prompt, Prompt]]:
    """All unordered pairs of distinct prompts drawn from different objectives.

    With a single objective, pairs are drawn within its list instead.
    """
    lists = [list(v) for v in best.values()]
    pairs: list[tuple[Prompt, Prompt]] = []
    seen: set[frozenset[str]] = set()

    def add(a: Prompt, b: Prompt) -> None:
        key = frozenset((a.id, b.id))
        if a.id != b.id and key not in seen:
            seen.add(key)
            pairs.append((a, b))

    if len(lists) == 1:
        only = lists[0]
        for i, a in enumerate(only):
            for b in only[i + 1:]:
                add(a, b)
    for i, first in enumerate(lists):
        for second in lists[i + 1:]:
            for a in first:
                for b in second:
                    add(a, b)
    if not pairs:
        log.info("pair_sample: fewer than two distinct prompts, combine is a no-op")
    return pairs


def combine(
    pairs: Sequence[tuple[Prompt, Prompt]],
    combine_prompts: Sequence[Prompt],
    C: int,
    generator: Generator,
    existing: set[str],
    run_seed: int = 0,
    generation: int = 0,
) -> list[Prompt]:
    """Fill each crossover template with each pair and keep valid completions."""
    if C < 1:
        raise ContractViolation("C must be ≥ 1")
    offspring: list[Prompt] = []
    for a, b in pairs:
        for op in combine_prompts:
            text = op.text.replace(SLOT_1, a.text).replace(SLOT_2, b.text)
            request = GenerateRequest(text, C, derive_seed(run_seed, generation, op.id, a.id, b.id))
            try:
                completions = generator.generate(request).texts
            except BackendError as exc:
                log.warning("combine %s x %s via %s skipped: %s", a.id, b.id, op.id, exc)
                continue
            for k, completion in enumerate(completions):
                norm = _accept(completion, existing)
                if norm is None:
                    continue
                existing.add(norm)
                offspring.append(Prompt(
                    id=make_id(run_seed, generation, op.id, a.id, b.id, k),
                    layer=PromptLayer.LAYER1,
                    text=norm,
                    generation_born=generation + 1,
                    lineage=(a.id, b.id),
                    operator_id=op.id,
                    operator_kind=OperatorKind.COMBINE,
                ))
    return offspring


def sentence_paraphrase(
    prompt: Prompt,
    paraphrase_prompts: Sequence[Prompt],
    C: int,
    generator: Generator,
    existing: set[str],
    run_seed: int = 0,
    generation: int = 0,
) -> list[Prompt]:
    if C < 1:
        raise ContractViolation("C must be ≥ 1")
    offspring: list[Prompt] = []
    for op in paraphrase_prompts:
        request = GenerateRequest(
            op.text.replace(SLOT_1, prompt.text), C,
            derive_seed(run_seed, generation, op.id, prompt.id),
        )
        try:
            completions = generator.generate(request).texts
        except BackendError as exc:
            log.warning("paraphrase of %s via %s skipped: %s", prompt.id, op.id, exc)
            continue
        for k, completion in enumerate(completions):
            norm = _accept(completion, existing)
            if norm is None:
                continue
            existing.add(norm)
            offspring.append(Prompt(
                id=make_id(run_seed, generation, op.id, prompt.id, k),
                layer=PromptLayer.LAYER1,
                text=norm,
                generation_born=generation + 1,
                lineage=(prompt.id,),
                operator_id=op.id,
                operator_kind=OperatorKind.SENTENCE_PARAPHRASE,
            ))
    return offspring


_WORD_OPS = ("add", "remove", "replace")
_WORD_KINDS = {
    "add": OperatorKind.WORD_ADD,
    "remove": OperatorKind.WORD_REMOVE,
    "replace": OperatorKind.WORD_REPLACE,
}


def _suggest(suggester: Suggester, tokens: list[str]) -> str:
    token = suggester.suggest(SuggestRequest(" ".join(tokens))).token
    if not token or any(c.isspace() for c in token):
        raise BackendError(f"suggested token {token!r} is unusable")
    return token


def word_edit(tokens: Sequence[str], op: str, rng: random.Random, suggester: Suggester
              ) -> tuple[list[str], str]:
    """Apply one word-level edit; returns the new tokens and the edit applied.

    A failing suggester turns add/replace into a removal.
    """
    tokens = list(tokens)
    editable = [i for i, t in enumerate(tokens) if EMOTION_PLACEHOLDER not in t]
    if op == "add":
        pos = rng.randint(0, len(tokens))
        try:
            word = _suggest(suggester, tokens[:pos] + [MASK] + tokens[pos:])
        except BackendError as exc:
            log.info("suggester failed (%s); falling back to removal", exc)
            op = "remove"
        else:
            return tokens[:pos] + [word] + tokens[pos:], op
    if op == "replace":
        if not editable:
            return tokens, op
        pos = editable[rng.randrange(len(editable))]
        try:
            word = _suggest(suggester, tokens[:pos] + [MASK] + tokens[pos + 1:])
        except BackendError as exc:
            log.info("suggester failed (%s); falling back to removal", exc)
            op = "remove"
        else:
            return tokens[:pos] + [word] + tokens[pos + 1:], op
    if not editable:
        return tokens, "remove"
    pos = editable[rng.randrange(len(editable))]
    return tokens[:pos] + tokens[pos + 1:], "remove"


def word_paraphrase(
    prompt: Prompt,
    C: int,
    suggester: Suggester,
    rng: random.Random,
    existing: set[str],
    run_seed: int = 0,
    generation: int = 0,
) -> list[Prompt]:
    """``C`` single-edit variants (add, remove or replace one token).

    Tokens are whitespace-separated; any token holding ``<em>`` is never
    removed or replaced.
    """
    if C < 1:
        raise ContractViolation("C must be ≥ 1")
    tokens = prompt.text.split()
    if len(tokens) < 2:
        raise ContractViolation("word-level paraphrase needs at least two tokens")
    offspring: list[Prompt] = []
    for k in range(C):
        op = _WORD_OPS[rng.randrange(3)]
        edited, applied = word_edit(tokens, op, rng, suggester)
        if len(edited) < 2 or edited == tokens:
            continue
        norm = _accept(" ".join(edited), existing)
        if norm is None:
            continue
        existing.add(norm)
        offspring.append(Prompt(
            id=make_id(run_seed, generation, "word", prompt.id, k),
            layer=PromptLayer.LAYER1,
            text=norm,
            generation_born=generation + 1,
            lineage=(prompt.id,),
            operator_id=None,
            operator_kind=_WORD_KINDS[applied],
        ))
    return offspring


def layer2_rank_key(prompt: Prompt, scores: Mapping[str, tuple[int, float]]):
    selected, mean = scores.get(prompt.id, (0, 0.0))
    return (-selected, -mean, prompt.id)


def update_layer2_scores(
    scores: Mapping[str, tuple[int, float]], ledger: Layer2Ledger
) -> dict[str, tuple[int, float]]:
    """Refresh rank scores of prompts that produced offspring this
    generation; the rest keep their previous score."""
    out = dict(scores)
    for pid, stats in ledger.entries.items():
        if stats.offspring_produced > 0:
            out[pid] = (stats.offspring_selected, stats.mean_offspring_fitness)
    return out


def select_layer2(
    pool: Sequence[Prompt],
    ledger: Layer2Ledger,
    m: int,
    previous_scores: Mapping[str, tuple[int, float]] | None = None,
) -> list[Prompt]:
    """Keep the ``m`` Layer-2 prompts whose offspring did best.

    Ranked by offspring placed in the selected set, then by mean offspring
    fitness, then by id.
    """
    if m < 1:
        raise ContractViolation("m must be ≥ 1")
    scores = update_layer2_scores(previous_scores or {}, ledger)
    return sorted(pool, key=lambda p: layer2_rank_key(p, scores))[:m]
