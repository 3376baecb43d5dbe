"""Text generation fan-out, BLEU echo filtering and score aggregation."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

from mopo.backends import GenerateRequest, Generator, ScoreRequest, Scorer
from mopo.core import (
    EMOTION_PLACEHOLDER,
    BackendError,
    ContractViolation,
    EvaluatedPrompt,
    ObjectiveVector,
    Prompt,
    TextSample,
    derive_seed,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InstantiatedPrompt:
    parent_prompt_id: str
    emotion: str
    text: str

    def __post_init__(self):
        if EMOTION_PLACEHOLDER in self.text:
            raise ContractViolation("instantiated prompt still contains <em>")


def instantiate(prompt: Prompt, emotions: Sequence[str]) -> list[InstantiatedPrompt]:
    """One generation prompt per emotion, with every ``<em>`` replaced."""
    if EMOTION_PLACEHOLDER not in prompt.text:
        raise ContractViolation(f"prompt {prompt.id} has no {EMOTION_PLACEHOLDER} placeholder")
    return [
        InstantiatedPrompt(prompt.id, e, prompt.text.replace(EMOTION_PLACEHOLDER, e))
        for e in emotions
    ]


def bleu_tokens(text: str) -> list[str]:
    return text.lower().split()


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Unsmoothed sentence BLEU against a single reference.

    Uses n-gram orders 1..min(4, len(candidate)) with uniform weights and the
    brevity penalty ``exp(1 - r/c)`` for candidates shorter than the
    reference.  Any zero precision makes the score 0.
    """
    if not candidate or not reference:
        raise ContractViolation("BLEU needs a non-empty candidate and reference")
    max_n = min(4, len(candidate))
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand = _ngrams(candidate, n)
        ref = _ngrams(reference, n)
        matched = sum(min(count, ref[g]) for g, count in cand.items())
        if matched == 0:
            return 0.0
        log_sum += math.log(matched / sum(cand.values()))
    c, r = len(candidate), len(reference)
    penalty = 1.0 if c >= r else math.exp(1.0 - r / c)
    return min(1.0, penalty * math.exp(log_sum / max_n))


def echo_filter(source: InstantiatedPrompt, texts: Sequence[str], threshold: float,
                bleu: Callable[[Sequence[str], Sequence[str]], float] = sentence_bleu,
                ) -> list[TextSample]:
    """Flag texts whose BLEU against the generation prompt exceeds ``threshold``.

    The comparison is strict: a text scoring exactly ``threshold`` is kept.
    ``bleu`` exists so that boundary can be exercised directly.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ContractViolation("threshold must be in [0, 1]")
    reference = bleu_tokens(source.text)
    samples = []
    for i, text in enumerate(texts):
        candidate = bleu_tokens(text)
        score = bleu(candidate, reference) if candidate and reference else 0.0
        samples.append(TextSample(source.parent_prompt_id, source.emotion, i, text, score, score > threshold))
    return samples


def _mean(values: Sequence[float]) -> float:
    # rounding must not push a mean of [0, 1] values outside [0, 1]
    return min(1.0, max(0.0, sum(values) / len(values))) if values else 0.0


def aggregate(samples: Sequence[TextSample], objective_ids: Sequence[str],
              emotions: Sequence[str]) -> tuple[ObjectiveVector, dict[str, dict[str, float]]]:
    """Mean over surviving texts per emotion, then mean over emotions.

    An emotion with no surviving text contributes 0.
    """
    ordered = sorted(samples, key=lambda s: (emotions.index(s.emotion), s.index))
    per_emotion: dict[str, dict[str, float]] = {}
    values = []
    for name in objective_ids:
        per_emotion[name] = {}
        for emotion in emotions:
            kept = [s.scores[name] for s in ordered if s.emotion == emotion and not s.filtered]
            per_emotion[name][emotion] = _mean(kept)
        values.append(_mean(list(per_emotion[name].values())))
    return ObjectiveVector(tuple(values), tuple(objective_ids)), per_emotion


def evaluate(
    prompt: Prompt,
    generator: Generator,
    objectives: Sequence[Scorer],
    emotions: Sequence[str],
    texts_per_prompt: int,
    bleu_threshold: float,
    run_seed: int = 0,
) -> EvaluatedPrompt:
    """Generate, filter and score texts for every emotion of ``prompt``.

    A generator failure leaves that emotion with whatever texts exist (none);
    a scorer failure propagates, since fitness must stay comparable across
    the population.
    """
    if not objectives:
        raise ContractViolation("at least one objective scorer is required")
    names = [o.name for o in objectives]
    samples: list[TextSample] = []
    for inst in instantiate(prompt, emotions):
        request = GenerateRequest(inst.text, texts_per_prompt, derive_seed(run_seed, "text", inst.text))
        try:
            texts = generator.generate(request).texts
        except BackendError as exc:
            log.warning("generation failed for %s/%s: %s", prompt.id, inst.emotion, exc)
            texts = ()
        flagged = echo_filter(inst, texts, bleu_threshold)
        kept = [s for s in flagged if not s.filtered]
        scores: dict[str, Sequence[float]] = {}
        for scorer in objectives:
            got = scorer.score(ScoreRequest(tuple(s.text for s in kept), inst.emotion)).scores
            if len(got) != len(kept):
                raise BackendError(f"scorer {scorer.name} returned {len(got)} of {len(kept)} scores")
            scores[scorer.name] = got
        position = {s.index: k for k, s in enumerate(kept)}
        for s in flagged:
            k = position.get(s.index)
            samples.append(
                s if k is None else TextSample(
                    s.prompt_id, s.emotion, s.index, s.text, s.echo_bleu, s.filtered,
                    {n: scores[n][k] for n in names},
                )
            )
    fitness, per_emotion = aggregate(samples, names, list(emotions))
    return EvaluatedPrompt(prompt, fitness, tuple(samples), per_emotion)
