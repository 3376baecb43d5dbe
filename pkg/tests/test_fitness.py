import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mopo.backends import GenerateResponse, ScoreResponse
from mopo.backends.mock import LexiconScorer, MockGenerator
from mopo.core import BackendError, ContractViolation, Prompt, PromptLayer, TextSample
from mopo.fitness import (
    InstantiatedPrompt,
    aggregate,
    bleu_tokens,
    echo_filter,
    evaluate,
    instantiate,
    sentence_bleu,
)
from oracles import nltk_bleu

VOCAB = "the a cat dog sat on mat joy text write that expresses happy day i felt".split()


def _prompt(text="Write a text that expresses <em>"):
    return Prompt("p1", PromptLayer.LAYER1, text)


def test_instantiate_replaces_every_placeholder():
    out = instantiate(_prompt("<em> then <em> again"), ["joy", "fear"])
    assert [i.text for i in out] == ["joy then joy again", "fear then fear again"]
    assert [i.emotion for i in out] == ["joy", "fear"]


def test_instantiate_requires_placeholder():
    with pytest.raises(ContractViolation):
        instantiate(_prompt("no slot here"), ["joy"])
    with pytest.raises(ContractViolation):
        InstantiatedPrompt("p", "joy", "still <em>")


def test_bleu_examples():
    assert sentence_bleu("the cat sat".split(), "the cat sat".split()) == 1.0
    assert sentence_bleu("dog".split(), "the cat sat".split()) == 0.0
    # no shared trigram, so the 4-gram BLEU is 0
    cand, ref = bleu_tokens("The text expresses joy"), bleu_tokens("write a text that expresses joy")
    assert sentence_bleu(cand, ref) == 0.0


def test_bleu_brevity_penalty():
    # all n-gram precisions are 1; only the brevity penalty remains
    score = sentence_bleu("the cat".split(), "the cat sat on".split())
    assert score == pytest.approx(math.exp(1 - 4 / 2))


def test_bleu_rejects_empty_input():
    with pytest.raises(ContractViolation):
        sentence_bleu([], ["a"])


@given(st.lists(st.sampled_from(VOCAB), min_size=1, max_size=12),
       st.lists(st.sampled_from(VOCAB), min_size=1, max_size=12))
def test_bleu_matches_nltk(candidate, reference):
    ours = sentence_bleu(candidate, reference)
    assert 0.0 <= ours <= 1.0
    assert ours == pytest.approx(nltk_bleu(candidate, reference), abs=1e-9)


def test_echo_filter_threshold_is_strict():
    source = InstantiatedPrompt("p", "joy", "write a text that expresses joy")
    samples = echo_filter(source, ["write a text that expresses joy", "I felt happy today"], 0.2)
    assert [s.filtered for s in samples] == [True, False]
    assert samples[0].echo_bleu == 1.0


def _sample(emotion, index, filtered, **scores):
    return TextSample("p", emotion, index, "t", 0.0, filtered, scores)


def test_aggregate_means_over_texts_then_emotions():
    samples = [
        _sample("joy", 0, False, a=1.0),
        _sample("joy", 1, False, a=0.5),
        _sample("joy", 2, True),
        _sample("fear", 0, False, a=0.25),
    ]
    vec, per_emotion = aggregate(samples, ["a"], ["joy", "fear"])
    assert per_emotion["a"] == {"joy": 0.75, "fear": 0.25}
    assert vec.scores == (0.5,)


def test_aggregate_fully_filtered_emotion_scores_zero():
    samples = [_sample("joy", 0, True), _sample("fear", 0, False, a=1.0)]
    vec, per_emotion = aggregate(samples, ["a"], ["joy", "fear"])
    assert per_emotion["a"]["joy"] == 0.0
    assert vec.scores == (0.5,)


def test_evaluate_with_mocks_is_deterministic():
    gen = MockGenerator(seed=1)
    scorers = [LexiconScorer("narrative", "narrative"), LexiconScorer("headline", "headline")]
    a = evaluate(_prompt(), gen, scorers, ["joy", "fear"], 5, 0.2, run_seed=1)
    b = evaluate(_prompt(), gen, scorers, ["joy", "fear"], 5, 0.2, run_seed=1)
    assert a == b
    assert len(a.samples) == 10
    assert a.fitness.objective_ids == ("narrative", "headline")


class _Failing:
    def generate(self, request):
        raise BackendError("down")


class _Echo:
    def generate(self, request):
        return GenerateResponse((request.prompt,) * request.n)


class _Counting:
    name = "c"

    def __init__(self):
        self.calls = []

    def score(self, request):
        self.calls.append(request.texts)
        return ScoreResponse(tuple(1.0 for _ in request.texts))


def test_generator_failure_zeroes_the_emotion():
    scorer = _Counting()
    out = evaluate(_prompt(), _Failing(), [scorer], ["joy"], 3, 0.2)
    assert out.fitness.scores == (0.0,)
    assert out.samples == ()


def test_echoed_texts_are_never_scored():
    scorer = _Counting()
    out = evaluate(_prompt(), _Echo(), [scorer], ["joy"], 3, 0.2)
    assert all(s.filtered for s in out.samples)
    assert scorer.calls == [()]
    assert out.fitness.scores == (0.0,)


def test_evaluate_needs_objectives():
    with pytest.raises(ContractViolation):
        evaluate(_prompt(), _Echo(), [], ["joy"], 1, 0.2)


def test_echo_filter_rejects_bad_threshold():
    with pytest.raises(ContractViolation):
        echo_filter(InstantiatedPrompt("p", "joy", "x"), ["y"], 1.5)


def test_bleu_random_pairs_stay_in_unit_interval():
    rng = random.Random(0)
    for _ in range(200):
        c = rng.choices(VOCAB, k=rng.randint(1, 10))
        r = rng.choices(VOCAB, k=rng.randint(1, 10))
        assert 0.0 <= sentence_bleu(c, r) <= 1.0


def test_echo_filter_keeps_a_score_exactly_at_threshold():
    source = InstantiatedPrompt("p", "joy", "write a text that expresses joy")
    kept, dropped = (echo_filter(source, ["x"], 0.2, bleu=lambda c, r, v=v: v)[0] for v in (0.2, 0.2 + 1e-12))
    assert (kept.filtered, dropped.filtered) == (False, True)
