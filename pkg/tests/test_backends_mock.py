import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mopo.backends import GenerateRequest, ScoreRequest, SuggestRequest
from mopo.backends.mock import (
    EMOTION_LEXICON,
    LexiconScorer,
    MockGenerator,
    MockSuggester,
)
from mopo.core import ContractViolation

WORDS = sorted(set().union(*EMOTION_LEXICON.values())) + "I my the town lol #mood ! after rain".split()


def test_plain_scorer_is_a_keyword_sigmoid():
    s = LexiconScorer("p", "plain")
    # one joy keyword, no competing evidence: sigmoid(1.5)
    assert s.score_text("so happy today", "joy") == pytest.approx(1 / (1 + math.exp(-1.5)))
    assert s.score_text("nothing here", "joy") == 0.5
    assert s.score_text("happy glad joyful", "joy") >= 0.9


def test_style_terms():
    narrative = LexiconScorer("n", "narrative")
    headline = LexiconScorer("h", "headline")
    social = LexiconScorer("s", "social")
    story = "I felt happy glad joyful after the meeting at work with everyone"
    news = "Town happy glad joyful"
    post = "happy glad joyful #mood lol"
    assert narrative.score_text(story, "joy") > narrative.score_text(news, "joy")
    assert headline.score_text(news, "joy") > headline.score_text(story, "joy")
    assert social.score_text(post, "joy") > social.score_text(news, "joy")
    # chat markers make a story read like a post
    assert narrative.score_text(story + " lol", "joy") < narrative.score_text(story, "joy")
    assert headline.score_text(news, "joy") >= 0.9


@given(st.lists(st.sampled_from(WORDS), max_size=15), st.sampled_from(sorted(EMOTION_LEXICON)),
       st.sampled_from(LexiconScorer.STYLES))
def test_scores_are_probabilities_and_keywords_help(words, label, style):
    s = LexiconScorer("x", style)
    text = " ".join(words)
    base = s.score_text(text, label)
    assert 0.0 <= base <= 1.0
    keyword = sorted(EMOTION_LEXICON[label])[0]
    assert s.score_text(f"{text} {keyword}", label) >= base


def test_scorer_contract():
    with pytest.raises(ContractViolation):
        LexiconScorer("x", "poetry")
    with pytest.raises(ContractViolation):
        LexiconScorer("x").score_text("a", "awe")
    out = LexiconScorer("x").score(ScoreRequest(("happy", "sad"), "joy"))
    assert out.scores[0] > out.scores[1]


def test_generator_is_deterministic_and_sized():
    g = MockGenerator(seed=3)
    req = GenerateRequest("Write a short text that expresses joy", 5, 17)
    a, b = g.generate(req), g.generate(req)
    assert a == b and len(a.texts) == 5
    assert MockGenerator(seed=4).generate(req) != a


def test_task_texts_follow_cues():
    g = MockGenerator()
    lex = EMOTION_LEXICON["fear"]
    texts = g.generate(GenerateRequest("Write a short tweet that strongly expresses fear", 20, 1)).texts
    assert all(any(w.strip("!").lower() in lex for w in t.split()) for t in texts)
    assert all(t.split()[-2].startswith("#") for t in texts)
    personal = g.generate(GenerateRequest("Describe a situation where I felt joy", 10, 1)).texts
    assert all(t.startswith(("I ", "My ")) for t in personal)


def test_operation_requests_keep_the_placeholder():
    g = MockGenerator()
    para = g.generate(GenerateRequest('Paraphrase in an informal style: "Write a text that expresses <em>"', 6, 2))
    comb = g.generate(GenerateRequest(
        'Combine "Write a polite text about <em>" and "Write a short text about <em>"', 6, 2))
    for text in para.texts + comb.texts:
        assert "<em>" in text and '"' not in text


def test_layer2_rewrites_keep_slots():
    g = MockGenerator()
    out = g.generate(GenerateRequest('Rewrite this: "Combine SENTENCE_1 and SENTENCE_2 into a single sentence"', 4, 0))
    assert all("SENTENCE_1" in t and "SENTENCE_2" in t for t in out.texts)


def test_suggester():
    s = MockSuggester(seed=1)
    a = s.suggest(SuggestRequest("Write a <mask> text"))
    assert a == s.suggest(SuggestRequest("Write a <mask> text"))
    assert a.token and " " not in a.token
    assert s.suggest(SuggestRequest("<mask> write")).token[0].isupper()
