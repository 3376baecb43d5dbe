"""Deterministic stand-ins for the LLM, the masked LM and the classifiers.

The mocks are shallow on purpose: keyword templating driven by cue words
in the prompt.  That is enough to give prompts a fitness landscape in which
three lexicon scorers with different style terms pull in different
directions.  Every output is a pure function of the request and the
configured seed.
"""

from __future__ import annotations

import math
import random
import re
import string
from typing import Mapping, Sequence

from mopo.backends import (
    GenerateRequest,
    GenerateResponse,
    ScoreRequest,
    ScoreResponse,
    SuggestRequest,
    SuggestResponse,
)
from mopo.core import DEFAULT_EMOTIONS, EMOTION_PLACEHOLDER, MASK, ContractViolation, derive_seed

EMOTION_LEXICON: dict[str, frozenset[str]] = {
    "anger": frozenset(
        "anger angry furious rage outraged mad livid irate fuming resentful hostile seething".split()
    ),
    "disgust": frozenset(
        "disgust disgusted revolting gross nauseating repulsive vile sickening filthy foul loathsome repugnant".split()
    ),
    "fear": frozenset(
        "fear afraid scared terrified frightened panic dread anxious horrified alarmed nervous fearful".split()
    ),
    "joy": frozenset(
        "joy happy delighted joyful cheerful elated thrilled glad ecstatic overjoyed grateful content".split()
    ),
    "sadness": frozenset(
        "sadness sad sorrow grief heartbroken gloomy miserable tearful lonely mournful depressed unhappy".split()
    ),
}

FIRST_PERSON = frozenset({"i", "me", "my", "mine", "myself", "i'm", "i've", "we", "our"})
INFORMAL_MARKERS = frozenset({"lol", "omg", "haha", "totally", "ugh", "yay", ":)", ":("})

# cue words in a task prompt that steer the mock generator
_FIRST_PERSON_CUES = frozenset(
    "i me my myself felt experienced personal diary own memoir".split()
)
_INFORMAL_CUES = frozenset("casual tweet post informal fun hashtag social chatty friend".split())
_SHORT_CUES = frozenset(
    "short brief headline concise summarize fewer simple quick title phrases phrase line".split()
)
_VIVID_CUES = frozenset(
    "express expresses expressing conveys convey emotion emotional feel feeling strongly "
    "vivid deeply intense powerful captures capture".split()
)
_DETAIL_CUES = frozenset(
    "describe detail detailed narrate recount story expand situation event explanation".split()
)

_OPENERS_PERSONAL = ("I felt", "I was", "My day was", "I am", "I got")
_OPENERS_NEUTRAL = ("The town", "Officials", "Local family", "Crowd", "Market", "Team", "City")
_FILLER = (
    "after the meeting at work when news came in over the weekend near home with everyone "
    "during dinner as rain fell on monday before school around the corner at last"
).split()
_HASHTAGS = ("#mood", "#life", "#today", "#vibes", "#real")

# Layer-1 paraphrase synonyms: some substitutions introduce cue words
_SYNONYMS_L1: dict[str, tuple[str, ...]] = {
    "write": ("compose", "craft", "jot down", "pen"),
    "text": ("short text", "story", "post", "headline", "note", "tweet"),
    "expresses": ("conveys", "captures", "strongly expresses", "shows"),
    "express": ("convey", "capture", "show"),
    "describe": ("recount", "narrate", "detail", "share"),
    "situation": ("moment", "event", "experience"),
    "sentence": ("line", "phrase", "headline", "short sentence"),
    "felt": ("experienced", "felt deeply", "was"),
    "person": ("friend", "neighbor", "reader"),
    "example": ("instance", "sample"),
    "provide": ("give", "share"),
    "please": ("kindly", "now"),
    "phrases": ("lines", "words", "short phrases"),
    "what": ("which",),
    "complete": ("finish", "continue"),
    "reader": ("person", "writer"),
    "someone": ("a friend", "a person"),
    "experience": ("memory", "moment"),
    "detail": ("depth", "vivid detail"),
}

# Layer-2 rewrite synonyms (Layer-3 mutation requests)
_SYNONYMS_L2: dict[str, tuple[str, ...]] = {
    "paraphrase": ("rephrase", "reword"),
    "rewrite": ("rephrase", "recast"),
    "following": ("given", "next"),
    "sentence": ("statement", "line"),
    "new": ("fresh", "different"),
    "combine": ("merge", "blend"),
    "merge": ("combine", "fuse"),
    "create": ("form", "craft"),
    "cohesive": ("unified", "coherent"),
    "single": ("one", "unified"),
    "meaning": ("message", "sense"),
    "clear": ("plain", "direct"),
    "simplify": ("shorten", "clarify"),
    "mix": ("blend", "merge"),
    "themes": ("ideas", "motifs"),
}

# words in an operation template that leave a trace in the paraphrase
_TEMPLATE_HINTS: dict[str, str] = {
    "informal": "casual",
    "casual": "casual",
    "engaging": "vivid",
    "creatively": "vivid",
    "creative": "vivid",
    "concise": "short",
    "fewer": "short",
    "summarize": "brief",
    "simplify": "simple",
    "younger": "simple",
    "detailed": "detailed",
    "expand": "detailed",
    "perspective": "personal",
    "formal": "formal",
}

_SUGGEST_INITIAL = ("Please", "Kindly", "Now", "Briefly", "Honestly", "Write", "Describe", "Share")
_SUGGEST_VOCAB = (
    "short casual vivid personal brief strongly deeply emotional tweet headline story "
    "detailed simple quick my own really new clear text post powerful today fun"
).split()

_QUOTED = re.compile(r'"([^"]*)"')
_STRIP = string.punctuation.replace("#", "").replace("<", "").replace(">", "")


def _bare(token: str) -> str:
    return token.strip(_STRIP).lower()


def _lexical(token: str) -> str:
    return token.strip(string.punctuation).lower()


def _rng(*parts) -> random.Random:
    return random.Random(derive_seed(*parts))


def _match_case(original: str, replacement: str) -> str:
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def _substitute(tokens: list[str], table: Mapping[str, Sequence[str]], rng: random.Random,
                protect: str, rate: float = 0.5) -> list[str]:
    out: list[str] = []
    for tok in tokens:
        key = _bare(tok)
        if protect not in tok and key in table and rng.random() < rate:
            core = tok.lower().find(key)
            repl = _match_case(tok[core:], rng.choice(table[key])) if core >= 0 else tok
            out.append(tok[:core] + repl + tok[core + len(key):] if core >= 0 else tok)
        else:
            out.append(tok)
    return out


def _rotate(tokens: list[str]) -> list[str]:
    text = " ".join(tokens)
    if ":" in text:
        head, _, tail = text.partition(":")
        if head.strip() and tail.strip():
            return f"{tail.strip()}: {head.strip()}".split()
    return tokens[1:] + tokens[:1] if len(tokens) > 1 else tokens


def _clean(text: str) -> str:
    return " ".join(text.replace('"', "").split())


class MockGenerator:
    """Keyword-templating text generator.

    Requests are routed by their shape: a request mentioning a slot marker
    rewrites a Layer-2 prompt; one quoting two ``<em>`` texts is a crossover;
    one quoting a single ``<em>`` text is a paraphrase; anything else is a
    task prompt whose emotion word and cue words shape ``n`` short texts.
    """

    def __init__(self, seed: int = 0, emotions: Sequence[str] = DEFAULT_EMOTIONS,
                 lexicon: Mapping[str, frozenset[str]] = EMOTION_LEXICON):
        self.seed = seed
        self.emotions = tuple(emotions)
        self.lexicon = lexicon

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        prompt = request.prompt
        rngs = [_rng(self.seed, request.seed, prompt, i) for i in range(request.n)]
        if "SENTENCE_" in prompt:
            texts = [self._rewrite_layer2(prompt, rng) for rng in rngs]
        elif EMOTION_PLACEHOLDER in prompt:
            quoted = [q for q in _QUOTED.findall(prompt) if EMOTION_PLACEHOLDER in q]
            template = _QUOTED.sub(" ", prompt)
            if len(quoted) >= 2:
                texts = [self._combine(quoted[0], quoted[1], i, rng) for i, rng in enumerate(rngs)]
            else:
                source = quoted[0] if quoted else prompt
                texts = [self._paraphrase(source, template, i, rng) for i, rng in enumerate(rngs)]
        else:
            cues = self._cues(prompt)
            # keyed by the cue signature, not the wording: prompts that read
            # alike to the mock get identical texts, keeping the landscape coarse
            texts = [self._task_text(cues, _rng(self.seed, repr(cues), i)) for i in range(request.n)]
        return GenerateResponse(tuple(texts))

    # -- operation requests -------------------------------------------------

    def _rewrite_layer2(self, prompt: str, rng: random.Random) -> str:
        first, last = prompt.find('"'), prompt.rfind('"')
        payload = prompt[first + 1:last] if last > first >= 0 else prompt
        if "SENTENCE_" not in payload:
            payload = prompt
        tokens = _substitute(payload.split(), _SYNONYMS_L2, rng, protect="SENTENCE_", rate=0.6)
        return " ".join(tokens)

    def _paraphrase(self, source: str, template: str, index: int, rng: random.Random) -> str:
        tokens = _substitute(source.split(), _SYNONYMS_L1, rng, protect=EMOTION_PLACEHOLDER)
        hints = [_TEMPLATE_HINTS[w] for w in map(_bare, template.split()) if w in _TEMPLATE_HINTS]
        if hints and rng.random() < 0.7:
            tokens.insert(rng.randint(0, len(tokens)), hints[index % len(hints)])
        if index % 3 == 2:
            tokens = _rotate(tokens)
        return _clean(" ".join(tokens))

    def _combine(self, first: str, second: str, index: int, rng: random.Random) -> str:
        a, b = first.split(), second.split()
        a_head, a_tail = a[: max(1, len(a) // 2)], a[max(1, len(a) // 2):]
        b_head, b_tail = b[: max(1, len(b) // 2)], b[max(1, len(b) // 2):]
        variants = (
            a_head + (b_tail or b_head),
            b_head + (a_tail or a_head),
            a_head + ["and"] + b_head,
        )
        tokens = list(variants[index % len(variants)])
        if not any(EMOTION_PLACEHOLDER in t for t in tokens):
            tokens += ["about", EMOTION_PLACEHOLDER]
        if rng.random() < 0.3:
            tokens = _substitute(tokens, _SYNONYMS_L1, rng, protect=EMOTION_PLACEHOLDER, rate=0.3)
        return _clean(" ".join(tokens))

    # -- task prompts ---------------------------------------------------------

    def _detect_emotion(self, words: Sequence[str]) -> str | None:
        for w in words:
            if w in self.emotions:
                return w
        return None

    def _cues(self, prompt: str) -> tuple:
        words = [_lexical(w) for w in prompt.split()]
        present = set(words)
        return (
            self._detect_emotion(words),
            bool(present & _FIRST_PERSON_CUES),
            bool(present & _INFORMAL_CUES),
            bool(present & _SHORT_CUES),
            bool(present & _DETAIL_CUES),
            min(2, sum(1 for w in words if w in _VIVID_CUES)),
        )

    def _task_text(self, cues: tuple, rng: random.Random) -> str:
        emotion, personal, informal, short, detailed, vivid = cues
        emotion = emotion or rng.choice(self.emotions)

        pool = sorted(self.lexicon.get(emotion, ()))
        keywords = rng.sample(pool, min(len(pool), 1 + vivid)) if pool else []
        if short:
            n_filler = rng.randint(1, 3)
        elif detailed:
            n_filler = rng.randint(8, 12)
        else:
            n_filler = rng.randint(4, 7)
        filler = [rng.choice(_FILLER) for _ in range(n_filler)]
        opener = rng.choice(_OPENERS_PERSONAL if personal else _OPENERS_NEUTRAL).split()

        body = filler[:]
        for kw in keywords:
            body.insert(rng.randint(0, len(body)), kw)
        # occasional confusion with another emotion keeps scores below 1
        if rng.random() < 0.15:
            other = rng.choice([e for e in self.lexicon if e != emotion] or [emotion])
            body.insert(rng.randint(0, len(body)), rng.choice(sorted(self.lexicon[other])))
        tokens = opener + body
        if informal:
            tokens += [rng.choice(_HASHTAGS), rng.choice(("!", "lol", "omg"))]
        return " ".join(tokens)


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


class LexiconScorer:
    """Keyword-evidence classifier with a domain style term.

    ``score = sigmoid(slope * (hits(label) - max hits(other))) * style`` where
    ``style = style_base + (1 - style_base) * feature`` and ``feature`` in
    [0, 1] is computed from the non-lexicon "frame" tokens only, so adding a
    label keyword never lowers the score.

    Styles: ``plain`` (style fixed at 1), ``narrative`` (first person and
    length, halved by chat markers), ``social`` (hashtags, exclamations, chat markers) and
    ``headline`` (short, impersonal).
    """

    STYLES = ("plain", "narrative", "social", "headline")

    def __init__(self, name: str, style: str = "plain", slope: float = 1.5,
                 style_base: float = 0.4,
                 lexicon: Mapping[str, frozenset[str]] = EMOTION_LEXICON):
        if style not in self.STYLES:
            raise ContractViolation(f"unknown lexicon style {style!r}")
        self.name = name
        self.style = style
        self.slope = slope
        self.style_base = 1.0 if style == "plain" else style_base
        self.lexicon = lexicon

    def counts(self, text: str) -> tuple[dict[str, int], list[str]]:
        hits = dict.fromkeys(self.lexicon, 0)
        frame: list[str] = []
        for tok in text.split():
            word = _lexical(tok)
            for label, words in self.lexicon.items():
                if word in words:
                    hits[label] += 1
                    break
            else:
                frame.append(tok)
        return hits, frame

    def style_feature(self, frame: Sequence[str]) -> float:
        if self.style == "plain" or not frame:
            return 0.0
        lowered = [t.lower() for t in frame]
        personal = any(_lexical(t) in FIRST_PERSON for t in lowered)
        markers = sum(1 for t in lowered if t.startswith("#") or "!" in t or t in INFORMAL_MARKERS)
        if self.style == "narrative":
            # chat markers read as a post, not a story
            story = 0.6 * personal + 0.4 * min(1.0, len(frame) / 8)
            return story * (0.5 if markers else 1.0)
        if self.style == "social":
            return min(1.0, markers / 2)
        brevity = 1.0 if len(frame) <= 4 else max(0.0, 1.0 - (len(frame) - 4) / 8)
        return 0.0 if personal else brevity

    def score_text(self, text: str, label: str) -> float:
        if label not in self.lexicon:
            raise ContractViolation(f"lexicon has no entry for label {label!r}")
        hits, frame = self.counts(text)
        others = max((c for lab, c in hits.items() if lab != label), default=0)
        style = self.style_base + (1.0 - self.style_base) * self.style_feature(frame)
        return _sigmoid(self.slope * (hits[label] - others)) * style

    def score(self, request: ScoreRequest) -> ScoreResponse:
        return ScoreResponse(tuple(self.score_text(t, request.label) for t in request.texts))


class MockSuggester:
    """Picks a token by hashing the text around the mask."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def suggest(self, request: SuggestRequest) -> SuggestResponse:
        left, _, right = request.text.partition(MASK)
        left, right = left.strip(), right.strip()
        vocab = _SUGGEST_INITIAL if not left else _SUGGEST_VOCAB
        index = derive_seed(self.seed, left, right) % len(vocab)
        return SuggestResponse(vocab[index])
