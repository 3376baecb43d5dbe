"""Generation, scoring and masked-token suggestion capabilities.

Every capability exists twice: an HTTP client speaking the ``/v1`` JSON
protocol, and a deterministic in-process mock.  :func:`build_backends`
wires either kind from a :class:`~mopo.core.RunConfig`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from mopo.core import MASK, BackendSpec, ContractViolation, RunConfig


@dataclass(frozen=True)
class GenerateRequest:
    prompt: str
    n: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ContractViolation("n must be positive")

    def to_dict(self) -> dict:
        return {"prompt": self.prompt, "n": self.n, "seed": self.seed}


@dataclass(frozen=True)
class GenerateResponse:
    texts: tuple[str, ...]


@dataclass(frozen=True)
class ScoreRequest:
    texts: tuple[str, ...]
    label: str

    def to_dict(self) -> dict:
        return {"texts": list(self.texts), "label": self.label}


@dataclass(frozen=True)
class ScoreResponse:
    scores: tuple[float, ...]


@dataclass(frozen=True)
class SuggestRequest:
    text: str

    def __post_init__(self):
        if self.text.count(MASK) != 1:
            raise ContractViolation(f"suggest request needs exactly one {MASK} marker")

    def to_dict(self) -> dict:
        return {"text": self.text}


@dataclass(frozen=True)
class SuggestResponse:
    token: str


class Generator(Protocol):
    def generate(self, request: GenerateRequest) -> GenerateResponse: ...


class Scorer(Protocol):
    name: str

    def score(self, request: ScoreRequest) -> ScoreResponse: ...


class Suggester(Protocol):
    def suggest(self, request: SuggestRequest) -> SuggestResponse: ...


@dataclass
class Backends:
    generator: Generator
    suggester: Suggester
    scorers: Sequence[Scorer]


def build_backends(config: RunConfig) -> Backends:
    from mopo.backends import http, mock

    def client(spec: BackendSpec) -> http.HttpClient:
        return http.HttpClient(spec.endpoint, max_attempts=config.max_attempts)

    if config.generator.is_mock:
        generator = mock.MockGenerator(seed=config.rng_seed, emotions=config.emotions)
    else:
        generator = http.HttpGenerator(client(config.generator))
    if config.suggester.is_mock:
        suggester = mock.MockSuggester(seed=config.rng_seed)
    else:
        suggester = http.HttpSuggester(client(config.suggester))
    scorers = []
    for objective in config.objectives:
        if objective.backend.is_mock:
            scorers.append(mock.LexiconScorer(objective.name, **objective.backend.mock))
        else:
            scorers.append(http.HttpScorer(objective.name, client(objective.backend)))
    return Backends(generator, suggester, scorers)


__all__ = [
    "Backends",
    "GenerateRequest",
    "GenerateResponse",
    "Generator",
    "ScoreRequest",
    "ScoreResponse",
    "Scorer",
    "SuggestRequest",
    "SuggestResponse",
    "Suggester",
    "build_backends",
]
