"""Domain types, identifiers and run configuration shared across mopo."""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

EMOTION_PLACEHOLDER = "<em>"
SLOT_1 = "SENTENCE_1"
SLOT_2 = "SENTENCE_2"
MASK = "<mask>"

DEFAULT_EMOTIONS = ("anger", "disgust", "fear", "joy", "sadness")

INF = math.inf


class MopoError(Exception):
    """Base class for all mopo errors."""


class ContractViolation(MopoError, ValueError):
    """A precondition of an operation was not met."""


class ConfigError(MopoError):
    """Run configuration is invalid."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class BackendError(MopoError):
    """A backend capability failed permanently or exhausted its retries."""

    def __init__(self, message: str, request_id: str | None = None):
        self.request_id = request_id
        super().__init__(f"{message} (request {request_id})" if request_id else message)


class ProtocolViolation(BackendError):
    """A backend answered with a document that breaks the wire contract."""


class CorruptStateError(MopoError):
    """A run directory cannot be trusted for resume or export."""

    def __init__(self, message: str, last_valid_generation: int | None = None):
        self.last_valid_generation = last_valid_generation
        super().__init__(message)


class PromptLayer(str, enum.Enum):
    LAYER1 = "Layer1"
    LAYER2_COMBINE = "Layer2Combine"
    LAYER2_PARAPHRASE = "Layer2Paraphrase"
    LAYER3_FIXED = "Layer3Fixed"


class OperatorKind(str, enum.Enum):
    SEED = "Seed"
    SENTENCE_PARAPHRASE = "SentenceParaphrase"
    WORD_ADD = "WordAdd"
    WORD_REMOVE = "WordRemove"
    WORD_REPLACE = "WordReplace"
    COMBINE = "Combine"


_LINEAGE_LENGTH = {OperatorKind.SEED: 0, OperatorKind.COMBINE: 2}


def normalize_text(text: str) -> str:
    """Collapse every run of whitespace to one space; used for dedup."""
    return " ".join(text.split())


def derive_seed(*parts: Any) -> int:
    """Stable 64-bit integer from an arbitrary tuple of printable parts."""
    digest = hashlib.sha256("\x1f".join(map(str, parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def make_id(*parts: Any) -> str:
    return hashlib.sha256("\x1f".join(map(str, parts)).encode("utf-8")).hexdigest()[:16]


def required_markers(layer: PromptLayer) -> tuple[str, ...]:
    if layer is PromptLayer.LAYER1:
        return (EMOTION_PLACEHOLDER,)
    if layer is PromptLayer.LAYER2_COMBINE:
        return (SLOT_1, SLOT_2)
    return (SLOT_1,)


def has_markers(text: str, layer: PromptLayer) -> bool:
    return all(marker in text for marker in required_markers(layer))


@dataclass(frozen=True)
class Prompt:
    """A text genome plus its provenance."""

    id: str
    layer: PromptLayer
    text: str
    generation_born: int = 0
    lineage: tuple[str, ...] = ()
    operator_id: str | None = None
    operator_kind: OperatorKind = OperatorKind.SEED

    def __post_init__(self):
        if self.generation_born < 0:
            raise ContractViolation("generation_born must be non-negative")
        if not has_markers(self.text, self.layer):
            raise ContractViolation(
                f"{self.layer.value} prompt must contain {' and '.join(required_markers(self.layer))}"
            )
        expected = _LINEAGE_LENGTH.get(self.operator_kind, 1)
        if len(self.lineage) != expected:
            raise ContractViolation(
                f"{self.operator_kind.value} prompt needs {expected} parents, got {len(self.lineage)}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "layer": self.layer.value,
            "text": self.text,
            "generation_born": self.generation_born,
            "lineage": list(self.lineage),
            "operator_id": self.operator_id,
            "operator_kind": self.operator_kind.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Prompt":
        return cls(
            id=data["id"],
            layer=PromptLayer(data["layer"]),
            text=data["text"],
            generation_born=int(data["generation_born"]),
            lineage=tuple(data["lineage"]),
            operator_id=data.get("operator_id"),
            operator_kind=OperatorKind(data["operator_kind"]),
        )


def seed_prompt(text: str, layer: PromptLayer, index: int, run_seed: int) -> Prompt:
    return Prompt(
        id=make_id(run_seed, 0, "seed", layer.value, index),
        layer=layer,
        text=text,
    )


@dataclass(frozen=True)
class ObjectiveVector:
    """One score in [0, 1] per objective, in a run-wide fixed order."""

    scores: tuple[float, ...]
    objective_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.scores:
            raise ContractViolation("objective vector must have at least one score")
        if len(self.scores) != len(self.objective_ids):
            raise ContractViolation("scores and objective_ids differ in length")
        for s in self.scores:
            if not (math.isfinite(s) and 0.0 <= s <= 1.0):
                raise ContractViolation(f"objective score {s!r} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.scores)

    def __getitem__(self, i: int) -> float:
        return self.scores[i]

    def __iter__(self):
        return iter(self.scores)

    @property
    def mean(self) -> float:
        return sum(self.scores) / len(self.scores)

    @property
    def worst(self) -> float:
        return min(self.scores)

    def to_dict(self) -> dict[str, float]:
        return dict(zip(self.objective_ids, self.scores))

    @classmethod
    def from_dict(cls, data: Mapping[str, float], order: Sequence[str]) -> "ObjectiveVector":
        return cls(tuple(float(data[k]) for k in order), tuple(order))


@dataclass(frozen=True)
class TextSample:
    prompt_id: str
    emotion: str
    index: int
    text: str
    echo_bleu: float
    filtered: bool
    # objective name -> probability of the intended label; empty when filtered
    scores: Mapping[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt_id": self.prompt_id,
            "emotion": self.emotion,
            "index": self.index,
            "text": self.text,
            "echo_bleu": self.echo_bleu,
            "filtered": self.filtered,
            "scores": dict(self.scores),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TextSample":
        return cls(
            prompt_id=data["prompt_id"],
            emotion=data["emotion"],
            index=int(data["index"]),
            text=data["text"],
            echo_bleu=float(data["echo_bleu"]),
            filtered=bool(data["filtered"]),
            scores=dict(data.get("scores", {})),
        )


@dataclass(frozen=True)
class EvaluatedPrompt:
    prompt: Prompt
    fitness: ObjectiveVector
    samples: tuple[TextSample, ...] = ()
    # objective -> emotion -> mean probability over surviving texts
    per_emotion: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    pareto_rank: int | None = None
    crowding: float | None = None

    @property
    def id(self) -> str:
        return self.prompt.id

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt": self.prompt.to_dict(),
            "fitness": self.fitness.to_dict(),
            "per_emotion": {k: dict(v) for k, v in self.per_emotion.items()},
            "pareto_rank": self.pareto_rank,
            # JSON has no infinity; keep the sentinel as a string
            "crowding": "inf" if self.crowding == INF else self.crowding,
            "samples": [s.to_dict() for s in self.samples],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], objective_order: Sequence[str]) -> "EvaluatedPrompt":
        crowding = data.get("crowding")
        return cls(
            prompt=Prompt.from_dict(data["prompt"]),
            fitness=ObjectiveVector.from_dict(data["fitness"], objective_order),
            samples=tuple(TextSample.from_dict(s) for s in data.get("samples", ())),
            per_emotion={k: dict(v) for k, v in data.get("per_emotion", {}).items()},
            pareto_rank=data.get("pareto_rank"),
            crowding=INF if crowding == "inf" else crowding,
        )


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class BackendSpec:
    """Where a capability lives: an HTTP endpoint or an in-process mock.

    ``mock`` holds mock parameters (for scorers: ``{"style": "headline"}``);
    an empty mapping with ``endpoint=None`` also means "mock with defaults".
    """

    endpoint: str | None = None
    mock: Mapping[str, Any] = field(default_factory=dict)

    @property
    def is_mock(self) -> bool:
        return self.endpoint is None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.endpoint is not None:
            out["endpoint"] = self.endpoint
        else:
            out["mock"] = dict(self.mock)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> "BackendSpec":
        data = data or {}
        return cls(endpoint=data.get("endpoint"), mock=dict(data.get("mock", {})))


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str
    backend: BackendSpec = field(default_factory=BackendSpec)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, **self.backend.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ObjectiveSpec":
        return cls(name=data["name"], backend=BackendSpec.from_dict(data))


@dataclass(frozen=True)
class Ablation:
    enable_combine: bool = True
    enable_paraphrase: bool = True


@dataclass(frozen=True)
class RunConfig:
    seed_prompts: tuple[str, ...]
    combine_prompts: tuple[str, ...]
    paraphrase_prompts: tuple[str, ...]
    fixed_prompts: tuple[str, ...]
    objectives: tuple[ObjectiveSpec, ...]
    generations: int = 10
    generation_size: int = 10
    offspring_per_operator: int = 3
    texts_per_prompt: int = 5
    emotions: tuple[str, ...] = DEFAULT_EMOTIONS
    bleu_threshold: float = 0.2
    top_n_per_objective: int = 1
    best_per_objective_k: int = 1
    rng_seed: int = 0
    ablation: Ablation = field(default_factory=Ablation)
    generator: BackendSpec = field(default_factory=BackendSpec)
    suggester: BackendSpec = field(default_factory=BackendSpec)
    max_population: int = 512
    # None -> keep each Layer-2 pool at its initial size
    layer2_pool_size: int | None = None
    parallelism: int = 1
    max_attempts: int = 4

    @property
    def objective_ids(self) -> tuple[str, ...]:
        return tuple(o.name for o in self.objectives)

    @property
    def all_mock(self) -> bool:
        return (
            self.generator.is_mock
            and self.suggester.is_mock
            and all(o.backend.is_mock for o in self.objectives)
        )

    def replace(self, **changes: Any) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed_prompts": list(self.seed_prompts),
            "combine_prompts": list(self.combine_prompts),
            "paraphrase_prompts": list(self.paraphrase_prompts),
            "fixed_prompts": list(self.fixed_prompts),
            "objectives": [o.to_dict() for o in self.objectives],
            "generations": self.generations,
            "generation_size": self.generation_size,
            "offspring_per_operator": self.offspring_per_operator,
            "texts_per_prompt": self.texts_per_prompt,
            "emotions": list(self.emotions),
            "bleu_threshold": self.bleu_threshold,
            "top_n_per_objective": self.top_n_per_objective,
            "best_per_objective_k": self.best_per_objective_k,
            "rng_seed": self.rng_seed,
            "ablation": dataclasses.asdict(self.ablation),
            "generator": self.generator.to_dict(),
            "suggester": self.suggester.to_dict(),
            "max_population": self.max_population,
            "layer2_pool_size": self.layer2_pool_size,
            "parallelism": self.parallelism,
            "max_attempts": self.max_attempts,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        """Build a config from a JSON document; missing Layer-2/3 lists and
        seeds fall back to the bundled catalogs."""
        from mopo import catalogs

        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError([f"unknown config field {k!r}" for k in sorted(unknown)])
        kwargs: dict[str, Any] = {k: v for k, v in data.items() if k in known}
        kwargs["seed_prompts"] = tuple(data.get("seed_prompts", catalogs.SEED_PROMPTS))
        kwargs["combine_prompts"] = tuple(data.get("combine_prompts", catalogs.COMBINE_PROMPTS))
        kwargs["paraphrase_prompts"] = tuple(
            data.get("paraphrase_prompts", catalogs.PARAPHRASE_PROMPTS)
        )
        kwargs["fixed_prompts"] = tuple(data.get("fixed_prompts", catalogs.FIXED_PROMPTS))
        kwargs["objectives"] = tuple(ObjectiveSpec.from_dict(o) for o in data.get("objectives", ()))
        if "emotions" in data:
            kwargs["emotions"] = tuple(data["emotions"])
        if "ablation" in data:
            kwargs["ablation"] = Ablation(**data["ablation"])
        for name in ("generator", "suggester"):
            if name in data:
                kwargs[name] = BackendSpec.from_dict(data[name])
        if "bleu_threshold" in data:
            kwargs["bleu_threshold"] = float(data["bleu_threshold"])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def store_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(config.to_json(), encoding="utf-8")


def load_config(path: str | Path) -> RunConfig:
    return RunConfig.from_json(Path(path).read_text(encoding="utf-8"))


def validate_config(config: RunConfig) -> list[str]:
    """Return every violated invariant of ``config``; empty means valid."""
    problems: list[str] = []
    for name, value in (
        ("generations", config.generations),
        ("generation_size", config.generation_size),
        ("offspring_per_operator", config.offspring_per_operator),
        ("texts_per_prompt", config.texts_per_prompt),
        ("best_per_objective_k", config.best_per_objective_k),
        ("max_population", config.max_population),
        ("parallelism", config.parallelism),
        ("max_attempts", config.max_attempts),
    ):
        if not isinstance(value, int) or value < 1:
            problems.append(f"{name} must be ≥ 1")
    if config.top_n_per_objective < 0:
        problems.append("top_n_per_objective must be ≥ 0")
    if config.layer2_pool_size is not None and config.layer2_pool_size < 1:
        problems.append("layer2_pool_size must be ≥ 1")
    if not (0.0 <= config.bleu_threshold <= 1.0):
        problems.append("bleu_threshold must be in [0, 1]")
    if not (config.ablation.enable_combine or config.ablation.enable_paraphrase):
        problems.append("at least one of enable_combine/enable_paraphrase must be true")
    if not config.objectives:
        problems.append("objectives must be non-empty")
    names = config.objective_ids
    if len(set(names)) != len(names):
        problems.append("objective names must be unique")
    if not config.emotions:
        problems.append("emotions must be non-empty")
    if len(set(config.emotions)) != len(config.emotions):
        problems.append("emotions must be unique")
    if not config.seed_prompts:
        problems.append("seed_prompts must be non-empty")
    if any(EMOTION_PLACEHOLDER not in p for p in config.seed_prompts):
        problems.append("Layer-1 prompt missing <em> placeholder")
    if len({normalize_text(p) for p in config.seed_prompts}) != len(config.seed_prompts):
        problems.append("seed_prompts must be distinct")
    if config.ablation.enable_combine:
        if not config.combine_prompts:
            problems.append("combine_prompts must be non-empty when combine is enabled")
        if any(not has_markers(p, PromptLayer.LAYER2_COMBINE) for p in config.combine_prompts):
            problems.append("combine prompt missing SENTENCE_1/SENTENCE_2 slot")
    if config.ablation.enable_paraphrase:
        if not config.paraphrase_prompts:
            problems.append("paraphrase_prompts must be non-empty when paraphrase is enabled")
        if any(SLOT_1 not in p for p in config.paraphrase_prompts):
            problems.append("paraphrase prompt missing SENTENCE_1 slot")
    if not config.fixed_prompts:
        problems.append("fixed_prompts must be non-empty")
    if any(SLOT_1 not in p for p in config.fixed_prompts):
        problems.append("fixed prompt missing SENTENCE_1 slot")
    return problems


def iter_texts(prompts: Iterable[Prompt]) -> set[str]:
    return {normalize_text(p.text) for p in prompts}
