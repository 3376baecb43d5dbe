import itertools
import logging
import time

import pytest
from hypothesis import settings

from mopo import catalogs
from mopo.backends import GenerateResponse, SuggestResponse
from mopo.core import (
    EMOTION_PLACEHOLDER,
    EvaluatedPrompt,
    ObjectiveVector,
    Prompt,
    PromptLayer,
    RunConfig,
    make_id,
)
from mopo.engine import run

REFERENCE_SEED = 7

# oracle imports (nltk) make first calls slow; timing is not under test
settings.register_profile("mopo", deadline=None)
settings.load_profile("mopo")

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(autouse=True)
def _quiet_engine(caplog):
    caplog.set_level(logging.ERROR, logger="mopo")


def evaluated(scores, pid=None, objectives=None, text=None):
    """An EvaluatedPrompt with the given fitness and nothing else."""
    scores = tuple(float(s) for s in scores)
    objectives = tuple(objectives or (f"o{j}" for j in range(len(scores))))
    pid = pid or make_id("test", scores)
    prompt = Prompt(pid, PromptLayer.LAYER1, text or f"prompt {pid} about {EMOTION_PLACEHOLDER}")
    return EvaluatedPrompt(prompt, ObjectiveVector(scores, objectives))


def mock_config(seed=REFERENCE_SEED, **changes) -> RunConfig:
    config = RunConfig.from_dict({"objectives": list(catalogs.MOCK_OBJECTIVES), "rng_seed": seed})
    return config.replace(**changes) if changes else config


class UniqueGenerator:
    """Never repeats itself, so no offspring is ever rejected as a duplicate.

    Layer-2 rewrites keep their slot markers; Layer-1 operations return a
    fresh prompt with ``<em>``; task prompts get plain texts.
    """

    def __init__(self, width=12):
        self.width = width
        self.counter = itertools.count()

    def _word(self):
        return f"w{next(self.counter)}"

    def generate(self, request):
        out = []
        for _ in range(request.n):
            if EMOTION_PLACEHOLDER in request.prompt:
                out.append(" ".join([EMOTION_PLACEHOLDER] + [self._word() for _ in range(self.width)]))
            elif "SENTENCE_" in request.prompt:
                out.append(f"{request.prompt} {self._word()}")
            else:
                out.append(f"I am {self._word()} joy today")
        return GenerateResponse(tuple(out))


class UniqueSuggester:
    def __init__(self):
        self.counter = itertools.count()

    def suggest(self, request):
        return SuggestResponse(f"s{next(self.counter)}")


@pytest.fixture(scope="session")
def reference_run(tmp_path_factory):
    """The reference mock run (paper-scale settings), timed, on disk."""
    path = tmp_path_factory.mktemp("reference") / "run"
    started = time.perf_counter()
    result = run(mock_config(), run_dir=path)
    return {"result": result, "dir": path, "seconds": time.perf_counter() - started}


@pytest.fixture(scope="session")
def reference_dir(reference_run):
    return reference_run["dir"]


@pytest.fixture(scope="session")
def reference_result(reference_run):
    return reference_run["result"]
