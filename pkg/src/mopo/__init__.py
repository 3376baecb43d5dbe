"""Multi-objective prompt optimization with NSGA-II selection."""

from mopo.core import (
    BackendSpec,
    EvaluatedPrompt,
    ObjectiveSpec,
    ObjectiveVector,
    OperatorKind,
    Prompt,
    PromptLayer,
    RunConfig,
    load_config,
    store_config,
    validate_config,
)
from mopo.engine import ablate, operator_contribution, resume, run

__version__ = "0.1.0"
