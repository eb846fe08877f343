"""Step tracking, mistake detection, and guidance composition."""

from .features import encode_observations, feature_names, feature_width
from .forest import RandomForest, load_forest, save_forest
from .graph_state import (
    MISSING_STEP,
    OUT_OF_ORDER,
    ReasoningError,
    ReasoningState,
    detect_errors,
    edge_key,
    finalize,
    init_session,
    observe,
)
from .guidance import (
    arrow_prompts,
    completion_prompt,
    instruction_prompt,
    prompts_for_transition,
    side_hint,
    simplify_instruction,
    warning_prompt,
)

__all__ = [
    "MISSING_STEP",
    "OUT_OF_ORDER",
    "RandomForest",
    "ReasoningError",
    "ReasoningState",
    "arrow_prompts",
    "completion_prompt",
    "detect_errors",
    "edge_key",
    "encode_observations",
    "feature_names",
    "feature_width",
    "finalize",
    "init_session",
    "instruction_prompt",
    "load_forest",
    "observe",
    "prompts_for_transition",
    "save_forest",
    "side_hint",
    "simplify_instruction",
    "warning_prompt",
]
