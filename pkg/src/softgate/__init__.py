"""Soft gates for policy optimization: SAPO-style gated surrogates, GRPO
clipping, admissibility checks, a structured-response reward, and a
deterministic tabular training simulator."""

from .admissibility import AdmissibilityReport, check_admissibility, check_gate
from .advantage import RolloutGroup, normalize_advantages
from .gates import (
    NORMALIZED_GATES,
    SMOOTH_GATES,
    GateKind,
    GateSpec,
    Temperature,
    gate_derivative,
    gate_value,
    gate_value_for_token,
    gate_weight_for_token,
)
from .objective import (
    ObjectiveValue,
    TokenStep,
    batch_objective,
    gradient_weight,
    grpo_token_surrogate,
    hard_clip_weight,
    sapo_token_surrogate,
)
from .reward import MarkedResponse, answer_reward, format_reward, total_reward

__version__ = "0.1.0"
