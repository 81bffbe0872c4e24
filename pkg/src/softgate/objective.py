"""GRPO and SAPO surrogate objectives and per-token gradient weights.

Both objectives average per-token surrogates first over the tokens of a
response, then over the responses of a group, then over groups, so response
length never changes a token's share of its response.

The gradient of a SAPO token surrogate ``f(r) A`` with respect to the policy
parameters is ``f'(r) * r * A * grad log pi``; :func:`gradient_weight`
returns the ``f'(r)`` factor and callers form the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .advantage import RolloutGroup
from .gates import GateSpec, gate_value_for_token, gate_weight_for_token


@dataclass(frozen=True)
class TokenStep:
    ratio: float
    advantage: float
    logprob_new: float | None = None
    logprob_old: float | None = None

    def __post_init__(self):
        if self.ratio < 0:
            raise ValueError(f"ratio must be nonnegative, got {self.ratio}")
        if self.logprob_new is not None and self.logprob_old is not None:
            implied = math.exp(self.logprob_new - self.logprob_old)
            if abs(self.ratio - implied) >= 1e-9:
                raise ValueError(f"ratio {self.ratio} inconsistent with log-probs (implies {implied})")

    @classmethod
    def from_logprobs(cls, logprob_new: float, logprob_old: float, advantage: float) -> TokenStep:
        return cls(math.exp(logprob_new - logprob_old), advantage, logprob_new, logprob_old)


@dataclass
class ObjectiveValue:
    value: float
    per_token_weights: list = field(default_factory=list)


def grpo_token_surrogate(ratio, advantage, epsilon: float):
    """``min(r A, clip(r, 1 - eps, 1 + eps) A)``."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    r = np.asarray(ratio, dtype=np.float64)
    a = np.asarray(advantage, dtype=np.float64)
    out = np.minimum(r * a, np.clip(r, 1.0 - epsilon, 1.0 + epsilon) * a)
    return float(out) if out.ndim == 0 else out


def hard_clip_weight(ratio, advantage, epsilon: float):
    """1 where the unclipped branch of the GRPO min carries gradient, else 0.

    The kinks at ``1 +/- eps`` resolve to the clipped branch (weight 0).
    """
    r = np.asarray(ratio, dtype=np.float64)
    a = np.asarray(advantage, dtype=np.float64)
    clipped = ((a > 0) & (r >= 1.0 + epsilon)) | ((a < 0) & (r <= 1.0 - epsilon))
    out = np.where(clipped, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def sapo_token_surrogate(spec: GateSpec, ratio, advantage):
    """``f(r) A`` with the temperature picked by the sign of ``A``."""
    if not spec.is_smooth:
        raise ValueError("SAPO surrogate needs a smooth gate")
    out = gate_value_for_token(spec, ratio, advantage) * np.asarray(advantage, dtype=np.float64)
    return float(out) if np.ndim(out) == 0 else out


def gradient_weight(spec: GateSpec, step: TokenStep) -> float:
    if not spec.is_smooth:
        raise ValueError("hard clip weight is an indicator; see hard_clip_weight")
    return gate_weight_for_token(spec, step.ratio, step.advantage)


def token_surrogate(spec: GateSpec, ratio, advantage):
    """Per-token surrogate for any gate, hard clip included."""
    if spec.is_smooth:
        return sapo_token_surrogate(spec, ratio, advantage)
    return grpo_token_surrogate(ratio, advantage, spec.clip_epsilon)


def token_weight(spec: GateSpec, ratio, advantage):
    if spec.is_smooth:
        return gate_weight_for_token(spec, ratio, advantage)
    return hard_clip_weight(ratio, advantage, spec.clip_epsilon)


def batch_objective(
    groups: Sequence[RolloutGroup],
    token_steps: Sequence[Sequence[Sequence[TokenStep]]],
    spec: GateSpec,
) -> ObjectiveValue:
    """Length-normalized surrogate averaged over responses and then groups.

    ``token_steps[g][i][t]`` is token ``t`` of response ``i`` in group ``g``.
    Weights are returned flattened in that same nesting order.
    """
    if len(groups) == 0:
        raise ValueError("empty group list")
    if len(token_steps) != len(groups):
        raise ValueError(f"{len(token_steps)} token groups for {len(groups)} rollout groups")
    weights: list[float] = []
    total = 0.0
    # sequential reduction over groups keeps the sum bit-stable
    for group, responses in zip(groups, token_steps):
        if len(responses) != group.size:
            raise ValueError(f"group {group.query_id!r} has {group.size} responses, got {len(responses)}")
        group_sum = 0.0
        for steps in responses:
            if len(steps) == 0:
                raise ValueError(f"empty response in group {group.query_id!r}")
            r = np.array([s.ratio for s in steps])
            a = np.array([s.advantage for s in steps])
            group_sum += float(np.mean(token_surrogate(spec, r, a)))
            weights.extend(np.asarray(token_weight(spec, r, a), dtype=np.float64).tolist())
        total += group_sum / len(responses)
    return ObjectiveValue(total / len(groups), weights)
