"""Group-relative advantage normalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np


def normalize_advantages(rewards: Sequence[float], *, return_flag: bool = False):
    """Standardize the rewards of one group: ``(R_i - mean) / std``.

    Uses the population standard deviation. A group whose rewards are all
    equal has no learning signal: it gets all-zero advantages, and
    ``return_flag=True`` additionally returns ``True`` to mark it degenerate.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise ValueError(f"need at least 2 rewards per group, got {r.size}")
    std = r.std()
    degenerate = bool(std == 0.0)
    adv = np.zeros_like(r) if degenerate else (r - r.mean()) / std
    if return_flag:
        return adv, degenerate
    return adv


@dataclass
class RolloutGroup:
    """G responses sampled for one query, with their rewards and advantages."""

    query_id: Hashable
    responses: list
    rewards: list
    advantages: list = field(default_factory=list)
    degenerate: bool = False

    def __post_init__(self):
        if len(self.responses) != len(self.rewards):
            raise ValueError("responses and rewards must have equal length")
        if len(self.rewards) < 2:
            raise ValueError("a group needs at least 2 responses")

    @property
    def size(self) -> int:
        return len(self.responses)

    def normalize(self) -> RolloutGroup:
        adv, self.degenerate = normalize_advantages(self.rewards, return_flag=True)
        self.advantages = adv.tolist()
        return self
