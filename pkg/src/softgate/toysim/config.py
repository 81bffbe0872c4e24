"""Simulator configuration and its key-value file format.

Config files are flat JSON objects whose keys are exactly the
:class:`TrainConfig` field names::

    {"gate": "erf", "group_size": 8, "updates_per_batch": 2, "steps": 200,
     "seed": 7, "tau_pos": 1.0, "tau_neg": 1.0}

Missing keys take the defaults below. ``epsilon`` has no default and is
required when ``gate`` is ``"hardclip"``; it is ignored for smooth gates.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ..gates import GateKind, GateSpec

TASKS = ("solvable", "random_reward")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    gate: str = "sigmoid"
    group_size: int = 8
    updates_per_batch: int = 2
    queries_per_batch: int = 4
    num_queries: int = 4
    max_len: int = 12
    learning_rate: float = 10.0
    steps: int = 200
    seed: int = 0
    tau_pos: float = 1.0
    tau_neg: float = 1.0
    epsilon: float | None = None
    task: str = "solvable"
    prior_strength: float = 3.0

    def __post_init__(self):
        problems = []
        try:
            kind = GateKind.parse(self.gate)
        except ValueError as exc:
            problems.append(str(exc))
            kind = None
        if self.group_size < 2:
            problems.append(f"group_size must be >= 2, got {self.group_size}")
        if self.updates_per_batch < 1:
            problems.append(f"updates_per_batch must be >= 1, got {self.updates_per_batch}")
        if self.max_len < 6:
            problems.append(f"max_len must be >= 6, got {self.max_len}")
        if self.queries_per_batch < 1 or self.num_queries < 1:
            problems.append("queries_per_batch and num_queries must be >= 1")
        if self.steps < 0:
            problems.append(f"steps must be >= 0, got {self.steps}")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            problems.append(f"learning_rate must be positive, got {self.learning_rate}")
        if not (self.tau_pos > 0 and self.tau_neg > 0):
            problems.append("tau_pos and tau_neg must be positive")
        if kind is GateKind.HARD_CLIP:
            if self.epsilon is None:
                problems.append("gate 'hardclip' requires epsilon")
            elif not 0 < self.epsilon < 1:
                problems.append(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not (self.prior_strength >= 0 and math.isfinite(self.prior_strength)):
            problems.append(f"prior_strength must be >= 0, got {self.prior_strength}")
        if self.task not in TASKS:
            problems.append(f"task must be one of {TASKS}, got {self.task!r}")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def gate_spec(self) -> GateSpec:
        kind = GateKind.parse(self.gate)
        if kind is GateKind.HARD_CLIP:
            return GateSpec.hard_clip(self.epsilon)
        return GateSpec.smooth(kind, self.tau_pos, self.tau_neg)

    def with_(self, **changes) -> TrainConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: dict) -> TrainConfig:
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {}
        bad = []
        for key, value in data.items():
            default = getattr(cls, key)
            if key in ("gate", "task"):
                ok = isinstance(value, str)
            elif isinstance(default, int) and not isinstance(default, bool):
                ok = isinstance(value, int) and not isinstance(value, bool)
            else:
                ok = value is None and key == "epsilon" or (
                    isinstance(value, (int, float)) and not isinstance(value, bool)
                )
                value = float(value) if ok and value is not None else value
            if not ok:
                bad.append(key)
            kwargs[key] = value
        if bad:
            raise ConfigError(f"invalid values for config keys: {', '.join(sorted(bad))}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> TrainConfig:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object of key-value pairs")
        return cls.from_mapping(data)
