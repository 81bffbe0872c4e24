"""Soft gate functions applied to importance ratios, and their derivatives.

Every smooth gate ``f`` is evaluated in closed form. The derivative ``f'`` is
the per-token gradient weight: it equals 1 at ``x = 1`` and decays as the
ratio moves away from on-policy.

========  =====================================================  ==========================
gate      f(x), u = x - 1                                        f'(x)
========  =====================================================  ==========================
sigmoid   sigmoid(tau u) * 4 / tau                               4 s (1 - s)
erf       c (1 + erf(tau u / sqrt 2)) + 1 - c, c = sqrt(pi/2)/tau  exp(-tau^2 u^2 / 2)
arctan    1 + arctan(tau u) / tau                                1 / (1 + tau^2 u^2)
softsign  1 + u / sqrt(1 + tau^2 u^2)                            (1 + tau^2 u^2)^(-3/2)
========  =====================================================  ==========================

Scalars in, float out; arrays in, arrays out.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import erf, expit

ArrayLike = Union[float, np.ndarray]


class GateKind(enum.Enum):
    HARD_CLIP = "hardclip"
    SIGMOID = "sigmoid"
    ERF = "erf"
    ARCTAN = "arctan"
    SOFTSIGN = "softsign"

    @property
    def is_smooth(self) -> bool:
        return self is not GateKind.HARD_CLIP

    @classmethod
    def parse(cls, name: str | GateKind) -> GateKind:
        if isinstance(name, GateKind):
            return name
        key = name.strip().lower().replace("_", "").replace("-", "")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown gate {name!r}; expected one of {[k.value for k in cls]}")


SMOOTH_GATES = (GateKind.SIGMOID, GateKind.ERF, GateKind.ARCTAN, GateKind.SOFTSIGN)
# gates normalized to pass through (1, 1)
NORMALIZED_GATES = (GateKind.ERF, GateKind.ARCTAN, GateKind.SOFTSIGN)


@dataclass(frozen=True)
class Temperature:
    """Gate sharpness, chosen per token by the sign of its advantage."""

    tau_pos: float
    tau_neg: float

    def __post_init__(self):
        if not (self.tau_pos > 0 and self.tau_neg > 0):
            raise ValueError(f"temperatures must be positive, got {self.tau_pos}, {self.tau_neg}")

    def select(self, advantage: float) -> float:
        # zero advantage falls in the "otherwise" branch
        return self.tau_pos if advantage > 0 else self.tau_neg


@dataclass(frozen=True)
class GateSpec:
    kind: GateKind
    temperature: Temperature | None = None
    clip_epsilon: float | None = None

    def __post_init__(self):
        if self.kind is GateKind.HARD_CLIP:
            if self.clip_epsilon is None:
                raise ValueError("hard clip requires clip_epsilon")
            if not 0 < self.clip_epsilon < 1:
                raise ValueError(f"clip_epsilon must lie in (0, 1), got {self.clip_epsilon}")
        else:
            if self.clip_epsilon is not None:
                raise ValueError(f"clip_epsilon is only valid for hard clip, not {self.kind.value}")
            if self.temperature is None:
                raise ValueError(f"{self.kind.value} gate requires a temperature")

    @classmethod
    def smooth(cls, kind: GateKind | str, tau_pos: float = 1.0, tau_neg: float | None = None) -> GateSpec:
        tau_neg = tau_pos if tau_neg is None else tau_neg
        return cls(GateKind.parse(kind), Temperature(tau_pos, tau_neg))

    @classmethod
    def hard_clip(cls, epsilon: float = 0.2) -> GateSpec:
        return cls(GateKind.HARD_CLIP, clip_epsilon=epsilon)

    @property
    def is_smooth(self) -> bool:
        return self.kind.is_smooth


def _prepare(kind: GateKind, tau: float, x: ArrayLike) -> np.ndarray:
    if not isinstance(kind, GateKind):
        raise TypeError(f"expected GateKind, got {type(kind).__name__}")
    if not kind.is_smooth:
        raise ValueError("hard clip has no single-valued gate; use the objective module")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    # scalars run through the same 1-element array loop as arrays, so both
    # give bit-identical results
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(arr < 0):
        raise ValueError("importance ratios must be nonnegative")
    return arr


def _out(arr: np.ndarray, x: ArrayLike) -> ArrayLike:
    return float(arr[0]) if np.ndim(x) == 0 else arr


def gate_value(kind: GateKind, tau: float, x: ArrayLike) -> ArrayLike:
    """Evaluate the gate ``f(x)`` at temperature ``tau``, additive constants included."""
    arr = _prepare(kind, tau, x)
    u = arr - 1.0
    if kind is GateKind.SIGMOID:
        out = expit(tau * u) * (4.0 / tau)
    elif kind is GateKind.ERF:
        c = math.sqrt(math.pi / (2.0 * tau * tau))
        out = c * (1.0 + erf(tau * u / math.sqrt(2.0))) + 1.0 - c
    elif kind is GateKind.ARCTAN:
        out = 1.0 + np.arctan(tau * u) / tau
    else:
        z = tau * u
        out = 1.0 + u / np.sqrt(1.0 + z * z)
    return _out(out, x)


def gate_derivative(kind: GateKind, tau: float, x: ArrayLike) -> ArrayLike:
    """Analytic ``f'(x)``; lies in (0, 1] and equals 1 at ``x = 1``."""
    arr = _prepare(kind, tau, x)
    z = tau * (arr - 1.0)
    if kind is GateKind.SIGMOID:
        # s(z) * s(-z) keeps full relative precision in both tails
        out = 4.0 * expit(z) * expit(-z)
    elif kind is GateKind.ERF:
        out = np.exp(-0.5 * z * z)
    elif kind is GateKind.ARCTAN:
        out = 1.0 / (1.0 + z * z)
    else:
        s = 1.0 + z * z
        out = 1.0 / (s * np.sqrt(s))
    return _out(out, x)


def gate_weight_for_token(spec: GateSpec, ratio: ArrayLike, advantage: ArrayLike) -> ArrayLike:
    """Gradient weight of one token: ``f'`` at the temperature picked by the advantage sign.

    Accepts arrays of ratios and advantages of matching shape.
    """
    if not spec.is_smooth:
        raise ValueError("hard clip has no smooth gradient weight; see objective.hard_clip_weight")
    temp = spec.temperature
    if np.ndim(ratio) == 0 and np.ndim(advantage) == 0:
        return gate_derivative(spec.kind, temp.select(float(advantage)), ratio)
    ratio = np.asarray(ratio, dtype=np.float64)
    advantage = np.broadcast_to(np.asarray(advantage, dtype=np.float64), ratio.shape)
    positive = advantage > 0
    out = np.empty_like(ratio)
    out[positive] = gate_derivative(spec.kind, temp.tau_pos, ratio[positive])
    out[~positive] = gate_derivative(spec.kind, temp.tau_neg, ratio[~positive])
    return out


def gate_value_for_token(spec: GateSpec, ratio: ArrayLike, advantage: ArrayLike) -> ArrayLike:
    """Gate value with temperature switched on the advantage sign."""
    if not spec.is_smooth:
        raise ValueError("hard clip has no single-valued gate; use the objective module")
    temp = spec.temperature
    if np.ndim(ratio) == 0 and np.ndim(advantage) == 0:
        return gate_value(spec.kind, temp.select(float(advantage)), ratio)
    ratio = np.asarray(ratio, dtype=np.float64)
    advantage = np.broadcast_to(np.asarray(advantage, dtype=np.float64), ratio.shape)
    positive = advantage > 0
    out = np.empty_like(ratio)
    out[positive] = gate_value(spec.kind, temp.tau_pos, ratio[positive])
    out[~positive] = gate_value(spec.kind, temp.tau_neg, ratio[~positive])
    return out
