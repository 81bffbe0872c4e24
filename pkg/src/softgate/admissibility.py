"""Numerical checks that a candidate gate is admissible.

A gate ``f`` on ``[0, inf)`` is admissible when

(i)   ``f`` is continuously differentiable,
(ii)  ``f'`` attains its global maximum, equal to 1, at ``x = 1``,
(iii) ``f'`` decreases monotonically as ``x`` moves away from 1,
(iv)  ``x f'(x) -> 0`` as ``x -> inf``.

All four are probed on a uniform grid over ``[0, tail_probe]``. The limit in
(iv) cannot be observed, so it is replaced by a finite proxy: at
``tail_probe`` the value of ``x f'(x)`` must sit below an absolute ceiling
and below its value at ``tail_probe / 2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

FD_STEP = 1e-6
PEAK_TOL = 1e-6
MONOTONE_SLACK = 1e-9
TAIL_CEILING = 0.05
# derivative jumps below this are float noise, not kinks
JUMP_FLOOR = 1e-6
JUMP_FACTOR = 10.0

JSON_FIELDS = (
    "smooth_ok",
    "peak_ok",
    "peak_value",
    "monotone_ok",
    "monotone_worst",
    "tail_ok",
    "tail_value",
    "grid_step",
    "tail_probe",
)


@dataclass
class AdmissibilityReport:
    smooth_ok: bool
    peak_ok: bool
    peak_value: float
    monotone_ok: bool
    monotone_worst: float
    tail_ok: bool
    tail_value: float
    grid_step: float
    tail_probe: float
    derivative_mode: str = "analytic"
    diagnostic: str = ""

    @property
    def all_ok(self) -> bool:
        return self.smooth_ok and self.peak_ok and self.monotone_ok and self.tail_ok

    @property
    def grid(self) -> str:
        n = int(round(self.tail_probe / self.grid_step)) + 1
        return f"{n} points, step {self.grid_step!r} on [0, {self.tail_probe!r}]"

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in JSON_FIELDS}

    def to_json(self) -> str:
        # measured margins may be inf/nan when the checker rejects a gate
        d = {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in self.to_dict().items()}
        return json.dumps(d, indent=2)


def _vectorized(fn: Callable) -> Callable[[np.ndarray], np.ndarray]:
    def call(x: np.ndarray) -> np.ndarray:
        try:
            out = np.asarray(fn(x), dtype=np.float64)
            if out.shape == x.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([fn(float(v)) for v in x], dtype=np.float64)

    return call


def _central_difference(value: Callable, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    lo = np.maximum(x - h, 0.0)
    hi = x + h
    with np.errstate(invalid="ignore", over="ignore"):
        return (value(hi) - value(lo)) / (hi - lo)


def _smoothness_ok(d: np.ndarray) -> bool:
    """Flag a kink where one grid jump in ``f'`` dwarfs the jumps two steps away.

    For a C1 function the jump between adjacent grid points scales with the
    local Lipschitz constant of ``f'`` times the step, so it stays comparable
    to nearby jumps; a discontinuity in ``f'`` does not shrink with the step.
    Neighbours two steps away are used because a kink sitting on a grid
    point splits its jump over the two adjacent intervals.
    """
    jumps = np.abs(np.diff(d))
    if jumps.size < 5:
        return True
    padded = np.concatenate(([0.0, 0.0], jumps, [0.0, 0.0]))
    local = np.maximum(padded[:-4], padded[4:])
    return not np.any(jumps > JUMP_FACTOR * local + JUMP_FLOOR)


def check_admissibility(
    value_fn: Callable,
    derivative_fn: Callable | None = None,
    tail_probe: float = 1000.0,
    grid_step: float = 0.01,
) -> AdmissibilityReport:
    """Probe properties (i)-(iv) for ``value_fn`` on ``[0, tail_probe]``.

    Without ``derivative_fn`` the derivative is taken by central differences
    of ``value_fn`` (step 1e-6, one-sided at 0). Both callables may accept
    arrays; scalar-only callables are mapped elementwise.
    """
    if tail_probe < 100:
        raise ValueError(f"tail_probe must be >= 100, got {tail_probe}")
    if not 0 < grid_step <= 0.01:
        raise ValueError(f"grid_step must lie in (0, 0.01], got {grid_step}")

    n = int(round(tail_probe / grid_step))
    x = np.arange(n + 1) * grid_step
    value = _vectorized(value_fn)
    mode = "analytic" if derivative_fn is not None else "finite-difference"
    deriv = _vectorized(derivative_fn) if derivative_fn is not None else (lambda z: _central_difference(value, z))

    fx = value(x)
    d = deriv(x)
    if not (np.all(np.isfinite(fx)) and np.all(np.isfinite(d))):
        bad = x[~(np.isfinite(fx) & np.isfinite(d))][0]
        return AdmissibilityReport(
            False, False, math.nan, False, math.inf, False, math.nan, grid_step, tail_probe,
            derivative_mode=mode, diagnostic=f"non-finite value or derivative at x={bad!r}",
        )

    smooth_ok = _smoothness_ok(d)

    i1 = int(round(1.0 / grid_step))
    peak_value = float(d[i1])
    peak_ok = bool(abs(peak_value - 1.0) < PEAK_TOL and np.max(d) <= peak_value)

    # positive steps before the peak and negative steps after it are fine
    steps = np.diff(d)
    rising = -steps[:i1]
    falling = steps[i1:]
    worst = max(0.0, float(np.max(rising, initial=0.0)), float(np.max(falling, initial=0.0)))
    monotone_ok = worst <= MONOTONE_SLACK

    probe = np.array([tail_probe / 2.0, tail_probe])
    half_value, tail_value = (probe * deriv(probe)).tolist()
    # exponential tails underflow to exactly 0 at both probes
    decreasing = tail_value < half_value or tail_value == 0.0
    tail_ok = bool(tail_value < TAIL_CEILING and decreasing)

    return AdmissibilityReport(
        bool(smooth_ok), peak_ok, peak_value, bool(monotone_ok), worst, tail_ok, float(tail_value),
        grid_step, tail_probe, derivative_mode=mode,
    )


def check_gate(kind, tau: float, tail_probe: float = 1000.0, grid_step: float = 0.01) -> AdmissibilityReport:
    """Admissibility of one of the built-in smooth gates at temperature ``tau``."""
    from .gates import gate_derivative, gate_value

    return check_admissibility(
        lambda x: gate_value(kind, tau, x),
        lambda x: gate_derivative(kind, tau, x),
        tail_probe=tail_probe,
        grid_step=grid_step,
    )
