"""Command-line front end.

::

    softgate curves  --output curves.csv [--gates erf,arctan] [--taus 1,5,10]
    softgate check   --gate softsign --tau 5 [--output report.json]
    softgate check   --custom linear
    softgate train   config.json --output metrics.csv [--summary summary.json]
    softgate compare config.json --gates sigmoid,erf --seeds 0,1,2 --output compare.csv

Exit status: 0 on success (and, for ``check``, when every property holds),
1 when a check fails or training diverges, 2 on usage or validation errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import erf

from .admissibility import check_admissibility, check_gate
from .gates import SMOOTH_GATES, GateKind, gate_derivative, gate_value
from .objective import grpo_token_surrogate, hard_clip_weight
from .toysim import METRIC_FIELDS, ConfigError, DivergenceError, TrainConfig, run_training

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CURVE_HEADER = ("x", "gate", "tau", "value", "derivative")
COMPARE_HEADER = (
    "gate",
    "runs",
    "diverged",
    "final_mean_reward_mean",
    "final_mean_reward_std",
    "final_entropy_mean",
    "final_entropy_std",
    "suppression_rate_mean",
    "suppression_rate_std",
)
DEFAULT_EPSILON = 0.2


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header: Sequence[str], rows) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


# -- curves -----------------------------------------------------------------


@dataclass
class CurveRequest:
    gates: tuple = tuple(GateKind)
    taus: tuple = (1.0, 5.0, 10.0)
    x_min: float = 0.0
    x_max: float = 3.0
    points: int = 301
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        self.gates = tuple(GateKind.parse(g) for g in self.gates)
        if not self.gates or not self.taus:
            raise ValueError("need at least one gate and one tau")
        if any(not t > 0 for t in self.taus):
            raise ValueError("taus must be positive")
        if self.x_min < 0:
            raise ValueError("x_min must be >= 0")
        # a single point is allowed only for a degenerate interval
        if self.points == 1:
            if self.x_min != self.x_max:
                raise ValueError("points = 1 requires x_min == x_max")
        elif self.points < 2 or not self.x_min < self.x_max:
            raise ValueError("need points >= 2 and x_min < x_max")

    def grid(self) -> np.ndarray:
        if self.points == 1:
            return np.array([float(self.x_min)])
        return np.linspace(self.x_min, self.x_max, self.points)


def curve_rows(request: CurveRequest):
    x = request.grid()
    for kind in request.gates:
        for tau in request.taus:
            if kind is GateKind.HARD_CLIP:
                # positive-advantage surrogate and its subgradient; tau is unused
                value = grpo_token_surrogate(x, 1.0, request.epsilon)
                deriv = hard_clip_weight(x, 1.0, request.epsilon)
            else:
                value = gate_value(kind, tau, x)
                deriv = gate_derivative(kind, tau, x)
            for xi, vi, di in zip(x.tolist(), value.tolist(), deriv.tolist()):
                yield xi, kind.value, float(tau), vi, di


def cmd_curves(request: CurveRequest, output_path) -> int:
    _write_csv(output_path, CURVE_HEADER, curve_rows(request))
    return EXIT_OK


# -- check ------------------------------------------------------------------


CUSTOM_GATES = ("linear", "clip", "shifted-peak", "half-peak")


def custom_gate_functions(name: str, epsilon: float = DEFAULT_EPSILON):
    """Reference non-admissible gates as ``(value_fn, derivative_fn or None)``.

    ``linear`` never damps the tail, ``clip`` has kinks, ``shifted-peak`` is
    an erf gate whose derivative peaks at 1.5, ``half-peak`` peaks at 0.5.
    """
    arr = lambda x: np.asarray(x, dtype=np.float64)  # noqa: E731
    if name == "linear":
        return arr, lambda x: np.ones_like(arr(x))
    if name == "clip":
        return (lambda x: grpo_token_surrogate(arr(x), 1.0, epsilon)), None
    if name == "shifted-peak":
        c = math.sqrt(math.pi / 2.0)
        return (
            lambda x: c * (1.0 + erf((arr(x) - 1.5) / math.sqrt(2.0))),
            lambda x: np.exp(-0.5 * (arr(x) - 1.5) ** 2),
        )
    if name == "half-peak":
        return (
            lambda x: 0.5 * gate_value(GateKind.ERF, 1.0, arr(x)),
            lambda x: 0.5 * gate_derivative(GateKind.ERF, 1.0, arr(x)),
        )
    raise ValueError(f"unknown custom gate {name!r}; expected one of {CUSTOM_GATES}")


def cmd_check(gate, tau: float, output_path=None, *, custom: str | None = None, epsilon: float = DEFAULT_EPSILON,
              tail_probe: float = 1000.0, grid_step: float = 0.01) -> int:
    if custom is not None:
        value_fn, deriv_fn = custom_gate_functions(custom, epsilon)
        report = check_admissibility(value_fn, deriv_fn, tail_probe=tail_probe, grid_step=grid_step)
    else:
        kind = GateKind.parse(gate)
        if kind is GateKind.HARD_CLIP:
            report = check_admissibility(
                lambda x: grpo_token_surrogate(x, 1.0, epsilon), tail_probe=tail_probe, grid_step=grid_step
            )
        else:
            report = check_gate(kind, tau, tail_probe=tail_probe, grid_step=grid_step)
    text = report.to_json() + "\n"
    if output_path is None:
        sys.stdout.write(text)
    else:
        _write_text(output_path, text)
    return EXIT_OK if report.all_ok else EXIT_FAIL


# -- train ------------------------------------------------------------------


def _train(config: TrainConfig):
    try:
        return run_training(config), None
    except DivergenceError as exc:
        return exc.metrics, exc.step


def summarize(config: TrainConfig, metrics, divergence_step) -> dict:
    last = metrics[-1] if metrics else None
    return {
        "gate": GateKind.parse(config.gate).value,
        "seed": config.seed,
        "steps": len(metrics),
        "final_mean_reward": last.mean_reward if last else None,
        "final_entropy": last.policy_entropy if last else None,
        "mean_suppression_rate": float(np.mean([m.suppression_rate for m in metrics])) if metrics else None,
        "diverged": divergence_step is not None,
        "divergence_step": divergence_step,
    }


def cmd_train(config_path, output_path, summary_path=None) -> int:
    config = TrainConfig.load(config_path)
    metrics, divergence_step = _train(config)
    rows = ([getattr(m, f) for f in METRIC_FIELDS] for m in metrics)
    _write_csv(output_path, METRIC_FIELDS, rows)
    if summary_path is None:
        summary_path = Path(output_path).with_suffix(".summary.json")
    _write_text(summary_path, json.dumps(summarize(config, metrics, divergence_step), indent=2) + "\n")
    return EXIT_FAIL if divergence_step is not None else EXIT_OK


# -- compare ----------------------------------------------------------------


def _compare_job(config: TrainConfig) -> dict:
    metrics, divergence_step = _train(config)
    return summarize(config, metrics, divergence_step)


def compare_summaries(config: TrainConfig, gates, seeds, jobs: int = 1) -> list[dict]:
    """Train once per ``(gate, seed)``; everything else comes from ``config``."""
    kinds = sorted({GateKind.parse(g) for g in gates}, key=list(GateKind).index)
    configs = [config.with_(gate=k.value, seed=int(s)) for k in kinds for s in sorted(set(seeds))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_compare_job, configs))
    return [_compare_job(c) for c in configs]


def _stats(values):
    values = [v for v in values if v is not None]
    if not values:
        return math.nan, math.nan
    return float(np.mean(values)), float(np.std(values))


def compare_rows(summaries: list[dict]):
    by_gate: dict[str, list[dict]] = {}
    for s in summaries:
        by_gate.setdefault(s["gate"], []).append(s)
    for gate, runs in by_gate.items():
        yield (
            gate,
            len(runs),
            sum(r["diverged"] for r in runs),
            *_stats([r["final_mean_reward"] for r in runs]),
            *_stats([r["final_entropy"] for r in runs]),
            *_stats([r["mean_suppression_rate"] for r in runs]),
        )


def cmd_compare(config_path, gate_list, seeds, output_path, jobs: int = 1) -> int:
    base = TrainConfig.load(config_path)
    # validate every gate up front so a bad name fails before any training
    for g in gate_list:
        base.with_(gate=g)
    summaries = compare_summaries(base, gate_list, seeds, jobs)
    _write_csv(output_path, COMPARE_HEADER, compare_rows(summaries))
    return EXIT_FAIL if any(s["diverged"] for s in summaries) else EXIT_OK


# -- argument parsing -------------------------------------------------------


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _gates(text: str) -> tuple:
    if text.strip().lower() == "all":
        return tuple(GateKind)
    try:
        return tuple(GateKind.parse(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softgate", description="Soft-gated policy optimization toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="gate values and derivatives on a ratio grid, as CSV")
    p.add_argument("--gates", type=_gates, default=tuple(GateKind), help="comma list or 'all' (default)")
    p.add_argument("--taus", type=_floats, default=(1.0, 5.0, 10.0))
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=301)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="hard clip width")
    p.add_argument("--output", required=True)

    p = sub.add_parser("check", help="admissibility report for a gate, as JSON")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--gate", type=GateKind.parse)
    target.add_argument("--custom", choices=CUSTOM_GATES, help="built-in non-admissible reference gate")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--tail-probe", type=float, default=1000.0)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--output")

    p = sub.add_parser("train", help="run the toy simulator from a JSON config")
    p.add_argument("config")
    p.add_argument("--output", required=True, help="metrics CSV")
    p.add_argument("--summary", help="summary JSON (default: <output>.summary.json)")

    p = sub.add_parser("compare", help="train each gate over several seeds and summarize")
    p.add_argument("config")
    p.add_argument("--gates", type=_gates, default=SMOOTH_GATES)
    p.add_argument("--seeds", type=_ints, default=(0, 1, 2))
    p.add_argument("--output", required=True)
    p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "curves":
            request = CurveRequest(args.gates, args.taus, args.x_min, args.x_max, args.points, args.epsilon)
            return cmd_curves(request, args.output)
        if args.command == "check":
            return cmd_check(args.gate, args.tau, args.output, custom=args.custom, epsilon=args.epsilon,
                             tail_probe=args.tail_probe, grid_step=args.grid_step)
        if args.command == "train":
            return cmd_train(args.config, args.output, args.summary)
        return cmd_compare(args.config, args.gates, args.seeds, args.output, args.jobs)
    except (ConfigError, ValueError) as exc:
        print(f"softgate {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"softgate {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
