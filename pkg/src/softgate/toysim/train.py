"""Group rollouts, multi-update SAPO/GRPO training steps, and the training loop.

One training step:

1. snapshot the policy as the behaviour policy,
2. sample ``G`` responses per query from the snapshot and score them,
3. normalize rewards within each group into advantages,
4. take ``U`` ascent steps on the batch surrogate, reusing the same
   rollouts. The first step is on-policy (every ratio is exactly 1); later
   steps see ratios drift away from 1 and get gated.

For a tabular softmax row the score function is ``onehot(o_t) - softmax(row)``,
so each token adds ``lr * w * r * A / (G * |o_i| * Q)`` times that vector to
its own row.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np
from scipy.special import softmax

from ..advantage import RolloutGroup
from ..objective import TokenStep, batch_objective, token_weight
from ..reward import total_reward
from .config import TrainConfig
from .policy import ANSWER_CLOSE_ID, BOS, NUM_CONTENT, VOCAB, TabularPolicy, policy_entropy, render
from .rng import REWARD, CounterRNG

SUPPRESSION_THRESHOLD = 0.1


class DivergenceError(RuntimeError):
    def __init__(self, step: int, metrics: list | None = None):
        super().__init__(f"non-finite logits after update at step {step}")
        self.step = step
        self.metrics = metrics or []


@dataclass(frozen=True)
class ToyTask:
    """Each query has one ground-truth content token as its answer.

    ``random_reward`` ignores the response and draws a reward in ``[0, 2)``.
    """

    kind: str = "solvable"

    def answer(self, query: int) -> str:
        return VOCAB[4 + (3 * query + 1) % NUM_CONTENT]

    def reward(self, query: int, tokens, rng: CounterRNG | None = None, step: int = 0, rollout: int = 0) -> float:
        if self.kind == "random_reward":
            return 2.0 * float(rng.uniforms(step, query, rollout, 1, purpose=REWARD)[0])
        return total_reward(render(tokens), self.answer(query))


@dataclass
class SampledGroup(RolloutGroup):
    old_logprobs: list = field(default_factory=list)
    bos: int = BOS


@dataclass
class StepMetrics:
    step: int
    mean_reward: float
    policy_entropy: float
    ratio_mean: float
    ratio_var: float
    ratio_max_dev: float
    suppression_rate: float
    degenerate_group_rate: float


METRIC_FIELDS = tuple(f.name for f in fields(StepMetrics))


def _contexts(query: int, tokens: Sequence[int], bos: int = BOS) -> np.ndarray:
    prev = [bos, *tokens[:-1]]
    return np.array([(query, t, p) for t, p in enumerate(prev)], dtype=np.int64).reshape(-1, 3)


def sample_response(policy: TabularPolicy, query: int, max_len: int, uniforms: np.ndarray) -> list[int]:
    tokens: list[int] = []
    prev = policy.bos
    for pos in range(max_len):
        cdf = np.cumsum(softmax(policy.logits[query, pos, prev]))
        tok = min(int(np.searchsorted(cdf, uniforms[pos] * cdf[-1], side="right")), policy.vocab_size - 1)
        tokens.append(tok)
        if tok == ANSWER_CLOSE_ID:
            break
        prev = tok
    return tokens


def sample_group(
    policy: TabularPolicy,
    query_id: int,
    G: int,
    max_len: int,
    rng: CounterRNG,
    step: int = 0,
    task: ToyTask | None = None,
) -> SampledGroup:
    """Draw ``G`` responses for one query from ``policy``, scored by ``task``.

    Rewards and advantages are filled in; ``old_logprobs[i]`` holds the
    per-token log-probabilities of response ``i`` under ``policy``.
    """
    if G < 2:
        raise ValueError(f"G must be >= 2, got {G}")
    if max_len > policy.max_len:
        raise ValueError(f"max_len {max_len} exceeds policy table length {policy.max_len}")
    task = task or ToyTask()
    responses, rewards, logps = [], [], []
    for i in range(G):
        tokens = sample_response(policy, query_id, max_len, rng.uniforms(step, query_id, i, max_len))
        responses.append(tokens)
        rewards.append(task.reward(query_id, tokens, rng, step, i))
        logps.append(policy.token_logprobs(_contexts(query_id, tokens, policy.bos), np.array(tokens)).tolist())
    group = SampledGroup(query_id, responses, rewards, old_logprobs=logps, bos=policy.bos)
    return group.normalize()


@dataclass
class TokenBatch:
    """Flat per-token view of a batch of groups."""

    contexts: np.ndarray  # (n, 3) query, position, previous token
    tokens: np.ndarray
    old_logprobs: np.ndarray
    advantages: np.ndarray
    scale: np.ndarray  # 1 / (G * |o_i| * num_groups)

    @classmethod
    def from_groups(cls, groups: Sequence[SampledGroup]) -> TokenBatch:
        ctx, tok, old, adv, scale = [], [], [], [], []
        for group in groups:
            for resp, lp, a in zip(group.responses, group.old_logprobs, group.advantages):
                ctx.append(_contexts(group.query_id, resp, group.bos))
                tok.extend(resp)
                old.extend(lp)
                adv.extend([a] * len(resp))
                scale.extend([1.0 / (group.size * len(resp) * len(groups))] * len(resp))
        return cls(np.concatenate(ctx), np.array(tok), np.array(old), np.array(adv), np.array(scale))


def policy_gradient(policy: TabularPolicy, batch: TokenBatch, spec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient of the batch surrogate with respect to every logit.

    Returns ``(grad, ratios, weights)``; ``grad`` has the shape of the logit table.
    """
    rows = policy.rows(batch.contexts)
    p = softmax(rows, axis=-1)
    new_logprobs = policy.token_logprobs(batch.contexts, batch.tokens)
    ratios = np.exp(new_logprobs - batch.old_logprobs)
    weights = np.asarray(token_weight(spec, ratios, batch.advantages), dtype=np.float64)
    coef = weights * ratios * batch.advantages * batch.scale
    score = -p
    score[np.arange(len(batch.tokens)), batch.tokens] += 1.0
    grad = np.zeros_like(policy.logits)
    q, t, prev = batch.contexts.T
    np.add.at(grad, (q, t, prev), coef[:, None] * score)
    return grad, ratios, weights


def surrogate_value(policy: TabularPolicy, groups: Sequence[SampledGroup], spec) -> float:
    """The batch objective at the current logits, through the objective module."""
    steps = []
    for group in groups:
        g_steps = []
        for resp, lp, a in zip(group.responses, group.old_logprobs, group.advantages):
            new = policy.token_logprobs(_contexts(group.query_id, resp, group.bos), np.array(resp))
            g_steps.append([TokenStep(float(np.exp(n - o)), a) for n, o in zip(new, lp)])
        steps.append(g_steps)
    return batch_objective(groups, steps, spec).value


def train_step(
    policy: TabularPolicy,
    config: TrainConfig,
    queries: Sequence[int],
    rng: CounterRNG,
    step: int = 0,
    task: ToyTask | None = None,
) -> StepMetrics:
    """One batch: sample from a snapshot, then ``U`` gated ascent updates in place."""
    spec = config.gate_spec
    task = task or ToyTask(config.task)
    snapshot = policy.copy()
    groups = [sample_group(snapshot, q, config.group_size, config.max_len, rng, step, task) for q in queries]
    batch = TokenBatch.from_groups(groups)

    seen_ratios, seen_weights = [], []
    for u in range(config.updates_per_batch):
        grad, ratios, weights = policy_gradient(policy, batch, spec)
        policy.logits += config.learning_rate * grad
        if not policy.is_finite():
            raise DivergenceError(step)
        # ratio statistics describe the off-policy passes only
        if u >= 1 or config.updates_per_batch == 1:
            seen_ratios.append(ratios)
            seen_weights.append(weights)

    r = np.concatenate(seen_ratios)
    w = np.concatenate(seen_weights)
    return StepMetrics(
        step=step,
        mean_reward=float(np.mean([np.mean(g.rewards) for g in groups])),
        policy_entropy=policy_entropy(policy, np.unique(batch.contexts, axis=0)),
        ratio_mean=float(np.mean(r)),
        ratio_var=float(np.var(r)),
        ratio_max_dev=float(np.max(np.abs(r - 1.0))),
        suppression_rate=float(np.mean(w < SUPPRESSION_THRESHOLD)),
        degenerate_group_rate=float(np.mean([g.degenerate for g in groups])),
    )


def batch_queries(config: TrainConfig, step: int) -> list[int]:
    start = step * config.queries_per_batch
    return [(start + j) % config.num_queries for j in range(config.queries_per_batch)]


def run_training(config: TrainConfig, policy: TabularPolicy | None = None) -> list[StepMetrics]:
    """Run ``config.steps`` training steps from a uniform policy.

    Raises :class:`DivergenceError` carrying the step index and the metrics
    collected before it.
    """
    if policy is None:
        policy = TabularPolicy.template_prior(config.num_queries, config.max_len, config.prior_strength)
    rng = CounterRNG(config.seed)
    task = ToyTask(config.task)
    history: list[StepMetrics] = []
    for step in range(config.steps):
        try:
            history.append(train_step(policy, config, batch_queries(config, step), rng, step, task))
        except DivergenceError as exc:
            raise DivergenceError(step, history) from exc
    return history
