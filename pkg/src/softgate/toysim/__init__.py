"""Deterministic toy-scale training simulator."""

from .config import TASKS, ConfigError, TrainConfig
from .policy import BOS, VOCAB, TabularPolicy, policy_entropy, render
from .rng import CounterRNG
from .train import (
    METRIC_FIELDS,
    DivergenceError,
    SampledGroup,
    StepMetrics,
    TokenBatch,
    ToyTask,
    batch_queries,
    policy_gradient,
    run_training,
    sample_group,
    surrogate_value,
    train_step,
)
