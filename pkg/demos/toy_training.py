"""
Training a tabular policy with different gates
==============================================

The toy task asks a tabular softmax policy to emit the think/answer
template with the right answer token. Each step samples groups of eight
responses, normalizes rewards within each group and makes two updates
against the sampling snapshot, so the second update is off-policy.

About ten seconds on one core.
"""

from softgate.toysim import TrainConfig, run_training

for gate in ("hardclip", "sigmoid", "erf", "arctan", "softsign"):
    config = TrainConfig(gate=gate, seed=0, epsilon=0.2 if gate == "hardclip" else None)
    metrics = run_training(config)
    first, last = metrics[0], metrics[-1]
    suppressed = sum(m.suppression_rate for m in metrics) / len(metrics)
    print(
        f"{gate:<9} reward {first.mean_reward:.2f} -> {last.mean_reward:.2f}  "
        f"entropy {last.policy_entropy:.2f}  mean suppression {suppressed:.3f}"
    )

# with a single update per batch every ratio is 1 and the gates agree exactly
on_policy = [run_training(TrainConfig(gate=g, steps=20, updates_per_batch=1)) for g in ("erf", "softsign")]
print("on-policy streams identical:", on_policy[0] == on_policy[1])
