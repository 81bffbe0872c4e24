import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from softgate.advantage import RolloutGroup
from softgate.gates import SMOOTH_GATES, GateKind, GateSpec, gate_value
from softgate.objective import (
    TokenStep,
    batch_objective,
    gradient_weight,
    grpo_token_surrogate,
    hard_clip_weight,
    sapo_token_surrogate,
)

# crossover of exp(-s/2) and (1 + s)^(-3/2) in s = tau^2 (r - 1)^2
ERF_SOFTSIGN_CROSSOVER = 2.3898621473468196


@pytest.mark.parametrize(
    "r, a, eps, expected",
    [
        (1.0, 0.7, 0.2, 0.7),
        (1.5, 1.0, 0.2, 1.2),
        (1.5, -1.0, 0.2, -1.5),
        (0.5, 1.0, 0.2, 0.5),
    ],
)
def test_grpo_examples(r, a, eps, expected):
    # direct evaluation of min(r A, clip(r) A)
    direct = min(r * a, min(max(r, 1 - eps), 1 + eps) * a)
    assert grpo_token_surrogate(r, a, eps) == pytest.approx(expected, abs=1e-15)
    assert grpo_token_surrogate(r, a, eps) == direct


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
def test_grpo_epsilon_range(eps):
    with pytest.raises(ValueError):
        grpo_token_surrogate(1.0, 1.0, eps)


def test_sapo_examples():
    assert sapo_token_surrogate(GateSpec.smooth("arctan", 1.0, 1.0), 1.0, 0.3) == pytest.approx(0.3, abs=1e-15)
    spec = GateSpec.smooth("softsign", tau_pos=2.0, tau_neg=9.0)
    assert sapo_token_surrogate(spec, 2.0, 1.0) == pytest.approx(1 + 1 / math.sqrt(5), abs=1e-15)
    spec = GateSpec.smooth("erf", tau_pos=1.0, tau_neg=10.0)
    assert sapo_token_surrogate(spec, 1.0, -2.0) == pytest.approx(-2.0, abs=1e-15)
    with pytest.raises(ValueError):
        sapo_token_surrogate(GateSpec.hard_clip(0.2), 1.0, 1.0)


def test_gradient_weight_examples():
    for kind in SMOOTH_GATES:
        spec = GateSpec.smooth(kind, 3.0, 7.0)
        assert gradient_weight(spec, TokenStep(1.0, 0.4)) == 1.0
        assert gradient_weight(spec, TokenStep(1.0, -0.4)) == 1.0
    spec = GateSpec.smooth("arctan", tau_pos=9.0, tau_neg=1.0)
    assert gradient_weight(spec, TokenStep(3.0, -1.0)) == pytest.approx(0.2, rel=1e-14)
    spec = GateSpec.smooth("erf", tau_pos=10.0, tau_neg=1.0)
    assert gradient_weight(spec, TokenStep(2.0, 1.0)) == pytest.approx(math.exp(-50), rel=1e-12)
    with pytest.raises(ValueError):
        gradient_weight(GateSpec.hard_clip(0.2), TokenStep(1.0, 1.0))


def test_token_step_logprob_consistency():
    step = TokenStep.from_logprobs(-1.2, -1.5, 0.5)
    assert step.ratio == pytest.approx(math.exp(0.3))
    with pytest.raises(ValueError):
        TokenStep(1.0, 0.5, logprob_new=-1.0, logprob_old=-2.0)
    with pytest.raises(ValueError):
        TokenStep(-0.5, 1.0)


def _group(n, rewards=None):
    rewards = rewards if rewards is not None else list(range(n))
    return RolloutGroup("q", [[0]] * n, rewards).normalize()


def brute_objective(token_steps, surrogate):
    total = 0.0
    for responses in token_steps:
        g = 0.0
        for steps in responses:
            g += sum(surrogate(s.ratio, s.advantage) for s in steps) / len(steps)
        total += g / len(responses)
    return total / len(token_steps)


def test_batch_single_token():
    for kind in SMOOTH_GATES:
        spec = GateSpec.smooth(kind, 4.0)
        if kind is GateKind.SIGMOID:
            continue  # sigmoid does not pass through (1, 1)
        out = batch_objective([_group(2)], [[[TokenStep(1.0, 1.0)], [TokenStep(1.0, 1.0)]]], spec)
        assert out.value == pytest.approx(1.0, abs=1e-15)


def test_batch_length_normalization():
    spec = GateSpec.smooth("arctan", 2.0)
    steps = [[[TokenStep(1.0, 0.7)], [TokenStep(1.0, 0.7), TokenStep(1.0, 0.7)]]]
    assert batch_objective([_group(2)], steps, spec).value == pytest.approx(0.7, abs=1e-15)


def test_batch_symmetric_advantages_cancel():
    group = _group(2, [0.0, 1.0])
    spec = GateSpec.smooth("sigmoid", 4.0)
    steps = [[[TokenStep(1.0, a)] for a in group.advantages]]
    out = batch_objective([group], steps, spec)
    f1 = gate_value(GateKind.SIGMOID, 4.0, 1.0)
    assert out.value == pytest.approx((f1 * -1 + f1 * 1) / 2, abs=1e-15)
    assert out.value == 0.0


def random_batch(rng, n_groups=3, lo=0.2, hi=3.0):
    groups, token_steps = [], []
    for _ in range(n_groups):
        G = int(rng.integers(2, 6))
        group = RolloutGroup("q", [[0]] * G, rng.normal(size=G).tolist()).normalize()
        groups.append(group)
        token_steps.append(
            [[TokenStep(float(rng.uniform(lo, hi)), a) for _ in range(int(rng.integers(1, 6)))] for a in group.advantages]
        )
    return groups, token_steps


@pytest.mark.parametrize("kind", list(GateKind))
def test_batch_matches_brute_force(kind):
    rng = np.random.default_rng(3)
    spec = GateSpec.hard_clip(0.2) if kind is GateKind.HARD_CLIP else GateSpec.smooth(kind, 2.0, 5.0)
    for _ in range(20):
        groups, steps = random_batch(rng)
        if kind is GateKind.HARD_CLIP:
            expect = brute_objective(steps, lambda r, a: min(r * a, min(max(r, 0.8), 1.2) * a))
        else:
            expect = brute_objective(steps, lambda r, a: gate_value(kind, 2.0 if a > 0 else 5.0, r) * a)
        out = batch_objective(groups, steps, spec)
        assert out.value == pytest.approx(expect, rel=1e-12, abs=1e-14)
        assert len(out.per_token_weights) == sum(len(s) for resp in steps for s in resp)
        assert all(0.0 <= w <= 1.0 for w in out.per_token_weights)


def test_batch_errors():
    spec = GateSpec.smooth("erf", 1.0)
    with pytest.raises(ValueError):
        batch_objective([], [], spec)
    with pytest.raises(ValueError):
        batch_objective([_group(2)], [[[TokenStep(1.0, 1.0)], []]], spec)
    with pytest.raises(ValueError):
        batch_objective([_group(2)], [[[TokenStep(1.0, 1.0)]]], spec)


def test_hard_clip_weight_indicator():
    eps = 0.2
    assert hard_clip_weight(1.0, 1.0, eps) == 1.0
    assert hard_clip_weight(1.3, 1.0, eps) == 0.0
    assert hard_clip_weight(1.2, 1.0, eps) == 0.0  # kink resolves to the clipped branch
    assert hard_clip_weight(1.3, -1.0, eps) == 1.0
    assert hard_clip_weight(0.5, -1.0, eps) == 0.0
    assert hard_clip_weight(0.5, 1.0, eps) == 1.0


def test_clip_equivalence_inside_trust_region():
    rng = np.random.default_rng(11)
    spec = GateSpec.hard_clip(0.2)
    for _ in range(100):
        groups, steps = random_batch(rng, lo=0.8, hi=1.2)
        steps = [[[TokenStep(s.ratio, abs(s.advantage) + 0.1) for s in resp] for resp in g] for g in steps]
        clipped = batch_objective(groups, steps, spec).value
        unclipped = brute_objective(steps, lambda r, a: r * a)
        assert clipped == unclipped


# -- gradient identity -------------------------------------------------------


def test_gradient_identity_by_finite_difference():
    """d/dtheta f(r(theta)) A equals f'(r) r A for r(theta) = exp(theta - c)."""
    rng = np.random.default_rng(4)
    h = 1e-6
    for _ in range(500):
        kind = SMOOTH_GATES[rng.integers(4)]
        spec = GateSpec.smooth(kind, rng.uniform(0.5, 20.0), rng.uniform(0.5, 20.0))
        old = rng.uniform(-4.0, 0.0)
        theta = old + rng.uniform(-1.5, 1.5)
        a = rng.uniform(-2.0, 2.0)
        surrogate = lambda t: sapo_token_surrogate(spec, math.exp(t - old), a)  # noqa: E731
        fd = (surrogate(theta + h) - surrogate(theta - h)) / (2 * h)
        r = math.exp(theta - old)
        analytic = gradient_weight(spec, TokenStep(r, a)) * r * a
        assert abs(fd - analytic) <= 1e-5 * abs(analytic) + 1e-9


@pytest.mark.parametrize("kind", SMOOTH_GATES)
@pytest.mark.parametrize("tau", [0.5, 1.0, 5.0, 10.0])
def test_monotone_suppression(kind, tau):
    spec = GateSpec.smooth(kind, tau)
    r = np.round(np.arange(1.0, 5.0001, 0.1), 10)
    w = [gradient_weight(spec, TokenStep(float(x), 1.0)) for x in r]
    assert all(b <= a for a, b in zip(w, w[1:]))


@given(tau=st.floats(0.1, 50.0), r=st.floats(0.0, 100.0))
def test_softsign_never_above_arctan(tau, r):
    soft = gradient_weight(GateSpec.smooth("softsign", tau), TokenStep(r, 1.0))
    arc = gradient_weight(GateSpec.smooth("arctan", tau), TokenStep(r, 1.0))
    assert soft <= arc


@given(tau=st.floats(1.0, 50.0), r=st.floats(0.0, 100.0))
def test_erf_below_softsign_past_crossover(tau, r):
    if tau * abs(r - 1) < ERF_SOFTSIGN_CROSSOVER + 1e-9:
        return
    erf_w = gradient_weight(GateSpec.smooth("erf", tau), TokenStep(r, 1.0))
    soft = gradient_weight(GateSpec.smooth("softsign", tau), TokenStep(r, 1.0))
    assert erf_w <= soft


def test_erf_exceeds_softsign_before_crossover():
    # Gaussian decay is slower than cubic near the peak: at tau = 1, r = 3
    # the erf weight e^-2 beats softsign's 5^-1.5
    erf_w = gradient_weight(GateSpec.smooth("erf", 1.0), TokenStep(3.0, 1.0))
    soft = gradient_weight(GateSpec.smooth("softsign", 1.0), TokenStep(3.0, 1.0))
    assert erf_w == pytest.approx(math.exp(-2)) and soft == pytest.approx(5**-1.5)
    assert erf_w > soft


@pytest.mark.parametrize("kind", SMOOTH_GATES)
def test_constant_offset_leaves_gradient_unchanged(kind):
    """Adding c to the gate shifts the objective by c * mean(A) but not its theta-gradient."""
    rng = np.random.default_rng(5)
    spec = GateSpec.smooth(kind, 2.0, 3.0)
    h = 1e-6
    for _ in range(50):
        old = rng.uniform(-3, 0, size=4)
        adv = rng.normal(size=4)
        theta = old + rng.uniform(-0.5, 0.5, size=4)
        c = rng.uniform(-5, 5)

        def objective(th, offset):
            r = np.exp(th - old)
            return float(np.mean((np.asarray(sapo_token_surrogate(spec, r, adv)) + offset * adv)))

        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            g0 = (objective(theta + e, 0.0) - objective(theta - e, 0.0)) / (2 * h)
            gc = (objective(theta + e, c) - objective(theta - e, c)) / (2 * h)
            assert abs(g0 - gc) < 1e-9
        assert objective(theta, c) != pytest.approx(objective(theta, 0.0)) or abs(adv.mean()) < 1e-12
