import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from softgate.reward import (
    MARKERS,
    MarkedResponse,
    answer_reward,
    extract_answer,
    format_reward,
    total_reward,
)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("<think> a </think> <answer> b </answer>", 1.0),
        ("<think> a b c </answer>", 0.5),
        ("x <answer> b </answer>", 0.25),
        ("b", 0.0),
    ],
)
def test_format_examples(text, expected):
    assert format_reward(text) == expected


@pytest.mark.parametrize(
    "text, truth, expected",
    [
        ("<think> t </think> <answer> 42 </answer>", "42", 1.0),
        ("<answer> 41 </answer>", "42", 0.0),
        ("no markers here", "42", 0.0),
        ("</answer> 42 <answer>", "42", 0.0),
        ("<answer> 42", "42", 0.0),
        ("<answer>42</answer> <answer> 7 </answer>", "42", 1.0),
    ],
)
def test_answer_examples(text, truth, expected):
    assert answer_reward(text, truth) == expected


def test_total_examples():
    assert total_reward("<think> t </think> <answer> 42 </answer>", "42") == 2.0
    assert total_reward("<think> t </think> <answer> 41 </answer>", "42") == 1.0
    assert total_reward("<answer> 42 </answer>", "42") == 1.25


def test_marked_response_accepts_either_form():
    r = MarkedResponse.from_text("<think> a </think> <answer> 9 </answer>")
    assert format_reward(r) == 1.0 and answer_reward(r, " 9 ") == 1.0
    assert r.tokens == ("<think>", "text", "</think>", "<answer>", "text", "</answer>")


def test_empty_spans_satisfy_template():
    assert format_reward("<think></think><answer></answer>") == 1.0


@pytest.mark.parametrize(
    "text",
    [
        "pre <think> a </think> <answer> b </answer>",
        "<think> a </think> mid <answer> b </answer>",
        "<think> a </think> <answer> b </answer> post",
        "<think> a <think> </think> <answer> b </answer>",
        "<answer> b </answer> <think> a </think>",
    ],
)
def test_strict_template_rejects_stray_content(text):
    assert format_reward(text) < 1.0


def _tier_oracle(seg):
    """Direct transcription of the four tiers, checked top-down."""
    full = seg in (
        ["<think>", "</think>", "<answer>", "</answer>"],
        ["<think>", "T", "</think>", "<answer>", "</answer>"],
        ["<think>", "</think>", "<answer>", "T", "</answer>"],
        ["<think>", "T", "</think>", "<answer>", "T", "</answer>"],
    )
    if full:
        return 1.0
    begins = bool(seg) and seg[0] == "<think>"
    ends = bool(seg) and seg[-1] == "</answer>"
    return 0.5 if begins and ends else 0.25 if begins or ends else 0.0


def test_exhaustive_short_sequences():
    alphabet = list(MARKERS) + ["T"]
    for n in range(0, 6):
        for seg in itertools.product(alphabet, repeat=n):
            seg = list(seg)
            # adjacent text runs merge into one
            merged = [s for i, s in enumerate(seg) if not (s == "T" and i and seg[i - 1] == "T")]
            text = " ".join("w" if s == "T" else s for s in seg)
            assert format_reward(text) == _tier_oracle(merged), text


@given(st.lists(st.sampled_from(list(MARKERS) + ["a", " ", "7"]), max_size=12), st.text(max_size=3))
def test_reward_ranges(pieces, truth):
    text = "".join(pieces)
    assert format_reward(text) in {0.0, 0.25, 0.5, 1.0}
    assert total_reward(text, truth) in {0.0, 0.25, 0.5, 1.0, 1.25, 1.5, 2.0}


@given(st.text(alphabet=" \t\n", max_size=3), st.text(alphabet=" \t\n", max_size=3))
def test_answer_whitespace_invariance(left, right):
    assert extract_answer(f"<answer>{left}42{right}</answer>") == "42"
    assert answer_reward(f"<answer>{left}42{right}</answer>", "42") == 1.0
