"""Format and answer rewards for ``<think> ... </think> <answer> ... </answer>`` responses."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"
ANSWER_OPEN = "<answer>"
ANSWER_CLOSE = "</answer>"
MARKERS = (THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE)

_MARKER_RE = re.compile("(" + "|".join(re.escape(m) for m in MARKERS) + ")")
TEXT = "text"


@dataclass(frozen=True)
class MarkedResponse:
    """A response as token ids plus its rendered string.

    Markers are atomic: ``rendered`` is parsed by splitting on the four
    marker substrings, so ``"<think>"`` always counts as one unit.
    """

    tokens: tuple
    rendered: str

    @classmethod
    def from_text(cls, text: str) -> MarkedResponse:
        return cls(tuple(_segments(text)), text)


ResponseLike = Union[MarkedResponse, str]


def _text(response: ResponseLike) -> str:
    return response.rendered if isinstance(response, MarkedResponse) else response


def _segments(text: str) -> list[str]:
    """Markers stay as-is; each run of non-blank text between them becomes ``TEXT``."""
    out = []
    for piece in _MARKER_RE.split(text):
        if piece in MARKERS:
            out.append(piece)
        elif piece.strip():
            out.append(TEXT)
    return out


def _is_full_template(seg: Sequence[str]) -> bool:
    markers = [s for s in seg if s != TEXT]
    if markers != list(MARKERS):
        return False
    # text may only sit inside the think span or the answer span
    return seg[0] == THINK_OPEN and seg[-1] == ANSWER_CLOSE and _only_text_between(seg)


def _only_text_between(seg: Sequence[str]) -> bool:
    i_close = seg.index(THINK_CLOSE)
    i_open = seg.index(ANSWER_OPEN)
    return i_open == i_close + 1


def format_reward(response: ResponseLike) -> float:
    seg = _segments(_text(response))
    if not seg:
        return 0.0
    if _is_full_template(seg):
        return 1.0
    begins = seg[0] == THINK_OPEN
    ends = seg[-1] == ANSWER_CLOSE
    if begins and ends:
        return 0.5
    if begins or ends:
        return 0.25
    return 0.0


def extract_answer(response: ResponseLike) -> str | None:
    """Text between the first ``<answer>`` and the next ``</answer>``, trimmed."""
    text = _text(response)
    start = text.find(ANSWER_OPEN)
    if start < 0:
        return None
    start += len(ANSWER_OPEN)
    end = text.find(ANSWER_CLOSE, start)
    if end < 0:
        return None
    return text[start:end].strip()


def answer_reward(response: ResponseLike, ground_truth: str) -> float:
    answer = extract_answer(response)
    return 1.0 if answer is not None and answer == ground_truth.strip() else 0.0


def total_reward(response: ResponseLike, ground_truth: str) -> float:
    return answer_reward(response, ground_truth) + format_reward(response)
