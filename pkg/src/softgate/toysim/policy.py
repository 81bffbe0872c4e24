"""Tabular first-order autoregressive softmax policy over a toy vocabulary."""

from __future__ import annotations

import numpy as np
from scipy.special import log_softmax, softmax

from ..reward import ANSWER_CLOSE, MARKERS

NUM_CONTENT = 8
VOCAB = MARKERS + tuple(f"c{i}" for i in range(NUM_CONTENT))
V = len(VOCAB)
THINK_OPEN_ID, THINK_CLOSE_ID, ANSWER_OPEN_ID, ANSWER_CLOSE_ID = range(4)
BOS = V  # "previous token" slot used at position 0

assert VOCAB[ANSWER_CLOSE_ID] == ANSWER_CLOSE


_CONTENT = tuple(range(4, V))
# first-order view of "<think> text </think> <answer> text </answer>"
_GRAMMAR = {
    BOS: (THINK_OPEN_ID,),
    THINK_OPEN_ID: (THINK_CLOSE_ID, *_CONTENT),
    THINK_CLOSE_ID: (ANSWER_OPEN_ID,),
    ANSWER_OPEN_ID: _CONTENT,
    **{c: (THINK_CLOSE_ID, ANSWER_CLOSE_ID, *_CONTENT) for c in _CONTENT},
}


def render(tokens) -> str:
    return " ".join(VOCAB[t] for t in tokens)


class TabularPolicy:
    """Logits indexed by ``(query, position, previous token)``.

    ``logits`` has shape ``(num_queries, max_len, n + 1, n)`` for a
    vocabulary of ``n`` tokens; previous-token slot ``n`` is the
    start-of-response context. The simulator uses the 12-token toy
    vocabulary, but any size works for sampling and entropy.
    """

    def __init__(self, logits: np.ndarray):
        logits = np.asarray(logits, dtype=np.float64)
        if logits.ndim != 4 or logits.shape[2] != logits.shape[3] + 1:
            raise ValueError(f"logits must have shape (Q, L, n + 1, n), got {logits.shape}")
        self.logits = logits

    @classmethod
    def uniform(cls, num_queries: int, max_len: int, vocab_size: int = V) -> TabularPolicy:
        return cls(np.zeros((num_queries, max_len, vocab_size + 1, vocab_size)))

    @property
    def vocab_size(self) -> int:
        return self.logits.shape[3]

    @property
    def bos(self) -> int:
        return self.logits.shape[3]

    @classmethod
    def template_prior(cls, num_queries: int, max_len: int, strength: float) -> TabularPolicy:
        """Logits nudged by ``strength`` toward grammatical continuations.

        Stands in for a pretrained starting point that already half-knows the
        response template. Answer content is not favoured, so which content
        token answers each query still has to be learned.
        """
        policy = cls.uniform(num_queries, max_len, V)
        if strength:
            for prev, nxt in _GRAMMAR.items():
                policy.logits[:, :, prev, list(nxt)] += strength
        return policy

    @property
    def num_queries(self) -> int:
        return self.logits.shape[0]

    @property
    def max_len(self) -> int:
        return self.logits.shape[1]

    def copy(self) -> TabularPolicy:
        return TabularPolicy(self.logits.copy())

    def probs(self, query: int, pos: int, prev: int) -> np.ndarray:
        return softmax(self.logits[query, pos, prev])

    def rows(self, contexts: np.ndarray) -> np.ndarray:
        """Logit rows for an ``(n, 3)`` array of ``(query, pos, prev)`` contexts."""
        q, t, p = np.asarray(contexts).T
        return self.logits[q, t, p]

    def token_logprobs(self, contexts: np.ndarray, tokens: np.ndarray) -> np.ndarray:
        lp = log_softmax(self.rows(contexts), axis=-1)
        return lp[np.arange(len(tokens)), tokens]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.logits)))


def policy_entropy(policy: TabularPolicy, visited_contexts) -> float:
    """Mean Shannon entropy (nats) of the softmax rows at the given contexts."""
    contexts = np.asarray(visited_contexts, dtype=np.int64).reshape(-1, 3)
    if len(contexts) == 0:
        raise ValueError("no visited contexts")
    lp = log_softmax(policy.rows(contexts), axis=-1)
    p = np.exp(lp)
    # 0 * log 0 := 0
    with np.errstate(invalid="ignore"):
        h = -np.sum(np.where(p > 0, p * lp, 0.0), axis=-1)
    return float(np.mean(h))
