"""
Greedy CTC decoding and a seeded linear CTC head.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.tensor import DTYPE, MacCounter, Tensor, linear, uniform_init
from src.utils.errors import ShapeError


@dataclass
class DecodeResult:
    """Emitted tokens and the [start, end) encoder frames each one came from."""

    tokens: List[int] = field(default_factory=list)
    frame_spans: List[Tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {'tokens': list(self.tokens), 'frame_spans': [list(span) for span in self.frame_spans]}


def ctc_greedy_decode(log_probs: Tensor, blank_id: int = 0) -> DecodeResult:
    """Per-frame argmax, collapse repeated labels, then drop blanks."""
    if log_probs.ndim != 2:
        raise ShapeError(f"log_probs must be T x V, got shape {log_probs.shape}")
    vocab = log_probs.shape[1]
    if vocab < 2 or not 0 <= blank_id < vocab:
        raise ShapeError(f"need V >= 2 and 0 <= blank_id < V, got V={vocab} blank_id={blank_id}")

    result = DecodeResult()
    best = np.argmax(log_probs, axis=1)
    start = 0
    for t in range(1, len(best) + 1):
        if t < len(best) and best[t] == best[start]:
            continue
        label = int(best[start])
        if label != blank_id:
            result.tokens.append(label)
            result.frame_spans.append((start, t))
        start = t
    return result


def ctc_head_weights(d_model: int, vocab_size: int, seed: int = 0) -> Tuple[Tensor, Tensor]:
    """Seeded (d_model x vocab) projection and bias; blank is token 0."""
    rng = np.random.default_rng(seed)
    weight = uniform_init(rng, (d_model, vocab_size), d_model)
    bias = uniform_init(rng, (vocab_size,), d_model)
    return weight, bias


def ctc_log_probs(encoded: Tensor, weight: Tensor, bias: Tensor,
                  counter: Optional[MacCounter] = None) -> Tensor:
    """Log-softmax over the vocabulary of a linear projection of encoder frames."""
    logits = np.asarray(linear(encoded, weight, bias, counter, "ctc_head"), dtype=np.float64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    return (shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))).astype(DTYPE)
