"""
Buffered long-form inference: overlapping buffers, per-buffer encoding and keep-region merging.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from src.attention import AttentionKind
from src.encoder import EncoderConfig, Weights, encode, receptive_field
from src.tensor import MacCounter, Tensor
from src.utils.errors import PlanError, ShapeError


@dataclass(frozen=True)
class BufferSpan:
    """One buffer in input frames: encode [start, end), keep [keep_start, keep_end)."""

    start: int
    end: int
    keep_start: int
    keep_end: int

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class BufferPlan:
    buffers: Tuple[BufferSpan, ...]
    total_frames: int
    buffer_len: int
    context_left: int
    context_right: int

    def validate(self):
        """Check that keep regions partition [0, total_frames) and sit inside their buffers."""
        if not self.buffers:
            raise PlanError("plan has no buffers")
        cursor = 0
        for i, span in enumerate(self.buffers):
            if span.keep_start != cursor:
                raise PlanError(f"buffer {i} keeps from {span.keep_start}, expected {cursor}")
            if not span.start <= span.keep_start < span.keep_end <= span.end:
                raise PlanError(f"buffer {i} keep region [{span.keep_start}, {span.keep_end}) "
                                f"is not inside [{span.start}, {span.end})")
            if span.start < 0 or span.end > self.total_frames:
                raise PlanError(f"buffer {i} [{span.start}, {span.end}) leaves [0, {self.total_frames})")
            cursor = span.keep_end
        if cursor != self.total_frames:
            raise PlanError(f"keep regions end at {cursor}, expected {self.total_frames}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'total_frames': self.total_frames,
            'buffer_len': self.buffer_len,
            'context_left': self.context_left,
            'context_right': self.context_right,
            'buffers': [[b.start, b.end, b.keep_start, b.keep_end] for b in self.buffers],
        }


def plan_buffers(total_frames: int, buffer_len: int, context_left: int, context_right: int) -> BufferPlan:
    """Split [0, total_frames) into overlapping buffers.

    The first buffer starts at 0 and keeps all but its right context. Each
    following buffer starts `context_left` frames before the previous keep
    end. The last buffer ends at total_frames and keeps through the end.
    """
    if total_frames < 1 or buffer_len < 1:
        raise PlanError(f"frame counts must be positive, got T={total_frames} buffer_len={buffer_len}")
    if context_left < 0 or context_right < 0:
        raise PlanError(f"contexts must be >= 0, got left={context_left} right={context_right}")
    if buffer_len <= context_left + context_right:
        raise PlanError(
            f"buffer_len {buffer_len} must exceed context_left + context_right = {context_left + context_right}"
        )

    if total_frames <= buffer_len:
        buffers = [BufferSpan(0, total_frames, 0, total_frames)]
    else:
        buffers = [BufferSpan(0, buffer_len, 0, buffer_len - context_right)]
        while buffers[-1].keep_end < total_frames:
            keep_start = buffers[-1].keep_end
            start = keep_start - context_left
            end = start + buffer_len
            if end >= total_frames:
                buffers.append(BufferSpan(start, total_frames, keep_start, total_frames))
            else:
                buffers.append(BufferSpan(start, end, keep_start, end - context_right))

    plan = BufferPlan(tuple(buffers), total_frames, buffer_len, context_left, context_right)
    plan.validate()
    return plan


def required_context_frames(cfg: EncoderConfig) -> Optional[int]:
    """Smallest context margin, in input frames, that makes buffered encoding exact.

    Edge effects enter through the subsampling receptive field and then spread
    by the attention window plus half the conv kernel per layer. Returns None
    when no finite margin suffices (full attention, or the global token).
    """
    if cfg.attention.kind != AttentionKind.LIMITED:
        return None
    factor = cfg.total_factor
    window = max(cfg.attention.window_left, cfg.attention.window_right)
    margin = -(-receptive_field(cfg.subsampling) // factor) + cfg.n_layers * (window + (cfg.conv_kernel - 1) // 2)
    return margin * factor


def output_boundary(frame: int, factor: int) -> int:
    """Encoder frame where an input-frame boundary falls; seam frames go to the earlier buffer."""
    return -(-frame // factor)


def buffered_encode(features: Tensor, cfg: EncoderConfig, weights: Weights, plan: BufferPlan,
                    counter: Optional[MacCounter] = None, max_workers: int = 1) -> Tensor:
    """Encode every buffer and concatenate the kept encoder frames in buffer order."""
    if features.ndim != 2 or features.shape[0] != plan.total_frames:
        raise ShapeError(f"plan covers {plan.total_frames} frames, features have shape {features.shape}")
    factor = cfg.total_factor

    def run(span: BufferSpan) -> Tuple[Tensor, MacCounter]:
        local = MacCounter()
        return encode(features[span.start:span.end], cfg, weights, local), local

    if max_workers > 1 and len(plan.buffers) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outputs = list(pool.map(run, plan.buffers))
    else:
        outputs = [run(span) for span in plan.buffers]

    kept: List[Tensor] = []
    for i, (span, (encoded, local)) in enumerate(zip(plan.buffers, outputs)):
        offset = span.start // factor
        lo = output_boundary(span.keep_start, factor) - offset
        hi = min(output_boundary(span.keep_end, factor) - offset, encoded.shape[0])
        if span.start % factor:
            logger.debug(f"buffer {i} starts off the {factor}x frame grid; seams may shift by a frame")
        logger.debug(f"buffer {i}: frames [{span.start}, {span.end}) keeps encoder rows [{lo}, {hi})")
        kept.append(encoded[lo:hi])
        if counter is not None:
            counter.merge(local)
    return np.concatenate(kept, axis=0)
