"""
Peak-memory model and maximum-duration estimation.

Peak memory = weights + the larger of the biggest subsampling working set and
one Conformer block's working set (activations plus attention scores). Blocks
run one after another, so only a single block's scratch is live.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

from loguru import logger

from src.encoder import EncoderConfig, minimum_input_length, output_length
from src.utils.config import config
from src.utils.errors import BudgetError
from .counting import count_params, score_elements, subsampling_costs

# Bisection stops growing the bracket here; budgets this large are treated as unlimited
MAX_FRAMES = 1 << 40


@dataclass(frozen=True)
class MemoryModel:
    """Peak-memory estimate for one encoder at one input length, in bytes."""

    attention_kind: str
    input_frames: int
    output_frames: int
    bytes_per_element: int
    weight_bytes: int
    subsampling_bytes: int
    block_bytes: int
    score_bytes: int

    @property
    def activation_bytes(self) -> int:
        return max(self.subsampling_bytes, self.block_bytes)

    @property
    def total_bytes(self) -> int:
        return self.weight_bytes + self.activation_bytes

    def to_dict(self) -> Dict[str, Any]:
        return {
            'attention_kind': self.attention_kind,
            'input_frames': self.input_frames,
            'output_frames': self.output_frames,
            'bytes_per_element': self.bytes_per_element,
            'weight_bytes': self.weight_bytes,
            'subsampling_bytes': self.subsampling_bytes,
            'block_bytes': self.block_bytes,
            'score_bytes': self.score_bytes,
            'total_bytes': self.total_bytes,
        }


def memory_breakdown(cfg: EncoderConfig, t_in: int, bytes_per_element: Optional[int] = None) -> MemoryModel:
    """Every term of the memory model for `t_in` input frames."""
    if bytes_per_element is None:
        bytes_per_element = config.get("profiling.bytes_per_element", 4)
    frames = output_length(t_in, cfg.subsampling)
    subsampling = max(c.working_elements for c in
                      subsampling_costs(cfg.subsampling, cfg.feature_dim, cfg.d_model, t_in))
    scores = score_elements(frames, cfg.n_heads, cfg.attention) if cfg.n_layers else 0
    activations = frames * cfg.d_model * (2 + max(cfg.ffn_expansion, 4)) if cfg.n_layers else 0
    return MemoryModel(
        attention_kind=cfg.attention.kind.value,
        input_frames=t_in,
        output_frames=frames,
        bytes_per_element=bytes_per_element,
        weight_bytes=count_params(cfg) * bytes_per_element,
        subsampling_bytes=subsampling * bytes_per_element,
        block_bytes=(activations + scores) * bytes_per_element,
        score_bytes=scores * bytes_per_element,
    )


def memory_model(cfg: EncoderConfig, t_in: int) -> int:
    """Peak bytes for encoding `t_in` input frames."""
    return memory_breakdown(cfg, t_in).total_bytes


def frames_for_minutes(cfg: EncoderConfig, minutes: float) -> int:
    return cfg.frames_for_seconds(minutes * 60.0)


def calibrate_budget(cfg: EncoderConfig, minutes: float) -> int:
    """Budget in bytes at which `cfg` tops out at exactly `minutes` of audio."""
    budget = memory_model(cfg, frames_for_minutes(cfg, minutes))
    logger.debug(f"Calibrated budget {budget / 1e9:.2f} GB from {cfg.name} at {minutes} min")
    return budget


def max_frames(cfg: EncoderConfig, budget_bytes: float) -> int:
    """Largest input frame count whose memory_model fits `budget_bytes`."""
    weights = count_params(cfg) * config.get("profiling.bytes_per_element", 4)
    if budget_bytes <= weights:
        raise BudgetError(
            f"budget of {budget_bytes:.0f} bytes does not cover the {weights} bytes of weights for {cfg.name}"
        )
    low = minimum_input_length(cfg.subsampling)
    if memory_model(cfg, low) > budget_bytes:
        raise BudgetError(
            f"budget of {budget_bytes:.0f} bytes does not fit even {low} input frames for {cfg.name}"
        )

    high = low * 2
    while memory_model(cfg, high) <= budget_bytes:
        low, high = high, high * 2
        if high > MAX_FRAMES:
            logger.warning(f"Budget {budget_bytes} never binds for {cfg.name}; capping at {MAX_FRAMES} frames")
            return MAX_FRAMES

    # invariant: memory(low) <= budget < memory(high)
    while high - low > 1:
        mid = (low + high) // 2
        if memory_model(cfg, mid) <= budget_bytes:
            low = mid
        else:
            high = mid
    return low


def max_duration(cfg: EncoderConfig, budget_bytes: float) -> float:
    """Longest audio, in minutes, whose peak memory fits `budget_bytes`."""
    frames = max_frames(cfg, budget_bytes)
    minutes = frames * cfg.frame_hop_ms / 60000.0
    if math.isfinite(budget_bytes):
        logger.debug(f"{cfg.name} ({cfg.attention.kind.value}): {minutes:.2f} min fits {budget_bytes / 1e9:.2f} GB")
    return minutes
