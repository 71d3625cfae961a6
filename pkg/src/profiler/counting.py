"""
Closed-form parameter and MAC counts.

Every formula here follows the counting convention of the tensor primitives
(only matmuls and convolutions count), so count_macs agrees exactly with a
MacCounter threaded through encode().
"""
from typing import List, NamedTuple, Optional

from loguru import logger

from src.attention import AttentionContext, AttentionKind
from src.encoder import (
    EncoderConfig, LayerType, SubsamplingSchema, minimum_input_length, output_length, stage_output_shape,
)
from src.utils.config import config
from .report import ProfileReport


class LayerCost(NamedTuple):
    name: str
    params: int
    macs: int
    working_elements: int


# --- sub-layer formulas -------------------------------------------------------

def ffn_params(d_model: int, expansion: int) -> int:
    hidden = d_model * expansion
    return 2 * d_model + (d_model * hidden + hidden) + (hidden * d_model + d_model)


def ffn_macs(frames: int, d_model: int, expansion: int) -> int:
    return 2 * frames * d_model * d_model * expansion


def mhsa_params(d_model: int, with_global: bool = False) -> int:
    """Norm, four projections with biases, bias-free position projection and u/v biases."""
    params = 2 * d_model + 4 * (d_model * d_model + d_model) + d_model * d_model + 2 * d_model
    if with_global:
        params += 3 * (d_model * d_model + d_model)
    return params


def conv_module_params(d_model: int, kernel: int) -> int:
    return (2 * d_model
            + (2 * d_model * d_model + 2 * d_model)
            + (d_model * kernel + d_model)
            + 2 * d_model
            + (d_model * d_model + d_model))


def conv_module_macs(frames: int, d_model: int, kernel: int) -> int:
    return 2 * frames * d_model * d_model + frames * d_model * kernel + frames * d_model * d_model


def _chunk_geometry(frames: int, ctx: AttentionContext):
    chunk = max(1, min(ctx.chunk_size, frames))
    padded = -(-frames // chunk) * chunk
    span = chunk + ctx.window_left + ctx.window_right
    return padded, span


def full_attention_macs(frames: int, d_model: int) -> int:
    t, d = frames, d_model
    return 4 * t * d * d + (2 * t - 1) * d * d + 2 * t * t * d + t * (2 * t - 1) * d


def limited_attention_macs(frames: int, d_model: int, ctx: AttentionContext) -> int:
    t, d, w = frames, d_model, ctx.window_size
    padded, span = _chunk_geometry(frames, ctx)
    return 4 * t * d * d + w * d * d + t * w * d + 2 * padded * span * d


def global_attention_macs(frames: int, d_model: int, ctx: AttentionContext) -> int:
    t, d, w = frames, d_model, ctx.window_size
    padded, span = _chunk_geometry(frames, ctx)
    projections = 3 * t * d * d + d * d + 2 * (t + 1) * d * d + (t + 1) * d * d
    local = w * d * d + t * w * d + 2 * padded * span * d
    global_terms = 2 * padded * d + 2 * (t + 1) * d
    return projections + local + global_terms


def attention_macs(frames: int, d_model: int, ctx: AttentionContext) -> int:
    if ctx.kind == AttentionKind.FULL:
        return full_attention_macs(frames, d_model)
    if ctx.kind == AttentionKind.LIMITED:
        return limited_attention_macs(frames, d_model, ctx)
    return global_attention_macs(frames, d_model, ctx)


def score_elements(frames: int, heads: int, ctx: AttentionContext) -> int:
    """Score, probability and scratch matrices held during one attention call."""
    if ctx.kind == AttentionKind.FULL:
        columns = frames
    elif ctx.kind == AttentionKind.LIMITED:
        columns = ctx.window_size
    else:
        columns = ctx.window_size + 1
    return 3 * heads * frames * columns


# --- whole-encoder accounting ---------------------------------------------------

def subsampling_costs(schema: SubsamplingSchema, feature_dim: int, d_model: int, t_in: int) -> List[LayerCost]:
    """Cost of every subsampling stage plus the projection to d_model."""
    costs = []
    c_in, length, width = 1, t_in, feature_dim
    for i, stage in enumerate(schema.stages):
        out_len, out_width = stage_output_shape(stage, length, width)
        k_vol = stage.kernel[0] * stage.kernel[1]
        positions = out_len * out_width
        in_elems = c_in * length * width
        out_elems = stage.channels * positions
        if stage.layer_type == LayerType.FULL_CONV2D:
            params = stage.channels * c_in * k_vol + stage.channels
            macs = stage.channels * c_in * k_vol * positions
            working = in_elems + out_elems
        else:
            dw_elems = c_in * positions
            params = c_in * k_vol + c_in + stage.channels * c_in + stage.channels
            macs = c_in * k_vol * positions + stage.channels * c_in * positions
            working = max(in_elems + dw_elems, dw_elems + out_elems)
        costs.append(LayerCost(f"subsampling.{i}", params, macs, working))
        c_in, length, width = stage.channels, out_len, out_width

    flat = c_in * width
    costs.append(LayerCost("subsampling.proj", flat * d_model + d_model,
                           length * flat * d_model, length * flat + length * d_model))
    return costs


def block_costs(prefix: str, frames: int, cfg: EncoderConfig) -> List[LayerCost]:
    """Costs of one Conformer block; the final norm is booked with ffn2."""
    d, e, heads = cfg.d_model, cfg.ffn_expansion, cfg.n_heads
    ctx = cfg.attention
    ffn_working = frames * d * (2 + e)
    return [
        LayerCost(f"{prefix}.ffn1", ffn_params(d, e), ffn_macs(frames, d, e), ffn_working),
        LayerCost(f"{prefix}.mhsa", mhsa_params(d, ctx.has_global), attention_macs(frames, d, ctx),
                  frames * d * 6 + score_elements(frames, heads, ctx)),
        LayerCost(f"{prefix}.conv", conv_module_params(d, cfg.conv_kernel),
                  conv_module_macs(frames, d, cfg.conv_kernel), frames * d * 4),
        LayerCost(f"{prefix}.ffn2", ffn_params(d, e) + 2 * d, ffn_macs(frames, d, e), ffn_working),
    ]


def encoder_costs(cfg: EncoderConfig, t_in: int) -> List[LayerCost]:
    """Per-layer costs in forward order. The global token embedding is booked with layers.0.mhsa."""
    frames = output_length(t_in, cfg.subsampling)
    costs = subsampling_costs(cfg.subsampling, cfg.feature_dim, cfg.d_model, t_in)
    for layer in range(cfg.n_layers):
        block = block_costs(f"layers.{layer}", frames, cfg)
        if layer == 0 and cfg.attention.has_global:
            mhsa = block[1]
            block[1] = mhsa._replace(params=mhsa.params + cfg.d_model)
        costs.extend(block)
    return costs


def count_params(cfg: EncoderConfig) -> int:
    """Exact parameter count; equals the element count of init_weights(cfg)."""
    costs = subsampling_costs(cfg.subsampling, cfg.feature_dim, cfg.d_model,
                              minimum_input_length(cfg.subsampling))
    total = sum(c.params for c in costs)
    per_block = (2 * ffn_params(cfg.d_model, cfg.ffn_expansion) + 2 * cfg.d_model
                 + mhsa_params(cfg.d_model, cfg.attention.has_global)
                 + conv_module_params(cfg.d_model, cfg.conv_kernel))
    total += cfg.n_layers * per_block
    if cfg.attention.has_global and cfg.n_layers > 0:
        total += cfg.d_model
    return total


def count_macs(cfg: EncoderConfig, t_in: int, bytes_per_element: Optional[int] = None) -> ProfileReport:
    """Per-layer MAC report for `t_in` input frames."""
    if bytes_per_element is None:
        bytes_per_element = config.get("profiling.bytes_per_element", 4)
    report = ProfileReport(schema_name=cfg.name, input_duration_s=t_in * cfg.frame_hop_ms / 1000.0)
    for cost in encoder_costs(cfg, t_in):
        report.add(cost.name, cost.params, cost.macs, cost.working_elements * bytes_per_element)
    logger.debug(f"{cfg.name}: {report.gmacs:.3f} GMACs over {t_in} frames")
    return report
