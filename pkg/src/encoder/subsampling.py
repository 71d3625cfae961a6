"""
Convolutional subsampling front-end.
"""
from typing import Dict, Optional, Tuple

import numpy as np

from src.tensor import (
    MacCounter, Tensor, conv2d, conv_output_length, depthwise_conv, linear, relu, as_tensor,
)
from src.utils.errors import InputTooShortError, ShapeError
from .config import EncoderConfig, LayerType, SubsamplingSchema, SubsamplingStage


def stage_output_shape(stage: SubsamplingStage, length: int, width: int) -> Tuple[int, int]:
    """(time, mel) extents after one stage."""
    (k_t, k_f), (p_t, p_f) = stage.kernel, stage.padding
    return (conv_output_length(length, k_t, stage.stride, p_t),
            conv_output_length(width, k_f, stage.stride, p_f))


def output_length(t_in: int, schema: SubsamplingSchema) -> int:
    """Encoder frames produced from `t_in` input frames."""
    if t_in < 1:
        raise InputTooShortError(f"input has {t_in} frames; at least {minimum_input_length(schema)} required")
    length = t_in
    for i, stage in enumerate(schema.stages):
        k_t, p_t = stage.kernel[0], stage.padding[0]
        length = conv_output_length(length, k_t, stage.stride, p_t)
        if length < 1:
            raise InputTooShortError(
                f"input of {t_in} frames collapses to {length} frames at subsampling stage {i}; "
                f"at least {minimum_input_length(schema)} frames required"
            )
    return length


def reduced_feature_dim(feature_dim: int, schema: SubsamplingSchema) -> int:
    """Mel bins left after every stage."""
    width = feature_dim
    for stage in schema.stages:
        width = conv_output_length(width, stage.kernel[1], stage.stride, stage.padding[1])
        if width < 1:
            raise ShapeError(f"feature_dim {feature_dim} collapses to {width} bins during subsampling")
    return width


def flatten_dim(cfg: EncoderConfig) -> int:
    """Input width of the projection to d_model: channels x reduced mel bins."""
    return cfg.subsampling.out_channels * reduced_feature_dim(cfg.feature_dim, cfg.subsampling)


def minimum_input_length(schema: SubsamplingSchema) -> int:
    """Smallest input frame count that survives every stage."""
    needed = 1
    for stage in reversed(schema.stages):
        k_t, p_t = stage.kernel[0], stage.padding[0]
        needed = max(1, (needed - 1) * stage.stride + k_t - 2 * p_t)
    return needed


def receptive_field(schema: SubsamplingSchema) -> int:
    """Input frames seen by one output frame of the subsampling stack."""
    field, jump = 1, 1
    for stage in schema.stages:
        field += (stage.kernel[0] - 1) * jump
        jump *= stage.stride
    return field


def subsample(features: Tensor, cfg: EncoderConfig, weights: Dict[str, Tensor],
              counter: Optional[MacCounter] = None) -> Tensor:
    """Run the subsampling stack on T x F features and project to T' x d_model.

    Every stage is followed by ReLU. A depthwise-separable stage is a strided
    depthwise conv followed by a 1x1 pointwise conv.
    """
    features = as_tensor(features)
    if features.ndim != 2 or features.shape[1] != cfg.feature_dim:
        raise ShapeError(f"features must be T x {cfg.feature_dim}, got shape {features.shape}")
    output_length(features.shape[0], cfg.subsampling)

    x = features[None, :, :]
    for i, stage in enumerate(cfg.subsampling.stages):
        tag = f"subsampling.{i}"
        if stage.layer_type == LayerType.FULL_CONV2D:
            x = conv2d(x, weights[f"{tag}.weight"], weights[f"{tag}.bias"],
                       stride=stage.stride, padding=stage.padding, counter=counter, tag=tag)
        else:
            x = depthwise_conv(x, weights[f"{tag}.depthwise.weight"], weights[f"{tag}.depthwise.bias"],
                               stride=stage.stride, padding=stage.padding, counter=counter, tag=tag)
            x = conv2d(x, weights[f"{tag}.pointwise.weight"], weights[f"{tag}.pointwise.bias"],
                       counter=counter, tag=tag)
        x = relu(x)

    channels, length, width = x.shape
    flat = np.ascontiguousarray(x.transpose(1, 0, 2).reshape(length, channels * width))
    return linear(flat, weights["subsampling.proj.weight"], weights["subsampling.proj.bias"],
                  counter, "subsampling.proj")
