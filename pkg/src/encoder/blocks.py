"""
Conformer block: half-step FFN, self-attention, convolution module, half-step FFN, final norm.
"""
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.attention import AttentionParams, attend
from src.tensor import (
    MacCounter, Tensor, add, depthwise_conv, glu, layer_norm, linear, silu, transpose,
)
from src.utils.errors import ShapeError
from .config import EncoderConfig


def _norm(x: Tensor, weights: Dict[str, Tensor], name: str) -> Tensor:
    return layer_norm(x, weights[f"{name}.gamma"], weights[f"{name}.beta"])


def feed_forward(x: Tensor, weights: Dict[str, Tensor], name: str,
                 counter: Optional[MacCounter] = None) -> Tensor:
    """Pre-norm Swish FFN; the caller applies the half-step residual."""
    h = _norm(x, weights, f"{name}.norm")
    h = silu(linear(h, weights[f"{name}.linear1.weight"], weights[f"{name}.linear1.bias"], counter, name))
    return linear(h, weights[f"{name}.linear2.weight"], weights[f"{name}.linear2.bias"], counter, name)


def convolution_module(x: Tensor, weights: Dict[str, Tensor], name: str, kernel: int,
                       counter: Optional[MacCounter] = None) -> Tensor:
    """Pointwise-GLU, depthwise conv over time, channel norm, SiLU, pointwise."""
    h = _norm(x, weights, f"{name}.norm")
    h = glu(linear(h, weights[f"{name}.pointwise1.weight"], weights[f"{name}.pointwise1.bias"], counter, name))
    h = depthwise_conv(transpose(h), weights[f"{name}.depthwise.weight"], weights[f"{name}.depthwise.bias"],
                       stride=1, padding=(kernel - 1) // 2, counter=counter, tag=name)
    h = silu(_norm(transpose(h), weights, f"{name}.channel_norm"))
    return linear(h, weights[f"{name}.pointwise2.weight"], weights[f"{name}.pointwise2.bias"], counter, name)


def conformer_block(x: Tensor, weights: Dict[str, Tensor], prefix: str, cfg: EncoderConfig,
                    counter: Optional[MacCounter] = None,
                    global_state: Optional[Tensor] = None,
                    return_global: bool = False) -> Union[Tensor, Tuple[Tensor, Optional[Tensor]]]:
    """One Conformer block over a T x D sequence.

    With a global-token attention backend, `global_state` is the token entering
    this block; the token is updated only by the attention residual. Pass
    `return_global=True` to get (output, updated token).
    """
    if x.ndim != 2 or x.shape[1] != cfg.d_model:
        raise ShapeError(f"{prefix}: block input must be T x {cfg.d_model}, got {x.shape}")

    x = add(x, 0.5 * feed_forward(x, weights, f"{prefix}.ffn1", counter))

    params = AttentionParams.from_weights(weights, f"{prefix}.mhsa")
    normed = _norm(x, weights, f"{prefix}.mhsa.norm")
    token = None
    if cfg.attention.has_global:
        token = global_state if global_state is not None else np.zeros(cfg.d_model, dtype=x.dtype)
        token_in = _norm(token[None, :], weights, f"{prefix}.mhsa.norm")[0]
    else:
        token_in = None
    out, global_row = attend(normed, params, cfg.n_heads, cfg.attention, counter,
                             f"{prefix}.mhsa", global_state=token_in)
    x = add(x, out)
    if global_row is not None:
        token = add(token, global_row)

    x = add(x, convolution_module(x, weights, f"{prefix}.conv", cfg.conv_kernel, counter))
    x = add(x, 0.5 * feed_forward(x, weights, f"{prefix}.ffn2", counter))
    x = _norm(x, weights, f"{prefix}.final_norm")

    if return_global:
        return x, token
    return x
