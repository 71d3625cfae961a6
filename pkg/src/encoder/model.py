"""
Encoder assembly: weight layout, seeded initialization and the forward pass.
"""
from collections import OrderedDict
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from src.attention import AttentionParams, init_global_from_local, random_attention_params
from src.tensor import DTYPE, MacCounter, Tensor, uniform_init
from src.utils.errors import ConfigError, ShapeError
from .blocks import conformer_block
from .config import EncoderConfig, LayerType
from .subsampling import flatten_dim, subsample

Weights = Dict[str, Tensor]


def _norm_shapes(name: str, width: int) -> List[Tuple[str, Tuple[int, ...]]]:
    return [(f"{name}.gamma", (width,)), (f"{name}.beta", (width,))]


def _linear_shapes(name: str, fan_in: int, fan_out: int) -> List[Tuple[str, Tuple[int, ...]]]:
    return [(f"{name}.weight", (fan_in, fan_out)), (f"{name}.bias", (fan_out,))]


def _attention_shapes(prefix: str, cfg: EncoderConfig) -> List[Tuple[str, Tuple[int, ...]]]:
    d, heads = cfg.d_model, cfg.n_heads
    square = [(f"{prefix}.{n}", (d, d)) for n in ('wq', 'wk', 'wv', 'wo')]
    biases = [(f"{prefix}.{n}", (d,)) for n in ('bq', 'bk', 'bv', 'bo')]
    shapes = square + biases + [
        (f"{prefix}.pos_proj", (d, d)),
        (f"{prefix}.u_bias", (heads, cfg.head_dim)),
        (f"{prefix}.v_bias", (heads, cfg.head_dim)),
    ]
    if cfg.attention.has_global:
        shapes += [(f"{prefix}.global_{n}", (d, d)) for n in ('wq', 'wk', 'wv')]
        shapes += [(f"{prefix}.global_{n}", (d,)) for n in ('bq', 'bk', 'bv')]
    return shapes


def parameter_shapes(cfg: EncoderConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    """Every weight name of `cfg` with its shape, in initialization order."""
    shapes: List[Tuple[str, Tuple[int, ...]]] = []
    c_in = 1
    for i, stage in enumerate(cfg.subsampling.stages):
        k_t, k_f = stage.kernel
        name = f"subsampling.{i}"
        if stage.layer_type == LayerType.FULL_CONV2D:
            shapes += [(f"{name}.weight", (stage.channels, c_in, k_t, k_f)), (f"{name}.bias", (stage.channels,))]
        else:
            shapes += [(f"{name}.depthwise.weight", (c_in, k_t, k_f)), (f"{name}.depthwise.bias", (c_in,))]
            shapes += [(f"{name}.pointwise.weight", (stage.channels, c_in, 1, 1)),
                       (f"{name}.pointwise.bias", (stage.channels,))]
        c_in = stage.channels
    shapes += _linear_shapes("subsampling.proj", flatten_dim(cfg), cfg.d_model)

    d, hidden = cfg.d_model, cfg.d_model * cfg.ffn_expansion
    for layer in range(cfg.n_layers):
        prefix = f"layers.{layer}"
        conv = f"{prefix}.conv"
        shapes += _ffn_shapes(f"{prefix}.ffn1", d, hidden)
        shapes += _norm_shapes(f"{prefix}.mhsa.norm", d) + _attention_shapes(f"{prefix}.mhsa", cfg)
        shapes += _norm_shapes(f"{conv}.norm", d)
        shapes += _linear_shapes(f"{conv}.pointwise1", d, 2 * d)
        shapes += [(f"{conv}.depthwise.weight", (d, cfg.conv_kernel)), (f"{conv}.depthwise.bias", (d,))]
        shapes += _norm_shapes(f"{conv}.channel_norm", d)
        shapes += _linear_shapes(f"{conv}.pointwise2", d, d)
        shapes += _ffn_shapes(f"{prefix}.ffn2", d, hidden)
        shapes += _norm_shapes(f"{prefix}.final_norm", d)

    if cfg.attention.has_global and cfg.n_layers > 0:
        shapes.append(("global_token", (d,)))
    return OrderedDict(shapes)


def _ffn_shapes(name: str, d: int, hidden: int) -> List[Tuple[str, Tuple[int, ...]]]:
    return (_norm_shapes(f"{name}.norm", d)
            + _linear_shapes(f"{name}.linear1", d, hidden)
            + _linear_shapes(f"{name}.linear2", hidden, d))


def _fan_in(name: str, shape: Tuple[int, ...]) -> int:
    # conv kernels are (out, in, kH, kW), depthwise (C, kH, kW) or (C, k), linears (in, out)
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    if "depthwise" in name:
        return int(np.prod(shape[1:]))
    return shape[0]


def init_weights(cfg: EncoderConfig, seed: int = 0) -> Weights:
    """Seeded uniform(+-1/sqrt(fan_in)) weights; norms start at identity.

    Attention layers are drawn through the attention package and, for the
    global-token backend, get their global projections copied from the local ones.
    """
    rng = np.random.default_rng(seed)
    shapes = parameter_shapes(cfg)
    weights: Weights = OrderedDict()

    for name, shape in shapes.items():
        if name in weights:
            continue
        head, _, tail = name.partition(".mhsa.")
        if tail and not tail.startswith("norm."):
            params = random_attention_params(rng, cfg.d_model, cfg.n_heads)
            if cfg.attention.has_global:
                params = init_global_from_local(params)
            weights.update(params.to_weights(f"{head}.mhsa"))
        elif name.endswith(".gamma"):
            weights[name] = np.ones(shape, dtype=DTYPE)
        elif name.endswith(".beta") or name == "global_token":
            weights[name] = np.zeros(shape, dtype=DTYPE)
        elif name.endswith(".bias"):
            weight_name = name[:-len("bias")] + "weight"
            weights[name] = uniform_init(rng, shape, _fan_in(weight_name, shapes[weight_name]))
        else:
            weights[name] = uniform_init(rng, shape, _fan_in(name, shape))

    logger.debug(f"Initialized {len(weights)} tensors for '{cfg.name}' with seed {seed}")
    return weights


def weight_count(weights: Weights) -> int:
    return int(sum(w.size for w in weights.values()))


def check_weights(cfg: EncoderConfig, weights: Weights):
    """Reject weight sets whose names or shapes do not fit `cfg`."""
    expected = parameter_shapes(cfg)
    missing = [name for name in expected if name not in weights]
    if missing:
        raise ConfigError(f"weights are missing {len(missing)} tensor(s), first: {missing[0]}",
                          code="weights_mismatch")
    for name, shape in expected.items():
        if tuple(weights[name].shape) != shape:
            raise ShapeError(f"weight {name} has shape {tuple(weights[name].shape)}, expected {shape}")
    extra = [name for name in weights if name not in expected]
    if extra:
        raise ConfigError(f"weights carry {len(extra)} unexpected tensor(s), first: {extra[0]}",
                          code="weights_mismatch")


def attach_global_projections(weights: Weights, cfg: EncoderConfig) -> Weights:
    """Add global-token projections to weights trained with local attention.

    Every attention layer's global query/key/value projections are copied from
    its local ones and the global token embedding starts at zero.
    """
    converted: Weights = OrderedDict(weights)
    for layer in range(cfg.n_layers):
        prefix = f"layers.{layer}.mhsa"
        params = init_global_from_local(AttentionParams.from_weights(weights, prefix))
        converted.update(params.to_weights(prefix))
    if cfg.n_layers > 0:
        converted["global_token"] = np.zeros(cfg.d_model, dtype=DTYPE)
    return converted


def encode(features: Tensor, cfg: EncoderConfig, weights: Weights,
           counter: Optional[MacCounter] = None) -> Tensor:
    """Subsample T x F features, then run the block stack; returns T' x d_model."""
    x = subsample(features, cfg, weights, counter)
    token = weights.get("global_token") if cfg.attention.has_global else None
    for layer in range(cfg.n_layers):
        x, token = conformer_block(x, weights, f"layers.{layer}", cfg, counter,
                                   global_state=token, return_global=True)
        logger.debug(f"layers.{layer}: {x.shape[0]} frames")
    return x
