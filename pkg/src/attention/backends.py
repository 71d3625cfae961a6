"""
Self-attention backends.

All three backends use Transformer-XL style relative positions: the score of
query i against key j is ((q_i + u) . k_j + (q_i + v) . p_{i-j}) / sqrt(head_dim),
where p_r is the projected sinusoidal encoding of the distance r = i - j.

- full_mhsa: dense attention over every pair.
- limited_mhsa: each query sees [i - window_left, i + window_right], computed
  with overlapping key chunks so that work grows linearly with T.
- limited_global_mhsa: limited_mhsa plus one global token with its own
  query/key/value projections.
"""
import math
from typing import Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from loguru import logger

from src.tensor import MacCounter, Tensor, DTYPE, linear, matmul, softmax
from src.utils.errors import ConfigError, ShapeError
from .params import AttentionContext, AttentionKind, AttentionParams

# Most negative finite float32; masked rows stay NaN-free after softmax
MASK_VALUE = np.finfo(np.float32).min


def sinusoidal_encoding(distances: np.ndarray, d_model: int) -> Tensor:
    """Sinusoidal table with one row per relative distance value."""
    inv_freq = np.exp(np.arange(0, d_model, 2, dtype=np.float64) * (-math.log(10000.0) / d_model))
    angles = np.asarray(distances, dtype=np.float64)[:, None] * inv_freq[None, :]
    table = np.zeros((len(distances), d_model), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles[:, :d_model // 2])
    return table.astype(DTYPE)


def split_heads(x: Tensor, heads: int) -> Tensor:
    """(T, D) -> (heads, T, D // heads)."""
    length, width = x.shape
    return x.reshape(length, heads, width // heads).transpose(1, 0, 2)


def merge_heads(x: Tensor) -> Tensor:
    """(heads, T, head_dim) -> (T, heads * head_dim)."""
    heads, length, head_dim = x.shape
    return np.ascontiguousarray(x.transpose(1, 0, 2).reshape(length, heads * head_dim))


def relative_shift(position: Tensor) -> Tensor:
    """Map (..., T, 2T-1) distance-indexed scores to (..., T, T) key-indexed scores.

    Column m of the input holds distance T-1-m, so pair (i, j) reads column T-1-i+j.
    """
    length = position.shape[-2]
    index = (length - 1) - np.arange(length)[:, None] + np.arange(length)[None, :]
    index = np.broadcast_to(index, position.shape[:-1] + (length,))
    return np.take_along_axis(position, index, axis=-1)


def band_mask(length: int, window_left: int, window_right: int) -> np.ndarray:
    """Boolean (T, T) mask, True where -window_left <= j - i <= window_right."""
    offsets = np.arange(length)[None, :] - np.arange(length)[:, None]
    return (offsets >= -window_left) & (offsets <= window_right)


def _check_input(x: Tensor, params: AttentionParams, heads: int):
    if x.ndim != 2:
        raise ShapeError(f"attention input must be T x D, got shape {x.shape}")
    if x.shape[0] < 1:
        raise ShapeError("attention input must have at least one position")
    if heads < 1 or x.shape[1] % heads:
        raise ShapeError(f"d_model {x.shape[1]} is not divisible by {heads} heads")
    params.check(x.shape[1], heads)


def _project(x: Tensor, params: AttentionParams, counter: Optional[MacCounter], tag: str):
    q = linear(x, params.wq, params.bq, counter, tag)
    k = linear(x, params.wk, params.bk, counter, tag)
    v = linear(x, params.wv, params.bv, counter, tag)
    return q, k, v


def _pad_time(x: Tensor, front: int, back: int) -> Tensor:
    if not front and not back:
        return x
    return np.pad(x, ((0, 0), (front, back), (0, 0)))


def _overlapping_chunks(x: Tensor, chunk: int, span: int) -> Tensor:
    """(H, S, d) -> (H, n, d, span) key windows starting every `chunk` frames."""
    windows = sliding_window_view(x, span, axis=1)
    return windows[:, ::chunk]


def _dense_attention(x: Tensor, params: AttentionParams, heads: int,
                     counter: Optional[MacCounter], tag: str,
                     mask: Optional[np.ndarray] = None) -> Tensor:
    length, width = x.shape
    head_dim = width // heads
    q, k, v = _project(x, params, counter, tag)
    p = matmul(sinusoidal_encoding(np.arange(length - 1, -length, -1), width),
               params.pos_proj, counter, tag)

    qh, kh, vh, ph = (split_heads(t, heads) for t in (q, k, v, p))
    q_u = qh + params.u_bias[:, None, :]
    q_v = qh + params.v_bias[:, None, :]

    content = matmul(q_u, kh.transpose(0, 2, 1), counter, tag)
    position = relative_shift(matmul(q_v, ph.transpose(0, 2, 1), counter, tag))
    scores = (content + position) / np.float32(math.sqrt(head_dim))
    if mask is not None:
        scores = np.where(mask[None], scores, MASK_VALUE)

    context = matmul(softmax(scores), vh, counter, tag)
    return linear(merge_heads(context), params.wo, params.bo, counter, tag)


def _local_context(q: Tensor, k: Tensor, v: Tensor, params: AttentionParams, heads: int,
                   ctx: AttentionContext, counter: Optional[MacCounter], tag: str,
                   global_key: Optional[Tensor] = None,
                   global_value: Optional[Tensor] = None) -> Tensor:
    """Windowed attention context (before the output projection).

    Queries are grouped in chunks of `chunk` frames; each chunk scores a key
    span of chunk + window_left + window_right frames, so neighbouring spans
    overlap by the window. Pairs outside the band or in padding are masked.
    """
    length, width = q.shape
    head_dim = width // heads
    left, right = ctx.window_left, ctx.window_right
    band = left + right + 1
    chunk = max(1, min(ctx.chunk_size, length))
    n_chunks = -(-length // chunk)
    padded_len = n_chunks * chunk
    span = chunk + left + right
    tail = padded_len - length
    scale = np.float32(math.sqrt(head_dim))

    # Only distances inside the window need a position row
    p = matmul(sinusoidal_encoding(np.arange(left, -right - 1, -1), width),
               params.pos_proj, counter, tag)
    qh, kh, vh, ph = (split_heads(t, heads) for t in (q, k, v, p))
    q_u = qh + params.u_bias[:, None, :]
    q_v = qh + params.v_bias[:, None, :]
    position = matmul(q_v, ph.transpose(0, 2, 1), counter, tag)

    q_blocks = _pad_time(q_u, 0, tail).reshape(heads, n_chunks, chunk, head_dim)
    position = _pad_time(position, 0, tail).reshape(heads, n_chunks, chunk, band)
    key_windows = _overlapping_chunks(_pad_time(kh, left, tail + right), chunk, span)
    value_windows = _overlapping_chunks(_pad_time(vh, left, tail + right), chunk, span).transpose(0, 1, 3, 2)

    content = matmul(q_blocks, key_windows, counter, tag)

    # offsets[a, l] indexes the window table for query a and key slot l of a chunk
    offsets = np.arange(span)[None, :] - np.arange(chunk)[:, None]
    in_band = (offsets >= 0) & (offsets < band)
    key_index = (np.arange(n_chunks) * chunk - left)[:, None, None] + np.arange(span)[None, None, :]
    valid = in_band[None] & (key_index >= 0) & (key_index < length)

    gather = np.broadcast_to(np.clip(offsets, 0, band - 1), (heads, n_chunks, chunk, span))
    scores = (content + np.take_along_axis(position, gather, axis=-1)) / scale
    scores = np.where(valid[None], scores, MASK_VALUE)

    if global_key is not None:
        flat_q = q_blocks.reshape(heads, padded_len, head_dim)
        global_scores = matmul(flat_q, global_key[:, :, None], counter, tag) / scale
        scores = np.concatenate([global_scores.reshape(heads, n_chunks, chunk, 1), scores], axis=-1)

    probs = softmax(scores)
    if global_key is not None:
        global_probs, probs = probs[..., :1], probs[..., 1:]

    context = matmul(probs, value_windows, counter, tag)
    if global_value is not None:
        mixed = matmul(global_probs.reshape(heads, padded_len, 1), global_value[:, None, :], counter, tag)
        context = context + mixed.reshape(heads, n_chunks, chunk, head_dim)

    context = context.reshape(heads, padded_len, head_dim)[:, :length]
    return merge_heads(context)


def full_mhsa(x: Tensor, params: AttentionParams, heads: int,
              counter: Optional[MacCounter] = None, tag: str = "mhsa") -> Tensor:
    """Dense relative-position multi-head self-attention over a T x D input.

    MACs: 4*T*D^2 + (2T-1)*D^2 + 2*T^2*D + T*(2T-1)*D.
    """
    _check_input(x, params, heads)
    return _dense_attention(x, params, heads, counter, tag)


def masked_mhsa(x: Tensor, params: AttentionParams, heads: int, ctx: AttentionContext,
                counter: Optional[MacCounter] = None, tag: str = "mhsa") -> Tensor:
    """Dense attention with the limited-context band mask; the chunked path's reference."""
    _check_input(x, params, heads)
    mask = band_mask(x.shape[0], ctx.window_left, ctx.window_right)
    return _dense_attention(x, params, heads, counter, tag, mask=mask)


def limited_mhsa(x: Tensor, params: AttentionParams, heads: int, ctx: AttentionContext,
                 counter: Optional[MacCounter] = None, tag: str = "mhsa") -> Tensor:
    """Sliding-window attention through overlapping chunks."""
    if ctx.kind != AttentionKind.LIMITED:
        raise ConfigError(f"limited_mhsa needs a limited context, got {ctx.kind.value}")
    _check_input(x, params, heads)
    q, k, v = _project(x, params, counter, tag)
    context = _local_context(q, k, v, params, heads, ctx, counter, tag)
    return linear(context, params.wo, params.bo, counter, tag)


def limited_global_mhsa(x: Tensor, params: AttentionParams, heads: int, ctx: AttentionContext,
                        counter: Optional[MacCounter] = None, tag: str = "mhsa",
                        global_state: Optional[Tensor] = None,
                        return_global: bool = False) -> Union[Tensor, Tuple[Tensor, Tensor]]:
    """Sliding-window attention plus a single global token.

    The global token sits at position 0 of an extended T+1 sequence. It
    attends to every position and every position attends to it, both through
    the global projections. The returned sequence has T rows; with
    `return_global` the global token's own output row is returned as well.
    """
    if ctx.kind != AttentionKind.LIMITED_WITH_GLOBAL:
        raise ConfigError(f"limited_global_mhsa needs a limited_with_global context, got {ctx.kind.value}")
    if not params.has_global:
        raise ConfigError("attention parameters are missing the global projections", code="missing_global")
    _check_input(x, params, heads)

    width = x.shape[1]
    head_dim = width // heads
    if global_state is None:
        token = np.zeros(width, dtype=DTYPE)
    else:
        token = np.asarray(global_state, dtype=DTYPE).reshape(width)
    extended = np.concatenate([token[None, :], x], axis=0)

    q, k, v = _project(x, params, counter, tag)
    global_q = linear(token[None, :], params.global_wq, params.global_bq, counter, tag)
    global_k = linear(extended, params.global_wk, params.global_bk, counter, tag)
    global_v = linear(extended, params.global_wv, params.global_bv, counter, tag)
    gq, gk, gv = (split_heads(t, heads) for t in (global_q, global_k, global_v))

    local = _local_context(q, k, v, params, heads, ctx, counter, tag,
                           global_key=gk[:, 0], global_value=gv[:, 0])

    global_scores = matmul(gq, gk.transpose(0, 2, 1), counter, tag) / np.float32(math.sqrt(head_dim))
    global_context = matmul(softmax(global_scores), gv, counter, tag)

    out = linear(np.concatenate([merge_heads(global_context), local], axis=0),
                 params.wo, params.bo, counter, tag)
    if return_global:
        return out[1:], out[0]
    return out[1:]


def attend(x: Tensor, params: AttentionParams, heads: int, ctx: AttentionContext,
           counter: Optional[MacCounter] = None, tag: str = "mhsa",
           global_state: Optional[Tensor] = None) -> Tuple[Tensor, Optional[Tensor]]:
    """Dispatch to the backend named by `ctx`; returns (output, global row or None)."""
    if ctx.kind == AttentionKind.FULL:
        return full_mhsa(x, params, heads, counter, tag), None
    if ctx.kind == AttentionKind.LIMITED:
        return limited_mhsa(x, params, heads, ctx, counter, tag), None
    logger.debug(f"{tag}: global-token attention over {x.shape[0]} frames")
    out, global_row = limited_global_mhsa(x, params, heads, ctx, counter, tag,
                                          global_state=global_state, return_global=True)
    return out, global_row
