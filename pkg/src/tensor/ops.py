"""
Dense tensor primitives for the encoder forward pass.

Tensors are float32 numpy arrays in row-major order. Every primitive that
does multiply-accumulate work takes an optional MacCounter and a tag and
increments the counter by exactly the closed-form count in its docstring.
"""
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from src.utils.errors import ShapeError
from .counter import MacCounter

Tensor = np.ndarray
IntPair = Union[int, Tuple[int, int]]

DTYPE = np.float32


def as_tensor(data, shape: Optional[Sequence[int]] = None) -> Tensor:
    """Convert `data` to a contiguous float32 tensor, optionally reshaped."""
    tensor = np.ascontiguousarray(np.asarray(data, dtype=DTYPE))
    if shape is not None:
        tensor = tensor.reshape(tuple(shape))
    return tensor


def _count(counter: Optional[MacCounter], tag: str, macs: int):
    if counter is not None:
        counter.add(tag, macs)


def _pair(value: IntPair) -> Tuple[int, int]:
    if isinstance(value, (tuple, list)):
        return int(value[0]), int(value[1])
    return int(value), int(value)


def conv_output_length(length: int, kernel: int, stride: int, padding: int) -> int:
    """floor((L + 2p - k) / s) + 1, which may be < 1 for too-short inputs."""
    return (length + 2 * padding - kernel) // stride + 1


def matmul(a: Tensor, b: Tensor, counter: Optional[MacCounter] = None, tag: str = "matmul") -> Tensor:
    """Matrix product with optional leading batch dimensions.

    Counts batch * M * K * N, where batch is the broadcast batch size.
    """
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs rank >= 2 operands, got shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(
            f"matmul inner extents differ: {a.shape} x {b.shape} ({a.shape[-1]} != {b.shape[-2]})"
        )
    try:
        batch_shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError as e:
        raise ShapeError(f"matmul batch dimensions do not broadcast: {a.shape} x {b.shape}") from e

    m, k = a.shape[-2], a.shape[-1]
    n = b.shape[-1]
    batch = int(np.prod(batch_shape)) if batch_shape else 1
    _count(counter, tag, batch * m * k * n)
    return np.matmul(a, b).astype(DTYPE, copy=False)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           counter: Optional[MacCounter] = None, tag: str = "linear") -> Tensor:
    """x @ weight + bias with `weight` stored as (in, out)."""
    out = matmul(x, weight, counter, tag)
    if bias is not None:
        out = out + bias
    return out.astype(DTYPE, copy=False)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax, reduced in float64."""
    wide = np.asarray(x, dtype=np.float64)
    shifted = wide - np.max(wide, axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return (exp / np.sum(exp, axis=axis, keepdims=True)).astype(DTYPE)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale by gamma and shift by beta."""
    wide = np.asarray(x, dtype=np.float64)
    mean = wide.mean(axis=-1, keepdims=True)
    var = wide.var(axis=-1, keepdims=True)
    normed = (wide - mean) / np.sqrt(var + eps)
    return (normed * gamma + beta).astype(DTYPE)


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: IntPair = 1, padding: IntPair = 0,
           counter: Optional[MacCounter] = None, tag: str = "conv2d") -> Tensor:
    """Cross-correlation of a C_in x H x W input with a C_out x C_in x kH x kW kernel.

    Counts C_out * C_in * kH * kW * H' * W'.
    """
    if x.ndim != 3 or weight.ndim != 4:
        raise ShapeError(f"conv2d expects C x H x W input and 4-d kernel, got {x.shape} and {weight.shape}")
    c_in, height, width = x.shape
    c_out, k_in, k_h, k_w = weight.shape
    if k_in != c_in:
        raise ShapeError(f"conv2d kernel expects {k_in} input channels, input has {c_in}")
    s_h, s_w = _pair(stride)
    p_h, p_w = _pair(padding)
    out_h = conv_output_length(height, k_h, s_h, p_h)
    out_w = conv_output_length(width, k_w, s_w, p_w)
    if out_h < 1 or out_w < 1:
        raise ShapeError(
            f"conv2d output would be {out_h}x{out_w} for input {height}x{width}, "
            f"kernel {k_h}x{k_w}, stride {s_h}x{s_w}, padding {p_h}x{p_w}"
        )

    padded = np.pad(x, ((0, 0), (p_h, p_h), (p_w, p_w))) if (p_h or p_w) else x
    out = np.zeros((c_out, out_h, out_w), dtype=DTYPE)
    for i in range(k_h):
        for j in range(k_w):
            patch = padded[:, i:i + s_h * (out_h - 1) + 1:s_h, j:j + s_w * (out_w - 1) + 1:s_w]
            out += np.tensordot(weight[:, :, i, j], patch, axes=([1], [0]))
    if bias is not None:
        out += bias[:, None, None]

    _count(counter, tag, c_out * c_in * k_h * k_w * out_h * out_w)
    return out


def depthwise_conv(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
                   stride: IntPair = 1, padding: IntPair = 0,
                   counter: Optional[MacCounter] = None, tag: str = "depthwise_conv") -> Tensor:
    """Per-channel convolution of a C x L or C x H x W input.

    `weight` is C x k (1-d) or C x kH x kW (2-d). Channel c of the output only
    sees channel c of the input. Counts C * kernel volume * output spatial size.
    """
    if x.ndim == 2:
        if weight.ndim != 2:
            raise ShapeError(f"1-d depthwise kernel must be C x k, got {weight.shape}")
        out = depthwise_conv(x[:, None, :], weight[:, None, :], bias,
                             stride=(1, _pair(stride)[0]), padding=(0, _pair(padding)[0]),
                             counter=counter, tag=tag)
        return out[:, 0, :]

    if x.ndim != 3 or weight.ndim != 3:
        raise ShapeError(f"depthwise_conv expects C x H x W input and C x kH x kW kernel, got {x.shape} and {weight.shape}")
    channels, height, width = x.shape
    if weight.shape[0] != channels:
        raise ShapeError(f"depthwise kernel has {weight.shape[0]} channels, input has {channels}")
    _, k_h, k_w = weight.shape
    s_h, s_w = _pair(stride)
    p_h, p_w = _pair(padding)
    out_h = conv_output_length(height, k_h, s_h, p_h)
    out_w = conv_output_length(width, k_w, s_w, p_w)
    if out_h < 1 or out_w < 1:
        raise ShapeError(
            f"depthwise_conv output would be {out_h}x{out_w} for input {height}x{width}, "
            f"kernel {k_h}x{k_w}, stride {s_h}x{s_w}, padding {p_h}x{p_w}"
        )

    padded = np.pad(x, ((0, 0), (p_h, p_h), (p_w, p_w))) if (p_h or p_w) else x
    out = np.zeros((channels, out_h, out_w), dtype=DTYPE)
    for i in range(k_h):
        for j in range(k_w):
            patch = padded[:, i:i + s_h * (out_h - 1) + 1:s_h, j:j + s_w * (out_w - 1) + 1:s_w]
            out += weight[:, i, j][:, None, None] * patch
    if bias is not None:
        out += bias[:, None, None]

    _count(counter, tag, channels * k_h * k_w * out_h * out_w)
    return out


def sigmoid(x: Tensor) -> Tensor:
    wide = np.asarray(x, dtype=np.float64)
    return (0.5 * (1.0 + np.tanh(0.5 * wide))).astype(DTYPE)


def silu(x: Tensor) -> Tensor:
    return (np.asarray(x, dtype=DTYPE) * sigmoid(x)).astype(DTYPE)


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0).astype(DTYPE, copy=False)


def glu(x: Tensor, axis: int = -1) -> Tensor:
    """Split `axis` in half and return first * sigmoid(second)."""
    size = x.shape[axis]
    if size % 2:
        raise ShapeError(f"glu needs an even extent on axis {axis}, got {size}")
    first, second = np.split(x, 2, axis=axis)
    return (first * sigmoid(second)).astype(DTYPE)


def add(a: Tensor, b: Tensor) -> Tensor:
    return np.add(a, b, dtype=DTYPE)


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    return np.ascontiguousarray(np.transpose(x, axes))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    expected = int(np.prod(shape)) if len(shape) else 1
    if -1 not in shape and expected != x.size:
        raise ShapeError(f"cannot reshape {x.shape} ({x.size} elements) to {tuple(shape)}")
    return np.reshape(x, tuple(shape))


def uniform_init(rng: np.random.Generator, shape: Sequence[int], fan_in: int) -> Tensor:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights from a seeded generator."""
    bound = 1.0 / math.sqrt(max(1, fan_in))
    draws = rng.random(tuple(shape), dtype=np.float32)
    return ((draws * 2.0 - 1.0) * bound).astype(DTYPE)
