"""
Dense tensor primitives and MAC instrumentation.
"""
from .counter import MacCounter
from .ops import (
    Tensor, DTYPE, as_tensor, conv_output_length, matmul, linear, softmax,
    layer_norm, conv2d, depthwise_conv, sigmoid, silu, relu, glu, add,
    transpose, reshape, uniform_init,
)

__all__ = [
    'MacCounter', 'Tensor', 'DTYPE', 'as_tensor', 'conv_output_length',
    'matmul', 'linear', 'softmax', 'layer_norm', 'conv2d', 'depthwise_conv',
    'sigmoid', 'silu', 'relu', 'glu', 'add', 'transpose', 'reshape',
    'uniform_init',
]
