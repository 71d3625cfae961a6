"""
Encoder package initialization.
"""
from .config import (
    LayerType, SubsamplingStage, SubsamplingSchema, EncoderConfig, Preset,
    build_config, with_attention, load_encoder_config,
)
from .subsampling import (
    output_length, minimum_input_length, reduced_feature_dim, flatten_dim,
    receptive_field, stage_output_shape, subsample,
)
from .blocks import conformer_block, feed_forward, convolution_module
from .model import (
    Weights, parameter_shapes, init_weights, weight_count, check_weights,
    attach_global_projections, encode,
)
from .weights_io import WEIGHTS_MAGIC, save_weights, load_weights, weights_checksum

__all__ = [
    'LayerType', 'SubsamplingStage', 'SubsamplingSchema', 'EncoderConfig', 'Preset',
    'build_config', 'with_attention', 'load_encoder_config',
    'output_length', 'minimum_input_length', 'reduced_feature_dim', 'flatten_dim',
    'receptive_field', 'stage_output_shape', 'subsample',
    'conformer_block', 'feed_forward', 'convolution_module',
    'Weights', 'parameter_shapes', 'init_weights', 'weight_count', 'check_weights',
    'attach_global_projections', 'encode',
    'WEIGHTS_MAGIC', 'save_weights', 'load_weights', 'weights_checksum',
]
