"""
Self-attention backends package initialization.
"""
from .params import (
    AttentionKind, AttentionContext, AttentionParams, init_global_from_local,
    init_attention_params, random_attention_params,
)
from .backends import (
    MASK_VALUE, sinusoidal_encoding, relative_shift, band_mask, split_heads,
    merge_heads, full_mhsa, masked_mhsa, limited_mhsa, limited_global_mhsa, attend,
)

__all__ = [
    'AttentionKind', 'AttentionContext', 'AttentionParams', 'init_global_from_local',
    'init_attention_params', 'random_attention_params',
    'MASK_VALUE', 'sinusoidal_encoding', 'relative_shift', 'band_mask', 'split_heads',
    'merge_heads', 'full_mhsa', 'masked_mhsa', 'limited_mhsa', 'limited_global_mhsa', 'attend',
]
