"""
Long-form inference package initialization.
"""
from .buffering import (
    BufferSpan, BufferPlan, plan_buffers, required_context_frames, output_boundary, buffered_encode,
)
from .decoding import DecodeResult, ctc_greedy_decode, ctc_head_weights, ctc_log_probs
from .features_io import FEATURES_MAGIC, read_features, write_features
from .concat import concat_utterances

__all__ = [
    'BufferSpan', 'BufferPlan', 'plan_buffers', 'required_context_frames', 'output_boundary',
    'buffered_encode',
    'DecodeResult', 'ctc_greedy_decode', 'ctc_head_weights', 'ctc_log_probs',
    'FEATURES_MAGIC', 'read_features', 'write_features',
    'concat_utterances',
]
