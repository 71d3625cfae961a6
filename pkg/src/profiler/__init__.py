"""
Profiler package initialization.
"""
from .report import LayerProfile, ProfileReport
from .counting import (
    LayerCost, count_params, count_macs, encoder_costs, attention_macs, score_elements,
)
from .reference_schemas import REFERENCE_SCHEMAS, profile_reference_schemas, grouped_attention_macs
from .memory import (
    MemoryModel, memory_breakdown, memory_model, calibrate_budget, frames_for_minutes,
    max_frames, max_duration,
)
from .feasibility import (
    FeasibilityResult, ManifestRecord, CorpusFeasibility, DEFICIT_BINS, ctc_feasibility,
    deficit_bin, load_manifest, corpus_feasibility, synthesize_manifest, write_manifest,
)

__all__ = [
    'LayerProfile', 'ProfileReport',
    'LayerCost', 'count_params', 'count_macs', 'encoder_costs', 'attention_macs', 'score_elements',
    'REFERENCE_SCHEMAS', 'profile_reference_schemas', 'grouped_attention_macs',
    'MemoryModel', 'memory_breakdown', 'memory_model', 'calibrate_budget', 'frames_for_minutes',
    'max_frames', 'max_duration',
    'FeasibilityResult', 'ManifestRecord', 'CorpusFeasibility', 'DEFICIT_BINS', 'ctc_feasibility',
    'deficit_bin', 'load_manifest', 'corpus_feasibility', 'synthesize_manifest', 'write_manifest',
]
