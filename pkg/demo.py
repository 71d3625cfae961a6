#!/usr/bin/env python3
"""
Walkthrough of the Fast Conformer toolkit on seeded random weights.
"""
import sys
from pathlib import Path

import numpy as np

# Add src directory to Python path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from src.attention import AttentionContext
from src.encoder import Preset, build_config, encode, init_weights, load_encoder_config, with_attention
from src.longform import (
    buffered_encode, concat_utterances, ctc_greedy_decode, ctc_head_weights, ctc_log_probs, plan_buffers,
    required_context_frames,
)
from src.profiler import (
    calibrate_budget, count_macs, count_params, corpus_feasibility, max_duration, profile_reference_schemas,
    synthesize_manifest,
)
from src.utils import LoggerConfig, ToolkitError
from loguru import logger


def demo_preset_ladder():
    """Params and MACs for every preset on 30 s of audio."""
    print("\n1. PRESET LADDER (30 s input)")
    print("-" * 30)
    for preset in Preset:
        cfg = build_config(preset)
        report = count_macs(cfg, cfg.frames_for_seconds(30.0))
        print(f"{preset.value}: {count_params(cfg) / 1e6:7.2f} M params {report.gmacs:7.2f} GMACs  {preset.description}")


def demo_schema_comparison():
    """Rank the four downsampling schemas."""
    print("\n2. SCHEMA COMPARISON")
    print("-" * 30)
    reports = [profile_reference_schemas(name, 3000)
               for name in ("conformer", "fast_conformer", "squeezeformer", "efficient_conformer")]
    for report in sorted(reports, key=lambda r: r.total_macs):
        print(f"{report.schema_name:<20} {report.gmacs:7.2f} GMACs")


def demo_memory():
    """Longest input under the memory A0 needs for 10 minutes."""
    print("\n3. MEMORY LIMITS")
    print("-" * 30)
    budget = calibrate_budget(build_config(Preset.A0), 10.0)
    print(f"Budget: {budget / 1e9:.2f} GB")
    fast = build_config(Preset.A4)
    limited = with_attention(fast, AttentionContext(kind="limited", window_left=128, window_right=128))
    for cfg in (build_config(Preset.A0), fast, limited):
        print(f"{cfg.name} ({cfg.attention.kind.value}): {max_duration(cfg, budget):.1f} min")


def demo_feasibility():
    """Character-rate transcripts against 4x and 8x subsampling."""
    print("\n4. CTC FEASIBILITY")
    print("-" * 30)
    records = synthesize_manifest(500, tokens_per_second=15.0, seed=0)
    for preset in (Preset.A0, Preset.A4):
        cfg = build_config(preset)
        summary = corpus_feasibility(records, cfg.subsampling, cfg.frame_hop_ms)
        print(f"{preset.value}: {summary.fraction:.1%} of transcripts too long")


def demo_longform():
    """Buffered encoding of a synthetic 89 s stream with the example encoder."""
    print("\n5. LONG-FORM INFERENCE")
    print("-" * 30)
    cfg = load_encoder_config(Path(__file__).parent / "config" / "encoder.example.json")
    weights = init_weights(cfg, seed=0)
    rng = np.random.default_rng(0)
    utterances = [rng.standard_normal((1400, cfg.feature_dim)).astype(np.float32) for _ in range(6)]
    features = concat_utterances(utterances, gap_frames=100, seed=0)

    context = required_context_frames(cfg)
    plan = plan_buffers(features.shape[0], 2 * context + 800, context, context)
    merged = buffered_encode(features, cfg, weights, plan)
    whole = encode(features, cfg, weights)
    print(f"{features.shape[0]} frames in {len(plan.buffers)} buffers, context {context} frames")
    print(f"Max difference vs single pass: {np.max(np.abs(merged - whole)):.2e}")

    head_w, head_b = ctc_head_weights(cfg.d_model, 32, seed=0)
    decoded = ctc_greedy_decode(ctc_log_probs(merged, head_w, head_b))
    print(f"Greedy decode: {len(decoded.tokens)} tokens over {merged.shape[0]} encoder frames")


def main():
    """Run every demo section."""
    LoggerConfig.setup_default_logging("WARNING")
    print("=" * 60)
    print("FAST CONFORMER TOOLKIT - DEMO")
    print("=" * 60)
    try:
        demo_preset_ladder()
        demo_schema_comparison()
        demo_memory()
        demo_feasibility()
        demo_longform()
    except ToolkitError as e:
        logger.error(f"Demo failed: {e.one_line()}")
        return 1
    print("\n" + "=" * 60)
    print("DEMO COMPLETED")
    return 0


if __name__ == "__main__":
    sys.exit(main())
