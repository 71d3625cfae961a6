"""
End-to-end checks on realistic input sizes: a 3-minute buffered stream and A0 vs A4 forward time.
"""
import statistics
import time
import unittest
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.attention import AttentionContext
from src.encoder import (
    EncoderConfig, LayerType, SubsamplingSchema, SubsamplingStage, build_config, encode, init_weights,
    output_length,
)
from src.longform import (
    buffered_encode, concat_utterances, ctc_greedy_decode, ctc_head_weights, ctc_log_probs, plan_buffers,
    required_context_frames,
)


def stream_config() -> EncoderConfig:
    """Fast Conformer layout at reduced width with 128-frame limited attention."""
    schema = SubsamplingSchema(tuple(
        SubsamplingStage(stride=2, channels=8,
                         layer_type=LayerType.DEPTHWISE_SEPARABLE if i else LayerType.FULL_CONV2D)
        for i in range(3)
    ))
    return EncoderConfig(subsampling=schema, n_layers=2, d_model=32, n_heads=4, ffn_expansion=4, conv_kernel=9,
                         attention=AttentionContext(kind="limited", window_left=128, window_right=128),
                         feature_dim=80, name="stream")


class TestLongStream(unittest.TestCase):
    """Test buffered inference on a 3-minute synthetic stream."""

    def test_buffered_equals_whole(self):
        """Test 60 s buffers with 22 s margins reproduce the single-pass encoding."""
        cfg = stream_config()
        weights = init_weights(cfg, seed=0)
        rng = np.random.default_rng(0)
        utterances = [rng.standard_normal((1620, 80)).astype(np.float32) for _ in range(10)]
        features = concat_utterances(utterances, gap_frames=200, seed=0)
        self.assertEqual(features.shape, (18000, 80))

        context = 2200
        self.assertLessEqual(required_context_frames(cfg), context)
        plan = plan_buffers(features.shape[0], 6000, context, context)
        self.assertGreater(len(plan.buffers), 2)

        whole = encode(features, cfg, weights)
        merged = buffered_encode(features, cfg, weights, plan, max_workers=2)
        self.assertEqual(merged.shape, whole.shape)
        self.assertLess(np.max(np.abs(merged - whole)), 1e-4)

        head_w, head_b = ctc_head_weights(cfg.d_model, 32, seed=0)
        merged_log_probs = ctc_log_probs(merged, head_w, head_b)
        agreement = np.mean(np.argmax(merged_log_probs, axis=1) == np.argmax(ctc_log_probs(whole, head_w, head_b), axis=1))
        self.assertGreater(agreement, 0.99)
        decoded = ctc_greedy_decode(merged_log_probs)
        self.assertTrue(all(end <= merged.shape[0] for _, end in decoded.frame_spans))


class TestRelativeSpeed(unittest.TestCase):
    """Test A4 runs faster than A0 on the same 30 s input."""

    @staticmethod
    def timed_forward(preset: str, features: np.ndarray, runs: int = 5):
        """Median wall-clock seconds over `runs` forwards, and the last output."""
        cfg = build_config(preset)
        weights = init_weights(cfg, seed=0)
        timings = []
        for _ in range(runs):
            start = time.perf_counter()
            encoded = encode(features, cfg, weights)
            timings.append(time.perf_counter() - start)
        return statistics.median(timings), encoded

    def test_a4_faster_than_a0(self):
        """Test median wall-clock forward time over five runs."""
        features = np.random.default_rng(0).standard_normal((3000, 80)).astype(np.float32)
        a0, a0_out = self.timed_forward("A0", features)
        a4, a4_out = self.timed_forward("A4", features)
        self.assertEqual(a0_out.shape, (output_length(3000, build_config("A0").subsampling), 512))
        self.assertEqual(a4_out.shape, (output_length(3000, build_config("A4").subsampling), 512))
        self.assertEqual(a4_out.shape[0], 375)
        self.assertLess(a4, a0)


if __name__ == '__main__':
    unittest.main()
