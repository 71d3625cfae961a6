"""
Tests for buffer planning, buffered encoding, greedy CTC decoding and feature files.
"""
import itertools
import tempfile
import unittest
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.attention import AttentionContext
from src.encoder import (
    EncoderConfig, LayerType, SubsamplingSchema, SubsamplingStage, encode, init_weights, output_length,
)
from src.longform import (
    BufferPlan, BufferSpan, buffered_encode, concat_utterances, ctc_greedy_decode, ctc_head_weights,
    ctc_log_probs, output_boundary, plan_buffers, read_features, required_context_frames, write_features,
)
from src.tensor import MacCounter
from src.utils.errors import ConfigError, FormatError, PlanError, ShapeError


def small_config(kind="limited", window=8, kernel=5, n_layers=2):
    schema = SubsamplingSchema(tuple(
        SubsamplingStage(stride=2, channels=4,
                         layer_type=LayerType.DEPTHWISE_SEPARABLE if i else LayerType.FULL_CONV2D)
        for i in range(3)
    ))
    return EncoderConfig(subsampling=schema, n_layers=n_layers, d_model=16, n_heads=2, ffn_expansion=2,
                         conv_kernel=kernel,
                         attention=AttentionContext(kind=kind, window_left=window, window_right=window),
                         feature_dim=16, name=f"small-{kind}")


def coverage(plan: BufferPlan) -> np.ndarray:
    counts = np.zeros(plan.total_frames, dtype=int)
    for span in plan.buffers:
        counts[span.keep_start:span.keep_end] += 1
    return counts


def reference_greedy(log_probs, blank_id=0):
    best = [int(i) for i in np.argmax(log_probs, axis=1)]
    tokens, spans, t = [], [], 0
    for label, run in itertools.groupby(best):
        width = len(list(run))
        if label != blank_id:
            tokens.append(label)
            spans.append((t, t + width))
        t += width
    return tokens, spans


class TestPlanBuffers(unittest.TestCase):
    """Test buffer planning."""

    def test_single_buffer(self):
        """Test an input no longer than the buffer gives one buffer."""
        plan = plan_buffers(2000, 2000, 200, 200)
        self.assertEqual(plan.buffers, (BufferSpan(0, 2000, 0, 2000),))
        self.assertEqual(len(plan_buffers(500, 2000, 200, 200).buffers), 1)

    def test_two_abutting_buffers(self):
        """Test T = 2 * (buffer - contexts) splits into two abutting keep regions."""
        buffer_len, ctx = 1000, 100
        plan = plan_buffers(2 * (buffer_len - 2 * ctx), buffer_len, ctx, ctx)
        self.assertEqual(len(plan.buffers), 2)
        self.assertEqual(plan.buffers[0].keep_end, plan.buffers[1].keep_start)
        self.assertEqual(plan.buffers[1].start, plan.buffers[0].keep_end - ctx)

    def test_sixty_seconds(self):
        """Test 20 s buffers cover 60 s exactly once."""
        plan = plan_buffers(6000, 2000, 200, 200)
        self.assertTrue(np.all(coverage(plan) == 1))
        for span in plan.buffers:
            self.assertLessEqual(span.length, 2000)

    def test_random_partitions(self):
        """Test keep regions partition [0, T) for random plans."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            total = int(rng.integers(1, 5000))
            left, right = int(rng.integers(0, 200)), int(rng.integers(0, 200))
            buffer_len = left + right + int(rng.integers(1, 1000))
            plan = plan_buffers(total, buffer_len, left, right)
            self.assertTrue(np.all(coverage(plan) == 1), plan.to_dict())
            for span in plan.buffers:
                self.assertLessEqual(span.length, buffer_len)

    def test_invalid(self):
        """Test contexts that swallow the buffer and non-positive lengths."""
        with self.assertRaises(PlanError):
            plan_buffers(1000, 400, 200, 200)
        with self.assertRaises(PlanError):
            plan_buffers(0, 400, 10, 10)
        with self.assertRaises(PlanError):
            plan_buffers(1000, 0, 0, 0)

    def test_validate_rejects_gaps(self):
        """Test a hand-built plan with a gap fails validation."""
        plan = BufferPlan((BufferSpan(0, 10, 0, 5), BufferSpan(4, 12, 6, 12)), 12, 10, 1, 5)
        with self.assertRaises(PlanError):
            plan.validate()


class TestBufferedEncode(unittest.TestCase):
    """Test buffered encoding against whole-input encoding."""

    def setUp(self):
        self.rng = np.random.default_rng(1)

    def test_single_buffer_identical(self):
        """Test a one-buffer plan is bit-identical to encode."""
        cfg = small_config(kind="full")
        weights = init_weights(cfg, seed=0)
        features = self.rng.standard_normal((300, 16)).astype(np.float32)
        plan = plan_buffers(300, 400, 40, 40)
        np.testing.assert_array_equal(buffered_encode(features, cfg, weights, plan), encode(features, cfg, weights))

    def test_required_context(self):
        """Test the exact-margin rule."""
        self.assertEqual(required_context_frames(small_config()), (2 + 2 * (8 + 2)) * 8)
        self.assertIsNone(required_context_frames(small_config(kind="full")))
        self.assertIsNone(required_context_frames(small_config(kind="limited_with_global")))

    def test_limited_is_exact(self):
        """Test buffering is exact with limited attention and sufficient margins."""
        cfg = small_config()
        weights = init_weights(cfg, seed=2)
        features = self.rng.standard_normal((1600, 16)).astype(np.float32)
        ctx = required_context_frames(cfg)
        plan = plan_buffers(1600, 800, ctx, ctx)
        self.assertGreater(len(plan.buffers), 1)
        merged = buffered_encode(features, cfg, weights, plan)
        whole = encode(features, cfg, weights)
        self.assertEqual(merged.shape, whole.shape)
        self.assertLess(np.max(np.abs(merged - whole)), 1e-4)

    def test_full_attention_length(self):
        """Test a two-buffer full-attention plan keeps the whole-input length."""
        cfg = small_config(kind="full")
        weights = init_weights(cfg, seed=3)
        features = self.rng.standard_normal((1200, 16)).astype(np.float32)
        plan = plan_buffers(1200, 800, 160, 160)
        self.assertEqual(len(plan.buffers), 2)
        merged = buffered_encode(features, cfg, weights, plan)
        self.assertEqual(merged.shape, (output_length(1200, cfg.subsampling), 16))
        self.assertTrue(np.all(np.isfinite(merged)))

    def test_off_grid_length(self):
        """Test off-grid seams shift the length by at most one frame each."""
        cfg = small_config(n_layers=1)
        weights = init_weights(cfg, seed=4)
        features = self.rng.standard_normal((1000, 16)).astype(np.float32)
        plan = plan_buffers(1000, 300, 37, 41)
        merged = buffered_encode(features, cfg, weights, plan)
        seams = len(plan.buffers) - 1
        self.assertLessEqual(abs(merged.shape[0] - output_length(1000, cfg.subsampling)), seams)

    def test_parallel_matches_sequential(self):
        """Test parallel buffers merge in buffer order with the same MAC total."""
        cfg = small_config()
        weights = init_weights(cfg, seed=5)
        features = self.rng.standard_normal((1600, 16)).astype(np.float32)
        plan = plan_buffers(1600, 800, 176, 176)
        sequential_counter, parallel_counter = MacCounter(), MacCounter()
        sequential = buffered_encode(features, cfg, weights, plan, sequential_counter)
        parallel = buffered_encode(features, cfg, weights, plan, parallel_counter, max_workers=2)
        np.testing.assert_allclose(parallel, sequential, atol=1e-6)
        self.assertEqual(parallel_counter.total, sequential_counter.total)

    def test_mismatched_features(self):
        """Test features that do not match the plan are rejected."""
        cfg = small_config()
        with self.assertRaises(ShapeError):
            buffered_encode(np.zeros((100, 16), dtype=np.float32), cfg, init_weights(cfg), plan_buffers(200, 400, 8, 8))

    def test_output_boundary(self):
        """Test seam frames go to the earlier buffer."""
        self.assertEqual(output_boundary(16, 8), 2)
        self.assertEqual(output_boundary(17, 8), 3)
        self.assertEqual(output_boundary(0, 8), 0)


class TestGreedyDecode(unittest.TestCase):
    """Test greedy CTC decoding."""

    @staticmethod
    def one_hot(labels, vocab=4):
        log_probs = np.full((len(labels), vocab), -10.0, dtype=np.float32)
        log_probs[np.arange(len(labels)), labels] = 0.0
        return log_probs

    def test_all_blank(self):
        """Test an all-blank argmax emits nothing."""
        self.assertEqual(ctc_greedy_decode(self.one_hot([0, 0, 0])).tokens, [])

    def test_collapse_then_drop_blanks(self):
        """Test [a, a, blank, a] decodes to [a, a]."""
        result = ctc_greedy_decode(self.one_hot([2, 2, 0, 2]))
        self.assertEqual(result.tokens, [2, 2])
        self.assertEqual(result.frame_spans, [(0, 2), (3, 4)])

    def test_reference_decoder(self):
        """Test random 20 x 5 log-probs against a groupby reference."""
        rng = np.random.default_rng(6)
        for _ in range(20):
            log_probs = rng.standard_normal((20, 5)).astype(np.float32)
            result = ctc_greedy_decode(log_probs)
            tokens, spans = reference_greedy(log_probs)
            self.assertEqual(result.tokens, tokens)
            self.assertEqual(result.frame_spans, spans)
            for (_, end), (start, _) in zip(result.frame_spans, result.frame_spans[1:]):
                self.assertLessEqual(end, start)

    def test_rescaling_invariance(self):
        """Test per-frame positive rescaling keeps the decode."""
        rng = np.random.default_rng(7)
        log_probs = rng.standard_normal((30, 6)).astype(np.float32)
        scaled = log_probs * rng.uniform(0.5, 3.0, size=(30, 1)).astype(np.float32)
        self.assertEqual(ctc_greedy_decode(scaled).tokens, ctc_greedy_decode(log_probs).tokens)

    def test_invalid(self):
        """Test a single-symbol vocabulary and an out-of-range blank."""
        with self.assertRaises(ShapeError):
            ctc_greedy_decode(np.zeros((3, 1), dtype=np.float32))
        with self.assertRaises(ShapeError):
            ctc_greedy_decode(np.zeros((3, 4), dtype=np.float32), blank_id=4)

    def test_ctc_head(self):
        """Test the seeded head yields normalized log-probs."""
        weight, bias = ctc_head_weights(16, 10, seed=0)
        encoded = np.random.default_rng(8).standard_normal((12, 16)).astype(np.float32)
        counter = MacCounter()
        log_probs = ctc_log_probs(encoded, weight, bias, counter)
        self.assertEqual(log_probs.shape, (12, 10))
        np.testing.assert_allclose(np.exp(log_probs.astype(np.float64)).sum(axis=1), np.ones(12), atol=1e-5)
        self.assertEqual(counter.total, 12 * 16 * 10)


class TestConcatUtterances(unittest.TestCase):
    """Test utterance concatenation."""

    def test_identity(self):
        """Test one utterance with no gap is returned unchanged."""
        utterance = np.random.default_rng(9).standard_normal((30, 8)).astype(np.float32)
        np.testing.assert_array_equal(concat_utterances([utterance]), utterance)

    def test_gap_length(self):
        """Test 100 + 50 frames with a 10-frame gap."""
        joined = concat_utterances([np.ones((100, 4)), np.ones((50, 4))], gap_frames=10, seed=3)
        self.assertEqual(joined.shape, (160, 4))
        self.assertEqual(int(np.sum(np.all(joined == 0, axis=1))), 10)

    def test_seeded_order(self):
        """Test the order follows the seeded reference permutation."""
        utterances = [np.full((2, 3), float(i)) for i in range(6)]
        joined = concat_utterances(utterances, seed=11)
        expected = np.random.default_rng(11).permutation(6)
        np.testing.assert_array_equal(joined[::2, 0], expected.astype(np.float32))
        np.testing.assert_array_equal(concat_utterances(utterances, seed=11), joined)

    def test_rejects_mismatched_dims(self):
        """Test utterances with different feature dims."""
        with self.assertRaises(ShapeError):
            concat_utterances([np.zeros((3, 4)), np.zeros((3, 5))])
        with self.assertRaises(ConfigError):
            concat_utterances([])


class TestFeatureFiles(unittest.TestCase):
    """Test FCFT feature files."""

    def test_round_trip(self):
        """Test write then read."""
        features = np.random.default_rng(10).standard_normal((7, 3)).astype(np.float32)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'f.fcft'
            write_features(path, features)
            self.assertEqual(path.read_bytes()[:8], b"FCFT0001")
            np.testing.assert_array_equal(read_features(path), features)

    def test_bad_files(self):
        """Test bad magic and short payloads."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'f.fcft'
            path.write_bytes(b"FCWT0001" + bytes(8))
            with self.assertRaises(FormatError) as cm:
                read_features(path)
            self.assertIn("offset 0", str(cm.exception))

            write_features(path, np.ones((4, 4), dtype=np.float32))
            path.write_bytes(path.read_bytes()[:-4])
            with self.assertRaises(FormatError) as cm:
                read_features(path)
            self.assertIn("offset 16", str(cm.exception))


if __name__ == '__main__':
    unittest.main()
