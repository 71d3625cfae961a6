"""
Tests for the dense tensor primitives and MAC instrumentation.
"""
import unittest
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from src.tensor import (
    MacCounter, matmul, linear, softmax, layer_norm, conv2d, depthwise_conv,
    silu, glu, add, relu, transpose, reshape, conv_output_length,
)
from src.utils.errors import ShapeError


def conv2d_oracle(x, w, b, stride, pad):
    c_in, h, wd = x.shape
    c_out, _, kh, kw = w.shape
    xp = np.pad(x.astype(np.float64), ((0, 0), (pad, pad), (pad, pad)))
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((c_out, oh, ow))
    for co in range(c_out):
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0 if b is None else float(b[co])
                for ci in range(c_in):
                    for ky in range(kh):
                        for kx in range(kw):
                            acc += w[co, ci, ky, kx] * xp[ci, oy * stride + ky, ox * stride + kx]
                out[co, oy, ox] = acc
    return out


class TestMacCounter(unittest.TestCase):
    """Test the instrumentation counter."""

    def test_total_is_sum_of_tags(self):
        """Test that total equals the per-tag sum."""
        counter = MacCounter()
        counter.add("a", 10)
        counter.add("b", 5)
        counter.add("a", 1)
        self.assertEqual(counter.total, 16)
        self.assertEqual(counter.per_tag, {"a": 11, "b": 5})
        self.assertEqual(counter.total, sum(counter.per_tag.values()))

    def test_reset_and_negative(self):
        """Test reset and rejection of negative increments."""
        counter = MacCounter()
        counter.add("a", 3)
        counter.reset()
        self.assertEqual(counter.total, 0)
        self.assertEqual(counter.per_tag, {})
        with self.assertRaises(ValueError):
            counter.add("a", -1)

    def test_merge(self):
        """Test folding one counter into another."""
        first, second = MacCounter(), MacCounter()
        first.add("a", 2)
        second.add("a", 3)
        second.add("b", 4)
        first.merge(second)
        self.assertEqual(first.total, 9)
        self.assertEqual(first.per_tag, {"a": 5, "b": 4})


class TestMatmul(unittest.TestCase):
    """Test matmul and linear."""

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_identity(self):
        """Test the identity product."""
        out = matmul(np.eye(2, dtype=np.float32), np.array([[3, 4], [5, 6]], dtype=np.float32))
        np.testing.assert_array_equal(out, [[3, 4], [5, 6]])

    def test_scalar_counts_one(self):
        """Test a 1x1 by 1x1 product counts one MAC."""
        counter = MacCounter()
        out = matmul(np.array([[2.0]], dtype=np.float32), np.array([[3.0]], dtype=np.float32), counter)
        self.assertEqual(out[0, 0], 6.0)
        self.assertEqual(counter.total, 1)

    def test_triple_loop_oracle(self):
        """Test a random 4x5 by 5x3 product against a triple loop."""
        a = self.rng.standard_normal((4, 5)).astype(np.float32)
        b = self.rng.standard_normal((5, 3)).astype(np.float32)
        counter = MacCounter()
        out = matmul(a, b, counter)
        expected = np.zeros((4, 3))
        for i in range(4):
            for j in range(3):
                for k in range(5):
                    expected[i, j] += float(a[i, k]) * float(b[k, j])
        self.assertLess(np.max(np.abs(out - expected)), 1e-5)
        self.assertEqual(counter.total, 60)

    def test_shape_mismatch(self):
        """Test that mismatched inner extents are rejected."""
        with self.assertRaises(ShapeError):
            matmul(np.zeros((2, 3), dtype=np.float32), np.zeros((4, 2), dtype=np.float32))

    def test_batched_count(self):
        """Test the count of a batched product."""
        counter = MacCounter()
        out = matmul(np.ones((3, 2, 4), dtype=np.float32), np.ones((3, 4, 5), dtype=np.float32), counter)
        self.assertEqual(out.shape, (3, 2, 5))
        self.assertEqual(counter.total, 3 * 2 * 4 * 5)

    def test_linear_adds_bias(self):
        """Test linear adds the bias after the product."""
        x = np.ones((2, 3), dtype=np.float32)
        w = np.ones((3, 2), dtype=np.float32)
        out = linear(x, w, np.array([1.0, -1.0], dtype=np.float32))
        np.testing.assert_array_equal(out, [[4, 2], [4, 2]])


class TestSoftmaxAndNorm(unittest.TestCase):
    """Test softmax and layer_norm."""

    def setUp(self):
        self.rng = np.random.default_rng(1)

    def test_softmax_uniform(self):
        """Test softmax of equal inputs."""
        np.testing.assert_allclose(softmax(np.zeros(3, dtype=np.float32)), [1 / 3] * 3, atol=1e-6)

    def test_softmax_stable(self):
        """Test softmax does not overflow on large inputs."""
        out = softmax(np.array([1000.0, 0.0], dtype=np.float32))
        np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-6)

    def test_softmax_oracle(self):
        """Test softmax against a 64-bit oracle."""
        x = self.rng.standard_normal(7)
        expected = np.exp(x) / np.exp(x).sum()
        np.testing.assert_allclose(softmax(x.astype(np.float32)), expected, atol=1e-6)

    def test_softmax_rows_sum_to_one(self):
        """Test rows sum to one for inputs in [-100, 100]."""
        x = self.rng.uniform(-100, 100, size=(50, 33)).astype(np.float32)
        sums = softmax(x).astype(np.float64).sum(axis=-1)
        self.assertLess(np.max(np.abs(sums - 1.0)), 1e-6)

    def test_layer_norm_constant(self):
        """Test a constant slice normalizes to zero."""
        out = layer_norm(np.array([5.0, 5.0, 5.0], dtype=np.float32), np.ones(3), np.zeros(3))
        np.testing.assert_allclose(out, [0, 0, 0], atol=1e-6)

    def test_layer_norm_affine_collapse(self):
        """Test gamma zero returns beta."""
        beta = np.array([0.5, -1.0, 2.0])
        out = layer_norm(self.rng.standard_normal((4, 3)).astype(np.float32), np.zeros(3), beta)
        np.testing.assert_allclose(out, np.broadcast_to(beta, (4, 3)), atol=1e-6)

    def test_layer_norm_oracle(self):
        """Test layer_norm against a 64-bit mean/variance oracle."""
        x = self.rng.standard_normal((3, 16))
        gamma, beta = self.rng.standard_normal(16), self.rng.standard_normal(16)
        expected = (x - x.mean(-1, keepdims=True)) / np.sqrt(x.var(-1, keepdims=True) + 1e-5) * gamma + beta
        out = layer_norm(x.astype(np.float32), gamma.astype(np.float32), beta.astype(np.float32))
        self.assertLess(np.max(np.abs(out - expected)), 1e-5)


class TestConvolutions(unittest.TestCase):
    """Test conv2d and depthwise_conv."""

    def setUp(self):
        self.rng = np.random.default_rng(2)

    def test_identity_kernel(self):
        """Test a 1x1 kernel of value one is the identity."""
        x = self.rng.standard_normal((1, 4, 4)).astype(np.float32)
        out = conv2d(x, np.ones((1, 1, 1, 1), dtype=np.float32))
        np.testing.assert_array_equal(out, x)

    def test_summation_kernel(self):
        """Test an all-ones 3x3 kernel over all-ones input sums to nine."""
        out = conv2d(np.ones((1, 3, 3), dtype=np.float32), np.ones((1, 1, 3, 3), dtype=np.float32))
        np.testing.assert_array_equal(out, [[[9.0]]])

    def test_conv2d_oracle(self):
        """Test a strided padded conv2d against a direct-loop oracle."""
        x = self.rng.standard_normal((2, 5, 5)).astype(np.float32)
        w = self.rng.standard_normal((3, 2, 3, 3)).astype(np.float32)
        b = self.rng.standard_normal(3).astype(np.float32)
        counter = MacCounter()
        out = conv2d(x, w, b, stride=2, padding=1, counter=counter)
        expected = conv2d_oracle(x, w, b, 2, 1)
        self.assertEqual(out.shape, expected.shape)
        self.assertLess(np.max(np.abs(out - expected)), 1e-5)
        self.assertEqual(counter.total, 3 * 2 * 9 * 3 * 3)

    def test_conv2d_too_small(self):
        """Test that an output extent below one is rejected."""
        with self.assertRaises(ShapeError):
            conv2d(np.ones((1, 2, 2), dtype=np.float32), np.ones((1, 1, 3, 3), dtype=np.float32))

    def test_depthwise_identity(self):
        """Test a unit kernel per channel is the identity."""
        x = self.rng.standard_normal((3, 8)).astype(np.float32)
        out = depthwise_conv(x, np.ones((3, 1), dtype=np.float32))
        np.testing.assert_array_equal(out, x)

    def test_depthwise_channel_isolation(self):
        """Test a zero channel stays zero regardless of the other channel."""
        x = np.stack([self.rng.standard_normal(10), np.zeros(10)]).astype(np.float32)
        out = depthwise_conv(x, self.rng.standard_normal((2, 3)).astype(np.float32), padding=1)
        np.testing.assert_array_equal(out[1], np.zeros(10))

    def test_depthwise_oracle(self):
        """Test depthwise_conv against a per-channel loop oracle."""
        x = self.rng.standard_normal((3, 8)).astype(np.float32)
        w = self.rng.standard_normal((3, 3)).astype(np.float32)
        counter = MacCounter()
        out = depthwise_conv(x, w, stride=1, padding=1, counter=counter)
        xp = np.pad(x.astype(np.float64), ((0, 0), (1, 1)))
        expected = np.zeros((3, 8))
        for c in range(3):
            for t in range(8):
                expected[c, t] = sum(w[c, k] * xp[c, t + k] for k in range(3))
        self.assertLess(np.max(np.abs(out - expected)), 1e-5)
        self.assertEqual(counter.total, 3 * 3 * 8)


class TestElementwise(unittest.TestCase):
    """Test activation and shape primitives."""

    def test_silu_zero(self):
        """Test silu(0) is zero."""
        self.assertEqual(float(silu(np.zeros(1, dtype=np.float32))[0]), 0.0)

    def test_glu_zero_gate(self):
        """Test glu with a zero gate half halves the value half."""
        out = glu(np.array([3.0, 0.0], dtype=np.float32))
        np.testing.assert_allclose(out, [1.5], atol=1e-7)

    def test_glu_odd_rejected(self):
        """Test glu on an odd extent is rejected."""
        with self.assertRaises(ShapeError):
            glu(np.zeros(3, dtype=np.float32))

    def test_add_negation(self):
        """Test x + (-x) is zero."""
        x = np.random.default_rng(3).standard_normal((4, 4)).astype(np.float32)
        np.testing.assert_array_equal(add(x, -x), np.zeros((4, 4)))

    def test_relu_transpose_reshape(self):
        """Test relu, transpose and reshape."""
        x = np.array([[-1.0, 2.0], [3.0, -4.0]], dtype=np.float32)
        np.testing.assert_array_equal(relu(x), [[0, 2], [3, 0]])
        np.testing.assert_array_equal(transpose(x), x.T)
        self.assertEqual(reshape(x, (4,)).shape, (4,))
        with self.assertRaises(ShapeError):
            reshape(x, (3,))


class TestInstrumentation(unittest.TestCase):
    """Test instrumented counts equal the closed forms over random shapes."""

    def test_randomized_counts(self):
        """Test 100 randomized shapes per primitive."""
        rng = np.random.default_rng(4)
        for _ in range(100):
            m, k, n = rng.integers(1, 9, size=3)
            counter = MacCounter()
            matmul(np.ones((m, k), dtype=np.float32), np.ones((k, n), dtype=np.float32), counter)
            self.assertEqual(counter.total, m * k * n)

            c_in, c_out = rng.integers(1, 4, size=2)
            h, w = rng.integers(3, 10, size=2)
            kh, kw = rng.choice([1, 3], size=2)
            stride, pad = int(rng.integers(1, 3)), int(rng.integers(0, 2))
            counter = MacCounter()
            out = conv2d(np.ones((c_in, h, w), dtype=np.float32), np.ones((c_out, c_in, kh, kw), dtype=np.float32),
                         stride=stride, padding=pad, counter=counter)
            oh = conv_output_length(h, kh, stride, pad)
            ow = conv_output_length(w, kw, stride, pad)
            self.assertEqual(out.shape, (c_out, oh, ow))
            self.assertEqual(counter.total, c_out * c_in * kh * kw * oh * ow)

            counter = MacCounter()
            out = depthwise_conv(np.ones((c_in, h, w), dtype=np.float32), np.ones((c_in, kh, kw), dtype=np.float32),
                                 stride=stride, padding=pad, counter=counter)
            self.assertEqual(counter.total, c_in * kh * kw * out.shape[1] * out.shape[2])

    def test_determinism(self):
        """Test repeated calls are bit-identical."""
        rng = np.random.default_rng(5)
        x = rng.standard_normal((2, 6, 6)).astype(np.float32)
        w = rng.standard_normal((2, 2, 3, 3)).astype(np.float32)
        first = conv2d(x, w, stride=2, padding=1)
        second = conv2d(x, w, stride=2, padding=1)
        self.assertTrue(np.array_equal(first, second))


if __name__ == '__main__':
    unittest.main()
