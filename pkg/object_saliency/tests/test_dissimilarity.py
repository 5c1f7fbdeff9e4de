"""Tests for appearance/size dissimilarity channels and feature fusion."""

import unittest

import numpy as np

from object_saliency.tensor_core import FeatureMap, Detection
from object_saliency.dissimilarity import (
    ObjectSet, ChannelMap, AblationFlags, DissimilarityConfig, DissimilarityExtractor,
    pairwise_similarity, dissimilarity_scores, min_max_normalize, rasterize_scores,
    normalized_size, size_channel, object_block, build_fused_features, APPEARANCE, SIZE
)
from object_saliency.error_handling.exceptions import (
    ValidationError, ShapeMismatchError, ConfigurationError, DetectionError
)


def _vector_set(*vectors):
    """Object set of 1 x len(v) x 1 feature maps, one dummy box each."""
    return ObjectSet(tuple((Detection(i, 0, i + 1, 1), FeatureMap(np.array(v, dtype=float)[None, :, None]))
                           for i, v in enumerate(vectors)))


def _naive_scores(features, eps=1e-8):
    n = len(features)
    raw = []
    for i in range(n):
        total = 0.0
        for j in range(n):
            if i == j:
                continue
            a, b = features[i], features[j]
            for k in range(a.shape[2]):
                x, y = a[:, :, k].ravel(), b[:, :, k].ravel()
                total += float(x @ y) / max(float(np.linalg.norm(x) * np.linalg.norm(y)), eps)
        raw.append(1.0 / max(total, eps))
    lo, hi = min(raw), max(raw)
    if hi - lo <= 1e-9 * abs(hi):
        return [1.0] * n
    return [(r - lo) / (hi - lo) for r in raw]


class TestPairwiseSimilarity(unittest.TestCase):
    """Per-channel cosine summed over channels."""

    def test_identical_maps_give_channel_count(self):
        f = np.random.default_rng(0).random((3, 3, 4)) + 0.1
        self.assertAlmostEqual(pairwise_similarity(f, f), 4.0, places=12)

    def test_orthogonal_and_parallel(self):
        self.assertEqual(pairwise_similarity(np.array([[[1.0], [0.0]]]), np.array([[[0.0], [1.0]]])), 0.0)
        self.assertAlmostEqual(pairwise_similarity(np.array([[[1.0], [2.0]]]),
                                                   np.array([[[2.0], [4.0]]])), 1.0, places=12)

    def test_zero_channel_contributes_nothing(self):
        a = np.zeros((2, 2, 2))
        a[:, :, 0] = 1.0
        self.assertAlmostEqual(pairwise_similarity(a, a), 1.0, places=12)

    def test_dimension_mismatch_rejected(self):
        with self.assertRaises(ValidationError):
            pairwise_similarity(np.ones((2, 2, 1)), np.ones((2, 3, 1)))


class TestDissimilarityScores(unittest.TestCase):
    """Reciprocal summed similarity, min-max normalized per set."""

    def test_empty_and_single(self):
        self.assertEqual(dissimilarity_scores(ObjectSet()), [])
        self.assertEqual(dissimilarity_scores(_vector_set([1.0, 2.0])), [1.0])

    def test_unique_object_beats_twins(self):
        scores = dissimilarity_scores(_vector_set([1.0, 0.0], [2.0, 0.0], [0.0, 1.0]))
        self.assertEqual(scores, [0.0, 0.0, 1.0])

    def test_two_identical_objects(self):
        self.assertEqual(dissimilarity_scores(_vector_set([1.0, 3.0], [1.0, 3.0])), [1.0, 1.0])

    def test_all_equal_within_tolerance(self):
        np.testing.assert_array_equal(min_max_normalize(np.array([2.0, 2.0 + 1e-12, 2.0])), 1.0)

    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(11)
        for trial in range(50):
            n = int(rng.integers(2, 6))
            features = [rng.random((3, 3, 2)) for _ in range(n)]
            objects = ObjectSet(tuple((Detection(0, 0, 1, 1), FeatureMap(f)) for f in features))
            with self.subTest(trial=trial):
                np.testing.assert_allclose(dissimilarity_scores(objects), _naive_scores(features),
                                           atol=1e-12, rtol=0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        vectors = [rng.random(4) for _ in range(5)]
        scores = dissimilarity_scores(_vector_set(*vectors))
        order = [3, 0, 4, 1, 2]
        permuted = dissimilarity_scores(_vector_set(*[vectors[i] for i in order]))
        np.testing.assert_allclose(permuted, [scores[i] for i in order], atol=1e-12)

    def test_per_object_scale_invariance(self):
        rng = np.random.default_rng(6)
        vectors = [rng.random(4) for _ in range(4)]
        scales = [0.5, 3.0, 7.0, 0.01]
        scaled = dissimilarity_scores(_vector_set(*[v * s for v, s in zip(vectors, scales)]))
        np.testing.assert_allclose(scaled, dissimilarity_scores(_vector_set(*vectors)), atol=1e-9)

    def test_range_and_extremes(self):
        rng = np.random.default_rng(7)
        scores = dissimilarity_scores(_vector_set(*[rng.random(3) for _ in range(5)]))
        self.assertTrue(all(0.0 <= s <= 1.0 for s in scores))
        self.assertEqual(min(scores), 0.0)
        self.assertEqual(max(scores), 1.0)

    def test_custom_similarity_backend(self):
        calls = []

        def constant(a, b):
            calls.append((a, b))
            return 0.5

        scores = dissimilarity_scores(_vector_set([1.0], [2.0], [3.0]), similarity=constant)
        self.assertEqual(scores, [1.0, 1.0, 1.0])
        self.assertEqual(len(calls), 3)


class TestRasterization(unittest.TestCase):
    """Replicating per-object values inside boxes."""

    def test_single_box(self):
        channel = rasterize_scores([Detection(0, 0, 5, 5)], [0.7], 10, 10, 10, 10)
        self.assertEqual(channel.kind, APPEARANCE)
        np.testing.assert_allclose(channel.data[:5, :5], 0.7)
        self.assertEqual(float(channel.data[5:, :].sum() + channel.data[:, 5:].sum()), 0.0)

    def test_overlap_average(self):
        boxes = [Detection(0, 0, 6, 4), Detection(4, 0, 10, 4)]
        channel = rasterize_scores(boxes, [0.2, 0.8], 4, 10, 10, 4)
        self.assertEqual(channel.data[0, 5], 0.5)
        self.assertEqual(channel.data[0, 0], 0.2)
        self.assertEqual(channel.data[0, 9], 0.8)

    def test_empty_list_gives_zero_map(self):
        np.testing.assert_array_equal(rasterize_scores([], [], 3, 4, 8, 6).data, np.zeros((3, 4)))

    def test_length_mismatch_rejected(self):
        with self.assertRaises(ValidationError):
            rasterize_scores([Detection(0, 0, 1, 1)], [0.1, 0.2], 2, 2, 2, 2)

    def test_normalized_size(self):
        self.assertEqual(normalized_size(Detection(0, 0, 100, 100), 100, 100), 1.0)
        self.assertEqual(normalized_size(Detection(0, 0, 50, 50), 100, 100), 0.25)
        self.assertEqual(normalized_size(Detection(0, 0, 300, 200), 640, 480), 0.1953125)

    def test_size_channel(self):
        half = size_channel([Detection(0, 0, 5, 10)], 10, 10, 10, 10)
        self.assertEqual(half.kind, SIZE)
        np.testing.assert_allclose(half.data[:, :5], 0.5)
        np.testing.assert_array_equal(half.data[:, 5:], 0.0)

        nested = size_channel([Detection(0, 0, 10, 10), Detection(0, 0, 5, 5)], 10, 10, 10, 10)
        self.assertAlmostEqual(nested.data[0, 0], 0.625, places=15)
        self.assertEqual(nested.data[9, 9], 1.0)

        np.testing.assert_array_equal(size_channel([], 4, 4, 8, 8).data, 0.0)

    def test_channel_map_range(self):
        with self.assertRaises(ValidationError):
            ChannelMap(np.array([[1.2]]), APPEARANCE)


class TestFusion(unittest.TestCase):
    """Concatenation of global features with O, S and A blocks."""

    def setUp(self):
        rng = np.random.default_rng(3)
        self.global_map = FeatureMap(rng.random((6, 8, 8)))
        self.detections = [Detection(0, 0, 8, 6), Detection(4, 2, 16, 12)]
        self.objects = ObjectSet.from_detections(self.global_map, self.detections, 16, 12)
        self.appearance = rasterize_scores(self.detections, [1.0, 0.0], 6, 8, 16, 12)
        self.size = size_channel(self.detections, 6, 8, 16, 12)

    def test_no_flags_is_baseline(self):
        fused = build_fused_features(self.global_map, self.appearance, self.size, AblationFlags())
        self.assertIs(fused, self.global_map)

    def test_size_and_appearance_order(self):
        fused = build_fused_features(self.global_map, self.appearance, self.size,
                                     AblationFlags.from_label("S+A"))
        self.assertEqual(fused.channels, 10)
        np.testing.assert_array_equal(fused.channel(8), self.size.data)
        np.testing.assert_array_equal(fused.channel(9), self.appearance.data)

    def test_all_blocks(self):
        block = object_block(self.objects, 6, 8, 16, 12)
        fused = build_fused_features(self.global_map, self.appearance, self.size,
                                     AblationFlags(True, True, True), block)
        self.assertEqual(fused.channels, 8 + 8 + 1 + 1)

    def test_object_block_zero_outside_boxes(self):
        block = object_block(self.objects, 6, 8, 16, 12)
        np.testing.assert_array_equal(block.data[3:6, 0:2, :], 0.0)
        np.testing.assert_allclose(block.data[0, 0], self.global_map.data[0, 0])

    def test_object_flag_needs_block(self):
        with self.assertRaises(ValidationError):
            build_fused_features(self.global_map, self.appearance, self.size, AblationFlags(objects=True))

    def test_spatial_mismatch_rejected(self):
        with self.assertRaises(ShapeMismatchError):
            build_fused_features(self.global_map, ChannelMap.zeros(5, 8, APPEARANCE), self.size,
                                 AblationFlags(appearance=True))

    def test_common_slice_size_is_maximum(self):
        shapes = {fmap.shape for fmap in self.objects.features}
        self.assertEqual(shapes, {(5, 6, 8)})

    def test_flag_labels(self):
        labels = [flags.label for flags in AblationFlags.all_subsets()]
        self.assertEqual(labels, ["none", "O", "S", "A", "O+S", "O+A", "S+A", "O+S+A"])
        self.assertEqual(AblationFlags.from_label("a+s"), AblationFlags(size=True, appearance=True))
        with self.assertRaises(ValidationError):
            AblationFlags.from_label("S+X")


class TestDissimilarityExtractor(unittest.TestCase):
    """End-to-end channel extraction for one scene."""

    def setUp(self):
        data = np.zeros((8, 8, 2))
        data[0:2, 0:2, 0] = 1.0
        data[0:2, 4:6, 0] = 1.0
        data[5:8, 5:8, 1] = 1.0
        self.global_map = FeatureMap(data)
        self.detections = [Detection(0, 0, 4, 4), Detection(8, 0, 12, 4), Detection(10, 10, 16, 16)]

    def test_unique_object_scores_highest(self):
        channels = DissimilarityExtractor().extract(self.global_map, self.detections, 16, 16)
        self.assertEqual(channels.scores, [0.0, 0.0, 1.0])
        self.assertEqual(channels.appearance.data[6, 6], 1.0)
        self.assertEqual(channels.appearance.data[0, 0], 0.0)
        self.assertEqual(channels.size.data[4, 0], 0.0)
        self.assertAlmostEqual(channels.size.data[6, 6], 36.0 / 256.0, places=15)

    def test_no_detections_zero_channels(self):
        channels = DissimilarityExtractor().extract(self.global_map, [], 16, 16)
        self.assertEqual(channels.scores, [])
        np.testing.assert_array_equal(channels.appearance.data, 0.0)
        np.testing.assert_array_equal(channels.size.data, 0.0)
        np.testing.assert_array_equal(channels.object_block.data, np.zeros((8, 8, 2)))

    def test_detector_frame_scaling(self):
        detector = FeatureMap(np.repeat(np.repeat(self.global_map.data, 2, axis=0), 2, axis=1))
        plain = DissimilarityExtractor().extract(self.global_map, self.detections, 16, 16)
        scaled = DissimilarityExtractor().extract(self.global_map, self.detections, 16, 16,
                                                  object_features=detector, detector_w=32, detector_h=32)
        self.assertEqual(scaled.scores, plain.scores)
        self.assertEqual(scaled.object_set.detections, self.detections)

    def test_box_outside_image_rejected(self):
        with self.assertRaises(DetectionError):
            DissimilarityExtractor().extract(self.global_map, [Detection(0, 0, 20, 4)], 16, 16)

    def test_unknown_backend(self):
        with self.assertRaises(ConfigurationError):
            DissimilarityExtractor(DissimilarityConfig(distance="euclid"))


if __name__ == "__main__":
    unittest.main()
