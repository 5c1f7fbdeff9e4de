"""Tests for the Jacobi SVD, energy projection, CCA and the SVCCA score."""

import unittest

import numpy as np

from object_saliency.tensor_core import FeatureMap
from object_saliency.svcca import (
    FeatureMatrix, svd, retained_rank, project_topk, cca_correlations, svcca_score, svcca_similarity
)
from object_saliency.error_handling.exceptions import (
    ValidationError, ShapeMismatchError, ConvergenceError
)


def _orthogonal(rng, n):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q


class TestJacobiSVD(unittest.TestCase):
    """Decomposition accuracy and ordering."""

    def test_identity_and_diagonal(self):
        np.testing.assert_allclose(svd(np.eye(3)).singular_values, [1.0, 1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(svd(np.diag([1.0, 3.0, 2.0])).singular_values, [3.0, 2.0, 1.0],
                                   atol=1e-12)

    def test_random_tall_matrix(self):
        m = np.random.default_rng(0).normal(size=(8, 5))
        result = svd(m)
        error = np.linalg.norm(result.reconstruct() - m) / np.linalg.norm(m)
        self.assertLess(error, 1e-8)
        np.testing.assert_allclose(result.u.T @ result.u, np.eye(5), atol=1e-8)
        np.testing.assert_allclose(result.v.T @ result.v, np.eye(5), atol=1e-8)
        self.assertTrue(np.all(np.diff(result.singular_values) <= 0))

    def test_reconstruction_over_many_shapes(self):
        rng = np.random.default_rng(1)
        for trial in range(100):
            rows, cols = rng.integers(1, 12, size=2)
            m = rng.normal(size=(rows, cols))
            with self.subTest(trial=trial, shape=(rows, cols)):
                result = svd(m)
                error = np.linalg.norm(result.reconstruct() - m) / np.linalg.norm(m)
                self.assertLess(error, 1e-8)
                self.assertTrue(np.all(result.singular_values >= 0))

    def test_matches_reference_singular_values(self):
        m = np.random.default_rng(2).normal(size=(6, 9))
        np.testing.assert_allclose(svd(m).singular_values, np.linalg.svd(m, compute_uv=False),
                                   atol=1e-10)

    def test_rank_deficient_keeps_orthonormal_basis(self):
        rng = np.random.default_rng(3)
        m = np.outer(rng.normal(size=7), rng.normal(size=4))
        result = svd(m)
        self.assertAlmostEqual(float(result.singular_values[1]), 0.0, delta=1e-10)
        np.testing.assert_allclose(result.u.T @ result.u, np.eye(4), atol=1e-8)
        self.assertLess(np.linalg.norm(result.reconstruct() - m), 1e-10)

    def test_sweep_cap_reported(self):
        m = np.random.default_rng(4).normal(size=(8, 5))
        with self.assertRaises(ConvergenceError):
            svd(m, max_sweeps=1)

    def test_non_finite_rejected(self):
        with self.assertRaises(ValidationError):
            FeatureMatrix(np.array([[1.0, np.nan]]))


class TestProjection(unittest.TestCase):
    """Energy-fraction rank selection."""

    def test_energy_rule(self):
        self.assertEqual(retained_rank(np.array([10.0, 1.0, 0.1]), 0.99), 1)
        self.assertEqual(retained_rank(np.array([10.0, 1.0, 0.1]), 0.99999), 3)
        self.assertEqual(retained_rank(np.array([10.0, 1.0, 0.1]), 1.0), 3)

    def test_rank_is_monotone_in_fraction(self):
        values = np.sort(np.random.default_rng(5).random(8))[::-1]
        ranks = [retained_rank(values, f) for f in np.linspace(0.05, 1.0, 40)]
        self.assertEqual(ranks, sorted(ranks))

    def test_rank_one_matrix(self):
        rng = np.random.default_rng(6)
        m = np.outer(rng.normal(size=10), rng.normal(size=4))
        self.assertEqual(project_topk(m, 0.99).cols, 1)

    def test_full_fraction_keeps_full_rank(self):
        m = np.random.default_rng(7).normal(size=(10, 4))
        projected = project_topk(m, 1.0)
        self.assertEqual(projected.cols, 4)
        np.testing.assert_allclose(np.linalg.svd(projected.data, compute_uv=False),
                                   np.linalg.svd(m, compute_uv=False), atol=1e-10)

    def test_invalid_inputs(self):
        with self.assertRaises(ValidationError):
            project_topk(np.zeros((3, 2)))
        for fraction in (0.0, 1.5):
            with self.subTest(fraction=fraction):
                with self.assertRaises(ValidationError):
                    project_topk(np.eye(3), fraction)


class TestCCA(unittest.TestCase):
    """Canonical correlations."""

    def setUp(self):
        self.rng = np.random.default_rng(10)
        self.x = self.rng.normal(size=(50, 3))

    def test_identical_inputs(self):
        np.testing.assert_allclose(cca_correlations(self.x, self.x), 1.0, atol=1e-6)

    def test_invertible_transform(self):
        r = self.rng.normal(size=(3, 3)) + 3.0 * np.eye(3)
        np.testing.assert_allclose(cca_correlations(self.x, self.x @ r), 1.0, atol=1e-6)

    def test_matches_eigen_oracle(self):
        y = self.rng.normal(size=(50, 3))
        xc = self.x - self.x.mean(axis=0)
        yc = y - y.mean(axis=0)
        sxx, syy, sxy = xc.T @ xc, yc.T @ yc, xc.T @ yc
        m = np.linalg.solve(sxx, sxy) @ np.linalg.solve(syy, sxy.T)
        expected = np.sort(np.sqrt(np.clip(np.linalg.eigvals(m).real, 0.0, None)))[::-1]
        correlations = cca_correlations(self.x, y)
        np.testing.assert_allclose(correlations, expected, atol=1e-6)
        self.assertLess(correlations.mean(), 0.5)

    def test_row_checks(self):
        with self.assertRaises(ShapeMismatchError):
            cca_correlations(self.x, self.x[:10])
        with self.assertRaises(ValidationError):
            cca_correlations(self.x[:1], self.x[:1])


class TestSVCCAScore(unittest.TestCase):
    """Score symmetry and invariances."""

    def setUp(self):
        self.rng = np.random.default_rng(20)
        self.x = self.rng.normal(size=(40, 4))
        self.y = self.rng.normal(size=(40, 4))

    def test_self_score_is_one(self):
        self.assertAlmostEqual(svcca_score(self.x, self.x), 1.0, delta=1e-6)

    def test_orthogonal_column_spaces(self):
        z = self.rng.normal(size=(40, 6))
        q, _ = np.linalg.qr(z - z.mean(axis=0))
        self.assertAlmostEqual(svcca_score(q[:, :3], q[:, 3:]), 0.0, delta=1e-6)

    def test_rotation_invariance(self):
        rotated = self.x @ _orthogonal(self.rng, 4)
        self.assertAlmostEqual(svcca_score(rotated, self.y), svcca_score(self.x, self.y), delta=1e-6)

    def test_symmetry_and_range(self):
        forward = svcca_score(self.x, self.y)
        self.assertAlmostEqual(forward, svcca_score(self.y, self.x), delta=1e-9)
        self.assertGreaterEqual(forward, 0.0)
        self.assertLessEqual(forward, 1.0)

    def test_similarity_callable_on_feature_maps(self):
        f_i = FeatureMap(self.x.reshape(5, 8, 4))
        f_j = FeatureMap(self.y.reshape(5, 8, 4))
        similarity = svcca_similarity(0.99)
        self.assertEqual(similarity.__name__, "svcca_similarity")
        self.assertAlmostEqual(similarity(f_i, f_j), svcca_score(self.x, self.y), delta=1e-12)
        self.assertAlmostEqual(similarity(f_i, f_i), 1.0, delta=1e-6)


if __name__ == "__main__":
    unittest.main()
