"""Tests for the readout decoder, its losses, gradients and training loop."""

import math
import unittest

import numpy as np

from object_saliency.tensor_core import FeatureMap, SaliencyMap, FixationMap, normalize_to_distribution
from object_saliency.readout import (
    DenseLayer, CenterBias, ReadoutModel, TrainConfig, TrainingSample,
    kld_loss, cc_prime, nss_prime, eml_loss, loss_with_grad,
    initialize_model, forward, backward,
    AdamOptimizer, train, fit_center_bias, average_ground_truth,
    check_gradients, run_gradient_suite,
)
from object_saliency.error_handling.exceptions import (
    ValidationError, ShapeMismatchError, DegenerateMapError
)


def _random_distribution(rng, shape):
    return normalize_to_distribution(rng.random(shape) + 0.01).data


class TestLosses(unittest.TestCase):
    """Closed-form and regression values of KLD, CC', NSS' and EML."""

    def test_kld_matched_distributions(self):
        uniform = np.full((2, 2), 0.25)
        self.assertLess(abs(kld_loss(uniform, uniform)), 1e-6)
        p = _random_distribution(np.random.default_rng(0), (8, 8))
        # The eps inside the log drifts the value down by about (n - 1) * eps.
        drift = kld_loss(p, p, eps=1e-6)
        self.assertLessEqual(drift, 0.0)
        self.assertGreater(drift, -p.size * 1e-6)
        self.assertLess(abs(kld_loss(p, p, eps=1e-9)), 1e-6)

    def test_kld_delta_against_uniform(self):
        q = np.zeros((2, 2))
        q[1, 0] = 1.0
        self.assertAlmostEqual(kld_loss(np.full((2, 2), 0.25), q), math.log(4.0), delta=1e-5)

    def test_kld_uniform_against_delta(self):
        eps = 1e-7
        p = np.zeros((2, 2))
        p[0, 0] = 1.0
        q = np.full((2, 2), 0.25)
        expected = np.sum(q * np.log(eps + q / (eps + p)))
        value = kld_loss(p, q, eps)
        self.assertTrue(math.isfinite(value))
        self.assertAlmostEqual(value, expected, delta=1e-12)
        self.assertGreater(value, 10.0)

    def test_kld_shape_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            kld_loss(np.full((2, 2), 0.25), np.full((1, 4), 0.25))

    def test_cc_prime_extremes(self):
        q = _random_distribution(np.random.default_rng(1), (6, 6))
        self.assertAlmostEqual(cc_prime(q, q), 0.0, delta=1e-9)
        flipped = (q.max() + q.min()) - q
        self.assertAlmostEqual(cc_prime(flipped, q), 2.0, delta=1e-9)

    def test_cc_prime_independent_maps_near_one(self):
        rng = np.random.default_rng(2)
        values = [cc_prime(rng.random((32, 32)), rng.random((32, 32))) for _ in range(100)]
        self.assertLess(abs(np.mean(values) - 1.0), 0.15)
        self.assertTrue(all(0.0 <= v <= 2.0 for v in values))

    def test_cc_prime_constant_map_rejected(self):
        with self.assertRaises(DegenerateMapError):
            cc_prime(np.full((3, 3), 1.0 / 9), _random_distribution(np.random.default_rng(3), (3, 3)))

    def test_nss_prime_identical_standardization(self):
        f = np.zeros((4, 5))
        f[1, 2] = f[3, 0] = 1.0
        self.assertAlmostEqual(nss_prime(f, f), 0.0, delta=1e-12)

    def test_nss_prime_hand_evaluated(self):
        p = np.array([[0.7, 0.1], [0.1, 0.1]])
        f = np.array([[1.0, 0.0], [0.0, 0.0]])
        # Both standardize to sqrt(3) at the fixation.
        self.assertAlmostEqual(nss_prime(p, f), 0.0, delta=1e-12)
        p = np.array([[0.4, 0.3], [0.2, 0.1]])
        pc = p - p.mean()
        p_std = pc / np.sqrt(np.mean(pc ** 2))
        self.assertAlmostEqual(nss_prime(p, f), math.sqrt(3.0) - p_std[0, 0], delta=1e-12)

    def test_nss_prime_degenerate_inputs(self):
        f = np.array([[1.0, 0.0], [0.0, 0.0]])
        with self.assertRaises(DegenerateMapError):
            nss_prime(np.full((2, 2), 0.25), f)
        with self.assertRaises(DegenerateMapError):
            nss_prime(np.array([[0.4, 0.3], [0.2, 0.1]]), np.zeros((2, 2)))

    def test_eml_is_sum_of_components(self):
        rng = np.random.default_rng(4)
        p = _random_distribution(rng, (5, 5))
        q = _random_distribution(rng, (5, 5))
        f = (rng.random((5, 5)) > 0.7).astype(float)
        f[0, 0] = 1.0
        total = nss_prime(p, f) + cc_prime(p, q) + kld_loss(p, q)
        self.assertAlmostEqual(eml_loss(p, q, f), total, delta=1e-12)
        value, _ = loss_with_grad("eml", p, q, f)
        self.assertAlmostEqual(value, total, delta=1e-12)

    def test_eml_replication_invariance(self):
        rng = np.random.default_rng(5)
        p = _random_distribution(rng, (4, 4))
        q = _random_distribution(rng, (4, 4))
        f = np.zeros((4, 4))
        f[1, 1] = f[2, 3] = 1.0
        block = np.ones((2, 2))
        p2, q2, f2 = np.kron(p, block) / 4.0, np.kron(q, block) / 4.0, np.kron(f, block)
        self.assertAlmostEqual(cc_prime(p2, q2), cc_prime(p, q), delta=1e-9)
        self.assertAlmostEqual(nss_prime(p2, f2), nss_prime(p, f), delta=1e-9)
        self.assertAlmostEqual(kld_loss(p2, q2, eps=1e-14), kld_loss(p, q, eps=1e-14), delta=1e-9)

    def test_unknown_loss_rejected(self):
        p = np.full((2, 2), 0.25)
        with self.assertRaises(ValidationError):
            loss_with_grad("mse", p, p, np.eye(2))


class TestForward(unittest.TestCase):
    """Layer stack, prior, smoothing and softmax."""

    def setUp(self):
        self.rng = np.random.default_rng(10)
        self.fused = FeatureMap(self.rng.normal(size=(7, 9, 3)))

    def test_identity_layer_passes_channel_through(self):
        model = ReadoutModel((DenseLayer(np.eye(1), np.zeros(1)),))
        values = self.rng.normal(size=(4, 5, 1))
        logits, _ = forward(model, values)
        np.testing.assert_array_equal(logits, values[:, :, 0])

    def test_zero_parameters_give_uniform_prediction(self):
        model = initialize_model(3, (4, 1))
        model = model.with_parameters(np.zeros(model.parameter_count))
        _, prediction = forward(model, self.fused)
        np.testing.assert_allclose(prediction.data, 1.0 / 63, atol=1e-15)

    def test_final_bias_shift_invariance(self):
        model = initialize_model(3, (4, 2, 1), seed=3)
        vector = model.to_vector()
        vector[-1] += 7.5
        _, base = forward(model, self.fused)
        _, shifted = forward(model.with_parameters(vector), self.fused)
        np.testing.assert_allclose(shifted.data, base.data, atol=1e-12)

    def test_prediction_is_valid_distribution(self):
        prior = CenterBias(mu_x=4.0, mu_y=3.0, sigma_x=2.0, sigma_y=1.5, weight=0.8)
        for model in (initialize_model(3, seed=1),
                      initialize_model(3, seed=2, center_bias=prior, smooth_sigma=1.2)):
            with self.subTest(widths=model.widths, smooth=model.smooth_sigma):
                _, prediction = forward(model, self.fused)
                self.assertIsInstance(prediction, SaliencyMap)
                self.assertGreaterEqual(prediction.data.min(), 0.0)
                self.assertAlmostEqual(prediction.data.sum(), 1.0, delta=1e-9)

    def test_zero_weight_prior_and_no_smoothing_is_pure_readout(self):
        plain = initialize_model(3, seed=4)
        muted = plain.with_post_processing(CenterBias(3.0, 3.0, 1.0, 1.0, weight=0.0), 0.0)
        np.testing.assert_array_equal(forward(muted, self.fused)[1].data,
                                      forward(plain, self.fused)[1].data)

    def test_center_bias_raises_mass_near_center(self):
        model = initialize_model(3, (1,), seed=5)
        model = model.with_parameters(np.zeros(model.parameter_count))
        biased = model.with_post_processing(CenterBias(4.0, 3.0, 1.0, 1.0, weight=1.0))
        _, prediction = forward(biased, self.fused)
        self.assertEqual(np.unravel_index(prediction.data.argmax(), prediction.shape), (3, 4))

    def test_channel_mismatch_rejected(self):
        with self.assertRaises(ShapeMismatchError):
            forward(initialize_model(2), self.fused)

    def test_model_invariants(self):
        with self.assertRaises(ValidationError):
            initialize_model(3, (4, 2))
        with self.assertRaises(ValidationError):
            initialize_model(3, smooth_sigma=-1.0)
        with self.assertRaises(ShapeMismatchError):
            ReadoutModel((DenseLayer(np.ones((4, 3)), np.zeros(4)),
                          DenseLayer(np.ones((1, 5)), np.zeros(1))))
        with self.assertRaises(ValidationError):
            CenterBias(0.0, 0.0, 0.0, 1.0)

    def test_parameter_vector_round_trip(self):
        model = initialize_model(3, seed=6)
        self.assertEqual(model.parameter_count, 3 * 16 + 16 + 16 * 8 + 8 + 8 * 4 + 4 + 4 + 1)
        vector = model.to_vector()
        again = model.with_parameters(vector)
        np.testing.assert_array_equal(again.to_vector(), vector)
        with self.assertRaises(ShapeMismatchError):
            model.with_parameters(vector[:-1])


class TestGradients(unittest.TestCase):
    """Analytic gradients against finite differences."""

    def test_matched_kld_is_stationary(self):
        rng = np.random.default_rng(20)
        model = initialize_model(3, (4, 1), seed=7, smooth_sigma=1.0)
        fused = FeatureMap(rng.normal(size=(6, 6, 3)))
        _, prediction = forward(model, fused)
        f = np.zeros((6, 6))
        f[2, 2] = 1.0
        _, grads = backward(model, fused, prediction.data, f, "kld", eps=1e-10)
        self.assertLess(np.linalg.norm(grads.to_vector()), 1e-6)

    def test_small_model_both_losses(self):
        reports = run_gradient_suite(n_models=5, seed=1, widths=(3, 4, 1), smooth_sigma=0.0,
                                     with_center_bias=False)
        self.assertEqual(len(reports), 10)
        for report in reports:
            self.assertGreater(report.checked, 0)
            self.assertTrue(report.passed(1e-4))

    def test_randomized_suite_with_prior_and_smoothing(self):
        reports = run_gradient_suite(n_models=20, seed=0)
        self.assertEqual({r.loss for r in reports}, {"kld", "eml"})
        self.assertLess(max(r.max_relative_error for r in reports), 1e-4)

    def test_final_bias_gradient(self):
        rng = np.random.default_rng(21)
        model = initialize_model(2, (3, 1), seed=8, smooth_sigma=0.7)
        model = model.with_parameters(model.to_vector() + rng.normal(0, 0.1, model.parameter_count))
        fused = rng.normal(size=(5, 5, 2))
        q = _random_distribution(rng, (5, 5))
        f = np.zeros((5, 5))
        f[0, 4] = 1.0
        report = check_gradients(model, fused, q, f, "kld")
        self.assertLess(report.max_relative_error, 1e-4)
        # Softmax is shift invariant, so the final bias receives no gradient.
        _, grads = backward(model, fused, q, f, "kld")
        self.assertAlmostEqual(float(grads.biases[-1][0]), 0.0, delta=1e-10)

    def test_center_bias_weight_is_a_parameter(self):
        rng = np.random.default_rng(22)
        prior = CenterBias(mu_x=2.0, mu_y=2.5, sigma_x=1.5, sigma_y=2.0, weight=0.6)
        model = initialize_model(3, (4, 1), seed=9, center_bias=prior, smooth_sigma=1.0)
        plain = initialize_model(3, (4, 1), seed=9, smooth_sigma=1.0)
        self.assertEqual(model.parameter_count, plain.parameter_count + 1)
        vector = model.to_vector()
        self.assertEqual(vector[-1], 0.6)
        vector[-1] = -0.25
        self.assertEqual(model.with_parameters(vector).center_bias.weight, -0.25)

        fused = rng.normal(size=(6, 6, 3))
        q = _random_distribution(rng, (6, 6))
        f = np.zeros((6, 6))
        f[1, 4] = 1.0
        for loss in ("kld", "eml"):
            with self.subTest(loss=loss):
                _, grads = backward(model, fused, q, f, loss)
                self.assertIsNotNone(grads.center_bias_weight)
                self.assertEqual(grads.to_vector().shape, (model.parameter_count,))
                report = check_gradients(model, fused, q, f, loss)
                self.assertLess(report.max_relative_error, 1e-4)

        step = 1e-5
        up = model.with_parameters(model.to_vector() + np.eye(model.parameter_count)[-1] * step)
        down = model.with_parameters(model.to_vector() - np.eye(model.parameter_count)[-1] * step)
        numeric = (loss_with_grad("kld", forward(up, fused)[1].data, q, f)[0]
                   - loss_with_grad("kld", forward(down, fused)[1].data, q, f)[0]) / (2 * step)
        _, grads = backward(model, fused, q, f, "kld")
        self.assertAlmostEqual(grads.center_bias_weight, numeric, delta=1e-6)


class TestAdam(unittest.TestCase):

    def test_first_step_moves_by_learning_rate(self):
        optimizer = AdamOptimizer(2, learning_rate=0.1)
        params = np.zeros(2)
        updated = optimizer.step(params, np.array([3.0, -0.5]))
        np.testing.assert_allclose(updated, [-0.1, 0.1], atol=1e-8)
        np.testing.assert_array_equal(params, np.zeros(2))
        self.assertEqual(optimizer.t, 1)


def _toy_sample(size: int = 8) -> TrainingSample:
    """One channel that is 1 on a 2x2 target block and 0 elsewhere."""
    channel = np.zeros((size, size))
    channel[2:4, 5:7] = 1.0
    return TrainingSample(FeatureMap(channel[:, :, None]),
                          normalize_to_distribution(channel), FixationMap(channel), "toy")


class TestTraining(unittest.TestCase):
    """Determinism, convergence and best-epoch selection."""

    def setUp(self):
        rng = np.random.default_rng(30)
        self.samples = []
        for index in range(4):
            fused = FeatureMap(rng.normal(size=(6, 6, 3)))
            q = SaliencyMap(_random_distribution(rng, (6, 6)))
            hits = (rng.random((6, 6)) > 0.8).astype(float)
            hits[index, 0] = 1.0
            f = FixationMap(hits)
            self.samples.append(TrainingSample(fused, q, f, f"s{index}"))

    def test_zero_learning_rate_keeps_parameters(self):
        model = initialize_model(3, seed=1)
        result = train(model, self.samples, TrainConfig(learning_rate=0.0, epochs=1))
        np.testing.assert_array_equal(result.model.to_vector(), model.to_vector())

    def test_toy_task_converges(self):
        model = initialize_model(1, (1,), seed=0)
        config = TrainConfig(learning_rate=0.1, epochs=500, batch_size=1)
        result = train(model, [_toy_sample()], config)
        self.assertEqual(len(result.train_trace), 501)
        self.assertLess(result.train_trace[-1], 0.1 * result.train_trace[0])

    def test_same_seed_identical_traces(self):
        config = TrainConfig(learning_rate=1e-2, epochs=3, seed=9)
        first = train(initialize_model(3, seed=2), self.samples, config)
        second = train(initialize_model(3, seed=2), self.samples, config)
        self.assertEqual(first.train_trace, second.train_trace)
        np.testing.assert_array_equal(first.model.to_vector(), second.model.to_vector())

    def test_best_validation_epoch_selected(self):
        config = TrainConfig(learning_rate=5e-2, epochs=6, loss="eml")
        result = train(initialize_model(3, seed=3), self.samples[:3], config,
                       validation=self.samples[3:])
        self.assertEqual(len(result.val_trace), 6)
        self.assertEqual(result.best_epoch, int(np.argmin(result.val_trace)) + 1)

    def test_without_validation_final_epoch_returned(self):
        result = train(initialize_model(3, seed=4), self.samples, TrainConfig(epochs=2))
        self.assertEqual(result.best_epoch, 2)
        self.assertEqual(result.val_trace, [])

    def test_invalid_inputs_rejected(self):
        with self.assertRaises(ValidationError):
            train(initialize_model(3), [], TrainConfig())
        with self.assertRaises(ShapeMismatchError):
            train(initialize_model(2), self.samples, TrainConfig())
        for kwargs in ({"learning_rate": -1.0}, {"epochs": 0}, {"loss": "mse"}):
            with self.subTest(**kwargs):
                with self.assertRaises(ValidationError):
                    TrainConfig(**kwargs)


class TestCenterBias(unittest.TestCase):
    """Fitting the prior and averaging ground truth."""

    def test_single_center_fixation(self):
        prior = fit_center_bias([FixationMap.from_points(9, 9, [(4, 4)])])
        self.assertEqual((prior.mu_x, prior.mu_y), (4.0, 4.0))
        self.assertEqual((prior.sigma_x, prior.sigma_y), (1.0, 1.0))
        self.assertEqual(prior.weight, 1.0)

    def test_symmetric_fixations(self):
        maps = [FixationMap.from_points(9, 9, [(2, 3), (6, 5)]),
                FixationMap.from_points(9, 9, [(4, 0), (4, 8)])]
        prior = fit_center_bias(maps)
        self.assertAlmostEqual(prior.mu_x, 4.0, delta=1e-9)
        self.assertAlmostEqual(prior.mu_y, 4.0, delta=1e-9)

    def test_gaussian_fixations_recover_sigma(self):
        rng = np.random.default_rng(40)
        points = np.clip(np.rint(rng.normal(20.0, 5.0, size=(10_000, 2))), 0, 40)
        maps = [FixationMap.from_points(41, 41, [point]) for point in points]
        prior = fit_center_bias(maps)
        self.assertAlmostEqual(prior.sigma_x, 5.0, delta=0.25)
        self.assertAlmostEqual(prior.sigma_y, 5.0, delta=0.25)
        self.assertAlmostEqual(prior.mu_x, 20.0, delta=0.25)

    def test_no_fixations_rejected(self):
        with self.assertRaises(DegenerateMapError):
            fit_center_bias([FixationMap(np.zeros((3, 3)))])

    def test_average_ground_truth(self):
        a = np.array([[1.0, 0.0], [0.0, 0.0]])
        b = np.array([[0.0, 0.5], [0.5, 0.0]])
        mean = average_ground_truth([a, SaliencyMap(b)])
        np.testing.assert_allclose(mean.data, [[0.5, 0.25], [0.25, 0.0]])
        with self.assertRaises(ShapeMismatchError):
            average_ground_truth([a, np.full((1, 4), 0.25)])


if __name__ == "__main__":
    unittest.main()
