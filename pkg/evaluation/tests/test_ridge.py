import numpy as np
from django.test import SimpleTestCase

from evaluation.ridge import mae, mse, ridge_fit, solve_ridge
from representations.exceptions import ConfigError, DimensionError


class SolveRidgeTests(SimpleTestCase):
    def test_identity_design(self):
        y = np.array([[1.0], [2.0], [-3.0]])
        model = solve_ridge(np.eye(3), y, 0.1, fit_intercept=False)
        np.testing.assert_allclose(model.weights, y / 1.1, atol=1e-12)
        np.testing.assert_array_equal(model.intercept, [0.0])

    def test_duplicated_rows_equal_a_scaled_row(self):
        rng = np.random.default_rng(0)
        x, target = rng.normal(size=(1, 4)), rng.normal(size=(1, 2))
        duplicated = solve_ridge(np.vstack([x, x]), np.vstack([target, target]), 0.5, fit_intercept=False)
        scaled = solve_ridge(np.sqrt(2.0) * x, np.sqrt(2.0) * target, 0.5, fit_intercept=False)
        np.testing.assert_allclose(duplicated.weights, scaled.weights, atol=1e-12)

    def test_larger_alpha_shrinks_the_weights(self):
        rng = np.random.default_rng(1)
        X, y = rng.normal(size=(30, 5)), rng.normal(size=30)
        norms = [np.linalg.norm(solve_ridge(X, y, alpha).weights) for alpha in (0.1, 1.0, 10.0, 100.0)]
        self.assertTrue(all(a > b for a, b in zip(norms, norms[1:])))

    def test_normal_equations_hold(self):
        rng = np.random.default_rng(2)
        X, y = rng.normal(size=(40, 6)), rng.normal(size=(40, 3))
        model = solve_ridge(X, y, 2.0)
        self.assertLessEqual(model.residual, 1e-8)
        Xc, yc = X - X.mean(axis=0), y - y.mean(axis=0)
        np.testing.assert_allclose((Xc.T @ Xc + 2.0 * np.eye(6)) @ model.weights, Xc.T @ yc, atol=1e-8)

    def test_intercept_is_not_penalized(self):
        X = np.random.default_rng(3).normal(size=(50, 2))
        model = solve_ridge(X, np.full(50, 7.0), 1000.0)
        np.testing.assert_allclose(model.predict(X), 7.0, atol=1e-9)

    def test_errors(self):
        with self.assertRaises(DimensionError):
            solve_ridge(np.zeros((3, 2)), np.zeros(4), 1.0)
        with self.assertRaises(ConfigError):
            solve_ridge(np.zeros((3, 2)), np.zeros(3), 0.0)


class RidgeFitTests(SimpleTestCase):
    def test_empty_grid(self):
        with self.assertRaises(ConfigError):
            ridge_fit(np.zeros((5, 2)), np.zeros(5), [])

    def test_noiseless_linear_target_prefers_small_alpha(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(100, 3))
        y = X @ np.array([1.0, -2.0, 0.5]) + 3.0
        model = ridge_fit(X, y, [0.1, 10.0, 1000.0])
        self.assertEqual(model.alpha, 0.1)
        self.assertLess(mse(y, model.predict(X)), 1e-3)

    def test_pure_noise_prefers_heavy_shrinkage(self):
        rng = np.random.default_rng(5)
        X, y = rng.normal(size=(60, 40)), rng.normal(size=60)
        model = ridge_fit(X, y, [0.1, 1000.0])
        self.assertEqual(model.alpha, 1000.0)

    def test_error_metrics(self):
        self.assertEqual(mse([1.0, 2.0], [1.0, 4.0]), 2.0)
        self.assertEqual(mae([1.0, 2.0], [1.0, 4.0]), 1.0)
