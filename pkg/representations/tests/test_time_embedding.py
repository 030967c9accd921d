import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st
from hypothesis.extra.numpy import arrays

from representations import autograd as ag
from representations.exceptions import ConfigError, ContractError
from representations.tests.helpers import numeric_grad
from representations.time_embedding import (
    TIME_EMBEDDING_KINDS,
    MLPTimeEmbedding,
    RBFTimeEmbedding,
    Time2Vec,
    build_time_embedding,
    jsd,
    normalize_simplex,
)

finite = st.floats(-50, 50, allow_nan=False)


class SimplexTests(SimpleTestCase):
    def test_ten_thousand_random_vectors_land_on_the_simplex(self):
        v = np.random.default_rng(0).normal(scale=5.0, size=(10_000, 16))
        p = normalize_simplex(v).data
        np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)
        self.assertTrue(np.all((p > 0) & (p < 1)))

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, 6, elements=finite))
    def test_simplex_property(self, v):
        p = normalize_simplex(v).data
        self.assertAlmostEqual(p.sum(), 1.0, delta=1e-12)
        self.assertTrue(np.all(p > 0))

    def test_equal_inputs_give_the_uniform_distribution(self):
        np.testing.assert_allclose(normalize_simplex(np.zeros(4)).data, 0.25)


class JensenShannonTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(1)
        self.p = normalize_simplex(rng.normal(size=(200, 8))).data
        self.q = normalize_simplex(rng.normal(size=(200, 8))).data

    def test_symmetric(self):
        np.testing.assert_allclose(jsd(self.p, self.q).data, jsd(self.q, self.p).data, atol=1e-12)

    def test_bounded_by_ln2(self):
        values = jsd(self.p, self.q).data
        self.assertTrue(np.all(values >= -1e-15))
        self.assertTrue(np.all(values <= math.log(2.0) + 1e-9))

    def test_disjoint_supports_reach_ln2(self):
        value = jsd(np.array([1.0, 0.0]), np.array([0.0, 1.0])).item()
        self.assertAlmostEqual(value, math.log(2.0), delta=1e-9)

    def test_zero_at_equal_distributions(self):
        np.testing.assert_allclose(jsd(self.p, self.p).data, 0.0, atol=1e-15)

    def test_matches_scalar_definition(self):
        p, q = self.p[0], self.q[0]
        m = 0.5 * (p + q)
        expected = 0.5 * sum(p * np.log(p / m)) + 0.5 * sum(q * np.log(q / m))
        self.assertAlmostEqual(jsd(p, q).item(), expected, delta=1e-12)

    def test_negative_components_are_rejected(self):
        with self.assertRaises(ContractError):
            jsd(np.array([1.2, -0.2]), np.array([0.5, 0.5]))

    def test_gradient_flows_to_both_arguments(self):
        p = ag.Tensor(self.p[:3].copy(), requires_grad=True)
        q = ag.Tensor(self.q[:3].copy(), requires_grad=True)
        ag.sum(jsd(p, q)).backward()
        self.assertEqual(p.grad.shape, (3, 8))
        self.assertTrue(np.all(np.isfinite(q.grad)))


class TimeEmbeddingModuleTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(2)
        self.t = np.linspace(0.0, 1.0, 17)

    def test_every_kind_outputs_simplex_rows(self):
        for kind in ("time2vec", "mlp", "rbf"):
            embedding = build_time_embedding(kind, 6, self.rng)
            tau = embedding(self.t).data
            self.assertEqual(tau.shape, (17, 6))
            np.testing.assert_allclose(tau.sum(axis=-1), 1.0, atol=1e-12)

    def test_time2vec_first_component_is_linear(self):
        embedding = Time2Vec(4, self.rng)
        raw = embedding.raw_embed(self.t).data
        omega, phi = embedding.omega.data, embedding.phi.data
        np.testing.assert_allclose(raw[:, 0], omega[0] * self.t + phi[0])
        np.testing.assert_allclose(raw[:, 1:], np.sin(omega[1:] * self.t[:, None] + phi[1:]))

    def test_rbf_bandwidth_stays_positive(self):
        embedding = RBFTimeEmbedding(5, self.rng)
        embedding.log_gamma.data = np.full(5, -30.0)
        self.assertTrue(np.all(embedding.bandwidths > 0))

    def test_mlp_kind_has_trainable_network(self):
        embedding = MLPTimeEmbedding(3, self.rng, hidden=7)
        shapes = {name: p.shape for name, p in embedding.named_parameters()}
        self.assertEqual(shapes["mlp.fc1.weight"], (1, 7))

    def test_invalid_dims_and_kind(self):
        with self.assertRaises(ConfigError):
            build_time_embedding("time2vec", 1, self.rng)
        with self.assertRaises(ConfigError):
            build_time_embedding("fourier", 4, self.rng)

    def test_time2vec_sine_components_repeat_every_step_at_two_pi(self):
        embedding = Time2Vec(4, self.rng)
        embedding.omega.data[2] = 2.0 * math.pi
        embedding.phi.data[2] = 0.0
        t = np.arange(10, dtype=np.float64)
        np.testing.assert_allclose(embedding.raw_embed(t).data[:, 2], embedding.raw_embed(t + 1.0).data[:, 2], atol=1e-9)

    def test_rbf_component_is_one_at_its_center(self):
        embedding = RBFTimeEmbedding(5, self.rng)
        raw = embedding.raw_embed(embedding.centers.data.copy()).data
        np.testing.assert_allclose(np.diag(raw), 1.0, atol=1e-15)
        self.assertTrue(np.all(raw <= 1.0))

    def test_divergence_gradient_matches_finite_differences(self):
        t_first, t_second = self.t[:8], self.t[9:]
        for kind in TIME_EMBEDDING_KINDS:
            embedding = build_time_embedding(kind, 4, np.random.default_rng(5), hidden=6)

            def divergence():
                return ag.sum(jsd(embedding(t_first), embedding(t_second)))

            embedding.zero_grad()
            divergence().backward()
            for name, p in embedding.named_parameters():
                with self.subTest(kind=kind, parameter=name):
                    numeric = numeric_grad(lambda: divergence().item(), p.data)
                    scale = max(np.max(np.abs(numeric)), 1e-6)
                    self.assertLessEqual(np.max(np.abs(p.grad - numeric)) / scale, 1e-5)
