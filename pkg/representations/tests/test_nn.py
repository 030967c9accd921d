import numpy as np
from django.test import SimpleTestCase

from representations.autograd import Tensor
from representations.exceptions import CheckpointError, ContractError, NumericError
from representations.nn import MLP, Conv1d, Linear
from representations.optim import Adam, AdamState, adam_step


class LayerTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_conv1d_keeps_length_for_any_dilation(self):
        x = self.rng.normal(size=(2, 3, 11))
        for kernel_size in (1, 2, 3, 4):
            for dilation in (1, 2, 4, 8):
                conv = Conv1d(3, 5, kernel_size, self.rng, dilation=dilation)
                self.assertEqual(conv(x).shape, (2, 5, 11))

    def test_linear_applies_over_last_axis(self):
        layer = Linear(3, 2, self.rng)
        x = self.rng.normal(size=(4, 5, 3))
        expected = x @ layer.weight.data + layer.bias.data
        np.testing.assert_allclose(layer(x).data, expected)

    def test_named_parameters_are_prefixed(self):
        names = [name for name, _ in MLP(2, 4, 1, self.rng).named_parameters(prefix="head.")]
        self.assertEqual(names, ["head.fc1.weight", "head.fc1.bias", "head.fc2.weight", "head.fc2.bias"])

    def test_state_dict_round_trip(self):
        source, target = MLP(2, 4, 1, self.rng), MLP(2, 4, 1, self.rng)
        target.load_state_dict(source.state_dict())
        for (_, a), (_, b) in zip(source.named_parameters(), target.named_parameters()):
            np.testing.assert_array_equal(a.data, b.data)

    def test_load_state_dict_rejects_mismatches(self):
        model = MLP(2, 4, 1, self.rng)
        state = model.state_dict()
        state.pop("fc2.bias")
        with self.assertRaises(CheckpointError):
            model.load_state_dict(state)
        state = model.state_dict()
        state["fc1.weight"] = np.zeros((3, 3))
        with self.assertRaises(CheckpointError):
            model.load_state_dict(state)


class AdamTests(SimpleTestCase):
    def test_first_step_moves_by_learning_rate(self):
        p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        state = AdamState.for_params([p], lr=0.1)
        adam_step([p], [np.array([0.5, -3.0])], state)
        # bias-corrected first step is lr * sign(g) up to eps
        np.testing.assert_allclose(p.data, [0.9, -1.9], atol=1e-7)
        self.assertEqual(state.step_count, 1)

    def test_matches_hand_written_update_over_steps(self):
        p = Tensor(np.array([0.3]), requires_grad=True)
        state = AdamState.for_params([p], lr=0.01)
        m = v = 0.0
        value = 0.3
        for t, g in enumerate([0.2, -0.1, 0.4], start=1):
            adam_step([p], [np.array([g])], state)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            value -= 0.01 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        np.testing.assert_allclose(p.data, [value], rtol=1e-12)

    def test_zero_learning_rate_leaves_parameters(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        adam_step([p], [np.array([5.0])], AdamState.for_params([p], lr=0.0))
        np.testing.assert_array_equal(p.data, [1.0])

    def test_negative_learning_rate(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        with self.assertRaises(ContractError):
            adam_step([p], [np.array([1.0])], AdamState.for_params([p], lr=-0.1))

    def test_non_finite_gradient(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        with self.assertRaises(NumericError):
            adam_step([p], [np.array([np.nan])], AdamState.for_params([p]))

    def test_optimizer_treats_missing_grad_as_zero(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        optimizer = Adam([p], lr=0.1)
        optimizer.step()
        np.testing.assert_array_equal(p.data, [1.0])
