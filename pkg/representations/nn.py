from collections import OrderedDict

import numpy as np

from representations import autograd as ag
from representations.autograd import Tensor
from representations.exceptions import CheckpointError


class Module:
    """Container of named parameters and child modules."""

    def __init__(self):
        self._parameters = OrderedDict()
        self._modules = OrderedDict()

    def parameter(self, name, value):
        tensor = Tensor(value, requires_grad=True)
        self._parameters[name] = tensor
        return tensor

    def submodule(self, name, module):
        self._modules[name] = module
        return module

    def named_parameters(self, prefix=""):
        for name, tensor in self._parameters.items():
            yield prefix + name, tensor
        for name, module in self._modules.items():
            yield from module.named_parameters(prefix=f"{prefix}{name}.")

    def parameters(self):
        return [tensor for _, tensor in self.named_parameters()]

    def zero_grad(self):
        for tensor in self.parameters():
            tensor.zero_grad()

    def state_dict(self):
        return OrderedDict((name, t.data.copy()) for name, t in self.named_parameters())

    def load_state_dict(self, state):
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise CheckpointError(f"parameter mismatch: missing={missing} unexpected={unexpected}")
        for name, tensor in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise CheckpointError(f"{name}: expected shape {tensor.shape}, got {value.shape}")
            tensor.data = value.copy()

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Linear(Module):
    def __init__(self, in_features, out_features, rng):
        super().__init__()
        bound = 1.0 / np.sqrt(in_features)
        self.weight = self.parameter("weight", rng.uniform(-bound, bound, (in_features, out_features)))
        self.bias = self.parameter("bias", rng.uniform(-bound, bound, out_features))

    def forward(self, x):
        return ag.linear(x, self.weight, self.bias)


class MLP(Module):
    """Two linear layers with a ReLU in between."""

    def __init__(self, in_features, hidden_features, out_features, rng):
        super().__init__()
        self.fc1 = self.submodule("fc1", Linear(in_features, hidden_features, rng))
        self.fc2 = self.submodule("fc2", Linear(hidden_features, out_features, rng))

    def forward(self, x):
        return self.fc2(ag.relu(self.fc1(x)))


class Conv1d(Module):
    """Conv layer over ``[B, C, L]`` with centered "same" padding."""

    def __init__(self, in_channels, out_channels, kernel_size, rng, dilation=1):
        super().__init__()
        bound = 1.0 / np.sqrt(in_channels * kernel_size)
        self.dilation = dilation
        self.receptive_field = (kernel_size - 1) * dilation + 1
        self.weight = self.parameter(
            "weight", rng.uniform(-bound, bound, (out_channels, in_channels, kernel_size))
        )
        self.bias = self.parameter("bias", rng.uniform(-bound, bound, out_channels))

    def forward(self, x):
        out = ag.conv1d(x, self.weight, self.bias, dilation=self.dilation, padding=self.receptive_field // 2)
        if self.receptive_field % 2 == 0:
            out = out[:, :, :-1]
        return out
