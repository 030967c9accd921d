import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from representations import autograd as ag
from representations.exceptions import ConfigError, DimensionError
from representations.nn import Conv1d, Linear, Module
from representations.time_embedding import TIME_EMBEDDING_KINDS, build_time_embedding

logger = logging.getLogger(__name__)

GRANULARITIES = ("timestep", "pooled", "instance")


@dataclass(frozen=True)
class EncoderConfig:
    input_dims: int
    output_dims: int = 128
    hidden_dims: int = 128
    te_dims: int = 16
    depth: int = 10
    kernel_size: int = 3
    mask_prob: float = 0.5
    te_kind: str = "time2vec"
    te_hidden: int = 32

    def __post_init__(self):
        if self.input_dims < 1 or self.output_dims < 1 or self.hidden_dims < 1:
            raise ConfigError("encoder widths must be positive")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.kernel_size < 1:
            raise ConfigError(f"kernel_size must be >= 1, got {self.kernel_size}")
        if not 0.0 <= self.mask_prob < 1.0:
            raise ConfigError(f"mask_prob must lie in [0, 1), got {self.mask_prob}")
        if self.te_kind not in TIME_EMBEDDING_KINDS:
            raise ConfigError(f"unknown te_kind {self.te_kind!r}")
        if self.te_dims < 2:
            raise ConfigError(f"te_dims must be >= 2, got {self.te_dims}")

    @property
    def receptive_field(self):
        return 1 + (self.kernel_size - 1) * sum(2 * 2**i for i in range(self.depth))

    def as_dict(self):
        return asdict(self)


@dataclass
class Representation:
    values: np.ndarray
    granularity: str
    window: Optional[int] = None

    @property
    def flattened(self):
        return self.values.reshape(self.values.shape[0], -1)


def mask_timestamps(u, mask_prob, rng):
    """Zero whole F-vectors at (instance, timestep) positions drawn with ``mask_prob``."""
    if mask_prob <= 0.0:
        return u
    fired = rng.random(u.shape[:2]) < mask_prob
    return ag.mul(u, (~fired)[..., None].astype(np.float64))


class ResidualBlock(Module):
    def __init__(self, in_channels, out_channels, kernel_size, dilation, rng):
        super().__init__()
        self.conv1 = self.submodule("conv1", Conv1d(in_channels, out_channels, kernel_size, rng, dilation))
        self.conv2 = self.submodule("conv2", Conv1d(out_channels, out_channels, kernel_size, rng, dilation))
        self.projector = None
        if in_channels != out_channels:
            self.projector = self.submodule("projector", Conv1d(in_channels, out_channels, 1, rng))

    def forward(self, x):
        residual = x if self.projector is None else self.projector(x)
        h = ag.gelu(self.conv2(ag.gelu(self.conv1(x))))
        return ag.add(h, residual)


class TSEncoder(Module):
    """Projection, timestamp masking, time-embedding concat and a dilated conv stack."""

    def __init__(self, config, rng, time_scale=1.0):
        super().__init__()
        self.config = config
        self.time_scale = float(time_scale)
        self.input_fc = self.submodule("input_fc", Linear(config.input_dims, config.output_dims, rng))
        self.time_embedding = self.submodule(
            "time_embedding",
            build_time_embedding(config.te_kind, config.te_dims, rng, hidden=config.te_hidden),
        )
        self.blocks = []
        in_channels = config.output_dims + config.te_dims
        for i in range(config.depth):
            block = ResidualBlock(in_channels, config.hidden_dims, config.kernel_size, 2**i, rng)
            self.blocks.append(self.submodule(f"block{i}", block))
            in_channels = config.hidden_dims
        self.output_conv = self.submodule("output_conv", Conv1d(config.hidden_dims, config.output_dims, 1, rng))

    def project(self, x):
        x = ag.as_tensor(x)
        if x.ndim != 3 or x.shape[-1] != self.config.input_dims:
            raise DimensionError(f"expected input [B, T, {self.config.input_dims}], got {x.shape}")
        return self.input_fc(x)

    def embed_time(self, offset, length):
        """Simplex time-embeddings of absolute steps ``offset .. offset + length - 1``.

        ``offset`` may be an int (result ``[length, K]``) or a per-instance
        array (result ``[B, length, K]``).
        """
        steps = np.arange(length, dtype=np.float64)
        offset = np.asarray(offset, dtype=np.float64)
        t = (offset[..., None] + steps) if offset.ndim else (offset + steps)
        return self.time_embedding(t / self.time_scale)

    def forward(self, x, mode="eval", rng=None, offset=0, mask=None, return_time_embedding=False):
        u = self.project(x)
        batch, length, _ = u.shape
        if mode == "train":
            u = mask_timestamps(u, self.config.mask_prob, rng)
        if mask is not None:
            u = ag.mul(u, (~np.asarray(mask, dtype=bool))[..., None].astype(np.float64))

        tau = self.embed_time(offset, length)
        tau_batch = tau
        if tau.ndim == 2:
            tau_batch = ag.add(np.zeros((batch, length, self.config.te_dims)), tau)
        h = ag.transpose(ag.concat([u, tau_batch], axis=-1), (0, 2, 1))
        for block in self.blocks:
            h = block(h)
        z = ag.transpose(self.output_conv(h), (0, 2, 1))
        if return_time_embedding:
            return z, tau
        return z


def encode(encoder, x, mode="eval", rng=None, offset=0, mask=None):
    if mode == "eval":
        with ag.no_grad():
            return encoder(x, mode=mode, offset=offset, mask=mask)
    return encoder(x, mode=mode, rng=rng, offset=offset, mask=mask)
