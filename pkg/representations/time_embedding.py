"""Learned time-embeddings.

A time-embedding maps (scaled) timestep indices to a K-dimensional vector,
then squashes it onto the probability simplex so that a Jensen-Shannon
divergence between two timesteps is well defined.
"""

import math

import numpy as np

from representations import autograd as ag
from representations.exceptions import ConfigError, ContractError
from representations.nn import MLP, Module

LOG_CLAMP = 1e-12

TIME_EMBEDDING_KINDS = ("time2vec", "mlp", "rbf")


def normalize_simplex(v):
    """sigmoid(v_k) / sum_j sigmoid(v_j) over the last axis."""
    s = ag.sigmoid(v)
    return ag.div(s, ag.sum(s, axis=-1, keepdims=True))


def jsd(p, q):
    """Jensen-Shannon divergence over the last axis, natural log (bounded by ln 2)."""
    p, q = ag.as_tensor(p), ag.as_tensor(q)
    for name, dist in (("p", p), ("q", q)):
        if np.any(dist.data < 0):
            raise ContractError(f"jsd: {name} has negative components")
    m = ag.scalar_mul(ag.add(p, q), 0.5)
    log_m = ag.log(ag.clip_min(m, LOG_CLAMP))

    def kl_to_m(dist):
        log_d = ag.log(ag.clip_min(dist, LOG_CLAMP))
        return ag.sum(ag.mul(dist, ag.sub(log_d, log_m)), axis=-1)

    return ag.scalar_mul(ag.add(kl_to_m(p), kl_to_m(q)), 0.5)


class TimeEmbedding(Module):
    kind = None

    def __init__(self, dims):
        super().__init__()
        if dims < 2:
            raise ConfigError(f"time-embedding needs at least 2 dims, got {dims}")
        self.dims = dims

    def raw_embed(self, t):
        raise NotImplementedError

    def forward(self, t):
        return normalize_simplex(self.raw_embed(t))

    def _column(self, t):
        return ag.Tensor(np.asarray(t, dtype=np.float64)[..., None])


class Time2Vec(TimeEmbedding):
    """Component 0 is linear in t, the remaining ones are sin(w t + phi)."""

    kind = "time2vec"

    def __init__(self, dims, rng):
        super().__init__(dims)
        self.omega = self.parameter("omega", rng.uniform(0.0, 2.0 * math.pi * dims, dims))
        self.phi = self.parameter("phi", rng.uniform(0.0, 2.0 * math.pi, dims))
        self._linear_mask = np.zeros(dims)
        self._linear_mask[0] = 1.0

    def raw_embed(self, t):
        a = ag.add(ag.mul(self._column(t), self.omega), self.phi)
        return ag.add(ag.mul(a, self._linear_mask), ag.mul(ag.sin(a), 1.0 - self._linear_mask))


class MLPTimeEmbedding(TimeEmbedding):
    kind = "mlp"

    def __init__(self, dims, rng, hidden=32):
        super().__init__(dims)
        self.mlp = self.submodule("mlp", MLP(1, hidden, dims, rng))

    def raw_embed(self, t):
        return self.mlp(self._column(t))


class RBFTimeEmbedding(TimeEmbedding):
    """exp(-gamma_r (t - mu_r)^2); gamma is stored as its log so it stays positive."""

    kind = "rbf"

    def __init__(self, dims, rng):
        super().__init__(dims)
        self.centers = self.parameter("centers", rng.uniform(0.0, 1.0, dims))
        self.log_gamma = self.parameter("log_gamma", np.log(rng.uniform(1.0, 10.0, dims)))

    @property
    def bandwidths(self):
        return np.exp(self.log_gamma.data)

    def raw_embed(self, t):
        gamma = ag.exp(self.log_gamma)
        dist = ag.square(ag.sub(self._column(t), self.centers))
        return ag.exp(ag.neg(ag.mul(gamma, dist)))


def build_time_embedding(kind, dims, rng, hidden=32):
    if kind == "time2vec":
        return Time2Vec(dims, rng)
    if kind == "mlp":
        return MLPTimeEmbedding(dims, rng, hidden=hidden)
    if kind == "rbf":
        return RBFTimeEmbedding(dims, rng)
    raise ConfigError(f"unknown time-embedding kind {kind!r}, expected one of {TIME_EMBEDDING_KINDS}")
