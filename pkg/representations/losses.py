"""Pretext losses and the hierarchical multi-scale wrapper.

Representations are ``[B, L, F]`` tensors. The two contrastive losses work on
the overlap of the two context views; the two time-embedding tasks work on
the full views, with ``z`` taken from context c (view 1) and ``z'`` from
context c' (view 2).
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from representations import autograd as ag
from representations.exceptions import ConfigError
from representations.nn import MLP, Module
from representations.time_embedding import jsd

logger = logging.getLogger(__name__)

TASKS = ("inst", "temp", "div", "pred")

MAX_DELTA = 20
WEIGHT_TOLERANCE = 1e-9
# weight presets that drop pretext tasks and share their weight evenly among the rest
ABLATIONS = {
    "none": None,
    "no_pred": (1 / 3, 1 / 3, 1 / 3, 0.0),
    "no_div": (1 / 3, 1 / 3, 0.0, 1 / 3),
    "no_new_tasks": (0.5, 0.5, 0.0, 0.0),
}


@dataclass(frozen=True)
class TaskConfig:
    alpha_inst: float = 0.25
    alpha_temp: float = 0.25
    alpha_div: float = 0.25
    alpha_pred: float = 0.25
    delta_max: int = 10
    n_div_pairs: Optional[int] = None
    n_pred_instances: Optional[int] = None
    n_pred_timesteps: Optional[int] = None
    head_hidden: int = 128

    def __post_init__(self):
        if any(a < 0 for a in self.alphas):
            raise ConfigError(f"task weights must be non-negative, got {self.alphas}")
        check_weights(self.alphas)
        if not 1 <= self.delta_max <= MAX_DELTA:
            raise ConfigError(f"delta_max must lie in [1, {MAX_DELTA}], got {self.delta_max}")

    @property
    def alphas(self):
        return (self.alpha_inst, self.alpha_temp, self.alpha_div, self.alpha_pred)

    def div_pairs(self, batch, length):
        return self.n_div_pairs or batch * min(length, 64)

    def pred_instances(self, batch):
        return min(self.n_pred_instances or batch, batch)

    def pred_timesteps(self, length):
        return min(self.n_pred_timesteps or 32, length)

    def as_dict(self):
        return asdict(self)


class TaskHeads(Module):
    """G1 regresses a JSD from a representation difference, G2 forecasts a representation."""

    def __init__(self, repr_dims, te_dims, hidden, rng):
        super().__init__()
        self.repr_dims = repr_dims
        self.te_dims = te_dims
        self.divergence = self.submodule("divergence", MLP(repr_dims, hidden, 1, rng))
        self.forecast = self.submodule("forecast", MLP(repr_dims + te_dims, hidden, repr_dims, rng))


@dataclass
class LossReport:
    levels: list
    per_task: dict
    combined: float
    total: object = field(repr=False, default=None)

    @property
    def level_count(self):
        return len(self.levels)

    def as_row(self):
        return {
            "level_count": self.level_count,
            **{f"l_{task}": self.per_task[task] for task in TASKS},
            "combined": self.combined,
        }


def _zero():
    return ag.Tensor(0.0)


def _diagonal_mask(n):
    mask = np.zeros((n, n))
    np.fill_diagonal(mask, -np.inf)
    return mask


def loss_instance(z, z_prime):
    """Contrast each instance against the other batch instances at the same timestep."""
    z, z_prime = ag.as_tensor(z), ag.as_tensor(z_prime)
    batch, length = z.shape[0], z.shape[1]
    if batch == 0 or length == 0:
        logger.warning("instance contrast on an empty batch or overlap; returning 0")
        return _zero()
    zt = ag.transpose(z, (1, 0, 2))
    zt_prime = ag.transpose(z_prime, (1, 0, 2))
    cross = ag.matmul(zt, ag.transpose(zt_prime, (0, 2, 1)))
    own = ag.add(ag.matmul(zt, ag.transpose(zt, (0, 2, 1))), _diagonal_mask(batch))
    logits = ag.concat([cross, own], axis=-1)
    idx = np.arange(batch)
    positive = cross[:, idx, idx]
    return ag.mean(ag.sub(ag.logsumexp(logits, axis=-1), positive))


def loss_temporal(z, z_prime):
    """Contrast each timestep against the other overlap timesteps of the same instance."""
    z, z_prime = ag.as_tensor(z), ag.as_tensor(z_prime)
    batch, length = z.shape[0], z.shape[1]
    if batch == 0 or length == 0:
        logger.warning("temporal contrast on an empty overlap; returning 0")
        return _zero()
    cross = ag.matmul(z, ag.transpose(z_prime, (0, 2, 1)))
    own = ag.add(ag.matmul(z, ag.transpose(z, (0, 2, 1))), _diagonal_mask(length))
    logits = ag.concat([cross, own], axis=-1)
    idx = np.arange(length)
    positive = cross[:, idx, idx]
    return ag.mean(ag.sub(ag.logsumexp(logits, axis=-1), positive))


@dataclass
class DivergenceSample:
    i: np.ndarray
    j: np.ndarray
    t: np.ndarray
    t_prime: np.ndarray


def sample_divergence_pairs(batch, length, length_prime, n_pairs, rng, positions=None, positions_prime=None):
    """Draw ``(i, j, t, t')`` tuples whose absolute times differ; None if impossible."""
    positions = np.arange(length) if positions is None else np.asarray(positions)
    positions_prime = np.arange(length_prime) if positions_prime is None else np.asarray(positions_prime)
    if batch < 1 or np.unique(np.concatenate([positions, positions_prime])).size < 2:
        return None
    i = rng.integers(0, batch, n_pairs)
    j = rng.integers(0, batch, n_pairs)
    t = rng.integers(0, length, n_pairs)
    t_prime = rng.integers(0, length_prime, n_pairs)
    clash = positions[t] == positions_prime[t_prime]
    while np.any(clash):
        n = int(clash.sum())
        t[clash] = rng.integers(0, length, n)
        t_prime[clash] = rng.integers(0, length_prime, n)
        clash = positions[t] == positions_prime[t_prime]
    return DivergenceSample(i=i, j=j, t=t, t_prime=t_prime)


def loss_divergence(z, z_prime, tau, tau_prime, heads, sample=None, n_pairs=None, rng=None):
    """Mean squared error between G1(z_it - z'_jt') and JSD(tau_t || tau_t')."""
    z, z_prime = ag.as_tensor(z), ag.as_tensor(z_prime)
    if sample is None:
        n_pairs = n_pairs or z.shape[0] * min(z.shape[1], 64)
        sample = sample_divergence_pairs(z.shape[0], z.shape[1], z_prime.shape[1], n_pairs, rng)
    if sample is None:
        logger.warning("divergence prediction needs two distinct timesteps; returning 0")
        return _zero()
    diff = ag.sub(z[sample.i, sample.t], z_prime[sample.j, sample.t_prime])
    predicted = ag.reshape(heads.divergence(diff), (-1,))
    target = jsd(ag.as_tensor(tau)[sample.t], ag.as_tensor(tau_prime)[sample.t_prime])
    return ag.mean(ag.square(ag.sub(predicted, target)))


@dataclass
class ForecastSample:
    instances: np.ndarray
    t_in: np.ndarray
    t_target: np.ndarray
    context_in: int = 0
    context_target: int = 0


def sample_forecast_targets(
    batch,
    lengths,
    n_instances,
    n_timesteps,
    delta_max,
    rng,
    starts=(0, 0),
    scale=1,
):
    """Pick input/target contexts, instances, timesteps and offsets for forecasting.

    ``lengths`` and ``starts`` describe the two contexts; ``scale`` is the
    number of raw steps one position covers at the current hierarchy level.
    """
    context_in = int(rng.integers(0, 2))
    context_target = int(rng.integers(0, 2))
    len_in, len_target = lengths[context_in], lengths[context_target]
    n_instances = min(n_instances, batch)
    n_timesteps = min(n_timesteps, len_in)
    instances = rng.choice(batch, size=n_instances, replace=False)
    t_in = np.stack([rng.choice(len_in, size=n_timesteps, replace=False) for _ in range(n_instances)])
    delta = rng.integers(-delta_max, delta_max + 1, size=n_instances)
    target_abs = starts[context_in] + t_in * scale + delta[:, None] * scale
    t_target = np.clip((target_abs - starts[context_target]) // scale, 0, len_target - 1)
    return ForecastSample(
        instances=instances,
        t_in=t_in,
        t_target=t_target,
        context_in=context_in,
        context_target=context_target,
    )


def loss_te_forecast(z_in, z_target, tau_target, heads, sample, target=None):
    """Per-element MSE of G2([z_t, tau_{t+delta}]) against a detached z_{t+delta}.

    ``target`` replaces the gathered z_{t+delta} values when given.
    """
    z_in = ag.as_tensor(z_in)
    if z_in.shape[1] < 2 and ag.as_tensor(z_target).shape[1] < 2:
        logger.warning("time-embedding forecasting needs a sequence of length >= 2; returning 0")
        return _zero()
    rows = sample.instances[:, None]
    inputs = z_in[rows, sample.t_in]
    target_tau = ag.as_tensor(tau_target)[sample.t_target]
    if target is None:
        target = ag.as_tensor(z_target).detach()[rows, sample.t_target]
    predicted = heads.forecast(ag.concat([inputs, target_tau], axis=-1))
    return ag.mean(ag.square(ag.sub(predicted, target)))


def check_weights(alphas):
    total = float(np.sum(alphas))
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise ConfigError(f"task weights must sum to 1, got {total!r}")


def combine(values, alphas):
    """Weighted sum of the four task losses (floats or tensors)."""
    check_weights(alphas)
    total = 0.0
    for value, alpha in zip(values, alphas):
        total = total + value * alpha
    return total


def _pool_time(z):
    return ag.transpose(ag.maxpool1d(ag.transpose(z, (0, 2, 1)), 2), (0, 2, 1))


def _pool_embedding(tau):
    pooled = ag.transpose(ag.avgpool1d(ag.transpose(tau, (1, 0)), 2), (1, 0))
    return ag.div(pooled, ag.sum(pooled, axis=-1, keepdims=True))


def hierarchical_loss(z, z_prime, tau, tau_prime, pair, heads, config, rng, target_cache=None):
    """Average the combined pretext loss over successively max-pooled time scales.

    ``z``/``tau`` cover view 1 and ``z_prime``/``tau_prime`` cover view 2 of
    ``pair``. The level count is ceil(log2(overlap length)) + 1.

    ``target_cache`` maps a level index to the detached forecast targets of
    that level. Missing levels are filled in; present ones are reused as is.
    """
    overlap = z[:, pair.overlap_in_view1()]
    overlap_prime = z_prime[:, pair.overlap_in_view2()]
    batch = z.shape[0]
    scale = 1
    level_values = []
    level_totals = []
    while True:
        length, length_prime = z.shape[1], z_prime.shape[1]
        positions = pair.a1 + np.arange(length) * scale
        positions_prime = pair.a2 + np.arange(length_prime) * scale

        l_inst = loss_instance(overlap, overlap_prime)
        l_temp = loss_temporal(overlap, overlap_prime)

        l_div = _zero()
        sample = sample_divergence_pairs(
            batch,
            length,
            length_prime,
            config.div_pairs(batch, max(length, length_prime)),
            rng,
            positions=positions,
            positions_prime=positions_prime,
        )
        if sample is not None:
            l_div = loss_divergence(z, z_prime, tau, tau_prime, heads, sample=sample)

        l_pred = _zero()
        if max(length, length_prime) >= 2:
            forecast = sample_forecast_targets(
                batch,
                (length, length_prime),
                config.pred_instances(batch),
                config.pred_timesteps(max(length, length_prime)),
                config.delta_max,
                rng,
                starts=(pair.a1, pair.a2),
                scale=scale,
            )
            views = (z, z_prime)
            embeddings = (tau, tau_prime)
            target = None
            if target_cache is not None:
                level = len(level_totals)
                if level not in target_cache:
                    rows = forecast.instances[:, None]
                    source = views[forecast.context_target].data
                    target_cache[level] = source[rows, forecast.t_target].copy()
                target = target_cache[level]
            l_pred = loss_te_forecast(
                views[forecast.context_in],
                views[forecast.context_target],
                embeddings[forecast.context_target],
                heads,
                forecast,
                target=target,
            )

        terms = (l_inst, l_temp, l_div, l_pred)
        level_totals.append(combine(terms, config.alphas))
        level_values.append({task: term.item() for task, term in zip(TASKS, terms)})

        if overlap.shape[1] <= 1:
            break
        overlap, overlap_prime = _pool_time(overlap), _pool_time(overlap_prime)
        z, z_prime = _pool_time(z), _pool_time(z_prime)
        tau, tau_prime = _pool_embedding(tau), _pool_embedding(tau_prime)
        scale *= 2

    total = ag.scalar_mul(_stack_sum(level_totals), 1.0 / len(level_totals))
    per_task = {task: float(np.mean([v[task] for v in level_values])) for task in TASKS}
    return LossReport(
        levels=level_values,
        per_task=per_task,
        combined=total.item(),
        total=total,
    )


def _stack_sum(tensors):
    total = tensors[0]
    for t in tensors[1:]:
        total = ag.add(total, t)
    return total


def ablation_alphas(name):
    """Task weights of an ablation preset, or None for ``"none"``."""
    if name not in ABLATIONS:
        raise ConfigError(f"unknown ablation {name!r}, expected one of {tuple(ABLATIONS)}")
    return ABLATIONS[name]
