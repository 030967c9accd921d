"""Seeded synthetic generators used by the experiments and tests.

Every generator returns a :class:`TimeSeriesDataset`. Parameters not given
fall back to the defaults in ``DEFAULTS``; unknown parameters are rejected.
"""

import numpy as np

from representations.exceptions import ConfigError
from series.datasets import TimeSeriesDataset

DEFAULTS = {
    "multiclass_sines": {
        "n_instances": 150,
        "length": 128,
        "n_channels": 1,
        "noise": 0.2,
        "frequencies": (1, 2, 4),
    },
    "spike_anomalies": {
        "n_instances": 1,
        "length": 2000,
        "n_spikes": 5,
        "spike_sigma": 8.0,
        "period": 50,
        "noise": 0.1,
        "margin": 100,
    },
    "regime_shift": {
        "n_instances": 20,
        "length": 200,
        "noise": 0.1,
        "frequency_before": 2.0,
        "frequency_after": 6.0,
        "scale_after": 2.0,
    },
    "ar1": {
        "n_instances": 1,
        "length": 2000,
        "rho": 0.9,
        "noise": 1.0,
    },
}

KINDS = tuple(DEFAULTS)


def _resolve(kind, params):
    if kind not in DEFAULTS:
        raise ConfigError(f"unknown synthetic kind {kind!r}, expected one of {KINDS}")
    params = dict(params or {})
    unknown = set(params) - set(DEFAULTS[kind])
    if unknown:
        raise ConfigError(f"{kind}: unknown parameters {sorted(unknown)}")
    resolved = {**DEFAULTS[kind], **params}
    if int(resolved["n_instances"]) < 1 or int(resolved["length"]) < 2:
        raise ConfigError(f"{kind}: need n_instances >= 1 and length >= 2")
    if float(resolved.get("noise", 0.0)) < 0:
        raise ConfigError(f"{kind}: noise must be non-negative")
    return resolved


def multiclass_sines(rng, n_instances, length, n_channels, noise, frequencies):
    """Class c is sin(2 pi f_c t / T + phase) plus Gaussian noise."""
    n_channels = int(n_channels)
    frequencies = np.asarray(frequencies, dtype=np.float64)
    labels = rng.integers(0, len(frequencies), n_instances)
    phase = rng.uniform(0.0, 2.0 * np.pi, (n_instances, 1, n_channels))
    t = np.arange(length, dtype=np.float64)[None, :, None]
    f = frequencies[labels][:, None, None]
    values = np.sin(2.0 * np.pi * f * t / length + phase)
    values = values + noise * rng.standard_normal(values.shape)
    return TimeSeriesDataset.from_values(values, labels=labels)


def spike_anomalies(rng, n_instances, length, n_spikes, spike_sigma, period, noise, margin):
    """A noisy sine with additive positive spikes of ``spike_sigma`` series stds."""
    n_spikes, margin = int(n_spikes), int(margin)
    if length - 2 * margin < n_spikes:
        raise ConfigError("spike_anomalies: series too short for the requested spikes")
    t = np.arange(length, dtype=np.float64)
    values = np.empty((n_instances, length, 1))
    labels = np.zeros((n_instances, length), dtype=bool)
    for i in range(n_instances):
        base = np.sin(2.0 * np.pi * t / period + rng.uniform(0.0, 2.0 * np.pi))
        base = base + noise * rng.standard_normal(length)
        # spaced spikes: one per equal slice of the usable range
        edges = np.linspace(margin, length - margin, n_spikes + 1).astype(int)
        positions = np.array([rng.integers(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])], dtype=int)
        base[positions] += spike_sigma * base.std()
        values[i, :, 0] = base
        labels[i, positions] = True
    return TimeSeriesDataset.from_values(values, labels=labels)


def regime_shift(rng, n_instances, length, noise, frequency_before, frequency_after, scale_after):
    """Frequency and amplitude change at a random changepoint; labels mark the shifted part."""
    t = np.arange(length, dtype=np.float64)
    values = np.empty((n_instances, length, 1))
    labels = np.zeros((n_instances, length), dtype=bool)
    for i in range(n_instances):
        changepoint = int(rng.integers(length // 4, 3 * length // 4))
        before = np.sin(2.0 * np.pi * frequency_before * t / length)
        after = scale_after * np.sin(2.0 * np.pi * frequency_after * t / length)
        series = np.where(t < changepoint, before, after)
        values[i, :, 0] = series + noise * rng.standard_normal(length)
        labels[i, changepoint:] = True
    return TimeSeriesDataset.from_values(values, labels=labels)


def ar1(rng, n_instances, length, rho, noise):
    """x_{t+1} = rho x_t + eps, started from the stationary distribution when |rho| < 1."""
    values = np.empty((n_instances, length, 1))
    start_std = noise / np.sqrt(1.0 - rho**2) if abs(rho) < 1 else noise
    eps = noise * rng.standard_normal((n_instances, length))
    values[:, 0, 0] = start_std * rng.standard_normal(n_instances)
    for t in range(1, length):
        values[:, t, 0] = rho * values[:, t - 1, 0] + eps[:, t]
    return TimeSeriesDataset.from_values(values)


GENERATORS = {
    "multiclass_sines": multiclass_sines,
    "spike_anomalies": spike_anomalies,
    "regime_shift": regime_shift,
    "ar1": ar1,
}


def synth(kind, params=None, seed=0):
    resolved = _resolve(kind, params)
    resolved["n_instances"] = int(resolved["n_instances"])
    resolved["length"] = int(resolved["length"])
    return GENERATORS[kind](np.random.default_rng(seed), **resolved)
