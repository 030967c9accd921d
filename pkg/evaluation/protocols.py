"""Downstream evaluation protocols run on frozen representations.

Every protocol takes a trained :class:`~representations.trep.TRep` and never
updates it. Forecasting and streaming anomaly detection encode sliding
windows that end at the scored timestep, so no representation sees the
future of the point it describes.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.model_selection import KFold

from evaluation.kernels import KernelClassifier
from evaluation.metrics import accuracy, binary_f1, f1_with_delay
from evaluation.ridge import mae, mse, ridge_fit
from representations.exceptions import ConfigError, DatasetError, DimensionError
from series.datasets import STD_FLOOR

logger = logging.getLogger(__name__)

ALPHA_EPS = 1e-12
FEATURE_MODES = ("representation", "raw")


# ----------------------------------------------------------------- forecasting


@dataclass
class ForecastResult:
    horizon: int
    mse: float
    mae: float
    persistence_mse: float
    persistence_mae: float
    alpha: float
    n_test: int

    def as_dict(self):
        return asdict(self)


def _zscore_series(series, n_fit, start=0):
    mean = series[start:n_fit].mean(axis=0)
    std = series[start:n_fit].std(axis=0)
    flat = std < STD_FLOOR
    scaled = (series - mean) / np.where(flat, 1.0, std)
    scaled[:, flat] = 0.0
    return scaled


def _targets(series, ends, horizon):
    steps = np.arange(1, horizon + 1)
    return series[ends[:, None] + steps].reshape(len(ends), -1)


def forecast_eval(
    model,
    series,
    horizons=(1, 5),
    lookback=64,
    alphas=(0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 50, 100, 500, 1000),
    valid_fraction=0.2,
    test_fraction=0.2,
):
    """Ridge from ``z_t`` to the flattened next-``H`` window, per horizon.

    ``series`` is ``[T, C]`` or a batch ``[N, T, C]``; metrics are averaged
    over instances. The split is chronological (train / valid / test), and
    each channel is z-scored with train-segment statistics.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim == 1:
        series = series[None, :, None]
    elif series.ndim == 2:
        series = series[None]
    if series.ndim != 3:
        raise DimensionError(f"forecast series must be [T, C] or [N, T, C], got {series.shape}")
    if not (valid_fraction > 0.0 and test_fraction > 0.0 and valid_fraction + test_fraction < 1.0):
        raise ConfigError("valid_fraction and test_fraction must be positive and sum below 1")

    length = series.shape[1]
    train_end = int(length * (1.0 - valid_fraction - test_fraction))
    valid_end = int(length * (1.0 - test_fraction))
    per_horizon = {int(h): [] for h in horizons}
    for instance in series:
        scaled = _zscore_series(instance, train_end)
        reps = model.encode_windows(scaled, np.arange(length), lookback)
        for horizon in per_horizon:
            if horizon < 1:
                raise ConfigError(f"horizons must be >= 1, got {horizon}")
            segments = [
                np.arange(0, train_end - horizon),
                np.arange(train_end, valid_end - horizon),
                np.arange(valid_end, length - horizon),
            ]
            if any(len(ends) == 0 for ends in segments):
                logger.warning("horizon %d runs past the end of a split (T=%d); skipped", horizon, length)
                continue
            train, valid, test = segments
            ridge = ridge_fit(
                reps[train],
                _targets(scaled, train, horizon),
                alphas,
                X_valid=reps[valid],
                y_valid=_targets(scaled, valid, horizon),
            )
            truth = _targets(scaled, test, horizon)
            predicted = ridge.predict(reps[test])
            persistence = np.tile(scaled[test], horizon)
            per_horizon[horizon].append(
                (
                    mse(truth, predicted),
                    mae(truth, predicted),
                    mse(truth, persistence),
                    mae(truth, persistence),
                    ridge.alpha,
                    len(test),
                )
            )

    results = []
    for horizon, rows in per_horizon.items():
        if not rows:
            continue
        rows = np.array(rows)
        results.append(
            ForecastResult(
                horizon=horizon,
                mse=float(rows[:, 0].mean()),
                mae=float(rows[:, 1].mean()),
                persistence_mse=float(rows[:, 2].mean()),
                persistence_mae=float(rows[:, 3].mean()),
                alpha=float(np.median(rows[:, 4])),
                n_test=int(rows[:, 5].sum()),
            )
        )
    return results


# -------------------------------------------------------------- classification


def kfold_splits(n, folds, seed):
    """Shuffled ``(fit, held_out)`` index pairs; empty when fewer than two folds fit."""
    n_splits = min(folds, n)
    if n_splits < 2:
        return []
    return list(KFold(n_splits=n_splits, shuffle=True, random_state=seed).split(np.arange(n)))


def cross_validate_c(features, labels, c_grid, folds=5, seed=0):
    """Mean K-fold accuracy for each C; returns ``(best_c, scores)``."""
    c_grid = list(c_grid)
    if not c_grid:
        raise ConfigError("C grid is empty")
    labels = np.asarray(labels)
    splits = kfold_splits(len(labels), folds, seed)
    scores = []
    for c in c_grid:
        fold_scores = []
        for fit_index, held_out in splits:
            classifier = KernelClassifier(C=c, seed=seed).fit(features[fit_index], labels[fit_index])
            fold_scores.append(accuracy(labels[held_out], classifier.predict(features[held_out])))
        scores.append(float(np.mean(fold_scores)) if fold_scores else 0.0)
    best = c_grid[int(np.argmax(scores))]
    logger.debug("cross-validated accuracy by C: %s", dict(zip(c_grid, scores)))
    return best, scores


def _flatten(features):
    features = getattr(features, "values", features)
    features = np.asarray(features, dtype=np.float64)
    return features.reshape(features.shape[0], -1)


def timedim_classify(train_features, train_labels, test_features, test_labels, c_grid, folds=5, seed=0):
    """RBF-kernel classification on flattened pooled representations."""
    X_train, X_test = _flatten(train_features), _flatten(test_features)
    y_train, y_test = np.asarray(train_labels), np.asarray(test_labels)
    if X_train.shape[1] != X_test.shape[1]:
        raise DimensionError(f"train features have {X_train.shape[1]} dims, test {X_test.shape[1]}")
    if len(np.unique(y_train)) < 2:
        best_c = list(c_grid)[0]
    else:
        best_c, _ = cross_validate_c(X_train, y_train, c_grid, folds, seed)
    classifier = KernelClassifier(C=best_c, seed=seed).fit(X_train, y_train)
    return {
        "accuracy": accuracy(y_test, classifier.predict(X_test)),
        "C": best_c,
        "feature_dims": int(X_train.shape[1]),
        "classifier": classifier,
    }


def classify_eval(model, train, test, window=10, c_grid=None, folds=5, seed=0):
    """Pool both splits to ``window`` slots and classify."""
    c_grid = c_grid if c_grid is not None else [10.0**k for k in range(-4, 5)]
    train_reps = model.encode(train.values, granularity="pooled", window=window, mask=train.missing_mask)
    test_reps = model.encode(test.values, granularity="pooled", window=window, mask=test.missing_mask)
    return timedim_classify(train_reps, train.labels, test_reps, test.labels, c_grid, folds, seed)


# ------------------------------------------------------------ anomaly scoring


@dataclass(frozen=True)
class AnomalyConfig:
    trailing_window: int = 21
    beta: float = 4.0
    delay: int = 7
    diff_order: int = 0
    lookback: int = 64
    zscore: bool = True
    features: str = "representation"

    def __post_init__(self):
        if self.trailing_window < 1:
            raise ConfigError(f"trailing window Z must be >= 1, got {self.trailing_window}")
        if self.delay < 0:
            raise ConfigError(f"delay must be >= 0, got {self.delay}")
        if self.diff_order < 0:
            raise ConfigError(f"differencing order must be >= 0, got {self.diff_order}")
        if self.lookback < 1:
            raise ConfigError(f"lookback must be >= 1, got {self.lookback}")
        if self.features not in FEATURE_MODES:
            raise ConfigError(f"features must be one of {FEATURE_MODES}, got {self.features!r}")


@dataclass
class AnomalyScores:
    scores: np.ndarray
    adjusted: np.ndarray
    flags: np.ndarray
    beta: float
    warmup: int
    # prefix the z-score statistics were fit on
    fit_length: int = 0

    def rows(self):
        for t, (score, adjusted, flag) in enumerate(zip(self.scores, self.adjusted, self.flags)):
            yield {"t": t, "score": float(score), "adjusted": float(adjusted), "flag": int(flag)}


def difference(series, order):
    """Difference ``order`` times along time; the first ``order`` steps are 0."""
    series = np.asarray(series, dtype=np.float64)
    if order == 0:
        return series.copy()
    diffed = np.diff(series, n=order, axis=0)
    return np.concatenate([np.zeros((order,) + series.shape[1:]), diffed])


def adjust_scores(scores, trailing_window):
    """``(a_t - mean(a[t-Z:t])) / mean(a[t-Z:t])`` with the mean floored at ``ALPHA_EPS``."""
    scores = np.asarray(scores, dtype=np.float64)
    cumulative = np.concatenate([[0.0], np.cumsum(scores)])
    t = np.arange(len(scores))
    lo = np.maximum(0, t - trailing_window)
    counts = t - lo
    trailing = np.divide(cumulative[t] - cumulative[lo], counts, out=np.zeros(len(scores)), where=counts > 0)
    adjusted = (scores - trailing) / np.maximum(trailing, ALPHA_EPS)
    adjusted[counts == 0] = 0.0
    return adjusted


def flag_scores(adjusted, beta, warmup):
    """Flag ``t >= warmup`` when the score exceeds mu + beta sigma of the scores before it."""
    adjusted = np.asarray(adjusted, dtype=np.float64)
    flags = np.zeros(len(adjusted), dtype=bool)
    history = adjusted[warmup:]
    if len(history) < 2:
        return flags
    total = np.concatenate([[0.0], np.cumsum(history)])
    total_sq = np.concatenate([[0.0], np.cumsum(history**2)])
    counts = np.arange(len(history))
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = total[:-1] / counts
        sigma = np.sqrt(np.maximum(total_sq[:-1] / counts - mu**2, 0.0))
    ready = counts >= 2
    flags[warmup:][ready] = history[ready] > mu[ready] + beta * sigma[ready]
    return flags


def anomaly_score_stream(model, series, config=None, fit_length=None):
    """Per-timestep masked-vs-unmasked L1 gap, its adjusted score and the flags.

    The z-score statistics come from the first ``n_fit = max(fit_length, warmup)``
    steps only, so the score at ``t`` depends on nothing past ``max(t, n_fit - 1)``.

    In ``raw`` feature mode the representation is the (preprocessed) input
    itself, so the gap is ``|x_t|_1``.
    """
    config = config or AnomalyConfig()
    series = np.asarray(series, dtype=np.float64)
    if series.ndim == 1:
        series = series[:, None]
    if series.ndim != 2:
        raise DimensionError(f"anomaly series must be [T] or [T, C], got {series.shape}")
    x = difference(series, config.diff_order)
    warmup = max(config.trailing_window, config.diff_order)
    n_fit = min(len(x), max(warmup, fit_length or 0, config.diff_order + 2))
    if config.zscore:
        x = _zscore_series(x, n_fit, start=min(config.diff_order, max(n_fit - 2, 0)))
    if config.features == "raw":
        scores = np.abs(x).sum(axis=1)
    else:
        ends = np.arange(len(x))
        unmasked = model.encode_windows(x, ends, config.lookback)
        masked = model.encode_windows(x, ends, config.lookback, mask_last=True)
        scores = np.abs(unmasked - masked).sum(axis=1)
    adjusted = adjust_scores(scores, config.trailing_window)
    return AnomalyScores(
        scores=scores,
        adjusted=adjusted,
        flags=flag_scores(adjusted, config.beta, warmup),
        beta=config.beta,
        warmup=warmup,
        fit_length=n_fit if config.zscore else 0,
    )


def select_beta(adjusted, truth, betas, delay=7, warmup=0):
    """Pick the beta with the best delay-F1 on a labelled prefix (first wins on ties)."""
    betas = list(betas)
    if not betas:
        raise ConfigError("beta grid is empty")
    scores = [f1_with_delay(truth, flag_scores(adjusted, beta, warmup), delay).f1 for beta in betas]
    return betas[int(np.argmax(scores))], scores


def anomaly_eval(model, series, labels, config=None, beta_grid=None, valid_fraction=0.3):
    """Score the stream once, tune beta on the prefix, report delay-F1 on the rest."""
    config = config or AnomalyConfig()
    labels = np.asarray(labels, dtype=bool).reshape(-1)
    split = int(round(valid_fraction * len(labels)))
    stream = anomaly_score_stream(model, series, config, fit_length=split)
    if len(labels) != len(stream.scores):
        raise DimensionError(f"{len(labels)} labels for a series of length {len(stream.scores)}")
    beta = config.beta
    if beta_grid and 0 < split < len(labels):
        beta, _ = select_beta(
            stream.adjusted[:split], labels[:split], beta_grid, config.delay, stream.warmup
        )
        stream.flags = flag_scores(stream.adjusted, beta, stream.warmup)
        stream.beta = beta
    else:
        split = 0
    score = f1_with_delay(labels[split:], stream.flags[split:], config.delay)
    return {**score.as_dict(), "beta": beta, "valid_length": split, "stream": stream}


# ------------------------------------------------------- windowed classification


@dataclass
class WindowFeatures:
    features: np.ndarray
    labels: np.ndarray
    instances: np.ndarray


def window_features(model, dataset, window=6, features="representation"):
    """One row per window ending at ``t >= window - 1``, labelled by its last step.

    Representation rows are the flattened ``window x F`` encodings, raw rows
    the flattened ``window x C`` inputs.
    """
    if features not in FEATURE_MODES:
        raise ConfigError(f"features must be one of {FEATURE_MODES}, got {features!r}")
    if dataset.label_kind != "timestep":
        raise DatasetError("windowed anomaly classification needs per-timestep labels")
    if dataset.length < window:
        raise DatasetError(f"series length {dataset.length} is shorter than the window {window}")
    ends = np.arange(window - 1, dataset.length)
    steps = np.arange(-window + 1, 1)
    rows, labels, instances = [], [], []
    for i in range(dataset.n_instances):
        x = dataset.values[i]
        if features == "raw":
            rows.append(x[ends[:, None] + steps].reshape(len(ends), -1))
        else:
            z = model.encode_windows(x, ends, window, full_window=True)
            rows.append(z.reshape(len(ends), -1))
        labels.append(np.asarray(dataset.labels[i], dtype=bool)[ends])
        instances.append(np.full(len(ends), i))
    return WindowFeatures(np.concatenate(rows), np.concatenate(labels), np.concatenate(instances))


def windowed_anomaly_classify(model, train, test, window=6, c_grid=None, folds=5, seed=0, features="representation"):
    c_grid = c_grid if c_grid is not None else [10.0**k for k in range(-4, 5)]
    train_rows = window_features(model, train, window, features)
    test_rows = window_features(model, test, window, features)
    if not train_rows.labels.any():
        raise DatasetError("no positive labels in the training windows; cannot fit an anomaly classifier")
    best_c, _ = cross_validate_c(train_rows.features, train_rows.labels, c_grid, folds, seed)
    classifier = KernelClassifier(C=best_c, seed=seed).fit(train_rows.features, train_rows.labels)
    predicted = classifier.predict(test_rows.features).astype(bool)
    score = binary_f1(test_rows.labels, predicted)
    return {
        **score.as_dict(),
        "accuracy": accuracy(test_rows.labels, predicted),
        "C": best_c,
        "n_windows": int(len(test_rows.labels)),
        "features": features,
    }


def majority_baseline(labels):
    """F1 of always predicting the majority class."""
    labels = np.asarray(labels, dtype=bool)
    majority = labels.mean() > 0.5
    return binary_f1(labels, np.full(labels.shape, majority))


__all__ = [
    "AnomalyConfig",
    "AnomalyScores",
    "ForecastResult",
    "anomaly_eval",
    "anomaly_score_stream",
    "classify_eval",
    "forecast_eval",
    "select_beta",
    "timedim_classify",
    "windowed_anomaly_classify",
]
