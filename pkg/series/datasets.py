import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd
from sklearn import model_selection

from representations.exceptions import ConfigError, DatasetError, DatasetFormatError

logger = logging.getLogger(__name__)

ID_COLUMN = "instance_id"
TIME_COLUMN = "t"
LABEL_COLUMN = "label"
LABEL_KINDS = ("instance", "timestep")
STD_FLOOR = 1e-12


@dataclass
class TimeSeriesDataset:
    """``values[N, T, C]`` with optional labels and a ``[N, T]`` missing mask.

    Labels are either per-instance ints (``[N]``) or per-timestep bools
    (``[N, T]``). Missing positions hold 0 in every channel.
    """

    values: np.ndarray
    missing_mask: np.ndarray
    labels: Optional[np.ndarray] = None
    instance_ids: Optional[np.ndarray] = None
    channel_mean: Optional[np.ndarray] = None
    channel_std: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise DatasetError(f"values must be [N, T, C], got shape {self.values.shape}")
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        if self.missing_mask.shape != self.values.shape[:2]:
            raise DatasetError("missing_mask must be [N, T]")
        if self.instance_ids is None:
            self.instance_ids = np.arange(self.n_instances)

    @classmethod
    def from_values(cls, values, labels=None):
        values = np.array(values, dtype=np.float64)
        missing = ~np.all(np.isfinite(values), axis=-1)
        values[missing] = 0.0
        return cls(values=values, missing_mask=missing, labels=labels)

    @property
    def n_instances(self):
        return self.values.shape[0]

    @property
    def length(self):
        return self.values.shape[1]

    @property
    def n_channels(self):
        return self.values.shape[2]

    @property
    def label_kind(self):
        if self.labels is None:
            return None
        return "timestep" if np.ndim(self.labels) == 2 else "instance"

    def subset(self, index):
        return replace(
            self,
            values=self.values[index],
            missing_mask=self.missing_mask[index],
            labels=None if self.labels is None else np.asarray(self.labels)[index],
            instance_ids=self.instance_ids[index],
        )


def load_csv(path, label=None):
    """Read the long format ``instance_id, t, c0..c{C-1}[, label]``.

    ``label`` is ``"instance"``, ``"timestep"`` or None to infer it: a label
    column that varies inside any instance is per-timestep. Inference cannot
    tell an all-constant per-timestep column (no anomalies at all) from
    per-instance labels, so callers that know the kind should pass it.
    """
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except FileNotFoundError as exc:
        raise DatasetError(f"dataset not found: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetFormatError(f"{path}: unreadable CSV ({exc})") from exc

    for column in (ID_COLUMN, TIME_COLUMN):
        if column not in frame.columns:
            raise DatasetFormatError(f"{path}: missing required column {column!r}")
    channels = [f"c{i}" for i in range(len(frame.columns)) if f"c{i}" in frame.columns]
    if not channels:
        raise DatasetFormatError(f"{path}: no channel columns c0..")
    extra = set(frame.columns) - {ID_COLUMN, TIME_COLUMN, LABEL_COLUMN, *channels}
    if extra:
        raise DatasetFormatError(f"{path}: unexpected columns {sorted(extra)}")

    frame = frame.sort_values([ID_COLUMN, TIME_COLUMN], kind="stable")
    groups = frame.groupby(ID_COLUMN, sort=True)
    sizes = groups.size()
    length = int(sizes.iloc[0])
    ragged = sizes[sizes != length]
    if len(ragged):
        raise DatasetFormatError(
            f"{path}: instance {ragged.index[0]!r} has {int(ragged.iloc[0])} rows, expected {length}"
        )
    expected_t = np.arange(length)
    for instance_id, group in groups:
        if not np.array_equal(group[TIME_COLUMN].to_numpy(), expected_t):
            raise DatasetFormatError(f"{path}: instance {instance_id!r} has non-contiguous t")

    n_instances = len(sizes)
    values = frame[channels].to_numpy(dtype=np.float64).reshape(n_instances, length, len(channels))
    dataset = TimeSeriesDataset.from_values(values)
    dataset.instance_ids = sizes.index.to_numpy()

    if LABEL_COLUMN in frame.columns:
        raw = frame[LABEL_COLUMN].to_numpy().reshape(n_instances, length)
        if label is None:
            label = "timestep" if np.any(raw != raw[:, :1]) else "instance"
        if label not in LABEL_KINDS:
            raise ConfigError(f"unknown label kind {label!r}")
        if label == "instance" and np.any(raw != raw[:, :1]):
            raise DatasetFormatError(f"{path}: label varies inside an instance but per-instance labels were asked for")
        dataset.labels = raw.astype(bool) if label == "timestep" else raw[:, 0].astype(np.int64)
    return dataset


def save_csv(dataset, path):
    n, length, n_channels = dataset.values.shape
    values = dataset.values.copy()
    values[dataset.missing_mask] = np.nan
    frame = pd.DataFrame(values.reshape(n * length, n_channels), columns=[f"c{i}" for i in range(n_channels)])
    frame.insert(0, TIME_COLUMN, np.tile(np.arange(length), n))
    frame.insert(0, ID_COLUMN, np.repeat(dataset.instance_ids, length))
    if dataset.labels is not None:
        labels = np.asarray(dataset.labels)
        if dataset.label_kind == "instance":
            labels = np.repeat(labels, length)
        frame[LABEL_COLUMN] = labels.reshape(-1).astype(np.int64)
    frame.to_csv(path, index=False, float_format="%.17g", encoding="utf-8")


def channel_stats(dataset):
    """Per-channel mean and population std over non-missing entries."""
    observed = dataset.values[~dataset.missing_mask]
    if observed.size == 0:
        return np.zeros(dataset.n_channels), np.zeros(dataset.n_channels)
    return observed.mean(axis=0), observed.std(axis=0)


def zscore(dataset, stats=None):
    """Normalize each channel independently; missing entries stay at 0.

    ``stats`` lets a test split reuse the ``(mean, std)`` of its train split.
    """
    mean, std = stats if stats is not None else channel_stats(dataset)
    mean, std = np.asarray(mean, dtype=np.float64), np.asarray(std, dtype=np.float64)
    flat = std < STD_FLOOR
    if np.any(flat):
        logger.warning("channels %s are constant; setting them to 0", np.flatnonzero(flat).tolist())
    values = (dataset.values - mean) / np.where(flat, 1.0, std)
    values[..., flat] = 0.0
    values[dataset.missing_mask] = 0.0
    return replace(dataset, values=values, channel_mean=mean, channel_std=std)


def mask_fraction(dataset, fraction, seed):
    """Mark uniformly drawn (instance, timestep) cells as missing."""
    if not 0.0 <= fraction < 1.0:
        raise ConfigError(f"fraction must lie in [0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    drawn = rng.random(dataset.missing_mask.shape) < fraction
    values = dataset.values.copy()
    values[drawn] = 0.0
    return replace(dataset, values=values, missing_mask=dataset.missing_mask | drawn)


def train_test_split(dataset, test_fraction, seed):
    """Split by instance; returns ``(train, test)``."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if dataset.n_instances < 2:
        raise DatasetError("need at least two instances to split")
    n_test = min(max(1, int(round(test_fraction * dataset.n_instances))), dataset.n_instances - 1)
    train_index, test_index = model_selection.train_test_split(
        np.arange(dataset.n_instances), test_size=n_test, random_state=seed
    )
    return dataset.subset(np.sort(train_index)), dataset.subset(np.sort(test_index))
