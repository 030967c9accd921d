import logging
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support

from representations.exceptions import ConfigError, DimensionError

logger = logging.getLogger(__name__)


@dataclass
class F1Score:
    f1: float
    precision: float
    recall: float
    true_positives: int
    false_positives: int
    false_negatives: int
    # False when there are neither positive predictions nor positive labels
    defined: bool = True

    def as_dict(self):
        return {
            "f1": self.f1,
            "precision": self.precision,
            "recall": self.recall,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "f1_defined": self.defined,
        }


def _score(tp, fp, fn):
    if tp + fp + fn == 0:
        return F1Score(0.0, 0.0, 0.0, 0, 0, 0, defined=False)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return F1Score(f1, precision, recall, int(tp), int(fp), int(fn))


def binary_f1(truth, predicted):
    truth = np.asarray(truth, dtype=bool)
    predicted = np.asarray(predicted, dtype=bool)
    if truth.shape != predicted.shape:
        raise DimensionError(f"f1: truth {truth.shape} and predictions {predicted.shape} differ")
    if truth.size == 0:
        return _score(0, 0, 0)
    _, fp, fn, tp = confusion_matrix(truth.ravel(), predicted.ravel(), labels=[False, True]).ravel()
    if tp + fp + fn == 0:
        return _score(0, 0, 0)
    precision, recall, f1, _ = precision_recall_fscore_support(
        truth.ravel(), predicted.ravel(), average="binary", pos_label=True, zero_division=0
    )
    return F1Score(float(f1), float(precision), float(recall), int(tp), int(fp), int(fn))


def accuracy(truth, predicted):
    truth, predicted = np.asarray(truth), np.asarray(predicted)
    if truth.shape != predicted.shape:
        raise DimensionError(f"accuracy: truth {truth.shape} and predictions {predicted.shape} differ")
    return float(accuracy_score(truth.ravel(), predicted.ravel())) if truth.size else 0.0


def f1_with_delay(truth, predicted, delay):
    """Point-anomaly F1 where a detection counts if it lands within ``delay`` steps after an event.

    Events are matched greedily in time order: each true anomaly claims the
    earliest unclaimed flag in ``[t, t + delay]``. Unclaimed flags are false
    positives, unmatched anomalies false negatives.
    """
    if delay < 0:
        raise ConfigError(f"delay must be >= 0, got {delay}")
    truth = np.asarray(truth, dtype=bool)
    predicted = np.asarray(predicted, dtype=bool)
    if truth.shape != predicted.shape:
        raise DimensionError(f"f1: truth {truth.shape} and predictions {predicted.shape} differ")
    flags = np.flatnonzero(predicted)
    claimed = np.zeros(len(flags), dtype=bool)
    tp = 0
    for event in np.flatnonzero(truth):
        lo, hi = np.searchsorted(flags, event), np.searchsorted(flags, event + delay, side="right")
        free = np.flatnonzero(~claimed[lo:hi])
        if len(free):
            claimed[lo + free[0]] = True
            tp += 1
    fn = int(truth.sum()) - tp
    fp = int((~claimed).sum())
    return _score(tp, fp, fn)
