from dataclasses import dataclass

import numpy as np

from representations.exceptions import DatasetError

MIN_VIEW_LENGTH = 2


@dataclass
class ContextPair:
    """Two crops ``[a1, b1)`` and ``[a2, b2)`` of one batch sharing ``[a2, b1)``."""

    view1: np.ndarray
    view2: np.ndarray
    a1: int
    a2: int
    b1: int
    b2: int

    @property
    def overlap(self):
        return self.a2, self.b1

    @property
    def overlap_length(self):
        return self.b1 - self.a2

    def overlap_in_view1(self):
        return slice(self.a2 - self.a1, self.b1 - self.a1)

    def overlap_in_view2(self):
        return slice(0, self.b1 - self.a2)


def _feasible(a2, b1, length):
    # a length-1 overlap must leave room to grow both views to MIN_VIEW_LENGTH
    if b1 - a2 >= MIN_VIEW_LENGTH:
        return True
    return a2 >= 1 and b1 <= length - 1


def sample_crops(length, rng):
    """Draw ``(a1, a2, b1, b2)`` with ``0 <= a1 <= a2 < b1 <= b2 <= length``.

    The overlap is drawn first, uniformly over non-empty intervals, then view 1
    is extended to the left and view 2 to the right.
    """
    if length < MIN_VIEW_LENGTH:
        raise DatasetError(f"series length {length} is too short for context cropping")
    while True:
        a2, b1 = sorted(rng.choice(length + 1, size=2, replace=False).tolist())
        if _feasible(a2, b1, length):
            break
    short = b1 - a2 < MIN_VIEW_LENGTH
    a1 = int(rng.integers(0, a2 - short + 1))
    b2 = int(rng.integers(b1 + short, length + 1))
    return a1, a2, b1, b2


def make_context_pair(batch, rng, crops=None):
    """Slice one shared crop tuple out of ``batch[B, T, C]``."""
    batch = np.asarray(batch)
    a1, a2, b1, b2 = crops if crops is not None else sample_crops(batch.shape[1], rng)
    return ContextPair(
        view1=batch[:, a1:b1],
        view2=batch[:, a2:b2],
        a1=a1,
        a2=a2,
        b1=b1,
        b2=b2,
    )
