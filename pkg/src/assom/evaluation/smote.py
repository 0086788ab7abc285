"""SMOTE reference oversampler.

Each synthetic point is ``x + u (x_nn - x)`` with ``x`` a minority row,
``x_nn`` drawn from its ``k`` nearest minority neighbours and
``u ~ uniform(0, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..datasets import Dataset
from ..errors import TooFewMinority
from .knn import neighbour_order


@dataclass
class SmoteBatch:
    samples: np.ndarray
    base_rows: np.ndarray        # dataset row positions of x
    neighbour_rows: np.ndarray   # dataset row positions of x_nn
    gaps: np.ndarray             # u


def smote_samples(dataset: Dataset, k: int = 5, amount_per_minority: int = 1,
                  seed: int = 0) -> SmoteBatch:
    minority = np.flatnonzero(dataset.labels == 1)
    m = len(minority)
    if m <= k:
        raise TooFewMinority(f"SMOTE with k={k} needs more than {k} minority rows, got {m}")
    if amount_per_minority < 0:
        raise ValueError("amount_per_minority must be non-negative")
    x = dataset.features[minority]
    # position 0 is the row itself (distance 0, lowest index among exact duplicates)
    order = neighbour_order(x, x)
    neighbours = np.empty((m, k), dtype=np.int64)
    for i in range(m):
        row = order[i][order[i] != i]
        neighbours[i] = row[:k]

    rng = np.random.default_rng(seed)
    base = np.repeat(np.arange(m), amount_per_minority)
    pick = rng.integers(0, k, size=len(base))
    nn = neighbours[base, pick]
    u = rng.random(len(base))
    samples = x[base] + u[:, None] * (x[nn] - x[base])
    return SmoteBatch(samples, minority[base], minority[nn], u)


def smote_oversample(dataset: Dataset, k: int = 5, amount_per_minority: int = 1,
                     seed: int = 0) -> Dataset:
    """``dataset`` with ``amount_per_minority`` SMOTE samples per minority row appended."""
    batch = smote_samples(dataset, k, amount_per_minority, seed)
    return dataset.append(batch.samples, np.ones(len(batch.samples), dtype=np.int8))
