"""Brute-force k-nearest-neighbour classifier used as the evaluation harness."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch

_CHUNK = 256


def neighbour_order(train_x: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Row indices of ``train_x`` sorted by distance to each query row.

    Equal distances keep the lower row index first.
    """
    out = np.empty((len(query), len(train_x)), dtype=np.int64)
    for start in range(0, len(query), _CHUNK):
        q = query[start:start + _CHUNK]
        diff = q[:, None, :] - train_x[None, :, :]
        d2 = np.einsum("qnd,qnd->qn", diff, diff)
        out[start:start + _CHUNK] = np.argsort(d2, axis=1, kind="stable")
    return out


def knn_classify(train_features, train_labels, test_features, k: int = 5) -> np.ndarray:
    """Majority vote among the ``k`` nearest training rows (Euclidean).

    With binary labels and odd ``k`` the vote cannot tie.  If ``k``
    exceeds the training size every row votes; a tied vote then goes to
    the label of the single nearest neighbour.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    train_x = np.asarray(train_features, dtype=float)
    train_y = np.asarray(train_labels, dtype=np.int8)
    test_x = np.asarray(test_features, dtype=float)
    if len(train_x) == 0:
        raise ValueError("empty training set")
    if test_x.ndim != 2 or test_x.shape[1] != train_x.shape[1]:
        raise DimensionMismatch(
            f"test rows have shape {test_x.shape}, training rows have {train_x.shape[1]} features")
    k = min(k, len(train_x))
    order = neighbour_order(train_x, test_x)[:, :k]
    votes = train_y[order].sum(axis=1)
    pred = (2 * votes > k).astype(np.int8)
    tied = 2 * votes == k
    pred[tied] = train_y[order[tied, 0]]
    return pred
