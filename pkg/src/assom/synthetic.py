"""Synthetic imbalanced datasets with known generating distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset


@dataclass(frozen=True)
class GaussianClass:
    mean: np.ndarray
    cov: np.ndarray

    def mahalanobis(self, x) -> np.ndarray:
        d = np.atleast_2d(x) - self.mean
        return np.sqrt(np.einsum("ij,jk,ik->i", d, np.linalg.inv(self.cov), d))


def two_gaussian_classes(dim: int = 4, separation: float = 1.0) -> tuple[GaussianClass, GaussianClass]:
    """Majority ``N(0, I)`` and an elongated minority Gaussian.

    The minority mean sits at ``separation`` along the first axis; its
    covariance has variances (0.6, 0.6, 0.05, ...), so most of its spread
    lies in a 2-D plane.
    """
    majority = GaussianClass(np.zeros(dim), np.eye(dim))
    mean = np.zeros(dim)
    mean[0] = separation
    var = np.full(dim, 0.05)
    var[:2] = 0.6
    minority = GaussianClass(mean, np.diag(var))
    return majority, minority


def make_two_gaussian(n_majority: int = 714, n_minority: int = 80, dim: int = 4,
                      separation: float = 1.0, seed: int = 0) -> Dataset:
    """Binary dataset drawn from :func:`two_gaussian_classes`.

    Majority rows come first.  The defaults give a 9:1 imbalance whose
    70% stratified training split holds 500 majority and 56 minority rows.
    """
    majority, minority = two_gaussian_classes(dim, separation)
    rng = np.random.default_rng(seed)
    x_maj = rng.multivariate_normal(majority.mean, majority.cov, size=n_majority)
    x_min = rng.multivariate_normal(minority.mean, minority.cov, size=n_minority)
    features = np.vstack([x_maj, x_min])
    labels = np.concatenate([np.zeros(n_majority, np.int8), np.ones(n_minority, np.int8)])
    return Dataset("two_gaussian", features, labels, [f"x{i}" for i in range(dim)],
                   ("majority", "minority"), "label")
