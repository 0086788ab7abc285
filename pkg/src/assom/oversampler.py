"""Minority oversampling through ASSOM subspace reconstructions.

An ASSOM with N modules is trained on the mean-centred minority class.
Every minority row is then projected onto each module's subspace and the
projections (shifted back by the minority mean) become synthetic minority
samples, N per source row.  N defaults to ``round(imbalance ratio) - 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np

from .datasets import Dataset, NormalizationParams, zscore_apply, zscore_fit, zscore_invert
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyClass,
    InsufficientData,
    InsufficientVariance,
    NotMinority,
)
from .network import AssomNetwork, TrainingConfig, TrainingHistory, init_network, train

log = logging.getLogger(__name__)

VARIANCE_TOL = 1e-12


def compute_module_count(n_majority: int, n_minority: int) -> int:
    """``max(1, round(n_majority / n_minority) - 1)``, rounding halves up.

    The ratio is evaluated exactly, so e.g. 3/2 rounds to 2.
    """
    if n_minority <= 0:
        raise EmptyClass("the minority class is empty")
    if n_majority < n_minority:
        raise NotMinority(
            f"minority count {n_minority} exceeds majority count {n_majority}")
    ratio = Fraction(n_majority, n_minority)
    rounded = int((ratio + Fraction(1, 2)).__floor__())
    return max(1, rounded - 1)


@dataclass(frozen=True)
class OversampleConfig:
    """Settings for ``fit``/``oversample``.

    ``selection_mode`` is ``"keep_all"`` or ``"top_k"``; with ``top_k``
    only the ``top_k`` reconstructions with the lowest error are kept per
    source row.  ``source_rows="random"`` draws source rows with
    replacement instead of using every minority row once.
    """

    subspace_dim: int = 2
    module_count_override: int | None = None
    selection_mode: Literal["keep_all", "top_k"] = "keep_all"
    top_k: int = 1
    balance_trim: bool = True
    normalize: bool = True
    source_rows: Literal["all", "random"] = "all"
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self):
        if self.subspace_dim < 1:
            raise ConfigError(f"subspace_dim must be positive, got {self.subspace_dim}")
        if self.module_count_override is not None and self.module_count_override < 1:
            raise ConfigError("module_count_override must be a positive integer")
        if self.selection_mode not in ("keep_all", "top_k"):
            raise ConfigError(f"unknown selection_mode {self.selection_mode!r}")
        if self.selection_mode == "top_k" and self.top_k < 1:
            raise ConfigError(f"top_k must be positive, got {self.top_k}")
        if self.source_rows not in ("all", "random"):
            raise ConfigError(f"unknown source_rows {self.source_rows!r}")


@dataclass
class FittedSampler:
    mean: np.ndarray
    network: AssomNetwork
    n_modules: int
    history: TrainingHistory

    @property
    def bases(self) -> np.ndarray:
        return self.network.stacked()


@dataclass
class SyntheticBatch:
    """Generated samples with their provenance.

    ``source_rows`` index the dataset the batch was generated from;
    ``reconstruction_errors`` are distances in the space the ASSOM was
    trained in (z-scored units when normalization is on).
    """

    samples: np.ndarray
    source_rows: np.ndarray
    modules: np.ndarray
    reconstruction_errors: np.ndarray
    sampler: FittedSampler | None = None
    normalization: NormalizationParams | None = None

    def __len__(self):
        return len(self.samples)

    def provenance_rows(self):
        for i, n, e in zip(self.source_rows, self.modules, self.reconstruction_errors):
            yield int(i), int(n), float(e)


def fit(minority_features, config: OversampleConfig, n_majority: int,
        callback=None) -> FittedSampler:
    """Train an ASSOM on the centred minority rows.

    The module count comes from ``compute_module_count`` unless
    ``config.module_count_override`` is set.  ``callback`` is forwarded
    to :func:`assom.network.train`.
    """
    x = np.asarray(minority_features, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise EmptyClass("no minority samples to fit on")
    h = config.subspace_dim
    if h > x.shape[1]:
        raise ConfigError(f"subspace_dim {h} exceeds the feature dimension {x.shape[1]}")
    if len(x) < h + 1:
        raise InsufficientData(
            f"need at least {h + 1} minority samples for subspace_dim {h}, got {len(x)}")
    mean = x.mean(axis=0)
    centred = x - mean
    if np.max(np.abs(centred)) < VARIANCE_TOL:
        raise InsufficientVariance("all minority samples coincide; nothing to learn")

    if config.module_count_override is not None:
        n_modules = config.module_count_override
    else:
        n_modules = compute_module_count(n_majority, len(x))
    net = init_network(x.shape[1], h, n_modules, seed=config.training.seed)
    trained, history = train(net, centred, config.training, callback=callback)
    log.info("fitted ASSOM: N=%d H=%d on %d minority rows, final cost %.6g",
             n_modules, h, len(x), history.cost[-1] if history.cost else float("nan"))
    return FittedSampler(mean, trained, n_modules, history)


def generate_for_sample(sampler: FittedSampler, x) -> tuple[np.ndarray, np.ndarray]:
    """Reconstruct ``x`` through every module.

    Returns ``(samples, errors)``: an ``(N, D)`` array of synthetic points
    ``P_n (x - mean) + mean`` in module order, and the residual norms
    ``|(I - P_n)(x - mean)|``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != sampler.mean.shape:
        raise DimensionMismatch(f"x has shape {x.shape}, sampler expects {sampler.mean.shape}")
    bases = sampler.bases
    v = x - sampler.mean
    coef = bases @ v                                  # (N, H)
    proj = np.einsum("nh,nhd->nd", coef, bases)
    errors = np.linalg.norm(v[None, :] - proj, axis=1)
    return proj + sampler.mean, errors


def _select(errors: np.ndarray, config: OversampleConfig, n_modules: int) -> np.ndarray:
    """Boolean keep-mask over an (R, N) error table."""
    if config.selection_mode == "keep_all":
        return np.ones_like(errors, dtype=bool)
    if config.top_k > n_modules:
        raise ConfigError(f"top_k={config.top_k} exceeds the module count N={n_modules}")
    order = np.argsort(errors, axis=1, kind="stable")[:, :config.top_k]
    keep = np.zeros_like(errors, dtype=bool)
    np.put_along_axis(keep, order, True, axis=1)
    return keep


def oversample(dataset: Dataset, config: OversampleConfig,
               row_audit=None) -> tuple[Dataset, SyntheticBatch]:
    """Append ASSOM-generated minority samples to ``dataset``.

    Original rows come first, unchanged and in order, followed by the
    synthetic rows ordered by (source row, module).  With ``balance_trim``
    the synthetic pool is cut, lowest reconstruction error first, to
    exactly the class-count deficit; a pool that is too small is reused in
    further rounds (producing repeated samples) until the deficit is met.
    """
    minority_idx = np.flatnonzero(dataset.labels == 1)
    n_min = len(minority_idx)
    n_maj = len(dataset) - n_min
    if n_min == 0:
        raise EmptyClass(f"dataset {dataset.name!r} has no minority rows")
    if n_maj < n_min:
        raise NotMinority(f"dataset {dataset.name!r}: minority {n_min} > majority {n_maj}")
    if config.module_count_override is None:
        n_modules = compute_module_count(n_maj, n_min)
    else:
        n_modules = config.module_count_override
    if config.selection_mode == "top_k" and config.top_k > n_modules:
        raise ConfigError(f"top_k={config.top_k} exceeds the module count N={n_modules}")

    features = dataset.features
    params = None
    if config.normalize:
        if row_audit is not None:
            row_audit("zscore.fit", dataset.row_ids)
        params = zscore_fit(dataset)
        space = zscore_apply(params, features)
    else:
        space = features
    if row_audit is not None:
        row_audit("assom.fit", dataset.row_ids[minority_idx])
    sampler = fit(space[minority_idx], config, n_maj)

    if config.source_rows == "all":
        sources = minority_idx
    else:
        rng = np.random.default_rng(np.random.SeedSequence(config.training.seed, spawn_key=(2,)))
        sources = np.sort(rng.choice(minority_idx, size=n_min, replace=True))

    bases = sampler.bases
    v = space[sources] - sampler.mean                                 # (R, D)
    coef = np.einsum("nhd,rd->rnh", bases, v)
    proj = np.einsum("rnh,nhd->rnd", coef, bases)                     # (R, N, D)
    errors = np.linalg.norm(v[:, None, :] - proj, axis=2)             # (R, N)
    keep = _select(errors, config, sampler.n_modules)

    r_idx, n_idx = np.nonzero(keep)                                   # row-major order
    pool_err = errors[r_idx, n_idx]
    chosen = np.arange(len(r_idx))
    if config.balance_trim:
        deficit = n_maj - n_min
        by_error = np.lexsort((n_idx, r_idx, pool_err))
        if deficit <= len(by_error):
            chosen = np.sort(by_error[:deficit])
        else:
            rounds, rest = divmod(deficit, len(by_error))
            log.info("synthetic pool of %d is short of the deficit %d; reusing it %d more time(s)",
                     len(by_error), deficit, rounds - 1 + (rest > 0))
            chosen = np.sort(np.concatenate([np.tile(np.arange(len(r_idx)), rounds),
                                             by_error[:rest]]), kind="stable")
    r_sel, n_sel = r_idx[chosen], n_idx[chosen]

    synth = proj[r_sel, n_sel] + sampler.mean
    if params is not None:
        synth = zscore_invert(params, synth)
    batch = SyntheticBatch(
        samples=synth,
        source_rows=sources[r_sel],
        modules=n_sel,
        reconstruction_errors=errors[r_sel, n_sel],
        sampler=sampler,
        normalization=params,
    )
    augmented = dataset.append(synth, np.ones(len(synth), dtype=np.int8))
    log.info("oversampled %r: N=%d, minority %d -> %d, majority %d",
             dataset.name, sampler.n_modules, n_min, n_min + len(synth), n_maj)
    return augmented, batch


def membership_residuals(batch: SyntheticBatch) -> np.ndarray:
    """``|(I - P_n)(s - mean)|`` for every synthetic sample, in ASSOM space."""
    s = batch.samples
    if batch.normalization is not None:
        s = zscore_apply(batch.normalization, s)
    bases = batch.sampler.bases[batch.modules]           # (S, H, D)
    v = s - batch.sampler.mean
    coef = np.einsum("shd,sd->sh", bases, v)
    return np.linalg.norm(v - np.einsum("sh,shd->sd", coef, bases), axis=1)
