"""Before/after and method-comparison experiments.

For every dataset and repetition the data is split 70/30 per class, the
training side is z-scored, each method augments the training side, and
a k-NN classifier trained on the augmented rows is scored on the untouched
test rows.  Per-cell metrics are averaged over repetitions and ranked
across methods.

Seed rule
---------
Every random choice draws from ``numpy.random.SeedSequence`` entropy
built from the master seed and the cell coordinates: the split uses
``(master, d, outer)`` and a method's oversampler and training-row order
use ``(master, d, outer, inner, method)``, with ``d`` the dataset's
position in the config and ``method`` its index in ``METHODS``.
Appending datasets, repetitions or methods leaves the seeds of existing
cells unchanged.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (
    Dataset,
    SplitSpec,
    binarize,
    load_csv,
    stratified_split,
    zscore_apply,
    zscore_fit,
)
from .errors import AssomError, ConfigError, IncompleteGrid
from .evaluation import METRIC_NAMES, average_rank, confusion, knn_classify, metrics
from .evaluation.smote import smote_oversample
from .network import TrainingConfig
from .oversampler import OversampleConfig, compute_module_count, oversample

log = logging.getLogger(__name__)

METHODS = ("none", "assom", "smote")

PROTOCOL_NOTES = [
    "harness classifier is brute-force k-NN in place of MLP / SVM-RBF",
    "inner repetitions reseed the oversamplers and the training-row order; "
    "k-NN has no initial state to restart",
    "normalization, ASSOM fitting and SMOTE neighbour search see training rows only",
]


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    positive_labels: tuple[str, ...]
    label_column: object = -1
    has_header: bool = True
    delimiter: str = ","

    def load(self) -> Dataset:
        table = load_csv(self.path, self.has_header, self.label_column, self.delimiter)
        return binarize(table, self.positive_labels, name=self.name)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetSpec, ...] = ()
    methods: tuple[str, ...] = METHODS
    outer_repetitions: int = 5
    inner_repetitions: int = 5
    train_fraction: float = 0.7
    knn_k: int = 5
    smote_k: int = 5
    smote_amount: int | None = None
    training: TrainingConfig = field(default_factory=TrainingConfig)
    oversample: OversampleConfig = field(default_factory=OversampleConfig)
    out_dir: str = "runs"
    seed: int = 0
    jobs: int = 1
    format: str = "both"
    train_dataset: str | None = None

    def __post_init__(self):
        if self.outer_repetitions < 1 or self.inner_repetitions < 1:
            raise ConfigError("repetition counts must be at least 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}, got {list(self.methods)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods must not repeat")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.knn_k < 1 or self.knn_k % 2 == 0:
            raise ConfigError(f"knn_k must be an odd positive integer, got {self.knn_k}")
        if self.smote_k < 1:
            raise ConfigError("smote.k must be positive")
        if self.smote_amount is not None and self.smote_amount < 0:
            raise ConfigError("smote.amount must be non-negative or 'auto'")
        if self.format not in ("json", "csv", "both"):
            raise ConfigError(f"format must be json, csv or both, got {self.format!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError("dataset names must be unique")

    def echo(self) -> dict:
        """Plain-data view of the configuration for report metadata."""
        d = asdict(self)
        d["datasets"] = [dict(asdict(s), positive_labels=list(s.positive_labels)) for s in self.datasets]
        d["methods"] = list(self.methods)
        d.pop("out_dir")
        d.pop("jobs")
        d.pop("format")
        return d


# ---------------------------------------------------------------------------
# Seeds and audit
# ---------------------------------------------------------------------------

def derive_seed(master: int, *path: int) -> int:
    """64-bit seed for the cell identified by ``path`` under ``master``."""
    ss = np.random.SeedSequence([int(master), *map(int, path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RowAudit:
    """Records the row ids consumed by every fitting step."""

    def __init__(self):
        self.entries = []

    def __call__(self, operation: str, row_ids) -> None:
        ids = sorted(int(i) for i in np.asarray(row_ids) if i >= 0)
        self.entries.append((operation, ids))


# ---------------------------------------------------------------------------
# One (dataset, outer, inner) cell
# ---------------------------------------------------------------------------

@dataclass
class CellResult:
    dataset: str
    method: str
    outer: int
    inner: int
    report: dict | None
    error: str | None = None
    synthetic: int = 0


def _augment(method: str, train: Dataset, cfg: ExperimentConfig, seed: int, audit: RowAudit) -> Dataset:
    if method == "none":
        return train
    if method == "assom":
        ocfg = replace(cfg.oversample, normalize=False,
                       training=replace(cfg.training, seed=seed))
        augmented, _ = oversample(train, ocfg, row_audit=audit)
        return augmented
    if method == "smote":
        amount = cfg.smote_amount
        if amount is None:
            amount = compute_module_count(train.n_majority, train.n_minority)
        audit("smote.fit", train.row_ids[train.labels == 1])
        return smote_oversample(train, cfg.smote_k, amount, seed)
    raise ConfigError(f"unknown method {method!r}")


def run_cell(dataset: Dataset, ds_index: int, outer: int, inner: int,
             cfg: ExperimentConfig) -> tuple[list[CellResult], list]:
    """Evaluate every configured method on one split / reseed.

    Returns the per-method results and the row audit of the cell.
    """
    audit = RowAudit()
    split_seed = derive_seed(cfg.seed, ds_index, outer)
    train, test = stratified_split(dataset, SplitSpec(cfg.train_fraction, split_seed))
    audit("zscore.fit", train.row_ids)
    params = zscore_fit(train)
    train_z = train.with_features(zscore_apply(params, train.features))
    test_z = test.with_features(zscore_apply(params, test.features))

    results = []
    for method in cfg.methods:
        method_seed = derive_seed(cfg.seed, ds_index, outer, inner, METHODS.index(method))
        try:
            augmented = _augment(method, train_z, cfg, method_seed, audit)
            order = np.random.default_rng(method_seed).permutation(len(augmented))
            augmented = augmented.subset(order)
            audit("knn.fit", augmented.row_ids)
            pred = knn_classify(augmented.features, augmented.labels, test_z.features, cfg.knn_k)
            report = metrics(confusion(test_z.labels, pred)).as_dict()
            results.append(CellResult(dataset.name, method, outer, inner, report,
                                      synthetic=len(augmented) - len(train_z)))
        except AssomError as exc:
            log.warning("%s/%s rep %d.%d failed: %s", dataset.name, method, outer, inner, exc)
            results.append(CellResult(dataset.name, method, outer, inner, None,
                                      error=f"{type(exc).__name__}: {exc}"))
    test_ids = sorted(int(i) for i in test.row_ids)
    return results, [("test", test_ids)] + audit.entries


def _run_job(args):
    dataset, ds_index, outer, inner, cfg = args
    return run_cell(dataset, ds_index, outer, inner, cfg)


# ---------------------------------------------------------------------------
# Whole experiment
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    config: ExperimentConfig
    datasets: dict
    cells: list[CellResult]
    aggregates: dict
    rank_table: object
    audit: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[CellResult]:
        return [c for c in self.cells if c.error is not None]

    def to_json_dict(self) -> dict:
        return {
            "artifact": {"name": "assom", "version": __version__},
            "master_seed": self.config.seed,
            "seed_rule": "SeedSequence([master, dataset_index, outer]) for splits; "
                         "SeedSequence([master, dataset_index, outer, inner, method_index]) "
                         "for oversamplers and training-row order",
            "protocol_notes": PROTOCOL_NOTES,
            "config": self.config.echo(),
            "datasets": self.datasets,
            "cells": [
                {"dataset": c.dataset, "method": c.method, "outer": c.outer, "inner": c.inner,
                 "status": "ok" if c.error is None else "failed",
                 "synthetic_rows": c.synthetic,
                 **({"metrics": c.report} if c.error is None else {"error": c.error})}
                for c in self.cells
            ],
            "aggregates": self.aggregates,
            "rank_table": None if self.rank_table is None else self.rank_table.as_dict(),
        }

    def summary_rows(self):
        """(dataset, method, metric, mean, std, n, rank_points) rows."""
        for ds, by_method in self.aggregates.items():
            for method, by_metric in by_method.items():
                for metric in METRIC_NAMES:
                    agg = by_metric[metric]
                    pts = None
                    if self.rank_table is not None:
                        pts = self.rank_table.points[ds][metric][method]
                    yield ds, method, metric, agg["mean"], agg["std"], agg["n"], pts


def aggregate(cells: list[CellResult], methods) -> dict:
    """Mean and population standard deviation per dataset/method/metric."""
    out = {}
    for c in cells:
        out.setdefault(c.dataset, {m: [] for m in methods})
        if c.error is None:
            out[c.dataset][c.method].append(c.report)
    agg = {}
    for ds, by_method in out.items():
        agg[ds] = {}
        for method, reports in by_method.items():
            agg[ds][method] = {}
            for metric in METRIC_NAMES:
                vals = np.array([r[metric] for r in reports], dtype=float)
                if len(vals):
                    mean = math.fsum(vals) / len(vals)
                    std = math.sqrt(math.fsum((vals - mean) ** 2) / len(vals))
                else:
                    mean = std = None
                agg[ds][method][metric] = {"mean": mean, "std": std, "n": int(len(vals))}
    return agg


def run_experiment(cfg: ExperimentConfig, datasets: list[Dataset] | None = None) -> RunReport:
    """Run every dataset x outer x inner cell and assemble the report.

    Cells that fail are kept with an error marker; the rank table is only
    built when the grid is complete.
    """
    if datasets is None:
        datasets = [spec.load() for spec in cfg.datasets]
    if not datasets:
        raise ConfigError("no datasets configured")

    jobs = [(ds, d_idx, outer, inner, cfg)
            for d_idx, ds in enumerate(datasets)
            for outer in range(cfg.outer_repetitions)
            for inner in range(cfg.inner_repetitions)]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outputs = list(pool.map(_run_job, jobs))
    else:
        outputs = [_run_job(j) for j in jobs]

    cells, audit = [], {}
    for (ds, _, outer, inner, _), (results, entries) in zip(jobs, outputs):
        cells.extend(results)
        audit[(ds.name, outer, inner)] = entries
    cells.sort(key=lambda c: ([d.name for d in datasets].index(c.dataset),
                              cfg.methods.index(c.method), c.outer, c.inner))

    aggregates = aggregate(cells, cfg.methods)
    info = {ds.name: {"rows": len(ds), "features": ds.n_features,
                      "minority": ds.n_minority, "majority": ds.n_majority,
                      "minority_label": ds.class_names[1]}
            for ds in datasets}
    rank_table = None
    if not any(c.error for c in cells):
        means = {ds: {m: {k: v["mean"] for k, v in by_metric.items()}
                      for m, by_metric in by_method.items()}
                 for ds, by_method in aggregates.items()}
        rank_table = average_rank(means, list(cfg.methods), list(METRIC_NAMES))
    return RunReport(cfg, info, cells, aggregates, rank_table, audit)


def write_report(report: RunReport, out_dir, fmt: str = "both") -> list[Path]:
    """Write ``report.json`` and/or ``report.csv`` + ``cells.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        path = out / "report.json"
        path.write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
        written.append(path)
    if fmt in ("csv", "both"):
        path = out / "report.csv"
        lines = ["dataset,method,metric,mean,std,n,rank_points"]
        for ds, method, metric, mean, std, n, pts in report.summary_rows():
            lines.append(",".join([ds, method, metric, _num(mean), _num(std), str(n), _num(pts)]))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

        path = out / "cells.csv"
        lines = ["dataset,method,outer,inner,status,tp,fp,tn,fn," + ",".join(METRIC_NAMES)]
        for c in report.cells:
            if c.error is None:
                r = c.report
                vals = [str(r[k]) for k in ("tp", "fp", "tn", "fn")] + [_num(r[m]) for m in METRIC_NAMES]
                status = "ok"
            else:
                vals = [""] * (4 + len(METRIC_NAMES))
                status = "failed"
            lines.append(",".join([c.dataset, c.method, str(c.outer), str(c.inner), status] + vals))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

        if report.rank_table is not None:
            path = out / "ranks.csv"
            lines = ["dataset,method,metric,points"]
            for ds, method, metric, pts in report.rank_table.rows():
                lines.append(f"{ds},{method},{metric},{_num(pts)}")
            for metric, by_method in report.rank_table.per_metric.items():
                for method, v in by_method.items():
                    lines.append(f"AVERAGE,{method},{metric},{_num(v)}")
            for method, v in report.rank_table.overall.items():
                lines.append(f"AVERAGE,{method},overall,{_num(v)}")
            path.write_text("\n".join(lines) + "\n")
            written.append(path)
    return written


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def check_complete(report: RunReport) -> None:
    if report.failures:
        failed = ", ".join(f"{c.dataset}/{c.method}#{c.outer}.{c.inner}" for c in report.failures[:5])
        raise IncompleteGrid(f"{len(report.failures)} cell(s) failed: {failed}")
