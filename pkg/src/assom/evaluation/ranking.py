"""Average-rank aggregation across datasets and metrics.

Within every (dataset, metric) cell the best of M methods receives M
points and the worst 1.  Tied methods share points according to
``ties``: ``"average"`` gives each the mean of the points they span,
``"min"`` gives each the lowest of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..errors import IncompleteGrid

TIE_METHODS = ("average", "min", "max")


@dataclass
class RankTable:
    methods: list[str]
    metrics: list[str]
    datasets: list[str]
    points: dict          # dataset -> metric -> method -> points
    per_metric: dict      # metric -> method -> mean points over datasets
    overall: dict         # method -> mean of per_metric averages
    ties: str = "average"

    def as_dict(self) -> dict:
        return {"ties": self.ties, "methods": self.methods, "metrics": self.metrics,
                "datasets": self.datasets, "points": self.points,
                "average_rank": self.per_metric, "overall_rank": self.overall}

    def rows(self):
        """(dataset, method, metric, points) tuples in table order."""
        for ds in self.datasets:
            for method in self.methods:
                for metric in self.metrics:
                    yield ds, method, metric, self.points[ds][metric][method]


def average_rank(results: dict, methods=None, metrics=None, ties: str = "average") -> RankTable:
    """Rank methods per (dataset, metric) and average the points.

    ``results`` maps ``dataset -> method -> metric -> value``; higher
    values are better.  Every dataset must report every method and metric.
    """
    if ties not in TIE_METHODS:
        raise ValueError(f"ties must be one of {TIE_METHODS}, got {ties!r}")
    datasets = list(results)
    if not datasets:
        raise IncompleteGrid("no results to rank")
    if methods is None:
        methods = list(results[datasets[0]])
    if metrics is None:
        metrics = list(results[datasets[0]][methods[0]])
    methods, metrics = list(methods), list(metrics)

    points = {}
    for ds in datasets:
        points[ds] = {}
        for metric in metrics:
            values = []
            for method in methods:
                try:
                    v = results[ds][method][metric]
                except KeyError:
                    raise IncompleteGrid(f"missing result for {ds}/{method}/{metric}") from None
                if v is None or not np.isfinite(v):
                    raise IncompleteGrid(f"no valid result for {ds}/{method}/{metric}")
                values.append(float(v))
            pts = rankdata(values, method=ties)
            points[ds][metric] = {m: float(p) for m, p in zip(methods, pts)}

    per_metric = {
        metric: {m: float(np.mean([points[ds][metric][m] for ds in datasets])) for m in methods}
        for metric in metrics
    }
    overall = {m: float(np.mean([per_metric[metric][m] for metric in metrics])) for m in methods}
    return RankTable(methods, metrics, datasets, points, per_metric, overall, ties)
