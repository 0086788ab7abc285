from .knn import knn_classify
from .metrics import METRIC_NAMES, ConfusionCounts, MetricReport, confusion, metrics
from .ranking import RankTable, average_rank
from .smote import SmoteBatch, smote_oversample, smote_samples

__all__ = [
    "METRIC_NAMES", "ConfusionCounts", "MetricReport", "RankTable", "SmoteBatch",
    "average_rank", "confusion", "knn_classify", "metrics", "smote_oversample", "smote_samples",
]
