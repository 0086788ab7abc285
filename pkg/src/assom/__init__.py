"""ASSOM subspace learning and ASSOM-based minority oversampling."""

from .datasets import Dataset, NormalizationParams, SplitSpec, binarize, load_csv, stratified_split
from .network import AssomNetwork, TrainingConfig, init_network, train
from .oversampler import OversampleConfig, SyntheticBatch, compute_module_count, fit, oversample
from .subspace import BasisSet, gram_schmidt, project, projector_matrix, residual

__version__ = "0.1.0"

__all__ = [
    "AssomNetwork", "BasisSet", "Dataset", "NormalizationParams", "OversampleConfig",
    "SplitSpec", "SyntheticBatch", "TrainingConfig", "binarize", "compute_module_count",
    "fit", "gram_schmidt", "init_network", "load_csv", "oversample", "project",
    "projector_matrix", "residual", "stratified_split", "train",
]
