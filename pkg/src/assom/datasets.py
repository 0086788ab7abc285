"""Loading, binarization, normalization and stratified splitting.

Labels inside a :class:`Dataset` are binary: ``1`` marks the minority
(positive) class and ``0`` the majority.  Every row carries a stable
``row_id`` so that splits can be audited against the rows consumed by
fitting steps.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NotMinority, ParseError, RaggedRows, TooSmall, UnknownLabel

STD_FLOOR = 1e-12


@dataclass
class RawTable:
    """Parsed CSV: numeric features plus label strings as they appeared."""

    features: np.ndarray
    labels: list[str]
    feature_names: list[str]
    label_name: str = "label"
    source: str = ""


@dataclass
class Dataset:
    name: str
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    class_names: tuple[str, str] = ("negative", "positive")
    label_name: str = "label"
    row_ids: np.ndarray = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if len(self.labels) != len(self.features):
            raise ValueError(
                f"{len(self.features)} feature rows but {len(self.labels)} labels")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise ValueError("labels must be 0 (majority) or 1 (minority)")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain NaN or Inf")
        if self.row_ids is None:
            self.row_ids = np.arange(len(self.features))
        else:
            self.row_ids = np.asarray(self.row_ids, dtype=np.int64)

    def __len__(self):
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_minority(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def n_majority(self) -> int:
        return int(np.count_nonzero(self.labels == 0))

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(name or self.name, self.features[idx], self.labels[idx],
                       list(self.feature_names), self.class_names, self.label_name,
                       self.row_ids[idx])

    def with_features(self, features) -> "Dataset":
        return Dataset(self.name, features, self.labels.copy(), list(self.feature_names),
                       self.class_names, self.label_name, self.row_ids.copy())

    def append(self, features, labels) -> "Dataset":
        """Rows appended after the existing ones; new rows get ``row_id = -1``."""
        features = np.asarray(features, dtype=float).reshape(-1, self.n_features)
        labels = np.asarray(labels, dtype=np.int8)
        return Dataset(self.name, np.vstack([self.features, features]),
                       np.concatenate([self.labels, labels]), list(self.feature_names),
                       self.class_names, self.label_name,
                       np.concatenate([self.row_ids, np.full(len(labels), -1, dtype=np.int64)]))

    def label_strings(self) -> list[str]:
        return [self.class_names[v] for v in self.labels]


# ---------------------------------------------------------------------------
# CSV / KEEL input
# ---------------------------------------------------------------------------

def _keel_attribute_name(line: str) -> str | None:
    parts = line.split(None, 2)
    if len(parts) >= 2 and parts[0].lower() == "@attribute":
        name = parts[1]
        # names may be written as 'Name{a,b}' with no space before the braces
        return name.split("{", 1)[0].split("[", 1)[0]
    return None


def load_csv(path, has_header: bool = True, label_column=-1, delimiter: str = ",") -> RawTable:
    """Read a numeric CSV (or KEEL ``.dat``) file.

    Lines starting with ``@`` are KEEL metadata: they are skipped, and
    their ``@attribute`` entries provide the column names (a KEEL file has
    no header row after ``@data``).  Blank lines are ignored.

    ``label_column`` is a column name or a (possibly negative) index.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: cannot read file ({exc})") from exc

    keel_names = []
    is_keel = False
    data_lines = []          # (line number, text)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("@"):
            is_keel = True
            name = _keel_attribute_name(stripped)
            if name is not None:
                keel_names.append(name)
            continue
        data_lines.append((lineno, line))

    rows = []
    reader = csv.reader(io.StringIO("\n".join(ln for _, ln in data_lines)),
                        delimiter=delimiter, skipinitialspace=True)
    for (lineno, _), row in zip(data_lines, reader):
        rows.append((lineno, [cell.strip() for cell in row]))

    if is_keel:
        header = keel_names or None
    elif has_header:
        if not rows:
            raise ParseError(f"{path}: empty file")
        header = rows[0][1]
        rows = rows[1:]
    else:
        header = None

    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(header) if header else len(rows[0][1])
    for lineno, row in rows:
        if len(row) != width:
            raise RaggedRows(
                f"{path}:{lineno}: expected {width} fields, found {len(row)}", row=lineno)
    if header is None:
        header = [f"x{i}" for i in range(width - 1)] + ["label"]

    if isinstance(label_column, str):
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise ParseError(f"{path}: no column named {label_column!r}") from None
    else:
        label_idx = int(label_column)
        if not -width <= label_idx < width:
            raise ParseError(f"{path}: label column {label_idx} out of range for {width} columns")
        label_idx %= width

    feature_cols = [j for j in range(width) if j != label_idx]
    features = np.empty((len(rows), len(feature_cols)))
    labels = []
    for i, (lineno, row) in enumerate(rows):
        for k, j in enumerate(feature_cols):
            cell = row[j]
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}:{lineno}: column {j} ({header[j]!r}) is not numeric: {cell!r}",
                    row=lineno, column=header[j]) from None
            if not math.isfinite(value):
                raise ParseError(
                    f"{path}:{lineno}: column {j} ({header[j]!r}) is not finite: {cell!r}",
                    row=lineno, column=header[j])
            features[i, k] = value
        labels.append(row[label_idx])
    return RawTable(features, labels, [header[j] for j in feature_cols],
                    header[label_idx], str(path))


def binarize(table: RawTable, positive_labels, name: str | None = None) -> Dataset:
    """Mark rows whose label is in ``positive_labels`` as the minority class.

    Raises
    ------
    UnknownLabel
        If a requested positive label never occurs.
    NotMinority
        If the positive rows are not strictly fewer than the rest.
    """
    positive = {str(p) for p in positive_labels}
    if not positive:
        raise UnknownLabel("positive_labels must not be empty")
    present = set(table.labels)
    missing = sorted(positive - present)
    if missing:
        raise UnknownLabel(f"labels not found in data: {', '.join(missing)}")
    labels = np.array([lab in positive for lab in table.labels], dtype=np.int8)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos >= n_neg:
        raise NotMinority(
            f"positive class has {n_pos} rows but the rest only {n_neg}; "
            f"it must be strictly smaller")
    others = sorted(present - positive)
    minority_name = "|".join(sorted(positive))
    majority_name = others[0] if len(others) == 1 else "rest"
    return Dataset(name or Path(table.source).stem or "dataset", table.features.copy(), labels,
                   list(table.feature_names), (majority_name, minority_name), table.label_name)


def _format_float(v: float) -> str:
    return repr(float(v))


def write_csv(dataset: Dataset, path, delimiter: str = ",") -> None:
    """Write features and label strings with a header row.

    Floats are written with ``repr`` so that re-reading them is lossless.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(list(dataset.feature_names) + [dataset.label_name])
        for row, lab in zip(dataset.features, dataset.label_strings()):
            w.writerow([_format_float(v) for v in row] + [lab])


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def class_train_count(size: int, fraction: float) -> int:
    """Training rows taken from a class of ``size`` rows.

    ``round(fraction * size)`` with halves rounded up, kept within
    ``[1, size - 1]`` so both sides of the split see every class.
    """
    n = math.floor(fraction * size + 0.5)
    return min(max(n, 1), size - 1)


def stratified_split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Per-class shuffled split preserving the class ratio.

    Rows keep their original relative order inside each side.
    """
    rng = np.random.default_rng(spec.seed)
    train_parts, test_parts = [], []
    for label in (0, 1):
        idx = np.flatnonzero(dataset.labels == label)
        if len(idx) < 2:
            raise TooSmall(
                f"class {dataset.class_names[label]!r} has {len(idx)} row(s); need at least 2 to split")
        perm = rng.permutation(idx)
        k = class_train_count(len(idx), spec.train_fraction)
        train_parts.append(perm[:k])
        test_parts.append(perm[k:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    return (dataset.subset(train_idx, dataset.name),
            dataset.subset(test_idx, dataset.name))


# ---------------------------------------------------------------------------
# Z-scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationParams:
    mean: np.ndarray
    std: np.ndarray


def zscore_fit(train: Dataset) -> NormalizationParams:
    """Per-feature mean and population standard deviation of ``train``.

    Constant features get their exact value as mean and a unit scale, so
    they map to zero and back to the constant without rounding drift.
    """
    x = train.features
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    constant = np.ptp(x, axis=0) == 0
    mean = np.where(constant, x[0], mean)
    std = np.where(constant | (std < STD_FLOOR), 1.0, std)
    return NormalizationParams(mean, std)


def zscore_apply(params: NormalizationParams, features) -> np.ndarray:
    return (np.asarray(features, dtype=float) - params.mean) / params.std


def zscore_invert(params: NormalizationParams, features) -> np.ndarray:
    return np.asarray(features, dtype=float) * params.std + params.mean
