"""TOML experiment configuration.

Example::

    seed = 7
    out = "runs/desk"
    methods = ["none", "assom", "smote"]

    [protocol]
    outer_repetitions = 5
    inner_repetitions = 5
    train_fraction = 0.7
    knn_k = 5

    [training]
    epochs = 100
    eta_start = 0.1
    eta_end = 0.001
    sigma = 1.0
    alpha = 1e-4

    [oversample]
    subspace_dim = 2
    selection_mode = "keep_all"
    balance_trim = true

    [smote]
    k = 5
    amount = "auto"

    [[datasets]]
    name = "wine"
    path = "data/wine.csv"
    positive_labels = ["class_2"]

Relative dataset paths resolve against the directory of the config file.
"""

from __future__ import annotations

import sys
from dataclasses import fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import AssomError, ConfigError
from .experiment import DatasetSpec, ExperimentConfig
from .network import TrainingConfig
from .oversampler import OversampleConfig

_TOP_KEYS = {"seed", "out", "methods", "jobs", "format", "protocol", "training",
             "oversample", "smote", "train", "datasets"}
_PROTOCOL_KEYS = {"outer_repetitions", "inner_repetitions", "train_fraction", "knn_k"}
_DATASET_KEYS = {"name", "path", "positive_labels", "label_column", "has_header", "delimiter"}


def _check_keys(table: dict, allowed, where: str) -> None:
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _section(doc: dict, name: str) -> dict:
    value = doc.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def _build(cls, table: dict, where: str, **extra):
    _check_keys(table, {f.name for f in fields(cls)} - set(extra), where)
    try:
        return cls(**table, **extra)
    except AssomError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(doc: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    _check_keys(doc, _TOP_KEYS, "config")
    protocol = _section(doc, "protocol")
    _check_keys(protocol, _PROTOCOL_KEYS, "[protocol]")
    training = _build(TrainingConfig, _section(doc, "training"), "[training]")
    oversample = _build(OversampleConfig, _section(doc, "oversample"), "[oversample]",
                        training=training)

    smote = _section(doc, "smote")
    _check_keys(smote, {"k", "amount"}, "[smote]")
    amount = smote.get("amount", "auto")
    if amount == "auto":
        amount = None
    elif not isinstance(amount, int):
        raise ConfigError("[smote] amount must be an integer or \"auto\"")

    raw_datasets = doc.get("datasets", [])
    if not isinstance(raw_datasets, list):
        raise ConfigError("datasets must be an array of tables ([[datasets]])")
    specs = []
    for i, entry in enumerate(raw_datasets):
        where = f"datasets[{i}]"
        _check_keys(entry, _DATASET_KEYS, where)
        for key in ("name", "path", "positive_labels"):
            if key not in entry:
                raise ConfigError(f"{where} is missing required key {key!r}")
        labels = entry["positive_labels"]
        if isinstance(labels, (str, int)):
            labels = [labels]
        if not labels:
            raise ConfigError(f"{where}: positive_labels must not be empty")
        path = Path(entry["path"])
        if not path.is_absolute():
            path = base_dir / path
        specs.append(DatasetSpec(
            name=str(entry["name"]), path=str(path),
            positive_labels=tuple(str(v) for v in labels),
            label_column=entry.get("label_column", -1),
            has_header=bool(entry.get("has_header", True)),
            delimiter=str(entry.get("delimiter", ",")),
        ))

    out = doc.get("out", "runs")
    out_path = Path(out)
    if not out_path.is_absolute():
        out_path = base_dir / out_path
    train_section = _section(doc, "train")
    _check_keys(train_section, {"dataset"}, "[train]")
    try:
        return ExperimentConfig(
            datasets=tuple(specs),
            methods=tuple(doc.get("methods", ("none", "assom", "smote"))),
            outer_repetitions=int(protocol.get("outer_repetitions", 5)),
            inner_repetitions=int(protocol.get("inner_repetitions", 5)),
            train_fraction=float(protocol.get("train_fraction", 0.7)),
            knn_k=int(protocol.get("knn_k", 5)),
            smote_k=int(smote.get("k", 5)),
            smote_amount=amount,
            training=training,
            oversample=oversample,
            out_dir=str(out_path),
            seed=int(doc.get("seed", 0)),
            jobs=int(doc.get("jobs", 1)),
            format=str(doc.get("format", "both")),
            train_dataset=train_section.get("dataset"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, AssomError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        doc = tomllib.loads(raw.decode())
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: invalid TOML ({exc})") from exc
    return parse_config(doc, path.parent)


def validate_paths(cfg: ExperimentConfig) -> None:
    """Raise ConfigError naming the first dataset file that does not exist."""
    for spec in cfg.datasets:
        if not Path(spec.path).is_file():
            raise ConfigError(f"dataset {spec.name!r}: file not found: {spec.path}")
