import json

import numpy as np
import pytest

from assom.config import load_config, parse_config, validate_paths
from assom.datasets import SplitSpec, stratified_split, zscore_apply, zscore_fit
from assom.errors import ConfigError, IncompleteGrid
from assom.evaluation import confusion, knn_classify, metrics
from assom.experiment import (
    METHODS,
    ExperimentConfig,
    aggregate,
    check_complete,
    derive_seed,
    run_cell,
    run_experiment,
    write_report,
)
from assom.network import TrainingConfig
from assom.oversampler import OversampleConfig
from assom.synthetic import make_two_gaussian

from conftest import FIXTURES, load_fixture

FAST_TRAINING = TrainingConfig(epochs=5)


def small_config(**kwargs):
    base = dict(outer_repetitions=2, inner_repetitions=2, training=FAST_TRAINING,
                oversample=OversampleConfig(training=FAST_TRAINING), seed=7)
    base.update(kwargs)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def small_data():
    return [make_two_gaussian(200, 40, seed=1), load_fixture("wine")]


# --- seeds --------------------------------------------------------------

def test_seed_rule_is_positional_and_stable():
    assert derive_seed(1, 0, 0) == derive_seed(1, 0, 0)
    assert derive_seed(1, 0, 0) != derive_seed(1, 0, 1)
    assert derive_seed(1, 0, 0) != derive_seed(2, 0, 0)
    assert 0 <= derive_seed(2**64 - 1, 5, 5, 5, 2) < 2**64


def test_adding_a_dataset_keeps_existing_cells(small_data):
    one = run_experiment(small_config(methods=("none", "assom")), small_data[:1])
    two = run_experiment(small_config(methods=("none", "assom")), small_data)
    first = [c for c in two.cells if c.dataset == small_data[0].name]
    assert [c.report for c in one.cells] == [c.report for c in first]


def test_adding_a_method_keeps_existing_cells(small_data):
    a = run_experiment(small_config(methods=("assom",)), small_data[:1])
    b = run_experiment(small_config(methods=("none", "assom")), small_data[:1])
    assert [c.report for c in a.cells] == [c.report for c in b.cells if c.method == "assom"]


# --- protocol -----------------------------------------------------------

def test_none_only_equals_plain_evaluation(small_data):
    ds = small_data[0]
    cfg = small_config(methods=("none",), outer_repetitions=1, inner_repetitions=1)
    report = run_experiment(cfg, [ds])
    train, test = stratified_split(ds, SplitSpec(0.7, derive_seed(7, 0, 0)))
    params = zscore_fit(train)
    pred = knn_classify(zscore_apply(params, train.features), train.labels,
                        zscore_apply(params, test.features), k=5)
    expected = metrics(confusion(test.labels, pred)).as_dict()
    assert report.cells[0].report == expected


def test_no_test_rows_reach_any_fit(small_data):
    cfg = small_config()
    for d_idx, ds in enumerate(small_data):
        for outer in range(2):
            _, entries = run_cell(ds, d_idx, outer, 0, cfg)
            test_ids = set(entries[0][1])
            assert entries[0][0] == "test" and test_ids
            fits = entries[1:]
            assert {op for op, _ in fits} >= {"zscore.fit", "assom.fit", "smote.fit", "knn.fit"}
            for op, ids in fits:
                assert not test_ids & set(ids), op


def test_synthetic_counts_recorded(small_data):
    report = run_experiment(small_config(), small_data[:1])
    for c in report.cells:
        if c.method == "none":
            assert c.synthetic == 0
        else:
            assert c.synthetic > 0


def test_aggregates_recompute_from_cells(small_data):
    report = run_experiment(small_config(), small_data)
    for ds, by_method in report.aggregates.items():
        for method, by_metric in by_method.items():
            vals = [c.report["g_mean"] for c in report.cells
                    if c.dataset == ds and c.method == method]
            assert abs(by_metric["g_mean"]["mean"] - np.mean(vals)) < 1e-12
            assert abs(by_metric["g_mean"]["std"] - np.std(vals)) < 1e-12
    assert report.rank_table is not None
    assert set(report.rank_table.overall) == set(METHODS)


def test_aggregate_skips_failed_cells():
    from assom.experiment import CellResult
    ok = {"precision": 1.0, "recall": 0.5, "g_mean": 0.5, "f1": 0.6}
    agg = aggregate([CellResult("d", "none", 0, 0, ok),
                     CellResult("d", "none", 0, 1, None, error="boom")], ["none"])
    assert agg["d"]["none"]["recall"] == {"mean": 0.5, "std": 0.0, "n": 1}


def test_failed_cells_are_kept_and_flagged():
    keel = load_fixture("keel_sample")
    cfg = small_config(methods=("none", "smote"), outer_repetitions=1, inner_repetitions=1)
    report = run_experiment(cfg, [keel])
    assert [c.error is None for c in report.cells] == [True, False]
    assert "TooFewMinority" in report.cells[1].error
    assert report.rank_table is None
    with pytest.raises(IncompleteGrid):
        check_complete(report)


def test_parallel_matches_serial(small_data):
    serial = run_experiment(small_config(), small_data)
    parallel = run_experiment(small_config(jobs=2), small_data)
    assert serial.to_json_dict() == parallel.to_json_dict()


def test_report_files(tmp_path, small_data):
    report = run_experiment(small_config(), small_data)
    paths = write_report(report, tmp_path, "both")
    assert sorted(p.name for p in paths) == ["cells.csv", "ranks.csv", "report.csv", "report.json"]
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["master_seed"] == 7
    assert doc["artifact"]["version"]
    assert len(doc["cells"]) == 2 * 3 * 2 * 2
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 3 * 4


# --- config -------------------------------------------------------------

def test_config_example_loads():
    cfg = load_config(FIXTURES.parent.parent / "configs" / "desk.toml")
    validate_paths(cfg)
    assert [d.name for d in cfg.datasets] == ["two_gaussian", "wine", "iris", "breast_cancer"]
    assert cfg.seed == 20240601
    assert cfg.oversample.training is cfg.training
    assert cfg.smote_amount is None


@pytest.mark.parametrize("doc", [
    {"bogus": 1},
    {"protocol": {"outer_repetitions": 0}},
    {"protocol": {"knn_k": 4}},
    {"training": {"sigma": -1}},
    {"oversample": {"selection_mode": "best"}},
    {"methods": ["none", "adasyn"]},
    {"smote": {"amount": "lots"}},
    {"datasets": [{"name": "x", "path": "x.csv"}]},
])
def test_bad_configs_raise_config_error(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_missing_dataset_file_is_named(tmp_path):
    cfg = parse_config({"datasets": [{"name": "x", "path": "nope.csv", "positive_labels": ["a"]}]},
                       tmp_path)
    with pytest.raises(ConfigError, match="nope.csv"):
        validate_paths(cfg)


def test_invalid_toml(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("seed = = 1\n")
    with pytest.raises(ConfigError):
        load_config(p)
