"""Acceptance criteria 1-12, each reported as one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py``; the verdicts are
printed in the ``acceptance criteria`` section of the terminal summary.
"""

import json
import time
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import binomtest

from assom.cli import main
from assom.datasets import SplitSpec, stratified_split
from assom.evaluation import ConfusionCounts, average_rank, metrics, smote_samples
from assom.experiment import ExperimentConfig, run_experiment
from assom.network import TrainingConfig, basis_gradient, init_network, principal_angles, train
from assom.oversampler import OversampleConfig, compute_module_count, membership_residuals, oversample
from assom.subspace import BasisSet, gram_schmidt, project, projector_matrix, residual

from conftest import FIXTURE_DATASETS, FIXTURES, load_fixture
from test_evaluation import REFERENCE_MEASURES, REFERENCE_METHODS, load_reference_table

pytestmark = pytest.mark.acceptance


def test_criterion_01_orthonormality_after_every_epoch(criterion):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for case in range(20):
        d = int(rng.integers(2, 17))
        h = int(rng.integers(1, min(4, d) + 1))
        n = int(rng.integers(1, 9))
        x = rng.normal(size=(60, d)) * rng.uniform(0.1, 3.0, size=d)
        cfg = TrainingConfig(epochs=10, eta_start=0.1, eta_end=0.01, alpha=1e-4, seed=case)
        _, history = train(init_network(d, h, n, seed=case), x, cfg)
        assert len(history.orthonormality) == 10
        worst = max(worst, max(history.orthonormality))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and elapsed < 10
    criterion(1, ok, f"max |B^T B - I| = {worst:.2e} over 20 configs x 10 epochs, {elapsed:.1f} s")
    assert ok


def test_criterion_02_projector_algebra(criterion):
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 11))
        h = int(rng.integers(1, d + 1))
        b = gram_schmidt(rng.normal(size=(h, d)))
        x = rng.normal(size=d)
        p = projector_matrix(b)
        xh = project(b, x)
        errs = [
            np.max(np.abs(project(b, xh) - xh)),
            np.max(np.abs(p @ p - p)),
            np.max(np.abs(p - p.T)),
            abs(xh @ xh + np.sum(residual(b, x) ** 2) - x @ x),
        ]
        worst = max(worst, *errs)
    ok = worst < 1e-10
    criterion(2, ok, f"1000 cases, worst idempotence/symmetry/Pythagoras error {worst:.2e}")
    assert ok


def test_criterion_03_gradient_check(criterion):
    rng = np.random.default_rng(303)
    step = 1e-6
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 9))
        h = int(rng.integers(1, d + 1))
        bases = gram_schmidt(rng.normal(size=(h, d))).vectors.copy()
        j = int(rng.integers(h))
        x = rng.normal(size=d)
        g = float(rng.uniform(0.05, 1.0))

        def energy(bj):
            # residual energy g (|x|^2 - sum_i (b_i . x)^2), g held fixed
            b = bases.copy()
            b[j] = bj
            return g * (x @ x - np.sum((b @ x) ** 2))

        numeric = np.array([(energy(bases[j] + e) - energy(bases[j] - e)) / (2 * step)
                            for e in np.eye(d) * step])
        analytic = basis_gradient(g, x, bases[j])
        worst = max(worst, np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic))
    ok = worst < 1e-5
    criterion(3, ok, f"100 triples, worst relative error {worst:.2e}")
    assert ok


def union_of_planes(n=200, d=6, noise=0.01, seed=1000):
    rng = np.random.default_rng(seed)
    q1, _ = np.linalg.qr(rng.normal(size=(d, 2)))
    q2, _ = np.linalg.qr(rng.normal(size=(d, 2)))
    x = np.vstack([rng.normal(size=(n // 2, 2)) @ q1.T, rng.normal(size=(n - n // 2, 2)) @ q2.T])
    return x + noise * rng.normal(size=x.shape)


def test_criterion_04_energy_trend(criterion):
    x = union_of_planes()
    fractions = []
    for seed in range(20):
        cfg = TrainingConfig(epochs=30, eta_start=0.001, eta_end=0.0001, alpha=0.0,
                             episode_size=1, seed=seed)
        _, history = train(init_network(6, 2, 2, seed=seed), x, cfg)
        fractions.append(np.mean(np.diff(history.cost) <= 0))
    good = sum(f >= 0.9 for f in fractions)
    ok = good >= 18
    criterion(4, ok, f"{good}/20 seeds non-increasing in >= 90% of epochs "
                     f"(mean fraction {np.mean(fractions):.2f}; eta 1e-3 -> 1e-4)")
    assert ok


def test_criterion_05_subspace_recovery(criterion):
    rng = np.random.default_rng(505)
    sigma_noise = 0.01
    q, _ = np.linalg.qr(rng.normal(size=(5, 2)))

    def draw(n):
        return rng.normal(size=(n, 2)) @ q.T + sigma_noise * rng.normal(size=(n, 5))

    x_train, x_test = draw(200), draw(200)
    start = time.perf_counter()
    net, _ = train(init_network(5, 2, 1, seed=5), x_train,
                   TrainingConfig(epochs=50, alpha=0.0, seed=5))
    elapsed = time.perf_counter() - start
    _, _, vt = np.linalg.svd(x_train, full_matrices=False)
    pca = BasisSet(vt[:2])
    angles = principal_angles(net.modules[0].basis, pca)
    held_out = float(np.mean(np.linalg.norm(residual(net.modules[0].basis, x_test), axis=1)))
    ok = angles.max() < 0.1 and held_out < 5 * sigma_noise and elapsed < 30
    criterion(5, ok, f"max principal angle {angles.max():.4f} rad, held-out mean residual "
                     f"{held_out:.4f} (< {5 * sigma_noise}), {elapsed:.1f} s")
    assert ok


def test_criterion_06_sampling_laws(criterion):
    details = []
    ok = True
    for name in sorted(FIXTURE_DATASETS):
        train_set, _ = stratified_split(load_fixture(name), SplitSpec(0.7, seed=6))
        cfg = OversampleConfig(balance_trim=False)
        aug, batch = oversample(train_set, cfg)
        n = compute_module_count(train_set.n_majority, train_set.n_minority)
        count_ok = len(batch) == n * train_set.n_minority
        member = float(np.max(membership_residuals(batch)))
        balanced, _ = oversample(train_set, OversampleConfig(balance_trim=True))
        trim_ok = balanced.n_minority == balanced.n_majority
        ok &= count_ok and member < 1e-9 and trim_ok
        details.append(f"{name} N={n} {len(batch)} synth, membership {member:.1e}")
    criterion(6, ok, "; ".join(details))
    assert ok


def test_criterion_07_module_count_formula(criterion):
    pairs = [(950, 50), (100, 100), (500, 268), (149, 100), (150, 100), (151, 100),
             (249, 100), (250, 100), (251, 100), (714, 80), (500, 56), (357, 212),
             (130, 48), (100, 50), (9, 2), (7, 2), (5, 2), (1, 1), (10**6, 3), (12345, 678)]
    assert any(compute_module_count(a, b) == 1 and round(a / b) - 1 < 1 for a, b in pairs)

    def oracle(a, b):
        r = (Decimal(a) / Decimal(b)).quantize(Decimal(1), rounding=ROUND_HALF_UP)
        return max(1, int(r) - 1)

    mismatches = [(a, b) for a, b in pairs if compute_module_count(a, b) != oracle(a, b)]
    ok = not mismatches and len(pairs) == 20
    criterion(7, ok, f"20 count pairs, {len(mismatches)} mismatches")
    assert ok


def test_criterion_08_metrics_oracle(criterion):
    rng = np.random.default_rng(808)

    def frac(n, d):
        return Fraction(n, d) if d else Fraction(0)

    worst = 0.0
    for _ in range(1000):
        tp, fp, tn, fn = (int(v) for v in rng.integers(0, 500, size=4))
        r = metrics(ConfusionCounts(tp, fp, tn, fn))
        p, rec, spec = frac(tp, tp + fp), frac(tp, tp + fn), frac(tn, fp + tn)
        f1 = 2 * p * rec / (p + rec) if p + rec else Fraction(0)
        g = float(rec * spec) ** 0.5
        worst = max(worst, abs(r.precision - float(p)), abs(r.recall - float(rec)),
                    abs(r.f1 - float(f1)), abs(r.g_mean - g))
    worked = metrics(ConfusionCounts(tp=3, fp=1, tn=5, fn=1)).g_mean
    ok = worst < 1e-12 and abs(worked - 0.790569) < 5e-7
    criterion(8, ok, f"1000 tables, worst deviation {worst:.1e}; worked case g_mean {worked:.6f}")
    assert ok


PRINTED = {"F1 value": 5.13, "G mean": 4.38, "overall": 4.59}


def _assom_ranks(ties):
    t = average_rank(load_reference_table(), REFERENCE_METHODS, REFERENCE_MEASURES, ties=ties)
    return {"F1 value": t.per_metric["F1 value"]["ASSOM"],
            "G mean": t.per_metric["G mean"]["ASSOM"],
            "overall": t.overall["ASSOM"]}


def test_criterion_09_rank_recomputation(criterion):
    averaged = _assom_ranks("average")
    lowest = _assom_ranks("min")
    avg_ok = all(abs(averaged[k] - v) <= 0.01 for k, v in PRINTED.items())
    min_ok = all(abs(lowest[k] - v) <= 0.01 for k, v in PRINTED.items())
    fmt = ", ".join
    detail = (f"averaged ties give {fmt(f'{k} {v:.3f}' for k, v in averaged.items())} "
              f"vs printed {fmt(f'{k} {v}' for k, v in PRINTED.items())}")
    if not avg_ok and min_ok:
        detail += ("; tied methods sharing the lowest points reproduce all three "
                   f"({fmt(f'{v:.3f}' for v in lowest.values())}), so the gap is the tie convention")
    criterion(9, avg_ok, detail)
    # the discrepancy must be explained by the tie convention alone
    assert avg_ok or min_ok


@pytest.mark.xfail(strict=True, reason="printed ranks use lowest-point ties, not averaged points")
def test_criterion_09_averaged_ties_within_tolerance():
    averaged = _assom_ranks("average")
    assert all(abs(averaged[k] - v) <= 0.01 for k, v in PRINTED.items())


def test_criterion_10_before_after_trend(criterion):
    ds = load_fixture("two_gaussian")
    cfg = ExperimentConfig(methods=("none", "assom"), outer_repetitions=5, inner_repetitions=5,
                           seed=20240601)
    start = time.perf_counter()
    report = run_experiment(cfg, [ds])
    elapsed = time.perf_counter() - start
    train_set, _ = stratified_split(ds, SplitSpec(0.7, 0))
    assert (train_set.n_majority, train_set.n_minority) == (500, 56)

    g = {m: {(c.outer, c.inner): c.report["g_mean"] for c in report.cells if c.method == m}
         for m in ("none", "assom")}
    diffs = np.array([g["assom"][k] - g["none"][k] for k in sorted(g["none"])])
    wins, losses = int(np.sum(diffs > 0)), int(np.sum(diffs < 0))
    p = binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue if wins + losses else 1.0
    mean_none = float(np.mean(list(g["none"].values())))
    mean_assom = float(np.mean(list(g["assom"].values())))
    ok = mean_assom > mean_none and p < 0.05 and elapsed < 120
    criterion(10, ok, f"G-mean assom {mean_assom:.4f} vs none {mean_none:.4f}, "
                      f"sign test {wins}+/{losses}- p={p:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_11_smote_decomposition(criterion):
    worst = 0.0
    parents_ok = True
    total = 0
    for name in ("two_gaussian", "wine", "iris", "breast_cancer"):
        train_set, _ = stratified_split(load_fixture(name), SplitSpec(0.7, seed=11))
        batch = smote_samples(train_set, k=5, amount_per_minority=3, seed=11)
        minority_rows = set(np.flatnonzero(train_set.labels == 1))
        for s, i, j in zip(batch.samples, batch.base_rows, batch.neighbour_rows):
            parents_ok &= i in minority_rows and j in minority_rows and i != j
            x, nn = train_set.features[i], train_set.features[j]
            d = nn - x
            u = float((s - x) @ d / (d @ d))
            worst = max(worst, np.max(np.abs(x + u * d - s)), max(0.0, -u, u - 1))
            total += 1
    ok = parents_ok and worst < 1e-10
    criterion(11, ok, f"{total} SMOTE samples, worst decomposition error {worst:.1e}, "
                      f"parents minority-train: {parents_ok}")
    assert ok


def test_criterion_12_determinism(criterion, tmp_path):
    cfg = tmp_path / "desk.toml"
    text = (FIXTURES.parent.parent / "configs" / "desk.toml").read_text()
    text = text.replace('"../tests/fixtures/', f'"{FIXTURES}/')
    text = text.replace("outer_repetitions = 5", "outer_repetitions = 2")
    text = text.replace("inner_repetitions = 5", "inner_repetitions = 2")
    cfg.write_text(text)
    codes = [main(["compare", "--config", str(cfg), "--out", str(tmp_path / run), "--format", "json"])
             for run in ("a", "b")]
    a = (tmp_path / "a" / "report.json").read_bytes()
    b = (tmp_path / "b" / "report.json").read_bytes()
    ok = codes == [0, 0] and a == b and json.loads(a)["master_seed"] == 20240601
    criterion(12, ok, f"two compare runs, exit codes {codes}, report.json "
                      f"{'byte-identical' if a == b else 'differs'} ({len(a)} bytes)")
    assert ok
