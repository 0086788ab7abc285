from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# (file, positive labels) for every checked-in fixture dataset
FIXTURE_DATASETS = {
    "breast_cancer": ("breast_cancer.csv", ["malignant"]),
    "wine": ("wine.csv", ["class_2"]),
    "iris": ("iris.csv", ["virginica"]),
    "two_gaussian": ("two_gaussian.csv", ["minority"]),
    "keel_sample": ("keel_sample.dat", ["positive"]),
}

_criteria = {}


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion.

    Usage: ``criterion(3, passed, "detail")``; the lines are printed in the
    terminal summary.
    """
    def record(number, passed, detail=""):
        _criteria[number] = (bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        passed, detail = _criteria[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")


def load_fixture(name):
    from assom.datasets import binarize, load_csv

    fname, positive = FIXTURE_DATASETS[name]
    return binarize(load_csv(FIXTURES / fname), positive, name=name)
