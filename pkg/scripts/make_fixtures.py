"""Regenerate the CSV fixtures under tests/fixtures.

Real-data fixtures come from the copies of UCI datasets bundled with
scikit-learn; the synthetic one from assom.synthetic.  Run from the repo
root:  python scripts/make_fixtures.py
"""

from pathlib import Path

from sklearn import datasets as skd

from assom.datasets import write_csv
from assom.synthetic import make_two_gaussian

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def write_bunch(bunch, name, label_name="class"):
    names = [str(n).replace(" ", "_") for n in bunch.feature_names]
    target_names = [str(t) for t in bunch.target_names]
    with open(OUT / f"{name}.csv", "w") as fh:
        fh.write(",".join(names + [label_name]) + "\n")
        for row, t in zip(bunch.data, bunch.target):
            fh.write(",".join(repr(float(v)) for v in row) + "," + target_names[t] + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_bunch(skd.load_breast_cancer(), "breast_cancer", "diagnosis")
    write_bunch(skd.load_wine(), "wine")
    write_bunch(skd.load_iris(), "iris", "species")
    write_csv(make_two_gaussian(seed=11), OUT / "two_gaussian.csv")


if __name__ == "__main__":
    main()
