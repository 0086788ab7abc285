"""Command-line entry point: ``assom {train,oversample,compare,metrics}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime
failure.  ``ASSOM_LOG`` sets the log level (e.g. ``DEBUG``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import load_config, validate_paths
from .datasets import binarize, load_csv, write_csv, zscore_apply, zscore_fit
from .errors import AssomError, ConfigError, DataError
from .evaluation import confusion, metrics
from .experiment import DatasetSpec, ExperimentConfig, check_complete, run_experiment, write_report
from .network import save_network
from .oversampler import OversampleConfig, fit, oversample

log = logging.getLogger("assom")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4


def _setup_logging() -> None:
    level = os.environ.get("ASSOM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    if args.format is not None:
        changes["format"] = args.format
    return replace(cfg, **changes) if changes else cfg


def _seeded(cfg: ExperimentConfig) -> OversampleConfig:
    """Oversampler settings with the ASSOM seeded from the master seed."""
    return replace(cfg.oversample, training=replace(cfg.training, seed=cfg.seed))


def _pick_dataset(cfg: ExperimentConfig, name: str | None) -> DatasetSpec:
    if not cfg.datasets:
        raise ConfigError("the config lists no datasets")
    name = name or cfg.train_dataset
    if name is None:
        return cfg.datasets[0]
    for spec in cfg.datasets:
        if spec.name == name:
            return spec
    raise ConfigError(f"no dataset named {name!r} in the config")


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    spec = _pick_dataset(cfg, args.dataset)
    validate_paths(replace(cfg, datasets=(spec,)))
    ds = spec.load()
    params = zscore_fit(ds)
    x = zscore_apply(params, ds.features)

    def report(epoch, e):
        print(f"epoch {epoch + 1:4d}  E = {e:.10g}")

    sampler = fit(x[ds.labels == 1], _seeded(cfg), ds.n_majority, callback=report)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "network.json"
    save_network(sampler.network, path)
    print(f"trained N={sampler.n_modules} modules (H={sampler.network.subspace_dim}, "
          f"D={sampler.network.input_dim}) on {ds.n_minority} minority rows of {ds.name!r}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_oversample(args) -> int:
    cfg = _load_cfg(args)
    if args.input is None:
        spec = _pick_dataset(cfg, args.dataset)
        validate_paths(replace(cfg, datasets=(spec,)))
        ds = spec.load()
    else:
        if not args.positive:
            raise ConfigError("--positive is required with --input")
        if not Path(args.input).is_file():
            raise ConfigError(f"input file not found: {args.input}")
        label_column = args.label_column
        if label_column is not None and label_column.lstrip("-").isdigit():
            label_column = int(label_column)
        table = load_csv(args.input, not args.no_header,
                         -1 if label_column is None else label_column, args.delimiter)
        ds = binarize(table, args.positive, name=Path(args.input).stem)

    augmented, batch = oversample(ds, _seeded(cfg))
    output = Path(args.output) if args.output else Path(cfg.out_dir) / f"{ds.name}_augmented.csv"
    output.parent.mkdir(parents=True, exist_ok=True)
    write_csv(augmented, output, args.delimiter)
    prov = Path(args.provenance) if args.provenance else output.with_name(output.stem + "_provenance.csv")
    with open(prov, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_row", "module", "reconstruction_error"])
        for i, n, e in batch.provenance_rows():
            w.writerow([i, n, repr(e)])

    print(f"N = {batch.sampler.n_modules}")
    print(f"before: minority {ds.n_minority}, majority {ds.n_majority}")
    print(f"after:  minority {augmented.n_minority}, majority {augmented.n_majority} "
          f"({len(batch)} synthetic)")
    print(f"wrote {output}")
    print(f"wrote {prov}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load_cfg(args)
    validate_paths(cfg)
    report = run_experiment(cfg)
    written = write_report(report, cfg.out_dir, cfg.format)
    for ds, method, metric, mean, std, n, pts in report.summary_rows():
        if mean is None:
            continue
        rank = "" if pts is None else f"  points {pts:g}"
        print(f"{ds:<16} {method:<6} {metric:<9} {mean:.4f} ± {std:.4f} (n={n}){rank}")
    if report.rank_table is not None:
        overall = ", ".join(f"{m} {v:.2f}" for m, v in report.rank_table.overall.items())
        print(f"average overall rank: {overall}")
    for path in written:
        print(f"wrote {path}")
    check_complete(report)
    return EXIT_OK


def cmd_metrics(args) -> int:
    path = Path(args.predictions)
    if not path.is_file():
        raise ConfigError(f"predictions file not found: {path}")
    positive = set(args.positive or ["1"])
    y_true, y_pred = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, delimiter=args.delimiter)
        missing = {args.true_column, args.pred_column} - set(reader.fieldnames or [])
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        for row in reader:
            y_true.append(row[args.true_column].strip() in positive)
            y_pred.append(row[args.pred_column].strip() in positive)
    report = metrics(confusion(y_true, y_pred))
    print(json.dumps(report.as_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML experiment config")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides config)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--jobs", type=int, metavar="N", help="worker processes for compare")
    common.add_argument("--format", choices=("json", "csv", "both"), help="report format")

    parser = argparse.ArgumentParser(prog="assom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train an ASSOM on a dataset's minority class")
    p.add_argument("--dataset", help="dataset name from the config (default: first)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("oversample", parents=[common], help="write an ASSOM-augmented dataset")
    p.add_argument("--dataset", help="dataset name from the config (when --input is not given)")
    p.add_argument("--input", metavar="CSV")
    p.add_argument("--output", metavar="CSV")
    p.add_argument("--provenance", metavar="CSV", help="sidecar path (default: <output>_provenance.csv)")
    p.add_argument("--positive", nargs="+", metavar="LABEL", help="minority label(s)")
    p.add_argument("--label-column", help="label column name or index (default: last)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true")
    p.set_defaults(func=cmd_oversample)

    p = sub.add_parser("compare", parents=[common], help="run the before/after method comparison")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("metrics", parents=[common], help="precision/recall/G-mean/F1 from predictions")
    p.add_argument("predictions", metavar="CSV")
    p.add_argument("--true-column", default="y_true")
    p.add_argument("--pred-column", default="y_pred")
    p.add_argument("--positive", nargs="+", metavar="LABEL", help="positive label(s) (default: 1)")
    p.add_argument("--delimiter", default=",")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AssomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
