"""Command-line entry point: ``matfactor {simulate,fit,replicate,evaluate}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .core import KnownFactorSeries, MatfactorError, MatrixSeries
from .estimator import EstimationOptions, fit, fitted_values
from .io import (
    Manifest,
    estimate_to_dict,
    fmt,
    forward_fill,
    load_config,
    read_panel_array,
    write_json,
    write_panel,
)
from .metrics import out_of_sample_r2
from .simulator import ConfigError, generate
from .tables import COLUMNS, KEY_COLUMNS, replicate_table

log = logging.getLogger("matfactor")


def _options(args) -> EstimationOptions:
    return EstimationOptions(
        h0=args.h0,
        k_max_rule=args.k_max_rule,
        fixed_dims=tuple(args.fixed_dims) if args.fixed_dims else None,
        center=args.center,
    )


def _add_estimation_flags(parser):
    parser.add_argument("--h0", type=int, default=1, help="number of lags (default 1)")
    parser.add_argument("--k-max-rule", choices=("half", "third"), default="half",
                        help="search range of the ratio estimator as a fraction of the dimension")
    parser.add_argument("--fixed-dims", type=int, nargs=2, metavar=("K", "R"),
                        help="use these latent dimensions instead of estimating them")
    parser.add_argument("--center", action="store_true", help="demean residuals over time")


def _add_preprocessing_flags(parser):
    parser.add_argument("--standardize", action="store_true",
                        help="standardize every cell's series (test data uses training moments)")
    parser.add_argument("--ffill", action="store_true", help="forward-fill missing values")


def _load(path, ffill: bool) -> np.ndarray:
    data = read_panel_array(path, allow_missing=ffill)
    return forward_fill(data) if ffill else data


def _standardizer(train: np.ndarray):
    mean, std = train.mean(axis=0), train.std(axis=0)
    if np.any(std == 0):
        raise MatfactorError("cannot standardize: a cell is constant over time")
    return lambda data: (data - mean) / std


def _preprocess(args, train: np.ndarray, *others: np.ndarray):
    if not args.standardize:
        return (train,) + others
    scale = _standardizer(train)
    return (scale(train),) + tuple(scale(o) for o in others)


def cmd_simulate(args) -> int:
    cfg, opts = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    manifest = Manifest("simulate", {"simulation": cfg.to_dict(), "estimation": asdict(opts)}, cfg.seed)
    truth = generate(cfg)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("y", "x", "e", "f", "s", "l"):
        write_panel(out / f"{name}.csv", getattr(truth, name))
    write_json(out / "truth.json", {
        "a": truth.a.values,
        "r_loading": truth.r_loading,
        "c_loading": truth.c_loading,
        "q1": truth.q1.columns,
        "q2": truth.q2.columns,
    })
    manifest.write(out / "manifest.json")
    print(f"wrote {cfg.t_len} x {cfg.p} x {cfg.q} sample to {out}")
    return 0


def cmd_fit(args) -> int:
    opts = _options(args)
    y = _load(args.y, args.ffill)
    x = _load(args.x, args.ffill)
    y, = _preprocess(args, y)
    x, = _preprocess(args, x)
    manifest = Manifest("fit", {
        "y": str(args.y), "x": str(args.x), "estimation": asdict(opts),
        "standardize": args.standardize, "ffill": args.ffill,
    })
    est = fit(MatrixSeries(y, "y"), KnownFactorSeries(x, "x"), opts)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(out, estimate_to_dict(est))
    manifest.write(out.with_suffix(".manifest.json"))

    print(f"estimated dimensions: k = {est.k_hat}, r = {est.r_hat}" +
          (" (fixed)" if opts.fixed_dims else ""))
    for label, spectrum in (("row", est.spectrum_row), ("col", est.spectrum_col)):
        lam = np.maximum(spectrum.eigenvalues, 0)
        top = lam[: min(6, lam.size)]
        ratios = top[1:] / np.where(top[:-1] > 0, top[:-1], np.nan)
        print(f"{label} eigenvalues: " + " ".join(f"{v:.4g}" for v in top))
        print(f"{label} ratios:      " + " ".join(f"{v:.4g}" for v in ratios))
    print(f"result written to {out}")
    return 0


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(row[h]) if isinstance(row[h], float) else row[h] for h in header])


def cmd_replicate(args) -> int:
    opts = EstimationOptions(h0=args.h0, k_max_rule=args.k_max_rule, fixed_dims=(3, 3))
    manifest = Manifest("replicate", {
        "table": args.table, "runs": args.runs, "max_dim": args.max_dim,
        "estimation": asdict(opts),
    }, args.seed)
    rows = replicate_table(args.table, args.runs, seed=args.seed, max_dim=args.max_dim,
                           opts=opts, n_jobs=args.jobs)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"table{args.table}.csv"
    _write_rows(path, KEY_COLUMNS + COLUMNS[args.table], rows)
    manifest.write(out / f"table{args.table}.manifest.json")
    print(f"{len(rows)} rows written to {path}")
    return 0


def parse_dims_list(text: str):
    dims = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        parts = chunk.replace(" ", "").split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"bad dims entry {chunk!r}; use k,r;k,r;...")
        dims.append((int(parts[0]), int(parts[1])))
    if not dims:
        raise argparse.ArgumentTypeError("empty dims list")
    return dims


def evaluate(train_y, train_x, test_y, test_x, dims_list, h0=1, center=False):
    """R^2 decomposition on a test window for each latent dimension pair.

    Returns one dict per pair with the known-factor, latent and total R^2 of
    the regression model, plus the R^2 of a matrix factor model fitted
    without known factors.
    """
    rows = []
    for k, r in dims_list:
        opts = EstimationOptions(h0=h0, fixed_dims=(k, r), center=center)
        model = fit(train_y, train_x, opts)
        baseline = fit(train_y, None, opts)
        rows.append({
            "k": k,
            "r": r,
            "r2_known": out_of_sample_r2(test_y, fitted_values(model, test_y, test_x, "known")),
            "r2_latent": out_of_sample_r2(test_y, fitted_values(model, test_y, test_x, "latent")),
            "r2_total": out_of_sample_r2(test_y, fitted_values(model, test_y, test_x, "total")),
            "r2_factor_model": out_of_sample_r2(test_y, fitted_values(baseline, test_y)),
        })
    return rows


def cmd_evaluate(args) -> int:
    train_y = _load(args.train_y, args.ffill)
    train_x = _load(args.train_x, args.ffill)
    test_y = _load(args.test_y, args.ffill)
    test_x = _load(args.test_x, args.ffill)
    if train_y.shape[1:] != test_y.shape[1:] or train_x.shape[1:] != test_x.shape[1:]:
        raise MatfactorError("train and test panels must share (p, q, m)")
    train_y, test_y = _preprocess(args, train_y, test_y)
    train_x, test_x = _preprocess(args, train_x, test_x)
    manifest = Manifest("evaluate", {
        "train_y": str(args.train_y), "train_x": str(args.train_x),
        "test_y": str(args.test_y), "test_x": str(args.test_x),
        "dims_list": args.dims_list, "h0": args.h0, "center": args.center,
        "standardize": args.standardize, "ffill": args.ffill,
    })
    rows = evaluate(MatrixSeries(train_y, "y"), KnownFactorSeries(train_x, "x"),
                    MatrixSeries(test_y, "y"), KnownFactorSeries(test_x, "x"),
                    args.dims_list, h0=args.h0, center=args.center)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = ("k", "r", "r2_known", "r2_latent", "r2_total", "r2_factor_model")
    _write_rows(out, header, rows)
    manifest.write(out.with_suffix(".manifest.json"))
    print(f"{'dims':>8} {'R2_K':>8} {'R2_U':>8} {'R2_T':>8} {'R2_MFM':>8}")
    for row in rows:
        print(f"{'(%d,%d)' % (row['k'], row['r']):>8} {row['r2_known']:8.3f} {row['r2_latent']:8.3f} "
              f"{row['r2_total']:8.3f} {row['r2_factor_model']:8.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matfactor", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic sample from a config file")
    p.add_argument("config")
    p.add_argument("output_dir")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the model to panel files")
    p.add_argument("--y", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("-o", "--output", default="result.json")
    _add_estimation_flags(p)
    _add_preprocessing_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("replicate", help="Monte Carlo replication of a simulation table")
    p.add_argument("--table", type=int, choices=(1, 2, 3, 4), required=True)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-dim", type=int, help="skip grid cells with p or q above this")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--h0", type=int, default=1)
    p.add_argument("--k-max-rule", choices=("half", "third"), default="half")
    p.add_argument("-o", "--output-dir", default=".")
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("evaluate", help="out-of-sample R^2 decomposition")
    p.add_argument("--train-y", required=True)
    p.add_argument("--train-x", required=True)
    p.add_argument("--test-y", required=True)
    p.add_argument("--test-x", required=True)
    p.add_argument("--dims-list", type=parse_dims_list, default=[(2, 1)],
                   help="latent dimension pairs, e.g. '2,1;5,1'")
    p.add_argument("-o", "--output", default="evaluation.csv")
    p.add_argument("--h0", type=int, default=1)
    p.add_argument("--center", action="store_true")
    _add_preprocessing_flags(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MatfactorError, ConfigError, FileNotFoundError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"matfactor {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
