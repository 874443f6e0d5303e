"""Command-line interface: ``ldao {oversample,elbow,evaluate,compare}``.

Exit codes: 0 success, 1 invalid input (flags, CSV, config), 2 runtime
failure during computation.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .augment import run_ldao
from .cluster import select_k, sse_curve
from .core import DEFAULT_SEED, LdaoError, RunConfig, StandardizationParams, ValidationError, to_joint
from .harness import CvPlan, run_experiment
from .ingest import CsvSchema, read_csv, read_table, write_csv
from .metrics import LengthMismatch, RelevanceFunction, build_relevance, mae, rmse, sera

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

# config-file key -> (RunConfig field, parser)
_CONFIG_KEYS = {
    "seed": ("seed", int),
    "k_min": ("k_min", int),
    "k_max": ("k_max", int),
    "delta": ("elbow_threshold", float),
    "elbow_threshold": ("elbow_threshold", float),
    "alpha": ("alpha", float),
    "alpha_mode": ("alpha_mode", str),
    "gamma": ("gamma", float),
    "alpha_max": ("alpha_max", float),
    "bandwidth_scale": ("bandwidth_scale", float),
    "restarts": ("restarts", int),
    "max_iterations": ("max_iterations", int),
    "tolerance": ("tolerance", float),
    "lambda_floor": ("lambda_floor", float),
    "clip_to_range": ("clip_to_range", lambda s: s.strip().lower() in ("1", "true", "yes", "on")),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def read_config(path) -> dict:
    """Parse ``key = value`` lines (``#`` comments, blank lines ignored)."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        field, conv = _CONFIG_KEYS[key]
        try:
            out[field] = conv(value)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return out


def _add_io(p):
    p.add_argument("--input", required=True, help="input CSV")
    p.add_argument("--target", required=True, help="target column name or zero-based index")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true", help="file has no header row")


def _add_ldao(p):
    g = p.add_argument_group("oversampling")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--seed", type=int)
    g.add_argument("--k-min", type=int)
    g.add_argument("--k-max", type=int)
    g.add_argument("--delta", type=float, help="elbow threshold on relative SSE improvement")
    g.add_argument("--alpha", type=float, help="uniform multiplier")
    g.add_argument("--alpha-mode", choices=["uniform", "adaptive"])
    g.add_argument("--gamma", type=float)
    g.add_argument("--alpha-max", type=float)
    g.add_argument("--bandwidth-scale", type=float)
    g.add_argument("--restarts", type=int)
    g.add_argument("--clip-to-range", action="store_true", default=None)


def _config_from(args) -> RunConfig:
    values = {"seed": DEFAULT_SEED}
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    for flag, field in [("seed", "seed"), ("k_min", "k_min"), ("k_max", "k_max"),
                        ("delta", "elbow_threshold"), ("alpha", "alpha"),
                        ("alpha_mode", "alpha_mode"), ("gamma", "gamma"),
                        ("alpha_max", "alpha_max"), ("bandwidth_scale", "bandwidth_scale"),
                        ("restarts", "restarts"), ("clip_to_range", "clip_to_range")]:
        v = getattr(args, flag, None)
        if v is not None:
            values[field] = v
    return RunConfig(**values)


def _schema(args) -> CsvSchema:
    target = args.target
    if args.no_header or target.lstrip("-").isdigit():
        try:
            target = int(target)
        except ValueError:
            raise ValidationError("headerless files need a numeric --target index") from None
    return CsvSchema(target=target, delimiter=args.delimiter, has_header=not args.no_header)


def _load(args):
    return read_csv(args.input, _schema(args))


def cmd_oversample(args) -> int:
    ds = _load(args)
    config = _config_from(args)
    result = run_ldao(ds, config, workers=args.workers)
    out = args.output or str(Path(args.input).with_suffix("")) + ".ldao.csv"
    write_csv(result.dataset, out, mark_synthetic=args.mark_synthetic, delimiter=args.delimiter)
    report = result.report() + f"output = {out}\n"
    if args.report:
        Path(args.report).write_text(report, encoding="utf-8")
    else:
        sys.stderr.write(report)
    return EXIT_OK


def cmd_elbow(args) -> int:
    ds = _load(args)
    config = _config_from(args)
    Z_raw = to_joint(ds)
    Z = StandardizationParams.fit(Z_raw).forward(Z_raw)
    k_max = min(config.k_max, ds.n_rows)
    trace = sse_curve(Z, config.k_min, k_max, config.seed, config.restarts,
                      config.max_iterations, config.tolerance, workers=args.workers)
    k_star = select_k(trace, config.elbow_threshold)
    print(f"{'K':>3}  {'SSE':>20}  {'delta':>12}")
    for k in sorted(trace.sse_by_k):
        d = trace.deltas.get(k)
        dcol = "" if d is None else f"{d:.6f}"
        mark = "  <- K*" if k == k_star else ""
        print(f"{k:>3}  {trace.sse_by_k[k]:>20.10g}  {dcol:>12}{mark}")
    print(f"k_star = {k_star}")
    return EXIT_OK


def _column(path, name, delimiter):
    header, data = read_table(path, delimiter)
    if name is None:
        if data.shape[1] != 1:
            raise ValidationError(f"{path} has {data.shape[1]} columns; name one with a flag")
        return data[:, 0]
    if name not in header:
        raise ValidationError(f"{path} has no column {name!r}")
    return data[:, header.index(name)]


def cmd_evaluate(args) -> int:
    if args.input:
        if not (args.true and args.pred):
            raise ValidationError("--input needs both --true and --pred column names")
        y_true = _column(args.input, args.true, args.delimiter)
        y_pred = _column(args.input, args.pred, args.delimiter)
    else:
        if not (args.true_file and args.pred_file):
            raise ValidationError("give --input with --true/--pred, or --true-file and --pred-file")
        y_true = _column(args.true_file, args.true, args.delimiter)
        y_pred = _column(args.pred_file, args.pred, args.delimiter)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.size} true values vs {y_pred.size} predictions")
    phi = RelevanceFunction.from_file(args.relevance) if args.relevance else build_relevance(y_true)
    print(f"n = {y_true.size}")
    print(f"rmse = {rmse(y_true, y_pred)!r}")
    print(f"mae = {mae(y_true, y_pred)!r}")
    print(f"sera = {sera(y_true, y_pred, phi, args.step)!r}")
    return EXIT_OK


def cmd_compare(args) -> int:
    ds = _load(args)
    config = _config_from(args)
    plan = CvPlan(runs=args.runs, folds=args.folds, seed=config.seed)
    report = run_experiment(ds, plan, config, learner_k=args.learner_k,
                            alpha_level=args.alpha_level, workers=args.workers)
    records = args.records or str(Path(args.input).with_suffix("")) + ".compare.csv"
    Path(records).write_text(report.records_csv(), encoding="utf-8")
    summary = report.summary() + f"records_file = {records}\n"
    if args.summary:
        Path(args.summary).write_text(summary, encoding="utf-8")
    else:
        sys.stdout.write(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ldao", description=__doc__.splitlines()[0])
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: $LDAO_THREADS, 0 = all cores)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("oversample", help="write an oversampled copy of a CSV")
    _add_io(p)
    _add_ldao(p)
    p.add_argument("--output", help="default: <input stem>.ldao.csv")
    p.add_argument("--report", help="run report path (default: stderr)")
    p.add_argument("--mark-synthetic", action="store_true", help="append a 0/1 synthetic column")
    p.set_defaults(func=cmd_oversample)

    p = sub.add_parser("elbow", help="print SSE(K), delta(K) and the chosen K")
    _add_io(p)
    _add_ldao(p)
    p.set_defaults(func=cmd_elbow)

    p = sub.add_parser("evaluate", help="RMSE, MAE and SERA of predictions")
    p.add_argument("--input", help="CSV holding both columns")
    p.add_argument("--true", help="column with true targets")
    p.add_argument("--pred", help="column with predictions")
    p.add_argument("--true-file")
    p.add_argument("--pred-file")
    p.add_argument("--relevance", help="control points file, lines 'y phi slope'")
    p.add_argument("--step", type=float, default=0.001, help="SERA integration step")
    p.add_argument("--delimiter", default=",")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="cross-validate k-NN with and without oversampling")
    _add_io(p)
    _add_ldao(p)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--learner-k", type=int, default=5)
    p.add_argument("--alpha-level", type=float, default=0.05)
    p.add_argument("--records", help="per-fold CSV (default: <input stem>.compare.csv)")
    p.add_argument("--summary", help="summary path (default: stdout)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, UsageError) as exc:
        sys.stderr.write(f"ldao {args.command}: error: {exc}\n")
        return EXIT_INVALID
    except (LdaoError, ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"ldao {args.command}: failed: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
