"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 data error,
3 configuration error.
"""

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import kernels as _kernels
from .efficiency import efficiency_table
from .exceptions import ConfigurationError, DegenerateSampleError
from .rank_tests import (
    WILCOXON_EXACT_LIMIT,
    TwoSample,
    median_exact_pvalue,
    two_sample_t,
    wilcoxon_test,
)
from .simulation import EXPERIMENT_KINDS, PRESETS, ExperimentConfig, preset, run_experiment
from .smoothed import MEDIAN_RULES, SmoothedConfig, smoothed_median_test, smoothed_wilcoxon_test

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_DATA = 2
EXIT_CONFIG = 3

METHODS = ("median", "wilcoxon", "ttest", "smoothed-median", "smoothed-wilcoxon")
_DEFAULT_KERNEL = {"smoothed-median": "remark26-exp", "smoothed-wilcoxon": "epanechnikov"}


class DataError(ValueError):
    """Malformed or insufficient input data."""


# -- data ----------------------------------------------------------------------


def read_sample(path):
    """Read a ``group,value`` CSV file into a :class:`TwoSample`.

    Raises
    ------
    DataError
        On a missing file, a bad header, an unknown group, a non-numeric or
        non-finite value, or an empty group.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["group", "value"]:
        raise DataError("first line must be the header 'group,value'")
    groups = {"x": [], "y": []}
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(rec)}")
        group, raw = rec[0].strip().lower(), rec[1].strip()
        if group not in groups:
            raise DataError(f"line {lineno}: group must be x or y, got {rec[0]!r}")
        try:
            value = float(raw)
        except ValueError:
            raise DataError(f"line {lineno}: value {raw!r} is not a number") from None
        if not math.isfinite(value):
            raise DataError(f"line {lineno}: value must be finite")
        groups[group].append(value)
    for g, values in groups.items():
        if not values:
            raise DataError(f"group {g} has no observations")
    return TwoSample(np.array(groups["x"]), np.array(groups["y"]))


# -- commands ------------------------------------------------------------------


def _emit(rows, header, fmt, out):
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    cells = [[("-" if v is None else f"{v:.6g}" if isinstance(v, float) else str(v)) for v in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(header)]
    out.write("  ".join(h.rjust(w) for h, w in zip(header, widths)) + "\n")
    for r in cells:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n")


def cmd_test(args, out):
    sample = read_sample(args.data)
    method = args.method
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    if method in _DEFAULT_KERNEL:
        config = SmoothedConfig(args.kernel or _DEFAULT_KERNEL[method], args.bandwidth, args.median_rule)
        if method == "smoothed-median":
            result = smoothed_median_test(sample, config, rng)
        else:
            result = smoothed_wilcoxon_test(sample, config, rng)
    else:
        if args.kernel:
            raise ConfigurationError(f"--kernel does not apply to method {method}")
        if method == "median":
            result = median_exact_pvalue(sample)
        elif method == "wilcoxon":
            exact = not args.normal and sample.m * sample.n <= WILCOXON_EXACT_LIMIT
            result = wilcoxon_test(sample, exact=exact)
        else:
            try:
                result = two_sample_t(sample)
            except (ValueError, DegenerateSampleError) as exc:
                raise DataError(str(exc)) from None
    decision = "reject" if result.reject(args.alpha) else "retain"
    fields = [
        ("method", result.method),
        ("m", sample.m),
        ("n", sample.n),
        ("statistic", result.statistic),
        ("null_mean", result.null_mean),
        ("null_var", result.null_var),
        ("z_score", result.z_score),
        ("p_value", result.p_value),
        ("p_value_kind", result.p_value_kind),
        ("alpha", args.alpha),
        ("decision", decision),
        ("ties", result.ties),
    ]
    if args.output == "csv":
        _emit([[v for _, v in fields]], [k for k, _ in fields], "csv", out)
    else:
        for k, v in fields:
            out.write(f"{k:>13}: {v!r}\n" if isinstance(v, float) else f"{k:>13}: {v}\n")
    if result.ties:
        print("warning: tied observations; indicators count ties as defined (no midranks)", file=sys.stderr)
    return EXIT_OK


def load_simulation_config(path):
    """Parse a JSON simulation config.

    Returns ``(kind, name, cli_options, ExperimentConfig)``.  All violations
    are collected into one :class:`ConfigurationError`.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    problems = []
    data = dict(data)
    kind = data.pop("kind", "power")
    if kind not in EXPERIMENT_KINDS:
        problems.append(f"kind: must be one of {', '.join(EXPERIMENT_KINDS)}")
    name = data.pop("name", Path(path).stem)
    if not isinstance(name, str) or not name or "/" in name:
        problems.append("name: must be a non-empty file name")
    options = {}
    if "output" in data:
        options["output"] = data.pop("output")
        if options["output"] not in ("csv", "text"):
            problems.append("output: must be csv or text")
    if "workers" in data:
        options["workers"] = data.pop("workers")
        w = options["workers"]
        if isinstance(w, bool) or not isinstance(w, int) or w < 1:
            problems.append("workers: must be a positive integer")
    config = None
    try:
        config = ExperimentConfig.from_dict(data)
    except ConfigurationError as exc:
        problems.extend(exc.violations)
    if config is not None and kind == "bootstrap" and config.bandwidth.kind != "bootstrap":
        problems.append("bandwidth: the bootstrap experiment needs a bootstrap rule")
    if problems:
        raise ConfigurationError("; ".join(problems), problems)
    return kind, name, options, config


def cmd_simulate(args, out):
    if (args.config is None) == (args.preset is None):
        raise ConfigurationError("give either a config file or --preset")
    options = {}
    if args.preset:
        kind, config = preset(args.preset, desk=args.desk)
        name = args.preset
    else:
        kind, name, options, config = load_simulation_config(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    if args.reps is not None:
        config = config.replace(reps=args.reps)
    workers = args.workers or options.get("workers", 1)
    fmt = args.output or options.get("output", "text")
    table = run_experiment(kind, config, workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / f"{name}.csv"
    target.write_text(table.to_csv())
    out.write(table.to_csv() if fmt == "csv" else table.to_text())
    print(f"config_hash={config.config_hash()} seed={config.seed} wrote {target}", file=sys.stderr)
    return EXIT_OK


def cmd_efficiency(args, out):
    rows = [
        [f"ARE({a}|{b})", model, value, published, dev]
        for a, b, model, value, published, dev in efficiency_table(args.table)
    ]
    _emit(rows, ["comparison", "model", "computed", "published", "abs_deviation"],
          args.output or "text", out)
    return EXIT_OK


def cmd_kernels(args, out):
    names = args.names or _kernels.kernel_names()
    specs = [_kernels.get_kernel(n) for n in names]
    fmt = args.output or "text"
    if args.action == "list":
        rows = [
            [k.name, k.sided, f"({k.support[0]:g}, {k.support[1]:g})",
             " ".join(sorted(k.declared_properties, key=list(_kernels.PROPERTIES).index))]
            for k in specs
        ]
        _emit(rows, ["name", "sided", "support", "declared_properties"], fmt, out)
        return EXIT_OK
    rows, failed = [], False
    for k in specs:
        for prop, check in _kernels.verify_kernel(k).items():
            rows.append([k.name, prop, check.measured, check.target, check.tol,
                         "pass" if check.passed else "FAIL"])
            failed |= not check.passed
    _emit(rows, ["kernel", "property", "measured", "target", "tol", "status"], fmt, out)
    return EXIT_VERIFY if failed else EXIT_OK


# -- parser --------------------------------------------------------------------


def _alpha(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=argparse.SUPPRESS,
                        help="unsigned 64-bit seed for randomized commands")
    common.add_argument("--workers", type=_positive, default=argparse.SUPPRESS,
                        help="worker processes for simulations")
    common.add_argument("--output", choices=("csv", "text"), default=argparse.SUPPRESS)
    common.add_argument("--desk", action="store_true", default=argparse.SUPPRESS,
                        help="reduced replication counts for presets")

    parser = argparse.ArgumentParser(
        prog="smoothrank", parents=[common],
        description="Median and Wilcoxon two-sample tests and their kernel-smoothed versions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", parents=[common], help="run a test on a group,value CSV file")
    p.add_argument("data")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--kernel", help="catalog kernel of a smoothed method")
    p.add_argument("--bandwidth", default="default",
                   help="default | fixed:<h> | bootstrap:L=<int>,alpha=<real>")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--median-rule", choices=MEDIAN_RULES, default="average",
                   help="even-N centring of the smoothed median")
    p.add_argument("--normal", action="store_true",
                   help="normal approximation instead of the exact Wilcoxon law")

    p = sub.add_parser("simulate", parents=[common], help="run a Monte-Carlo experiment")
    p.add_argument("config", nargs="?", help="JSON experiment config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--reps", type=_positive, help="override the replication count")
    p.add_argument("--out-dir", default=".", help="directory for the CSV table")

    p = sub.add_parser("efficiency", parents=[common], help="print a Pitman ARE table")
    p.add_argument("table", type=int, choices=(1, 2))

    p = sub.add_parser("kernels", parents=[common], help="list or verify catalog kernels")
    p.add_argument("action", choices=("list", "verify"))
    p.add_argument("names", nargs="*")
    return parser


_COMMANDS = {
    "test": cmd_test,
    "simulate": cmd_simulate,
    "efficiency": cmd_efficiency,
    "kernels": cmd_kernels,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    for key, default in (("seed", None), ("workers", None), ("output", None), ("desk", False)):
        if not hasattr(args, key):
            setattr(args, key, default)
    try:
        return _COMMANDS[args.command](args, out)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigurationError as exc:
        for v in exc.violations:
            print(f"configuration error: {v}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
