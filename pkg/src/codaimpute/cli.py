"""Command-line interface: ``codaimpute <command> ...``.

Every command is a thin wrapper over the library. Failures print a single
``error: <Type>: <message>`` line on stderr and exit with status 2; warnings
and decisions are streamed to stderr as JSON lines.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import zlib

import numpy as np

from . import csvio
from .distances import DistanceKind, contour_grid
from .frechet import frechet_trajectory
from .imputer import ImputerConfig, impute, impute_adaptive, impute_baseline_aitchison, impute_k_range
from .simplex import partition
from .simulation import (
    InjectionSpec,
    Mechanism,
    benchmark,
    inject_aggregation,
    inject_mar_sorted,
    inject_mcar,
    speedup_table,
)
from .tuner import CvSettings, TuningFallback, tune, tune_per_pattern


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


class JsonLineFormatter(logging.Formatter):
    def format(self, record):
        out = {"level": record.levelname.lower(), "logger": record.name, "message": record.getMessage()}
        for key in ("kind", "row"):
            if hasattr(record, key):
                out[key] = getattr(record, key)
        return json.dumps(out, sort_keys=True)


def derive_seed(seed, stream):
    """Independent integer seed for a named sub-stream of ``--seed``."""
    seq = np.random.SeedSequence((int(seed), zlib.crc32(stream.encode())))
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def parse_int_grid(text):
    """``"2..10"`` (inclusive) or ``"2,4,8"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise CliError(f"cannot parse integer grid {text!r}; use 'lo..hi' or 'a,b,c'") from None


def parse_real_grid(text):
    """``"start:stop:step"`` (inclusive, rounded to 10 decimals) or ``"a,b,c"``."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step))
            return tuple(round(start + i * step, 10) for i in range(count + 1))
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise CliError(f"cannot parse real grid {text!r}; use 'start:stop:step' or 'a,b,c'") from None


def parse_sizes(text):
    try:
        return tuple(tuple(int(v) for v in s.lower().split("x")) for s in text.split(","))
    except ValueError:
        raise CliError(f"cannot parse sizes {text!r}; use e.g. '500x10,1000x10'") from None


def _cv_settings(args, stream="cv"):
    return CvSettings(
        k_grid=parse_int_grid(args.k_grid),
        alpha_grid=parse_real_grid(args.alpha_grid) if args.alpha_grid else None,
        repetitions=args.reps,
        seed=derive_seed(args.seed, stream),
    )


def cmd_impute(args):
    table = csvio.read_table(args.input)
    if args.baseline:
        result = impute_baseline_aitchison(table, args.k, args.baseline.split("-", 1)[1])
    elif args.adaptive:
        result = impute_adaptive(table, _cv_settings(args), ImputerConfig(k=args.k, alpha=args.alpha))
    else:
        result = impute(table, ImputerConfig(k=args.k, alpha=args.alpha))
    csvio.write_table(result, args.output)
    if args.donor_log:
        csvio.write_json({"donors": [r.as_dict() for r in result.donor_log],
                          "warnings": [n.as_dict() for n in result.notes]}, args.donor_log)


def _report_dict(report):
    if isinstance(report, TuningFallback):
        return {"fallback": report.reason}
    return report.to_json_dict()


def cmd_tune(args):
    table = csvio.read_table(args.input)
    part = partition(table)
    patterns = table.patterns()
    settings = _cv_settings(args)
    if args.per_pattern:
        counts = {}
        for p in patterns.values():
            counts[p] = counts.get(p, 0) + 1
        reports = tune_per_pattern(part.complete, counts, settings)
        out = {
            "seed": args.seed,
            "patterns": [
                {"missing_columns": list(p.missing_columns), "count": counts[p], **_report_dict(r)}
                for p, r in reports.items()
            ],
            "warnings": [n.as_dict() for n in table.notes],
        }
    else:
        report = tune(part.complete, [patterns[i] for i in sorted(patterns)], settings)
        if args.scores_csv:
            csvio.write_scores(report, args.scores_csv)
        out = report.to_json_dict()
        out["seed"] = args.seed
        out["warnings"] = [n.as_dict() for n in table.notes]
    csvio.write_json(out, args.output)


def cmd_inject(args):
    table = csvio.read_table(args.input)
    rng = np.random.default_rng(derive_seed(args.seed, "injection"))
    mechanism = Mechanism(args.mechanism)
    if mechanism is Mechanism.AGGREGATE:
        if not args.group:
            raise CliError("--mechanism aggregate needs --group")
        names = list(table.column_names)
        group = [names.index(g) if g in names else int(g) for g in args.group.split(",")]
        n_sel = max(1, int(np.floor(args.row_frac * table.n_rows + 0.5)))
        rows = rng.choice(table.n_rows, size=n_sel, replace=False)
        masked, truth, _ = inject_aggregation(table, group, rows)
    else:
        spec = InjectionSpec(mechanism, args.row_frac, args.comp_frac, args.seed)
        inject = inject_mcar if mechanism is Mechanism.MCAR else inject_mar_sorted
        masked, truth = inject(table, spec, rng=rng)
    csvio.write_table(masked, args.output)
    csvio.write_truth(truth, args.truth)


def cmd_benchmark(args):
    ks = parse_int_grid(args.k)
    methods = {
        "jsd-knn": lambda t, ks: impute_k_range(t, ks, alpha=1.0),
        "aitchison-knn": lambda t, ks: {k: impute_baseline_aitchison(t, k, "mean") for k in ks},
    }
    records = benchmark(methods, parse_sizes(args.sizes), ks, args.reps,
                        spec=InjectionSpec(Mechanism.MCAR, 0.10, 0.30, derive_seed(args.seed, "injection")),
                        seed=derive_seed(args.seed, "dirichlet"))
    ns, Ds, grid = speedup_table(records, "aitchison-knn", "jsd-knn")
    out = {
        "seed": args.seed,
        "settings": {"sizes": args.sizes, "k": list(ks), "reps": args.reps},
        "records": [r.as_dict() for r in records],
        "speedup": {"slow": "aitchison-knn", "fast": "jsd-knn", "n": ns, "D": Ds, "table": grid},
    }
    csvio.write_json(out, args.output)


def cmd_contours(args):
    center = parse_real_grid(args.center) if args.center else (1 / 3, 1 / 3, 1 / 3)
    grid = contour_grid(np.asarray(center), args.resolution, DistanceKind.parse(args.kind))
    csvio.write_contour_grid(grid, args.output)


def cmd_trajectory(args):
    table = csvio.read_table(args.input)
    rows = partition(table).complete
    alphas = parse_real_grid(args.alpha_grid)
    csvio.write_trajectory(alphas, frechet_trajectory(rows, alphas), args.output, table.column_names)


def build_parser():
    p = _Parser(prog="codaimpute", description="k-NN imputation of compositional data")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("impute", help="impute missing cells of a CSV table")
    s.add_argument("input")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--adaptive", action="store_true", help="tune (alpha, k) per missingness pattern")
    s.add_argument("--baseline", choices=["aitchison-mean", "aitchison-median"])
    s.add_argument("--k-grid", default="2..10")
    s.add_argument("--alpha-grid", default=None)
    s.add_argument("--reps", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--donor-log")
    s.set_defaults(func=cmd_impute)

    s = sub.add_parser("tune", help="cross-validate (alpha, k)")
    s.add_argument("input")
    s.add_argument("--k-grid", default="2..10")
    s.add_argument("--alpha-grid", default=None, help="default -1:1:0.1, or 0:1:0.1 with zeros")
    s.add_argument("--reps", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--per-pattern", action="store_true")
    s.add_argument("--scores-csv", help="also write alpha,k,mean_score (global tuning only)")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_tune)

    s = sub.add_parser("inject", help="hide cells of a complete table")
    s.add_argument("input")
    s.add_argument("--mechanism", choices=["mcar", "mar-sorted", "aggregate"], default="mcar")
    s.add_argument("--row-frac", type=float, default=0.10)
    s.add_argument("--comp-frac", type=float, default=0.5)
    s.add_argument("--group", help="comma-separated column names or 0-based indices")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--truth", required=True)
    s.set_defaults(func=cmd_inject)

    s = sub.add_parser("benchmark", help="time JSD k-NN against Aitchison k-NN")
    s.add_argument("--sizes", default="500x10,1000x10,2000x10")
    s.add_argument("--k", default="2..10")
    s.add_argument("--reps", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("contours", help="distance-from-centre grid on the 2-simplex")
    s.add_argument("--kind", choices=["jsd", "aitchison"], default="jsd")
    s.add_argument("--resolution", type=int, default=100)
    s.add_argument("--center", help="three comma-separated parts (default: barycentre)")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_contours)

    s = sub.add_parser("trajectory", help="Fréchet means of the complete rows along an alpha grid")
    s.add_argument("input")
    s.add_argument("--alpha-grid", default="-1:1:0.1")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_trajectory)
    return p


def _configure_logging():
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLineFormatter())
    root = logging.getLogger("codaimpute")
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO)
    root.propagate = False


_VALUE_OPTIONS = ("--alpha-grid", "--alpha", "--center")


def _join_negative_values(argv):
    # argparse reads "-1:1:0.1" as an option; glue such values to their flag
    out = []
    it = iter(argv)
    for a in it:
        if a in _VALUE_OPTIONS:
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None):
    _configure_logging()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except (CliError, ValueError, OSError, ArithmeticError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
