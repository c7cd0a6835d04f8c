"""Command line front end.

Subcommands: stats, build, eval, sweep, labels, synth, synth-preds.
Delimited/JSON artifacts all embed the configuration that produced them
(CSV files as a leading `# config:` comment, JSON under a config key) and
are byte-deterministic: rerunning a command with the same inputs rewrites
identical files.

Exit codes: 0 success, 1 configuration error (bad flags or parameter
values), 2 data error (missing, unreadable or malformed input files).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Sequence

from .corpus import parse_predictions, parse_question_corpus, write_corpus, write_predictions
from .errors import ConfigurationError, DataError
from .metrics import (
    aggregate_reports,
    alpha_sweep,
    breakdown_by_type,
    compute_delta,
    evaluate,
    reasoning_report,
    relative_change,
)
from .simulate import BiasKnob, knob_predictor
from .split import BaseDistribution, BuildConfig, build_ood_split, load_benchmark, write_benchmark
from .stats import group_stats_rows
from .synth import SynthConfig, generate_synthetic_corpus

log = logging.getLogger("oodbench.cli")

_FORMAT_EPILOG = """\
file formats:
  corpus       one JSON object mapping question id to record:
                 {"q1": {"question": "What color is the rose?", "answer": "red",
                         "imageId": "im1", "groups": {"local": "color-rose", "global": "color"},
                         "types": {"structural": "query", "semantic": "attr"}}}
  predictions  a JSON object {"q1": "red"} or JSON lines, one object per line:
                 {"questionId": "q1", "prediction": "red"}
  benchmark    {"meta": {...}, "groups": {"color-rose": {"counts": {"red": 10, ...}, ...}},
                "questions": {"q1": {"group": "color-rose", "label": "tail", "answer": "red"}}}

exit codes: 0 success, 1 configuration error, 2 data error
"""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through the
    # configuration-error path (exit 1) instead.
    def error(self, message):
        raise ConfigurationError(message)


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"not a number: {text!r}")
    if not value > 0 or math.isinf(value) or math.isnan(value):
        raise ConfigurationError(f"expected a positive finite number, got {text!r}")
    return value


def _unit_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"not a number: {text!r}")
    return value


def _range_arg(text: str) -> tuple[int, int]:
    """Parse 'N' or 'LO:HI' into an inclusive integer range."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            n = int(parts[0])
            return (n, n)
        if len(parts) == 2:
            return (int(parts[0]), int(parts[1]))
    except ValueError:
        pass
    raise ConfigurationError(f"expected N or LO:HI, got {text!r}")


def _alpha_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigurationError(f"bad --alphas list: {text!r}")
    if not values:
        raise ConfigurationError("empty --alphas list")
    if any(v <= 0 for v in values):
        raise ConfigurationError("alpha values must be positive")
    return sorted(set(values))


def _pair_arg(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigurationError(f"--pair expects FIRST,SECOND, got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise ConfigurationError(f"--pair expects two numbers, got {text!r}")


@contextmanager
def _open_out(target: str | None):
    if target in (None, "-"):
        yield sys.stdout
    else:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _fmt(value) -> str:
    """CSV cell: empty for missing/NaN, lowercase booleans, plain repr else."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and math.isnan(value):
        return ""
    return str(value)


def _config_note(command: str, **settings) -> str:
    return json.dumps({"command": command, **settings}, sort_keys=True)


def _dump_json(payload: dict, out_target: str | None) -> None:
    with _open_out(out_target) as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


# ---------------------------------------------------------------------------
# shared flag groups
# ---------------------------------------------------------------------------


def _add_corpus_flags(p: _Parser) -> None:
    p.add_argument("--corpus", required=True, help="corpus file (JSON object of records)")
    p.add_argument("--split", default=None, help="split name to record (default: file stem)")


def _add_build_flags(p: _Parser) -> None:
    p.add_argument("--alpha", type=_positive_float, default=1.2, help="tail cutoff multiplier (default 1.2)")
    p.add_argument(
        "--entropy-threshold",
        type=_unit_float,
        default=0.9,
        help="keep groups with normalized entropy strictly below this (default 0.9)",
    )
    p.add_argument("--rareness-low", type=_positive_float, default=0.7, help="three-way tail bound (default 0.7)")
    p.add_argument("--rareness-high", type=_positive_float, default=1.2, help="three-way head bound (default 1.2)")
    p.add_argument(
        "--base",
        choices=[b.value for b in BaseDistribution],
        default=BaseDistribution.SELF_SPLIT.value,
        help="where reference answer histograms come from (default: the corpus itself)",
    )
    p.add_argument("--base-corpus", default=None, help="reference corpus file for --base train/external")
    p.add_argument("--base-split", default=None, help="split name for the base corpus")


def _build_config(args) -> BuildConfig:
    return BuildConfig(
        alpha=args.alpha,
        entropy_threshold=args.entropy_threshold,
        base_distribution=BaseDistribution(args.base),
        rareness_low=args.rareness_low,
        rareness_high=args.rareness_high,
    )


def _load_base(args):
    if args.base_corpus is None:
        return None
    return parse_question_corpus(args.base_corpus, args.base_split)


def _build_settings(args) -> dict:
    return {
        "alpha": args.alpha,
        "entropy_threshold": args.entropy_threshold,
        "rareness_low": args.rareness_low,
        "rareness_high": args.rareness_high,
        "base": args.base,
        "base_corpus": args.base_corpus,
    }


def _benchmark_echo(bench) -> dict:
    return {
        "alpha": bench.config.alpha,
        "entropy_threshold": bench.config.entropy_threshold,
        "base": bench.config.base_distribution.value,
        "rareness_low": bench.config.rareness_low,
        "rareness_high": bench.config.rareness_high,
        "source_split": bench.source_split,
        **bench.summary(),
    }


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_stats(args) -> int:
    corpus = parse_question_corpus(args.corpus, args.split)
    rows = group_stats_rows(corpus, args.entropy_threshold)
    note = _config_note(
        "stats",
        corpus=args.corpus,
        split=corpus.split_name,
        entropy_threshold=args.entropy_threshold,
    )
    with _open_out(args.out) as fh:
        fh.write(f"# config: {note}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group_key", "total", "d", "entropy", "normalized_entropy", "selected"])
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])
    n_selected = sum(1 for row in rows if row[5])
    log.info("%d groups, %d selected at threshold %g", len(rows), n_selected, args.entropy_threshold)
    if args.figure:
        from .plots import save_entropy_histogram

        scores = [row[4] for row in rows if row[4] is not None]
        save_entropy_histogram(scores, args.entropy_threshold, args.figure, note)
    return 0


def _cmd_build(args) -> int:
    corpus = parse_question_corpus(args.corpus, args.split)
    bench = build_ood_split(corpus, _build_config(args), _load_base(args))
    if not bench.assignment:
        log.warning("no groups passed the entropy filter; the benchmark is empty")
    write_benchmark(bench, args.out)
    s = bench.summary()
    print(
        f"wrote {args.out}: {s['n_groups']} groups, {s['n_questions']} questions "
        f"({s['n_head']} head / {s['n_tail']} tail)"
    )
    return 0


def _cmd_eval(args) -> int:
    if args.table_mode:
        if args.bench or args.preds:
            raise ConfigurationError("--table-mode takes --pair values, not --bench/--preds")
        if not args.pair:
            raise ConfigurationError("--table-mode needs at least one --pair FIRST,SECOND")
        pairs = []
        for first, second in args.pair:
            pairs.append(
                {
                    "first": first,
                    "second": second,
                    "delta": _json_float(compute_delta(first, second)),
                    "relative_change": _json_float(relative_change(first, second)),
                }
            )
        _dump_json({"command": "eval", "table_mode": True, "pairs": pairs}, args.out)
        return 0
    if not args.bench or not args.preds:
        raise ConfigurationError("eval needs --bench and at least one --preds file")
    bench = load_benchmark(args.bench)
    reports = [evaluate(bench, parse_predictions(path)) for path in args.preds]
    payload = {
        "command": "eval",
        "benchmark": _benchmark_echo(bench),
        "reports": [r.to_dict() for r in reports],
    }
    if len(reports) > 1:
        payload["aggregate"] = aggregate_reports(reports)
    _dump_json(payload, args.out)
    return 0


def _json_float(value: float) -> float | None:
    return None if math.isnan(value) else value


def _cmd_sweep(args) -> int:
    corpus = parse_question_corpus(args.corpus, args.split)
    preds = parse_predictions(args.preds)
    curve = alpha_sweep(
        corpus,
        _build_config(args),
        preds,
        alphas=args.alphas,
        base=_load_base(args),
        with_confusion=not args.no_confusion,
    )
    note = _config_note(
        "sweep",
        corpus=args.corpus,
        preds=args.preds,
        alphas=curve.alphas,
        confusion=not args.no_confusion,
        **_build_settings(args),
    )
    with _open_out(args.out) as fh:
        fh.write(f"# config: {note}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "n_tail", "acc_tail", "confusion"])
        for point in curve.points:
            writer.writerow(
                [_fmt(point.alpha), _fmt(point.n_tail), _fmt(point.acc_tail), _fmt(point.confusion)]
            )
    if args.figure:
        from .plots import save_sweep_figure

        save_sweep_figure(curve, args.figure, note)
    return 0


def _cmd_labels(args) -> int:
    corpus = parse_question_corpus(args.corpus, args.split)
    preds = parse_predictions(args.preds)
    bench = build_ood_split(corpus, _build_config(args), _load_base(args))
    report = reasoning_report(bench, preds)
    attribute = "structural_type" if args.type_attr == "structural" else "semantic_type"
    per_type = breakdown_by_type(report, corpus, attribute)
    note = _config_note(
        "labels",
        corpus=args.corpus,
        preds=args.preds,
        type_attr=args.type_attr,
        **_build_settings(args),
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config: {note}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pred_label", "gt_label", "correct", "count", "percent"])
        for pred, gt, correct, count, percent in report.matrix_rows():
            writer.writerow([pred, gt, _fmt(correct), count, _fmt(percent)])
    types_out = args.types_out or str(Path(args.out).with_suffix("")) + ".types.json"
    modes = report.mode_counts()
    _dump_json(
        {
            "command": "labels",
            "config": json.loads(note),
            "n_evaluated": report.n_evaluated,
            "missing_predictions": report.missing_predictions,
            "modes": {mode.value: count for mode, count in modes.items()},
            "types": {name: tb.to_dict() for name, tb in per_type.items()},
        },
        types_out,
    )
    if args.figure:
        from .plots import save_reasoning_figure

        save_reasoning_figure(report, per_type, args.figure, note)
    return 0


def _cmd_synth(args) -> int:
    config = SynthConfig(
        n_groups=args.groups,
        answers_per_group=args.answers,
        questions_per_group=args.questions,
        skew=args.skew,
        seed=args.seed,
        split_name=args.split or "synthetic",
    )
    corpus = generate_synthetic_corpus(config)
    write_corpus(corpus, args.out)
    print(
        f"wrote {args.out}: {corpus.n_questions} questions in {corpus.n_groups} groups "
        f"(seed {args.seed}, skew {args.skew:g})"
    )
    return 0


def _cmd_synth_preds(args) -> int:
    corpus = parse_question_corpus(args.corpus, args.split)
    base = None
    if args.base_corpus is not None:
        base = parse_question_corpus(args.base_corpus, args.base_split)
    preds = knob_predictor(
        corpus, BiasKnob(beta=args.beta, seed=args.seed), group_attr=args.prior, base=base
    )
    write_predictions(preds, args.out)
    print(f"wrote {args.out}: {len(preds)} predictions (beta {args.beta:g}, prior {args.prior})")
    return 0


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(
        prog="oodbench",
        description=(
            "Build out-of-distribution evaluation splits from grouped QA corpora "
            "and score prediction files against them."
        ),
        epilog=_FORMAT_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics (-vv for debug)")
    parser.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser(
        "stats",
        help="per-group entropy table (CSV)",
        description="Write one CSV row per local group: size, distinct answers, entropy, "
        "normalized entropy and whether the group passes the imbalance filter.",
        epilog='example:\n  oodbench stats --corpus val.json --out stats.csv --figure entropy.png',
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_corpus_flags(p)
    p.add_argument("--entropy-threshold", type=_unit_float, default=0.9, help="selection cutoff (default 0.9)")
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    p.add_argument("--figure", default=None, help="also render an entropy histogram PNG")
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser(
        "build",
        help="construct a head/tail benchmark file",
        description="Filter imbalanced groups and label every question head or tail.",
        epilog="example:\n  oodbench build --corpus val.json --alpha 1.2 --entropy-threshold 0.9 --out bench.json",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_corpus_flags(p)
    _add_build_flags(p)
    p.add_argument("--out", required=True, help="benchmark JSON to write")
    p.set_defaults(handler=_cmd_build)

    p = sub.add_parser(
        "eval",
        help="score prediction files against a benchmark",
        description="Accuracy over all/tail/head questions plus the relative head-over-tail "
        "gap. Several --preds files aggregate as mean and population standard deviation. "
        "With --table-mode, skip files entirely and recompute gaps from published "
        "accuracy pairs.",
        epilog="examples:\n"
        "  oodbench eval --bench bench.json --preds model.json --out report.json\n"
        "  oodbench eval --table-mode --pair 49.1,42.1 --pair 60.7,59.8",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--bench", default=None, help="benchmark file from `build`")
    p.add_argument("--preds", nargs="+", default=None, help="one or more prediction files")
    p.add_argument("--table-mode", action="store_true", help="recompute deltas from accuracy pairs")
    p.add_argument(
        "--pair",
        action="append",
        type=_pair_arg,
        default=None,
        help="FIRST,SECOND accuracy pair for --table-mode (repeatable); reports the "
        "head-over-tail delta (FIRST-SECOND)/SECOND and the relative change "
        "(SECOND-FIRST)/FIRST, both in percent",
    )
    p.add_argument("--out", default=None, help="output JSON (default: stdout)")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser(
        "sweep",
        help="tail accuracy across a grid of alpha values (CSV)",
        description="Hold the group selection fixed and move the head/tail boundary: one row "
        "per alpha with tail size, tail accuracy and head/tail confusion (share of "
        "swept-tail questions answered wrongly with a default-head answer).",
        epilog="example:\n  oodbench sweep --corpus val.json --preds model.json --alphas 0.3,0.5,1.2 --out sweep.csv",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_corpus_flags(p)
    _add_build_flags(p)
    p.add_argument("--preds", required=True, help="prediction file")
    p.add_argument("--alphas", type=_alpha_list, default=None, help="comma-separated alphas (default: log grid 0.2..5)")
    p.add_argument("--no-confusion", action="store_true", help="skip the confusion column")
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    p.add_argument("--figure", default=None, help="also render the sweep curves to a PNG")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser(
        "labels",
        help="reasoning-label matrix and per-type breakdown",
        description="Cross predicted-answer rareness with gold-answer rareness and "
        "correctness (3x3x2 matrix, CSV) and break reasoning modes down by question "
        "type (JSON next to the CSV).",
        epilog="example:\n  oodbench labels --corpus val.json --preds model.json --out matrix.csv",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_corpus_flags(p)
    _add_build_flags(p)
    p.add_argument("--preds", required=True, help="prediction file")
    p.add_argument("--out", required=True, help="matrix CSV to write")
    p.add_argument("--types-out", default=None, help="per-type JSON (default: <out>.types.json)")
    p.add_argument(
        "--type-attr",
        choices=["structural", "semantic"],
        default="structural",
        help="question-type attribute for the breakdown (default structural)",
    )
    p.add_argument("--figure", default=None, help="also render matrix and type bars to a PNG")
    p.set_defaults(handler=_cmd_labels)

    p = sub.add_parser(
        "synth",
        help="generate a synthetic corpus",
        description="Seeded corpus with geometric per-group answer skew; identical flags "
        "reproduce identical files.",
        epilog="example:\n  oodbench synth --groups 50 --answers 2:8 --questions 20:200 --skew 0.3 --seed 7 --out synth.json",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--groups", type=int, default=50, help="number of local groups (default 50)")
    p.add_argument("--answers", type=_range_arg, default=(2, 8), help="answers per group, N or LO:HI (default 2:8)")
    p.add_argument("--questions", type=_range_arg, default=(20, 200), help="questions per group, N or LO:HI (default 20:200)")
    p.add_argument("--skew", type=_positive_float, default=0.5, help="geometric answer-weight decay in (0,1] (default 0.5)")
    p.add_argument("--seed", type=int, default=0, help="generation seed (default 0)")
    p.add_argument("--split", default=None, help="split name to record (default: synthetic)")
    p.add_argument("--out", required=True, help="corpus file to write")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser(
        "synth-preds",
        help="generate biased predictions for a corpus",
        description="Predictions that answer the group-prior modal answer with probability "
        "beta and the gold answer otherwise. beta=1 is the pure question-prior baseline; "
        "beta=0 is a perfect predictor.",
        epilog="example:\n  oodbench synth-preds --corpus synth.json --beta 0.5 --seed 1 --out preds.json",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_corpus_flags(p)
    p.add_argument("--beta", type=float, default=1.0, help="prior-answer probability in [0,1] (default 1)")
    p.add_argument("--seed", type=int, default=0, help="per-question hash seed (default 0)")
    p.add_argument("--prior", choices=["local", "global"], default="local", help="group attribute for the prior")
    p.add_argument("--base-corpus", default=None, help="learn priors from this corpus instead")
    p.add_argument("--base-split", default=None, help="split name for the base corpus")
    p.add_argument("--out", required=True, help="prediction file to write (mapping format)")
    p.set_defaults(handler=_cmd_synth_preds)

    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    level = logging.WARNING
    if quiet:
        level = logging.ERROR
    elif verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG
    root = logging.getLogger("oodbench")
    root.setLevel(level)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    except ConfigurationError as exc:
        print(f"oodbench: configuration error: {exc}", file=sys.stderr)
        return 1
    _configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except ConfigurationError as exc:
        print(f"oodbench: configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"oodbench: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"oodbench: i/o error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
