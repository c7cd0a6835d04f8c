"""Accuracy metrics, alpha sweeps, head/tail confusion and reasoning labels.

Accuracies are percentages of exact string matches between normalized
predicted and gold answers.  A question without a prediction counts as
wrong and is tallied.  An empty subset has no accuracy: the value is NaN
in memory and null/empty in serialized reports.

The headline gap between distributions is

    delta = (acc_head - acc_tail) / acc_tail * 100,

computed from unrounded accuracies and undefined when acc_tail is 0.  The
companion `relative_change(first, second)` measures a score moving from
one evaluation setting to another, (second - first) / first * 100.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from statistics import fmean, pstdev
from typing import Sequence

import numpy as np

from .corpus import PredictionSet, QuestionCorpus
from .errors import ConfigurationError, DataError
from .split import (
    BinaryLabel,
    BuildConfig,
    OODBenchmark,
    RarenessLabel,
    _exact,
    classify_answers,
    rareness_label,
    select_reference_distributions,
)


def _acc(correct: int, n: int) -> float:
    return 100.0 * correct / n if n else math.nan


def _none_if_nan(value: float) -> float | None:
    return None if isinstance(value, float) and math.isnan(value) else value


def compute_delta(acc_head: float, acc_tail: float) -> float:
    """Relative head-over-tail gap in percent; NaN when undefined."""
    if math.isnan(acc_head) or math.isnan(acc_tail) or acc_tail == 0:
        return math.nan
    return (acc_head - acc_tail) / acc_tail * 100.0

def relative_change(first: float, second: float) -> float:
    """Percent change of a score moving from `first` to `second`."""
    if math.isnan(first) or math.isnan(second) or first == 0:
        return math.nan
    return (second - first) / first * 100.0


@dataclass
class MetricsReport:
    """Accuracy summary of one prediction set over one benchmark."""

    acc_all: float
    acc_tail: float
    acc_head: float
    delta: float
    n_all: int
    n_tail: int
    n_head: int
    missing_predictions: int
    source_label: str = ""

    _FLOAT_FIELDS = ("acc_all", "acc_tail", "acc_head", "delta")

    def to_dict(self) -> dict:
        out = {
            "source_label": self.source_label,
            "n_all": self.n_all,
            "n_tail": self.n_tail,
            "n_head": self.n_head,
            "missing_predictions": self.missing_predictions,
        }
        for name in self._FLOAT_FIELDS:
            out[name] = _none_if_nan(getattr(self, name))
        return out


def evaluate(bench: OODBenchmark, preds: PredictionSet) -> MetricsReport:
    """Score one prediction set: overall, tail and head accuracy plus delta."""
    if not bench.assignment:
        raise DataError("benchmark contains no questions; nothing to evaluate")
    n = {"all": 0, "head": 0, "tail": 0}
    correct = {"all": 0, "head": 0, "tail": 0}
    missing = 0
    for qid, asg in bench.assignment.items():
        pred = preds.get(qid)
        if pred is None:
            missing += 1
        hit = pred == asg.answer
        subset = "head" if asg.label is BinaryLabel.HEAD else "tail"
        for key in ("all", subset):
            n[key] += 1
            correct[key] += hit
    acc_all = _acc(correct["all"], n["all"])
    acc_tail = _acc(correct["tail"], n["tail"])
    acc_head = _acc(correct["head"], n["head"])
    return MetricsReport(
        acc_all=acc_all,
        acc_tail=acc_tail,
        acc_head=acc_head,
        delta=compute_delta(acc_head, acc_tail),
        n_all=n["all"],
        n_tail=n["tail"],
        n_head=n["head"],
        missing_predictions=missing,
        source_label=preds.source_label,
    )


def aggregate_reports(reports: Sequence[MetricsReport]) -> dict:
    """Mean and population standard deviation across several reports.

    Intended for scoring one benchmark against several prediction files;
    counts are echoed from the first report.
    """
    if not reports:
        raise DataError("no reports to aggregate")
    out: dict = {
        "n_reports": len(reports),
        "n_all": reports[0].n_all,
        "n_tail": reports[0].n_tail,
        "n_head": reports[0].n_head,
    }
    for name in MetricsReport._FLOAT_FIELDS:
        values = [getattr(r, name) for r in reports]
        if any(math.isnan(v) for v in values):
            out[name] = {"mean": None, "stdev": None}
        else:
            out[name] = {"mean": fmean(values), "stdev": pstdev(values)}
    return out


# ---------------------------------------------------------------------------
# alpha sweep and head/tail confusion
# ---------------------------------------------------------------------------


def default_alpha_grid(low: float = 0.2, high: float = 5.0, n: int = 20) -> list[float]:
    """Log-spaced alpha grid, rounded to 4 decimals for stable file output."""
    if not (0 < low < high and n >= 2):
        raise ConfigurationError(f"bad sweep grid ({low!r}, {high!r}, {n!r})")
    return [round(float(a), 4) for a in np.geomspace(low, high, n)]


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    n_tail: int
    acc_tail: float
    confusion: float | None = None


@dataclass
class SweepCurve:
    alphas: list[float]
    points: list[SweepPoint]


class _SweepScope:
    """Shared precomputation for sweep/confusion passes.

    Holds the selected reference histograms, the evaluation questions in
    scope (sorted by group then qid), per-question correctness, and the
    head answer sets at the configured default alpha.
    """

    def __init__(
        self,
        corpus: QuestionCorpus,
        config: BuildConfig,
        preds: PredictionSet,
        base: QuestionCorpus | None,
    ):
        self.config = config
        self.dists = select_reference_distributions(corpus, config, base)
        self.default_head: dict[str, set[str]] = {
            key: {a for a, lbl in classify_answers(dist, config.alpha).items() if lbl is BinaryLabel.HEAD}
            for key, dist in self.dists.items()
        }
        # (group_key, gold_count_in_base, correct, wrong_with_default_head_answer)
        self.questions: list[tuple[str, int, bool, bool]] = []
        for group_key in sorted(set(self.dists) & set(corpus.group_index)):
            dist = self.dists[group_key]
            heads = self.default_head[group_key]
            for qid in corpus.group_index[group_key]:
                gold = corpus.records[qid].answer
                pred = preds.get(qid)
                self.questions.append(
                    (
                        group_key,
                        dist.counts.get(gold, 0),
                        pred == gold,
                        pred is not None and pred != gold and pred in heads,
                    )
                )

    def tail_stats(self, alpha: float) -> tuple[int, int, int]:
        """(n_tail, n_correct_tail, n_confused) at one swept alpha."""
        a = _exact(alpha)
        if a <= 0:
            raise ConfigurationError(f"alpha must be positive, got {alpha!r}")
        cutoffs = {key: a * dist.mu for key, dist in self.dists.items()}
        n_tail = n_correct = n_confused = 0
        for group_key, gold_count, correct, confusable in self.questions:
            if gold_count <= cutoffs[group_key]:
                n_tail += 1
                n_correct += correct
                n_confused += confusable
        return n_tail, n_correct, n_confused


def alpha_sweep(
    corpus: QuestionCorpus,
    config: BuildConfig | None = None,
    preds: PredictionSet | None = None,
    alphas: Sequence[float] | None = None,
    base: QuestionCorpus | None = None,
    with_confusion: bool = False,
) -> SweepCurve:
    """Tail size and tail accuracy (optionally confusion) across alpha values.

    Group selection is fixed by the entropy threshold; alpha only moves
    the head/tail boundary, so n_tail grows monotonically with alpha and
    at a large enough alpha the tail is the whole selected set.
    """
    if preds is None:
        raise ConfigurationError("alpha_sweep needs a prediction set")
    config = config or BuildConfig()
    grid = list(alphas) if alphas is not None else default_alpha_grid()
    if not grid:
        raise ConfigurationError("empty alpha grid")
    scope = _SweepScope(corpus, config, preds, base)
    points = []
    for alpha in grid:
        n_tail, n_correct, n_confused = scope.tail_stats(alpha)
        points.append(
            SweepPoint(
                alpha=float(alpha),
                n_tail=n_tail,
                acc_tail=_acc(n_correct, n_tail),
                confusion=(n_confused / n_tail if n_tail else math.nan) if with_confusion else None,
            )
        )
    return SweepCurve(alphas=[float(a) for a in grid], points=points)


def head_tail_confusion(
    corpus: QuestionCorpus,
    config: BuildConfig | None = None,
    preds: PredictionSet | None = None,
    alpha: float | None = None,
    base: QuestionCorpus | None = None,
) -> float:
    """Share of swept-tail questions answered wrongly with a default-head answer.

    Head answer classes are fixed at the configured alpha while the tail
    ground-truth set follows the swept alpha, narrowing to ever rarer
    answers as alpha shrinks.  A perfect predictor scores 0 at every
    alpha; NaN when the swept tail is empty.
    """
    if preds is None:
        raise ConfigurationError("head_tail_confusion needs a prediction set")
    config = config or BuildConfig()
    swept = config.alpha if alpha is None else alpha
    scope = _SweepScope(corpus, config, preds, base)
    n_tail, _, n_confused = scope.tail_stats(swept)
    return n_confused / n_tail if n_tail else math.nan


# ---------------------------------------------------------------------------
# reasoning labels (three-way rareness joint matrix)
# ---------------------------------------------------------------------------


class ReasoningMode(str, Enum):
    REASON = "reason"
    BIAS = "bias"
    OTHER = "other"


_RARENESS_ORDER = (RarenessLabel.HEAD, RarenessLabel.BORDERLINE, RarenessLabel.TAIL)


@dataclass
class TypeBreakdown:
    """Reasoning-mode counts restricted to one question type."""

    type_name: str
    n: int
    reason: int
    bias: int
    other: int

    def to_dict(self) -> dict:
        return {
            "type": self.type_name,
            "n": self.n,
            "reason": self.reason,
            "bias": self.bias,
            "other": self.other,
            "reason_pct": _none_if_nan(_acc(self.reason, self.n)),
            "bias_pct": _none_if_nan(_acc(self.bias, self.n)),
            "other_pct": _none_if_nan(_acc(self.other, self.n)),
        }


@dataclass
class ReasoningLabelReport:
    """Joint (predicted rareness, gold rareness, correctness) cell counts.

    Correct cells off the diagonal are structurally zero: a correct
    prediction equals the gold answer, hence shares its rareness label.
    """

    cells: dict[tuple[RarenessLabel, RarenessLabel, bool], int]
    per_question: dict[str, ReasoningMode]
    tail_qids: frozenset[str]
    n_evaluated: int
    missing_predictions: int

    def cell(self, pred: RarenessLabel, gt: RarenessLabel, correct: bool) -> int:
        return self.cells.get((pred, gt, correct), 0)

    def cell_percentage(self, pred: RarenessLabel, gt: RarenessLabel, correct: bool) -> float:
        return _acc(self.cell(pred, gt, correct), self.n_evaluated)

    def mode_counts(self) -> dict[ReasoningMode, int]:
        counts = Counter(self.per_question.values())
        return {mode: counts.get(mode, 0) for mode in ReasoningMode}

    def matrix_rows(self) -> list[tuple[str, str, bool, int, float]]:
        """Long-format rows (pred, gt, correct, count, percent), fixed order."""
        rows = []
        for pred in _RARENESS_ORDER:
            for gt in _RARENESS_ORDER:
                for correct in (True, False):
                    rows.append(
                        (
                            pred.value,
                            gt.value,
                            correct,
                            self.cell(pred, gt, correct),
                            self.cell_percentage(pred, gt, correct),
                        )
                    )
        return rows


def reasoning_report(bench: OODBenchmark, preds: PredictionSet) -> ReasoningLabelReport:
    """Classify every benchmark question by prediction/gold rareness and correctness.

    REASON: correct with a tail-rare prediction.  BIAS: wrong, predicting
    a head-frequent answer where the gold answer is tail-rare.  OTHER:
    everything else.  A missing prediction counts as a wrong, never-seen
    answer (rareness TAIL).
    """
    if not bench.assignment:
        raise DataError("benchmark contains no questions; nothing to label")
    thresholds = bench.config.rareness_thresholds
    cells: dict[tuple[RarenessLabel, RarenessLabel, bool], int] = {}
    per_question: dict[str, ReasoningMode] = {}
    missing = 0
    for qid, asg in bench.assignment.items():
        dist = bench.selected_groups[asg.group_key]
        pred = preds.get(qid)
        if pred is None:
            missing += 1
        correct = pred is not None and pred == asg.answer
        gt_label = rareness_label(dist, asg.answer, thresholds)
        pred_label = rareness_label(dist, pred if pred is not None else "", thresholds)
        cells[(pred_label, gt_label, correct)] = cells.get((pred_label, gt_label, correct), 0) + 1
        if correct and pred_label is RarenessLabel.TAIL:
            mode = ReasoningMode.REASON
        elif not correct and pred_label is RarenessLabel.HEAD and gt_label is RarenessLabel.TAIL:
            mode = ReasoningMode.BIAS
        else:
            mode = ReasoningMode.OTHER
        per_question[qid] = mode
    return ReasoningLabelReport(
        cells=cells,
        per_question=per_question,
        tail_qids=bench.tail_qids,
        n_evaluated=len(per_question),
        missing_predictions=missing,
    )


def reasoning_labels(
    corpus: QuestionCorpus,
    config: BuildConfig | None = None,
    preds: PredictionSet | None = None,
    base: QuestionCorpus | None = None,
) -> ReasoningLabelReport:
    """Build the benchmark from `corpus` and label it against `preds`."""
    if preds is None:
        raise ConfigurationError("reasoning_labels needs a prediction set")
    from .split import build_ood_split

    bench = build_ood_split(corpus, config or BuildConfig(), base)
    return reasoning_report(bench, preds)


def breakdown_by_type(
    report: ReasoningLabelReport,
    corpus: QuestionCorpus,
    attribute: str = "structural_type",
) -> dict[str, TypeBreakdown]:
    """Reasoning-mode counts grouped by a question-type attribute."""
    if attribute not in ("structural_type", "semantic_type"):
        raise ConfigurationError(f"unknown type attribute {attribute!r}")
    grouped: dict[str, Counter] = {}
    for qid, mode in report.per_question.items():
        rec = corpus.records.get(qid)
        if rec is None:
            raise DataError(f"labeled question {qid!r} is not in corpus {corpus.split_name!r}")
        type_name = getattr(rec, attribute) or "(untyped)"
        grouped.setdefault(type_name, Counter())[mode] += 1
    out = {}
    for type_name in sorted(grouped):
        counts = grouped[type_name]
        out[type_name] = TypeBreakdown(
            type_name=type_name,
            n=sum(counts.values()),
            reason=counts.get(ReasoningMode.REASON, 0),
            bias=counts.get(ReasoningMode.BIAS, 0),
            other=counts.get(ReasoningMode.OTHER, 0),
        )
    return out
