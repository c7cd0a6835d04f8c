"""Head/tail splitting of imbalanced groups and benchmark assembly.

Inside each selected group with mean count mu = total / d, an answer class
is TAIL when its count is at most alpha * mu (boundary included) and HEAD
otherwise.  Comparisons are exact: alpha is read as a decimal literal and
mu stays rational, so count = alpha * mu lands on TAIL deterministically on
every platform.

A separate three-way reading of the same ratio r = count / mu supports
finer diagnostics: HEAD for r above the high threshold, TAIL below the low
one, BORDERLINE between (both boundaries closed).  An answer that never
occurs in the reference distribution has count 0 and is always TAIL.

The reference ("base") distribution defaults to the corpus being split;
alternatively the histograms can come from a training split or an external
corpus, in which case evaluation-corpus answers unseen in the base count
as zero.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

from .corpus import QuestionCorpus
from .errors import ConfigurationError, DataError
from .stats import (
    AnswerDistribution,
    group_distributions,
    normalized_entropy,
)

log = logging.getLogger("oodbench.split")


class BinaryLabel(str, Enum):
    HEAD = "head"
    TAIL = "tail"


class RarenessLabel(str, Enum):
    HEAD = "head"
    BORDERLINE = "borderline"
    TAIL = "tail"


class BaseDistribution(str, Enum):
    """Where the per-group answer histograms come from."""

    SELF_SPLIT = "self"
    TRAIN_SPLIT = "train"
    EXTERNAL = "external"


def _exact(value: float | int | str | Fraction) -> Fraction:
    """Read a threshold as the exact rational its decimal literal denotes."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigurationError(f"cannot interpret {value!r} as a number") from exc


@dataclass(frozen=True)
class BuildConfig:
    """Knobs controlling group selection and tail splitting."""

    alpha: float = 1.2
    entropy_threshold: float = 0.9
    base_distribution: BaseDistribution = BaseDistribution.SELF_SPLIT
    rareness_low: float = 0.7
    rareness_high: float = 1.2

    def __post_init__(self):
        if _exact(self.alpha) <= 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha!r}")
        t = _exact(self.entropy_threshold)
        if not 0 < t <= 1:
            raise ConfigurationError(
                f"entropy threshold must be in (0, 1], got {self.entropy_threshold!r}"
            )
        low, high = _exact(self.rareness_low), _exact(self.rareness_high)
        if not 0 < low <= high:
            raise ConfigurationError(
                f"rareness thresholds must satisfy 0 < low <= high, got "
                f"({self.rareness_low!r}, {self.rareness_high!r})"
            )

    @property
    def rareness_thresholds(self) -> tuple[float, float]:
        return (self.rareness_low, self.rareness_high)


def classify_answers(
    dist: AnswerDistribution, alpha: float | Fraction
) -> dict[str, BinaryLabel]:
    """Label every answer class of one group as HEAD or TAIL.

    TAIL iff count <= alpha * mu, evaluated exactly.
    """
    a = _exact(alpha)
    if a <= 0:
        raise ConfigurationError(f"alpha must be positive, got {alpha!r}")
    cutoff = a * dist.mu
    return {
        answer: (BinaryLabel.TAIL if count <= cutoff else BinaryLabel.HEAD)
        for answer, count in dist.counts.items()
    }


def rareness_label(
    dist: AnswerDistribution,
    answer: str,
    thresholds: tuple[float, float] = (0.7, 1.2),
) -> RarenessLabel:
    """Three-way label of one answer relative to the group's mean count.

    The answer need not occur in the distribution: a zero count gives
    ratio 0, which is TAIL for any positive low threshold.
    """
    low, high = (_exact(thresholds[0]), _exact(thresholds[1]))
    if not 0 < low <= high:
        raise ConfigurationError(f"rareness thresholds must satisfy 0 < low <= high, got {thresholds!r}")
    ratio = Fraction(dist.counts.get(answer, 0)) / dist.mu
    if ratio < low:
        return RarenessLabel.TAIL
    if ratio > high:
        return RarenessLabel.HEAD
    return RarenessLabel.BORDERLINE


@dataclass(frozen=True)
class QuestionAssignment:
    """Placement of one question inside a benchmark."""

    group_key: str
    label: BinaryLabel
    answer: str


@dataclass
class OODBenchmark:
    """A built benchmark: selected groups, their histograms, and per-question labels."""

    config: BuildConfig
    source_split: str
    selected_groups: dict[str, AnswerDistribution]
    assignment: dict[str, QuestionAssignment]
    head_qids: frozenset[str] = field(default_factory=frozenset)
    tail_qids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.head_qids and not self.tail_qids:
            heads, tails = [], []
            for qid, asg in self.assignment.items():
                (heads if asg.label is BinaryLabel.HEAD else tails).append(qid)
            self.head_qids = frozenset(heads)
            self.tail_qids = frozenset(tails)

    @property
    def n_questions(self) -> int:
        return len(self.assignment)

    def summary(self) -> dict:
        return {
            "n_groups": len(self.selected_groups),
            "n_questions": self.n_questions,
            "n_head": len(self.head_qids),
            "n_tail": len(self.tail_qids),
        }


def resolve_base_corpus(
    corpus: QuestionCorpus, config: BuildConfig, base: QuestionCorpus | None
) -> QuestionCorpus:
    """Pick the corpus whose histograms serve as the reference distribution."""
    if config.base_distribution is BaseDistribution.SELF_SPLIT:
        if base is not None:
            raise ConfigurationError(
                "a base corpus was supplied but the config says base_distribution='self'"
            )
        return corpus
    if base is None:
        raise ConfigurationError(
            f"base_distribution={config.base_distribution.value!r} requires a base corpus"
        )
    return base


def select_reference_distributions(
    corpus: QuestionCorpus, config: BuildConfig, base: QuestionCorpus | None = None
) -> dict[str, AnswerDistribution]:
    """Histograms of the groups passing the entropy filter, from the configured base.

    Selection depends only on the entropy threshold, never on alpha, so a
    swept alpha reshapes the head/tail boundary inside a fixed group set.
    """
    source = resolve_base_corpus(corpus, config, base)
    threshold = config.entropy_threshold
    selected: dict[str, AnswerDistribution] = {}
    for group_key, dist in group_distributions(source).items():
        if dist.d < 2:
            continue
        if normalized_entropy(dist).normalized < threshold:
            selected[group_key] = dist
    return selected


def build_ood_split(
    corpus: QuestionCorpus,
    config: BuildConfig | None = None,
    base: QuestionCorpus | None = None,
) -> OODBenchmark:
    """Select imbalanced groups and split their questions into head and tail.

    With the default self-split base the reference histograms are the
    corpus's own.  With a train/external base they come from `base`;
    groups of `corpus` absent from the base are dropped (logged), and
    answers absent from a base histogram are tail by the zero-count rule.
    """
    config = config or BuildConfig()
    source = resolve_base_corpus(corpus, config, base)
    selected = select_reference_distributions(corpus, config, base)

    dropped_groups = 0
    assignment: dict[str, QuestionAssignment] = {}
    for group_key in corpus.group_index:
        if group_key not in selected:
            if source is not corpus and group_key not in source.group_index:
                dropped_groups += 1
            continue
        dist = selected[group_key]
        labels = classify_answers(dist, config.alpha)
        for qid in corpus.group_index[group_key]:
            answer = corpus.records[qid].answer
            label = labels.get(answer, BinaryLabel.TAIL)  # unseen in base -> tail
            assignment[qid] = QuestionAssignment(group_key, label, answer)

    if source is not corpus:
        # Keep only groups that actually contribute evaluation questions.
        used = {asg.group_key for asg in assignment.values()}
        selected = {key: dist for key, dist in selected.items() if key in used}
        if dropped_groups:
            log.warning(
                "%d groups of %r have no histogram in the base corpus and were dropped",
                dropped_groups,
                corpus.split_name,
            )

    bench = OODBenchmark(
        config=config,
        source_split=corpus.split_name,
        selected_groups=selected,
        assignment=assignment,
    )
    log.info(
        "built benchmark from %r: %d groups, %d questions (%d head / %d tail)",
        corpus.split_name,
        len(bench.selected_groups),
        bench.n_questions,
        len(bench.head_qids),
        len(bench.tail_qids),
    )
    return bench


# ---------------------------------------------------------------------------
# benchmark file round trip
# ---------------------------------------------------------------------------


def _benchmark_payload(bench: OODBenchmark) -> dict:
    groups = {}
    for key, dist in bench.selected_groups.items():
        score = normalized_entropy(dist)
        groups[key] = {
            "counts": dict(dist.counts),
            "entropy": score.entropy_nats,
            "normalized_entropy": score.normalized,
        }
    questions = {
        qid: {"group": asg.group_key, "label": asg.label.value, "answer": asg.answer}
        for qid, asg in bench.assignment.items()
    }
    meta = {
        "alpha": bench.config.alpha,
        "entropy_threshold": bench.config.entropy_threshold,
        "base": bench.config.base_distribution.value,
        "rareness_low": bench.config.rareness_low,
        "rareness_high": bench.config.rareness_high,
        "source_split": bench.source_split,
        **bench.summary(),
    }
    return {"meta": meta, "groups": groups, "questions": questions}


def _fingerprint(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def write_benchmark(bench: OODBenchmark, path: str | Path) -> None:
    """Write the benchmark as self-describing JSON.

    The meta block records the full build configuration.  The `created`
    field is a deterministic fingerprint of the content rather than a
    wall-clock stamp, so rebuilding from identical inputs reproduces the
    file byte for byte.
    """
    payload = _benchmark_payload(bench)
    payload["meta"]["created"] = _fingerprint(payload)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1, ensure_ascii=False)
        fh.write("\n")


def load_benchmark(path: str | Path) -> OODBenchmark:
    """Read a benchmark file back into an equal OODBenchmark."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read benchmark file {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{path}: benchmark file must be a JSON object")
    for section in ("meta", "groups", "questions"):
        if section not in payload or not isinstance(payload[section], dict):
            raise DataError(f"{path}: missing or malformed {section!r} section")
    meta = payload["meta"]
    try:
        config = BuildConfig(
            alpha=meta["alpha"],
            entropy_threshold=meta["entropy_threshold"],
            base_distribution=BaseDistribution(meta.get("base", "self")),
            rareness_low=meta.get("rareness_low", 0.7),
            rareness_high=meta.get("rareness_high", 1.2),
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed meta section: {exc}") from exc

    groups: dict[str, AnswerDistribution] = {}
    for key in sorted(payload["groups"]):
        raw = payload["groups"][key]
        if not isinstance(raw, dict) or not isinstance(raw.get("counts"), dict):
            raise DataError(f"{path}: group {key!r}: missing counts")
        groups[key] = AnswerDistribution.from_counts(key, raw["counts"])

    assignment: dict[str, QuestionAssignment] = {}
    for qid in sorted(payload["questions"]):
        raw = payload["questions"][qid]
        if not isinstance(raw, dict):
            raise DataError(f"{path}: question {qid!r}: not an object")
        group_key, label, answer = raw.get("group"), raw.get("label"), raw.get("answer")
        if group_key not in groups:
            raise DataError(f"{path}: question {qid!r}: unknown group {group_key!r}")
        if label not in (BinaryLabel.HEAD.value, BinaryLabel.TAIL.value):
            raise DataError(f"{path}: question {qid!r}: bad label {label!r}")
        if not isinstance(answer, str):
            raise DataError(f"{path}: question {qid!r}: missing gold answer")
        assignment[qid] = QuestionAssignment(group_key, BinaryLabel(label), answer)

    return OODBenchmark(
        config=config,
        source_split=str(meta.get("source_split", "")),
        selected_groups=groups,
        assignment=assignment,
    )
