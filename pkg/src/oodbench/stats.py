"""Per-group answer distributions and entropy-based imbalance scoring.

A group's answer histogram is summarized by its Shannon entropy in nats,

    e = -sum_i p_i * ln(p_i),    p_i = count_i / total,

and by the normalized form e / ln(d) where d is the number of distinct
answers.  The normalized score lies in [0, 1], equals 1 exactly when all
counts are equal, and is base-invariant (a ratio of same-base logarithms).
It is undefined for d = 1, which raises UndefinedEntropyError.

Groups whose normalized entropy falls strictly below a threshold T are the
"imbalanced" ones worth keeping: their answer priors are skewed enough that
a head/tail split is meaningful.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from .corpus import QuestionCorpus
from .errors import ConfigurationError, DataError, UndefinedEntropyError


@dataclass(frozen=True)
class AnswerDistribution:
    """Histogram of gold answers inside one local group.

    The mean count per answer class, mu = total / d, is kept exact as a
    Fraction because downstream threshold comparisons (count vs alpha * mu)
    must not wobble at the boundary.
    """

    group_key: str
    counts: Mapping[str, int]
    total: int
    d: int

    @classmethod
    def from_counts(cls, group_key: str, counts: Mapping[str, int]) -> "AnswerDistribution":
        cleaned = {}
        for answer, count in counts.items():
            if not isinstance(count, int) or isinstance(count, bool) or count <= 0:
                raise DataError(
                    f"group {group_key!r}: count for answer {answer!r} must be a positive "
                    f"integer, got {count!r}"
                )
            cleaned[answer] = count
        if not cleaned:
            raise DataError(f"group {group_key!r}: empty answer histogram")
        ordered = {answer: cleaned[answer] for answer in sorted(cleaned)}
        return cls(group_key, ordered, sum(ordered.values()), len(ordered))

    @property
    def mu(self) -> Fraction:
        """Exact mean count per answer class."""
        return Fraction(self.total, self.d)

    @cached_property
    def probs(self) -> dict[str, float]:
        return {answer: count / self.total for answer, count in self.counts.items()}

    def modal_answer(self) -> str:
        """Most frequent answer; ties break to the lexicographically smallest."""
        return min(self.counts, key=lambda a: (-self.counts[a], a))


@dataclass(frozen=True)
class EntropyScore:
    entropy_nats: float
    normalized: float
    d: int


def answer_distribution(corpus: QuestionCorpus, group_key: str) -> AnswerDistribution:
    """Histogram of gold answers for one local group of the corpus."""
    answers = corpus.answers_in_group(group_key)  # raises UnknownGroupError
    return AnswerDistribution.from_counts(group_key, Counter(answers))


def group_distributions(corpus: QuestionCorpus) -> dict[str, AnswerDistribution]:
    """Distributions for every local group, keyed and ordered by group key."""
    out: dict[str, AnswerDistribution] = {}
    for group_key, qids in corpus.group_index.items():
        counts = Counter(corpus.records[qid].answer for qid in qids)
        out[group_key] = AnswerDistribution.from_counts(group_key, counts)
    return out


def shannon_entropy(dist: AnswerDistribution) -> float:
    """Shannon entropy of the distribution, in nats."""
    total = dist.total
    return -sum((c / total) * math.log(c / total) for c in dist.counts.values())


def normalized_entropy(dist: AnswerDistribution) -> EntropyScore:
    """Entropy normalized by ln(d); exact 1.0 for uniform histograms.

    Raises UndefinedEntropyError when d = 1 (ln 1 = 0 leaves nothing to
    normalize by; such groups carry no imbalance signal either way).
    """
    if dist.d < 2:
        raise UndefinedEntropyError(
            f"group {dist.group_key!r}: normalized entropy is undefined for a "
            f"single-answer group"
        )
    counts = list(dist.counts.values())
    if len(set(counts)) == 1:
        # All counts equal: the score is exactly 1 by definition; computing
        # it in floats would land a few ulps off.
        return EntropyScore(math.log(dist.d), 1.0, dist.d)
    entropy = shannon_entropy(dist)
    normalized = min(entropy / math.log(dist.d), 1.0)
    return EntropyScore(entropy, normalized, dist.d)


def filter_imbalanced_groups(corpus: QuestionCorpus, threshold: float = 0.9) -> set[str]:
    """Group keys whose normalized entropy is strictly below the threshold.

    Single-answer groups are excluded: they cannot be scored and a
    degenerate prior offers no head/tail contrast.  A threshold of 1.0
    therefore selects exactly the non-uniform multi-answer groups.
    """
    if not 0.0 < threshold <= 1.0:
        raise ConfigurationError(f"entropy threshold must be in (0, 1], got {threshold!r}")
    selected = set()
    for group_key, dist in group_distributions(corpus).items():
        if dist.d < 2:
            continue
        if normalized_entropy(dist).normalized < threshold:
            selected.add(group_key)
    return selected


def group_stats_rows(
    corpus: QuestionCorpus, threshold: float = 0.9
) -> list[tuple[str, int, int, float | None, float | None, bool]]:
    """Rows (group_key, total, d, entropy, normalized_entropy, selected).

    The raw material for diversity reports: one row per local group in
    sorted key order.  Entropy fields are None for single-answer groups.
    """
    if not 0.0 < threshold <= 1.0:
        raise ConfigurationError(f"entropy threshold must be in (0, 1], got {threshold!r}")
    rows = []
    for group_key, dist in group_distributions(corpus).items():
        if dist.d < 2:
            rows.append((group_key, dist.total, dist.d, None, None, False))
            continue
        score = normalized_entropy(dist)
        rows.append(
            (
                group_key,
                dist.total,
                dist.d,
                score.entropy_nats,
                score.normalized,
                score.normalized < threshold,
            )
        )
    return rows
