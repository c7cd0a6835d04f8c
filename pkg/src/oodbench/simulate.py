"""Predictors with a controllable amount of answer-prior bias.

`question_prior_predictor` always answers with the modal gold answer of
the question's group in a reference corpus: the strongest pure-prior
baseline.  `knob_predictor` interpolates between that and a perfect
predictor: with probability beta it answers the group prior, otherwise the
gold answer.

The knob's randomness is counter-style: each decision hashes the qid with
the seed, so results do not depend on iteration order, adding or removing
questions leaves other decisions untouched, and the same (seed, qid) pair
always falls the same way on any platform.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

from .corpus import PredictionSet, QuestionCorpus
from .errors import ConfigurationError, DataError
from .stats import group_distributions


@dataclass(frozen=True)
class BiasKnob:
    """beta = probability of answering from the prior instead of the gold answer."""

    beta: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must be in [0, 1], got {self.beta!r}")


def _unit_uniform(seed: int, qid: str) -> float:
    """Deterministic uniform draw in [0, 1) keyed by (seed, qid)."""
    key = seed.to_bytes(8, "big", signed=True)
    digest = hashlib.blake2b(qid.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "big") / 2**64


def _modal_answers(corpus: QuestionCorpus, group_attr: str) -> tuple[dict[str, str], str]:
    """Per-group modal answer plus the corpus-wide modal fallback.

    Ties break to the lexicographically smallest answer, which makes the
    result independent of input ordering.
    """
    if group_attr not in ("local", "global"):
        raise ConfigurationError(f"group attribute must be 'local' or 'global', got {group_attr!r}")
    if not corpus.records:
        raise DataError(f"corpus {corpus.split_name!r} is empty; no priors to learn")
    if group_attr == "local":
        modal = {key: dist.modal_answer() for key, dist in group_distributions(corpus).items()}
    else:
        histos: dict[str, Counter] = {}
        for rec in corpus.records.values():
            if rec.global_group is not None:
                histos.setdefault(rec.global_group, Counter())[rec.answer] += 1
        modal = {
            key: min(counts, key=lambda a: (-counts[a], a)) for key, counts in sorted(histos.items())
        }
    overall = Counter(rec.answer for rec in corpus.records.values())
    fallback = min(overall, key=lambda a: (-overall[a], a))
    return modal, fallback


def question_prior_predictor(
    base: QuestionCorpus,
    target: QuestionCorpus,
    group_attr: str = "local",
) -> PredictionSet:
    """Answer every target question with its group's modal answer in `base`.

    Questions whose group is unknown to the base (or groupless ones) get
    the corpus-wide modal answer.
    """
    modal, fallback = _modal_answers(base, group_attr)
    attr = "local_group" if group_attr == "local" else "global_group"
    entries = {}
    for qid, rec in target.records.items():
        group_key = getattr(rec, attr)
        entries[qid] = modal.get(group_key, fallback) if group_key is not None else fallback
    return PredictionSet(entries, source_label=f"prior-{group_attr}")


def knob_predictor(
    corpus: QuestionCorpus,
    knob: BiasKnob,
    group_attr: str = "local",
    base: QuestionCorpus | None = None,
) -> PredictionSet:
    """Blend the prior predictor (probability beta) with the gold answer.

    beta = 0 reproduces the gold answers exactly; beta = 1 coincides with
    `question_prior_predictor` on every question.
    """
    modal, fallback = _modal_answers(base if base is not None else corpus, group_attr)
    attr = "local_group" if group_attr == "local" else "global_group"
    entries = {}
    for qid, rec in corpus.records.items():
        group_key = getattr(rec, attr)
        prior = modal.get(group_key, fallback) if group_key is not None else fallback
        entries[qid] = prior if _unit_uniform(knob.seed, qid) < knob.beta else rec.answer
    return PredictionSet(entries, source_label=f"knob-beta{knob.beta:g}-seed{knob.seed}")
