"""Seeded synthetic corpora with controllable per-group answer skew.

Each group draws its answers from a geometric weight profile: answer j of
a d-answer alphabet has sampling weight skew**j, so skew = 1 gives a
near-uniform histogram and small skew concentrates almost all mass on the
first answer.  Generation is driven by a single `random.Random(seed)`
with a fixed call order, so a config reproduces its corpus exactly,
including qids, on any platform.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import (
    SEMANTIC_TYPES,
    STRUCTURAL_TYPES,
    QuestionCorpus,
    QuestionRecord,
)
from .errors import ConfigurationError


def _as_range(value: int | tuple[int, int], what: str) -> tuple[int, int]:
    if isinstance(value, int):
        value = (value, value)
    try:
        lo, hi = int(value[0]), int(value[1])
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigurationError(f"{what} must be an int or a (low, high) pair") from exc
    if lo < 1 or hi < lo:
        raise ConfigurationError(f"{what} range is degenerate: ({lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class SynthConfig:
    """Shape of a synthetic corpus."""

    n_groups: int = 50
    answers_per_group: int | tuple[int, int] = (2, 8)
    questions_per_group: int | tuple[int, int] = (20, 200)
    skew: float = 0.5
    seed: int = 0
    split_name: str = "synthetic"

    def __post_init__(self):
        if self.n_groups < 1:
            raise ConfigurationError(f"n_groups must be at least 1, got {self.n_groups}")
        if not 0.0 < self.skew <= 1.0:
            raise ConfigurationError(f"skew must be in (0, 1], got {self.skew!r}")
        object.__setattr__(self, "answers_per_group", _as_range(self.answers_per_group, "answers_per_group"))
        object.__setattr__(
            self, "questions_per_group", _as_range(self.questions_per_group, "questions_per_group")
        )


def generate_synthetic_corpus(config: SynthConfig) -> QuestionCorpus:
    """Generate a corpus matching the config, deterministically from its seed."""
    rng = random.Random(config.seed)
    a_lo, a_hi = config.answers_per_group
    q_lo, q_hi = config.questions_per_group
    shapes = [(rng.randint(a_lo, a_hi), rng.randint(q_lo, q_hi)) for _ in range(config.n_groups)]
    total_questions = sum(n for _, n in shapes)
    image_pool = max(1, total_questions // 3)
    n_global = max(1, config.n_groups // 4)

    records = []
    qnum = 0
    for gi, (d, n) in enumerate(shapes):
        group_key = f"grp{gi:04d}"
        alphabet = [f"a{j:02d}" for j in range(d)]
        weights = [config.skew**j for j in range(d)]
        drawn = rng.choices(alphabet, weights=weights, k=n)
        for answer in drawn:
            qid = f"q{qnum:07d}"
            qnum += 1
            records.append(
                QuestionRecord(
                    qid=qid,
                    text=f"synthetic question {qid} in group {group_key}",
                    answer=answer,
                    image_id=f"im{rng.randrange(image_pool):06d}",
                    local_group=group_key,
                    global_group=f"gg{gi % n_global:03d}",
                    structural_type=rng.choice(STRUCTURAL_TYPES),
                    semantic_type=rng.choice(SEMANTIC_TYPES),
                )
            )
    return QuestionCorpus.from_records(config.split_name, records)
