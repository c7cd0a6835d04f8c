"""Out-of-distribution benchmark construction and evaluation for grouped QA corpora.

The pipeline: parse a corpus of questions carrying gold answers and group
keys, keep the groups whose answer distributions are imbalanced (low
normalized entropy), split each kept group's answers into frequent heads
and rare tails around alpha times the mean class count, then score
prediction files on the resulting benchmark: overall/tail/head accuracy,
the head-over-tail gap, alpha sweeps, head/tail confusion and
reasoning-vs-bias labels.
"""

from .corpus import (
    IngestStats,
    PredictionSet,
    QuestionCorpus,
    QuestionRecord,
    normalize_answer,
    parse_predictions,
    parse_question_corpus,
    write_corpus,
    write_predictions,
)
from .errors import (
    ConfigurationError,
    CorpusFormatError,
    DataError,
    OodbenchError,
    UndefinedEntropyError,
    UnknownGroupError,
)
from .metrics import (
    MetricsReport,
    ReasoningLabelReport,
    ReasoningMode,
    SweepCurve,
    SweepPoint,
    TypeBreakdown,
    aggregate_reports,
    alpha_sweep,
    breakdown_by_type,
    compute_delta,
    default_alpha_grid,
    evaluate,
    head_tail_confusion,
    reasoning_labels,
    reasoning_report,
    relative_change,
)
from .simulate import BiasKnob, knob_predictor, question_prior_predictor
from .split import (
    BaseDistribution,
    BinaryLabel,
    BuildConfig,
    OODBenchmark,
    QuestionAssignment,
    RarenessLabel,
    build_ood_split,
    classify_answers,
    load_benchmark,
    rareness_label,
    select_reference_distributions,
    write_benchmark,
)
from .stats import (
    AnswerDistribution,
    EntropyScore,
    answer_distribution,
    filter_imbalanced_groups,
    group_distributions,
    group_stats_rows,
    normalized_entropy,
    shannon_entropy,
)
from .synth import SynthConfig, generate_synthetic_corpus

__version__ = "0.1.0"

__all__ = [
    "AnswerDistribution",
    "BaseDistribution",
    "BiasKnob",
    "BinaryLabel",
    "BuildConfig",
    "ConfigurationError",
    "CorpusFormatError",
    "DataError",
    "EntropyScore",
    "IngestStats",
    "MetricsReport",
    "OODBenchmark",
    "OodbenchError",
    "PredictionSet",
    "QuestionAssignment",
    "QuestionCorpus",
    "QuestionRecord",
    "RarenessLabel",
    "ReasoningLabelReport",
    "ReasoningMode",
    "SweepCurve",
    "SweepPoint",
    "SynthConfig",
    "TypeBreakdown",
    "UndefinedEntropyError",
    "UnknownGroupError",
    "aggregate_reports",
    "alpha_sweep",
    "answer_distribution",
    "breakdown_by_type",
    "build_ood_split",
    "classify_answers",
    "compute_delta",
    "default_alpha_grid",
    "evaluate",
    "filter_imbalanced_groups",
    "generate_synthetic_corpus",
    "group_distributions",
    "group_stats_rows",
    "head_tail_confusion",
    "knob_predictor",
    "load_benchmark",
    "normalize_answer",
    "normalized_entropy",
    "parse_predictions",
    "parse_question_corpus",
    "question_prior_predictor",
    "rareness_label",
    "reasoning_labels",
    "reasoning_report",
    "relative_change",
    "select_reference_distributions",
    "shannon_entropy",
    "write_benchmark",
    "write_corpus",
    "write_predictions",
]
