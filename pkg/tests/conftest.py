from __future__ import annotations

import json
from pathlib import Path

import pytest

from oodbench import PredictionSet, QuestionCorpus, QuestionRecord, write_corpus

STRUCTS = ("query", "verify", "choose", "compare", "logical")


def corpus_from_counts(
    counts_by_group: dict[str, dict[str, int]],
    split_name: str = "test",
    cycle_types: bool = True,
) -> QuestionCorpus:
    """Corpus with exactly the given per-group gold-answer histograms."""
    records = []
    for group_key in sorted(counts_by_group):
        i = 0
        for answer in sorted(counts_by_group[group_key]):
            for _ in range(counts_by_group[group_key][answer]):
                qid = f"{group_key}-q{i:04d}"
                records.append(
                    QuestionRecord(
                        qid=qid,
                        text=f"question {qid}",
                        answer=answer,
                        image_id=f"im{i % 7:03d}",
                        local_group=group_key,
                        global_group=f"gg-{group_key[:2]}",
                        structural_type=STRUCTS[i % len(STRUCTS)] if cycle_types else "query",
                        semantic_type="attr",
                    )
                )
                i += 1
    return QuestionCorpus.from_records(split_name, records)


def gold_predictions(corpus: QuestionCorpus, label: str = "gold") -> PredictionSet:
    return PredictionSet({qid: rec.answer for qid, rec in corpus.records.items()}, label)


def write_corpus_file(directory: Path, corpus: QuestionCorpus, name: str = "corpus.json") -> Path:
    path = directory / name
    write_corpus(corpus, path)
    return path


def write_mapping_predictions(directory: Path, mapping: dict[str, str], name: str = "preds.json") -> Path:
    path = directory / name
    path.write_text(json.dumps(mapping, ensure_ascii=False), encoding="utf-8")
    return path


@pytest.fixture
def run_cli(capsys):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    from oodbench.cli import main

    def _run(*argv: str):
        code = main([str(a) for a in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return _run
