"""Corpus/prediction ingestion: streaming scanner, validation, round trips."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oodbench import (
    CorpusFormatError,
    DataError,
    PredictionSet,
    QuestionRecord,
    parse_predictions,
    parse_question_corpus,
    write_corpus,
    write_predictions,
)
from oodbench.corpus import iter_json_object_items

from conftest import corpus_from_counts


def scan_bytes(data: bytes, chunk_size: int = 1 << 16) -> list[tuple[str, object]]:
    import io

    return [(k, v) for k, v, _ in iter_json_object_items(io.BytesIO(data), "<mem>", chunk_size)]


# ---------------------------------------------------------------------------
# incremental scanner
# ---------------------------------------------------------------------------

_json_scalars = (
    st.none()
    | st.booleans()
    | st.integers(min_value=-(10**12), max_value=10**12)
    | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(max_size=30)
)
_json_values = st.recursive(
    _json_scalars,
    lambda kids: st.lists(kids, max_size=4) | st.dictionaries(st.text(max_size=8), kids, max_size=4),
    max_leaves=12,
)
_documents = st.dictionaries(st.text(max_size=12), _json_values, max_size=8)


@given(doc=_documents, indent=st.sampled_from([None, 1, 4]), chunk=st.sampled_from([3, 17, 65536]))
@settings(max_examples=120, deadline=None)
def test_scanner_agrees_with_json_loads(doc, indent, chunk):
    data = json.dumps(doc, indent=indent, ensure_ascii=False).encode("utf-8")
    assert dict(scan_bytes(data, chunk)) == doc


def test_scanner_handles_escapes_and_tiny_chunks():
    doc = {
        "tricky \\": 'c:\\dir "quoted" \\\\',
        "unicode 🎈": {"nested": ["ä", {"deep": "✓ \u2603"}]},
        "trailing backslash \\\\": "\\",
    }
    data = json.dumps(doc, ensure_ascii=False).encode("utf-8")
    for chunk in (1, 2, 5, 64):
        assert dict(scan_bytes(data, chunk)) == doc


def test_scanner_empty_object():
    assert scan_bytes(b"{}") == []
    assert scan_bytes(b"  { \n } ") == []


@pytest.mark.parametrize(
    "data, offset, needle",
    [
        (b"[1]", 0, "expected '{'"),
        (b"", 0, "empty document"),
        (b'{"a" 1}', 5, "expected ':'"),
        (b'{"a": 1 "b": 2}', 8, "expected ',' or '}'"),
        (b'{"a": [1, 2}', 6, "invalid JSON value"),
        (b'{"a": {"x": 1}', 14, "unexpected end of file"),
        (b"{} {}", 3, "trailing data"),
        (b'{"a": "xy', 6, "unterminated string"),
        (b"{1: 2}", 1, "to start a key"),
    ],
)
def test_scanner_fatal_errors_carry_byte_offsets(data, offset, needle):
    with pytest.raises(CorpusFormatError) as err:
        scan_bytes(data)
    assert err.value.offset == offset
    assert needle in str(err.value)
    assert "<mem>" in str(err.value)


def test_scanner_offsets_stay_absolute_across_chunks():
    pad = b" " * 100
    data = b'{"k": "v"' + pad + b', "z": }'
    with pytest.raises(CorpusFormatError) as err:
        scan_bytes(data, chunk_size=8)
    assert err.value.offset == data.index(b"}", 5)


# ---------------------------------------------------------------------------
# corpus parsing
# ---------------------------------------------------------------------------


def test_parse_skips_bad_records_and_tallies(tmp_path, caplog):
    raw = """
    {
      "good": {"answer": " Red ", "question": "what?", "imageId": "im1",
               "groups": {"local": "color-rose", "global": "color"},
               "types": {"structural": "query", "semantic": "attr"}},
      "noanswer": {"question": "?"},
      "blank": {"answer": "   "},
      "multi": {"answer": ["red", "blue"]},
      "notobj": 17,
      "": {"answer": "ok"},
      "groupless": {"answer": "Blue", "types": {"structural": "verify"}},
      "good": {"answer": "BLUE ", "groups": {"local": "color-rose"}}
    }
    """
    path = tmp_path / "c.json"
    path.write_bytes(raw.encode("utf-8"))
    with caplog.at_level("WARNING", logger="oodbench"):
        corpus = parse_question_corpus(path, "val")
    assert corpus.split_name == "val"
    assert set(corpus.records) == {"good", "groupless"}
    assert corpus.records["good"].answer == "blue"  # duplicate: last one wins, normalized
    assert corpus.records["groupless"].local_group is None
    assert corpus.stats.n_loaded == 2
    assert corpus.stats.n_skipped == 5
    assert corpus.stats.n_groupless == 1
    assert corpus.stats.n_duplicates == 1
    assert "duplicate question id" in caplog.text
    assert "multi-answer" in caplog.text
    # groupless records are loaded but never indexed into a group
    assert "groupless" not in {q for qids in corpus.group_index.values() for q in qids}


def test_parse_missing_file_is_fatal():
    with pytest.raises(DataError, match="cannot read"):
        parse_question_corpus("/nonexistent/corpus.json")


def test_corpus_roundtrip_through_file(tmp_path):
    corpus = corpus_from_counts(
        {"color-ros\u00e9": {"ros\u00e9": 3, "dark red": 1}, "verify-x": {"yes": 4, "no": 2}},
        split_name="fancy",
    )
    path = tmp_path / "out.json"
    write_corpus(corpus, path)
    again = parse_question_corpus(path, "fancy")
    assert again == corpus
    # byte-identical on rewrite
    path2 = tmp_path / "out2.json"
    write_corpus(again, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_corpus_counts_and_group_index():
    corpus = corpus_from_counts({"g1": {"a": 3, "b": 1}, "g2": {"c": 2}})
    assert corpus.n_questions == 6
    assert corpus.n_groups == 2
    assert corpus.n_images >= 1
    assert corpus.group_index["g1"] == sorted(corpus.group_index["g1"])
    assert list(corpus.records) == sorted(corpus.records)


def test_record_is_immutable():
    rec = QuestionRecord("q1", "?", "red", "im1", "g", "gg", "query", "attr")
    with pytest.raises(AttributeError):
        rec.answer = "blue"


# ---------------------------------------------------------------------------
# prediction parsing
# ---------------------------------------------------------------------------


def test_predictions_mapping_format(tmp_path, caplog):
    path = tmp_path / "p.json"
    path.write_text('{"q1": " Red ", "q2": "no", "q3": 5, "q1": "Blue"}')
    with caplog.at_level("WARNING", logger="oodbench"):
        preds = parse_predictions(path)
    assert preds.entries == {"q1": "blue", "q2": "no"}
    assert preds.n_duplicates == 1
    assert preds.source_label == "p"
    assert "not a string" in caplog.text


def test_predictions_jsonl_format(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text(
        '{"questionId": "q1", "prediction": " Red "}\n'
        "\n"
        '{"questionId": "q2", "prediction": "no"}\n'
        '{"prediction": "orphan"}\n'
        '{"questionId": "q1", "prediction": "Blue"}\n'
    )
    preds = parse_predictions(path, "model-a")
    assert preds.entries == {"q1": "blue", "q2": "no"}
    assert preds.n_duplicates == 1
    assert preds.source_label == "model-a"


def test_prediction_formats_are_interchangeable(tmp_path):
    mapping = tmp_path / "m.json"
    mapping.write_text('{"q2": "No", "q1": "red"}')
    lines = tmp_path / "l.json"
    lines.write_text(
        '{"questionId": "q1", "prediction": "red"}\n{"questionId": "q2", "prediction": "No"}\n'
    )
    assert parse_predictions(mapping).entries == parse_predictions(lines).entries


def test_predictions_jsonl_bad_line_is_fatal(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text('{"questionId": "q1", "prediction": "red"}\n{"questionId": }\n')
    with pytest.raises(DataError, match="line 2"):
        parse_predictions(path)


def test_predictions_reject_foreign_files(tmp_path):
    path = tmp_path / "p.json"
    path.write_text('["q1", "red"]')
    with pytest.raises(CorpusFormatError):
        parse_predictions(path)
    with pytest.raises(DataError):
        parse_predictions(tmp_path / "missing.json")


def test_predictions_empty_inputs_warn_not_fail(tmp_path, caplog):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    blank_obj = tmp_path / "obj.json"
    blank_obj.write_text("{}")
    with caplog.at_level("WARNING", logger="oodbench"):
        assert parse_predictions(empty).entries == {}
        assert parse_predictions(blank_obj).entries == {}
    assert "empty prediction file" in caplog.text


def test_predictions_single_line_mapping_detection(tmp_path):
    # A mapping squeezed onto one line must not be mistaken for JSON lines.
    path = tmp_path / "p.json"
    path.write_text(json.dumps({f"q{i}": "red" for i in range(500)}))
    preds = parse_predictions(path)
    assert len(preds) == 500


def test_predictions_roundtrip(tmp_path):
    original = PredictionSet({"q2": "no", "q1": "red", "q\u00e9": "caf\u00e9"}, "x")
    path = tmp_path / "w.json"
    write_predictions(original, path)
    again = parse_predictions(path, "x")
    assert again.entries == original.entries
    path2 = tmp_path / "w2.json"
    write_predictions(again, path2)
    assert path.read_bytes() == path2.read_bytes()
