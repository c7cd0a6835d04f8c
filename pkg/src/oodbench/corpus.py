"""Corpus and prediction file ingestion.

Two on-disk formats live here.

Corpus files are a single large JSON object mapping question id to a record:

    {
      "q001": {
        "question": "What color is the rose?",
        "answer": "red",
        "imageId": "im0042",
        "groups": {"local": "color-rose", "global": "color"},
        "types": {"structural": "query", "semantic": "attr"}
      },
      ...
    }

Real corpora of this shape run to hundreds of megabytes, so the top-level
object is never materialized whole: an incremental scanner walks the byte
stream, slices out one key/value pair at a time and decodes each record
separately.  Structural damage (missing braces, bad tokens, trailing junk)
is fatal and reported with the absolute byte offset; per-record problems
(missing answer, list-valued answer, non-object value) skip that record
with a logged warning and a tally.

Prediction files come in two interchangeable flavors:

  * a JSON object mapping question id to answer string:
        {"q001": "red", "q002": "no"}
  * JSON lines, one object per line:
        {"questionId": "q001", "prediction": "red"}

The flavor is detected from content (see `parse_predictions`).  Gold and
predicted answers are normalized identically at ingest: surrounding
whitespace stripped, then lowercased.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, NoReturn

from .errors import CorpusFormatError, DataError

log = logging.getLogger("oodbench.corpus")

STRUCTURAL_TYPES = ("choose", "compare", "logical", "query", "verify")
SEMANTIC_TYPES = ("attr", "cat", "global", "obj", "rel")


def normalize_answer(text: str) -> str:
    """Canonical answer form used for counting and for correctness checks."""
    return text.strip().lower()


# ---------------------------------------------------------------------------
# record / corpus / prediction containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class QuestionRecord:
    """One question with its gold answer and grouping metadata."""

    qid: str
    text: str
    answer: str
    image_id: str
    local_group: str | None
    global_group: str | None
    structural_type: str
    semantic_type: str


@dataclass(frozen=True)
class IngestStats:
    """Counters describing one parse run.  Excluded from corpus equality."""

    n_loaded: int = 0
    n_skipped: int = 0
    n_groupless: int = 0
    n_duplicates: int = 0


@dataclass
class QuestionCorpus:
    """A parsed corpus: records keyed by qid plus a local-group index.

    `records` iterates in sorted qid order and `group_index` maps each
    local group key to the sorted qids it contains, so every downstream
    iteration order is deterministic regardless of file order.
    """

    split_name: str
    records: dict[str, QuestionRecord]
    group_index: dict[str, list[str]]
    stats: IngestStats = field(default_factory=IngestStats, compare=False, repr=False)

    @classmethod
    def from_records(
        cls,
        split_name: str,
        records: Iterable[QuestionRecord],
        stats: IngestStats | None = None,
    ) -> "QuestionCorpus":
        by_qid = {rec.qid: rec for rec in records}
        ordered = {qid: by_qid[qid] for qid in sorted(by_qid)}
        index: dict[str, list[str]] = {}
        for qid, rec in ordered.items():
            if rec.local_group is not None:
                index.setdefault(rec.local_group, []).append(qid)
        index = {key: sorted(qids) for key, qids in sorted(index.items())}
        return cls(split_name, ordered, index, stats or IngestStats())

    @property
    def n_questions(self) -> int:
        return len(self.records)

    @property
    def n_groups(self) -> int:
        return len(self.group_index)

    @property
    def n_images(self) -> int:
        return len({rec.image_id for rec in self.records.values() if rec.image_id})

    def answers_in_group(self, group_key: str) -> list[str]:
        from .errors import UnknownGroupError

        if group_key not in self.group_index:
            raise UnknownGroupError(group_key, f"corpus {self.split_name!r}")
        return [self.records[qid].answer for qid in self.group_index[group_key]]


@dataclass
class PredictionSet:
    """Predicted answers keyed by qid, already normalized."""

    entries: dict[str, str]
    source_label: str = ""
    n_duplicates: int = field(default=0, compare=False)

    def __post_init__(self):
        self.entries = {qid: self.entries[qid] for qid in sorted(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, qid: str) -> str | None:
        return self.entries.get(qid)


# ---------------------------------------------------------------------------
# incremental scanner for one huge top-level JSON object
# ---------------------------------------------------------------------------

_WS = b" \t\r\n"
_CONTAINER_TOKEN = re.compile(rb'["{}\[\]]')
_SCALAR_END = re.compile(rb"[,}\]\s]")


class _ByteScanner:
    """Chunked cursor over a byte stream with absolute-offset error reporting."""

    __slots__ = ("_fh", "path", "chunk", "buf", "base", "i", "_eof")

    def __init__(self, fh: IO[bytes], path: str, chunk: int = 1 << 16):
        self._fh = fh
        self.path = path
        self.chunk = chunk
        self.buf = bytearray()
        self.base = 0  # absolute offset of buf[0]
        self.i = 0  # cursor within buf
        self._eof = False

    def _fill(self) -> bool:
        if self._eof:
            return False
        data = self._fh.read(self.chunk)
        if not data:
            self._eof = True
            return False
        self.buf += data
        return True

    def _ensure(self, n: int = 1) -> bool:
        while len(self.buf) < self.i + n:
            if not self._fill():
                return False
        return True

    def compact(self) -> None:
        # Drop consumed bytes so memory stays bounded by chunk + one record.
        if self.i > self.chunk:
            self.base += self.i
            del self.buf[: self.i]
            self.i = 0

    def offset(self) -> int:
        return self.base + self.i

    def fail(self, message: str, offset: int | None = None) -> NoReturn:
        raise CorpusFormatError(self.path, self.offset() if offset is None else offset, message)

    def peek_nonws(self) -> int | None:
        """Skip JSON whitespace; return the next byte (unconsumed) or None at EOF."""
        while True:
            if not self._ensure(1):
                return None
            b = self.buf[self.i]
            if b in _WS:
                self.i += 1
            else:
                return b

    def scan_string_token(self) -> bytes:
        """Consume a JSON string starting at the cursor; return it with quotes."""
        start = self.i
        j = self.i + 1
        while True:
            k = self.buf.find(b'"', j)
            while k == -1:
                if not self._fill():
                    self.fail("unterminated string", self.base + start)
                k = self.buf.find(b'"', j)
            backslashes = 0
            m = k - 1
            while m > start and self.buf[m] == 0x5C:
                backslashes += 1
                m -= 1
            if backslashes % 2 == 0:
                token = bytes(self.buf[start : k + 1])
                self.i = k + 1
                return token
            j = k + 1

    def scan_value_token(self) -> tuple[bytes, int]:
        """Consume one JSON value; return (raw bytes, absolute start offset).

        Containers are tracked by brace/bracket depth with full string
        awareness; scalars run until a delimiter.  The token is validated
        by `json.loads` afterwards, so this only needs to find the end.
        """
        value_offset = self.offset()
        start = self.i
        b0 = self.buf[self.i]
        if b0 == 0x22:  # '"'
            return self.scan_string_token(), value_offset
        if b0 in b"{[":
            depth = 0
            j = self.i
            while True:
                m = _CONTAINER_TOKEN.search(self.buf, j)
                while m is None:
                    if not self._fill():
                        self.fail("unterminated value", value_offset)
                    m = _CONTAINER_TOKEN.search(self.buf, j)
                c = self.buf[m.start()]
                if c == 0x22:
                    self.i = m.start()
                    self.scan_string_token()
                    j = self.i
                    continue
                if c in b"{[":
                    depth += 1
                else:
                    depth -= 1
                j = m.end()
                if depth <= 0:
                    token = bytes(self.buf[start:j])
                    self.i = j
                    return token, value_offset
        # scalar: number, true/false/null, or garbage for json.loads to reject
        j = self.i
        while True:
            m = _SCALAR_END.search(self.buf, j)
            if m is None:
                j = len(self.buf)
                if not self._fill():
                    token = bytes(self.buf[start:])
                    self.i = len(self.buf)
                    return token, value_offset
                continue
            token = bytes(self.buf[start : m.start()])
            self.i = m.start()
            return token, value_offset


def iter_json_object_items(
    fh: IO[bytes], path: str, chunk_size: int = 1 << 16
) -> Iterator[tuple[str, object, int]]:
    """Stream (key, decoded value, key byte offset) from a top-level JSON object.

    Memory use is bounded by the chunk size plus one record, regardless of
    file size.  Any structural violation raises CorpusFormatError with the
    byte offset where scanning stopped.
    """
    sc = _ByteScanner(fh, path, chunk_size)
    if sc._ensure(3) and bytes(sc.buf[:3]) == b"\xef\xbb\xbf":
        sc.i = 3  # tolerate a UTF-8 byte order mark
    b = sc.peek_nonws()
    if b is None:
        sc.fail("empty document; expected a JSON object")
    if b != 0x7B:  # '{'
        sc.fail("expected '{' at the top level")
    sc.i += 1
    b = sc.peek_nonws()
    if b is None:
        sc.fail("unexpected end of file inside object")
    if b == 0x7D:  # '}' -> empty object
        sc.i += 1
    else:
        while True:
            b = sc.peek_nonws()
            if b is None:
                sc.fail("unexpected end of file inside object")
            if b != 0x22:
                sc.fail("expected '\"' to start a key")
            key_offset = sc.offset()
            key_token = sc.scan_string_token()
            try:
                key = json.loads(key_token)
            except ValueError:
                sc.fail("invalid key string", key_offset)
            b = sc.peek_nonws()
            if b != 0x3A:  # ':'
                sc.fail("expected ':' after key")
            sc.i += 1
            b = sc.peek_nonws()
            if b is None:
                sc.fail("missing value after ':'")
            token, value_offset = sc.scan_value_token()
            try:
                value = json.loads(token)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(
                    path,
                    value_offset,
                    f"invalid JSON value for key {key!r} "
                    f"(decoder said: {exc.msg} at value position {exc.pos})",
                ) from exc
            yield key, value, key_offset
            sc.compact()
            b = sc.peek_nonws()
            if b is None:
                sc.fail("unexpected end of file inside object")
            if b == 0x2C:  # ','
                sc.i += 1
                continue
            if b == 0x7D:  # '}'
                sc.i += 1
                break
            sc.fail("expected ',' or '}' after value")
    if sc.peek_nonws() is not None:
        sc.fail("trailing data after top-level object")


# ---------------------------------------------------------------------------
# corpus parsing / writing
# ---------------------------------------------------------------------------


def _record_from_raw(qid: str, raw: object, counters: dict[str, int]) -> QuestionRecord | None:
    if not qid:
        log.warning("skipping record with empty question id")
        counters["skipped"] += 1
        return None
    if not isinstance(raw, dict):
        log.warning("skipping %r: record is %s, not an object", qid, type(raw).__name__)
        counters["skipped"] += 1
        return None
    answer = raw.get("answer")
    if isinstance(answer, list):
        log.warning("skipping %r: multi-answer records are not supported", qid)
        counters["skipped"] += 1
        return None
    if not isinstance(answer, str) or not normalize_answer(answer):
        log.warning("skipping %r: missing or empty answer", qid)
        counters["skipped"] += 1
        return None
    groups = raw.get("groups")
    if not isinstance(groups, dict):
        groups = {}
    local = groups.get("local")
    global_ = groups.get("global")
    local = local if isinstance(local, str) and local else None
    global_ = global_ if isinstance(global_, str) and global_ else None
    if local is None:
        counters["groupless"] += 1
    types = raw.get("types")
    if not isinstance(types, dict):
        types = {}
    question = raw.get("question")
    image = raw.get("imageId")
    return QuestionRecord(
        qid=qid,
        text=question if isinstance(question, str) else "",
        answer=normalize_answer(answer),
        image_id=image if isinstance(image, str) else "",
        local_group=local,
        global_group=global_,
        structural_type=types.get("structural", "") if isinstance(types.get("structural"), str) else "",
        semantic_type=types.get("semantic", "") if isinstance(types.get("semantic"), str) else "",
    )


def parse_question_corpus(path: str | Path, split_name: str | None = None) -> QuestionCorpus:
    """Parse a corpus file into a QuestionCorpus, streaming record by record.

    Records failing per-record validation are skipped with a warning.
    Duplicate qids keep the last occurrence (warned and tallied).  Records
    without a local group are loaded but counted as groupless.
    """
    path = Path(path)
    if split_name is None:
        split_name = path.stem
    counters = {"skipped": 0, "groupless": 0, "duplicates": 0}
    records: dict[str, QuestionRecord] = {}
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc
    with fh:
        for qid, raw, _offset in iter_json_object_items(fh, str(path)):
            rec = _record_from_raw(str(qid), raw, counters)
            if rec is None:
                continue
            if rec.qid in records:
                log.warning("duplicate question id %r: keeping the last occurrence", rec.qid)
                counters["duplicates"] += 1
            records[rec.qid] = rec
    stats = IngestStats(
        n_loaded=len(records),
        n_skipped=counters["skipped"],
        n_groupless=counters["groupless"],
        n_duplicates=counters["duplicates"],
    )
    corpus = QuestionCorpus.from_records(split_name, records.values(), stats)
    log.info(
        "parsed %s: %d questions loaded, %d skipped, %d groupless, %d duplicate ids",
        path,
        stats.n_loaded,
        stats.n_skipped,
        stats.n_groupless,
        stats.n_duplicates,
    )
    if stats.n_groupless:
        log.warning(
            "%s: %d of %d records carry no local group and cannot enter any split",
            path,
            stats.n_groupless,
            stats.n_loaded + stats.n_skipped,
        )
    return corpus


def _record_to_raw(rec: QuestionRecord) -> dict:
    return {
        "question": rec.text,
        "answer": rec.answer,
        "imageId": rec.image_id,
        "groups": {"local": rec.local_group, "global": rec.global_group},
        "types": {"structural": rec.structural_type, "semantic": rec.semantic_type},
    }


def write_corpus(corpus: QuestionCorpus, path: str | Path) -> None:
    """Write a corpus in the standard on-disk format, one record per line.

    Output is byte-deterministic: records are sorted by qid and keys are
    sorted inside each record, so re-parsing yields an equal corpus and
    re-writing yields identical bytes.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("{")
        first = True
        for qid, rec in corpus.records.items():
            if not first:
                fh.write(",")
            fh.write("\n")
            fh.write(json.dumps(qid, ensure_ascii=False))
            fh.write(": ")
            fh.write(json.dumps(_record_to_raw(rec), sort_keys=True, ensure_ascii=False))
            first = False
        fh.write("\n}\n")


# ---------------------------------------------------------------------------
# prediction parsing / writing
# ---------------------------------------------------------------------------


def _detect_prediction_format(path: Path) -> str:
    """Return 'jsonl' or 'mapping' by probing the first complete line.

    Both formats open with '{', so the first non-whitespace byte only
    rejects foreign files.  If the first non-blank line is a complete JSON
    object carrying a "questionId" key, the file is treated as JSON lines;
    anything else falls back to the single-mapping reading.  Mapping files
    written as one enormous line are recognized because their first "line"
    never parses as a small object with that key.
    """
    with open(path, "rb") as fh:
        head = fh.read(1 << 16)
    stripped = head.lstrip()
    if not stripped:
        return "empty"
    if stripped[0:1] != b"{":
        raise CorpusFormatError(
            str(path), len(head) - len(stripped), "unrecognized prediction format: expected '{'"
        )
    first_line = stripped.splitlines()[0]
    try:
        probe = json.loads(first_line)
    except ValueError:
        return "mapping"
    if isinstance(probe, dict) and "questionId" in probe:
        return "jsonl"
    return "mapping"


def parse_predictions(path: str | Path, source_label: str | None = None) -> PredictionSet:
    """Parse a prediction file in either supported format.

    Duplicate qids keep the last value with a warning.  An empty file (or
    empty object) yields an empty set with a warning.  Unreadable or
    structurally broken files are fatal.
    """
    path = Path(path)
    label = source_label if source_label is not None else path.stem
    if not path.exists():
        raise DataError(f"cannot read prediction file {path}: no such file")
    try:
        kind = _detect_prediction_format(path)
    except OSError as exc:
        raise DataError(f"cannot read prediction file {path}: {exc}") from exc

    entries: dict[str, str] = {}
    duplicates = 0
    if kind == "empty":
        log.warning("%s: empty prediction file; continuing with zero predictions", path)
        return PredictionSet({}, label, 0)

    if kind == "jsonl":
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except ValueError as exc:
                    raise DataError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
                if not isinstance(obj, dict) or "questionId" not in obj or "prediction" not in obj:
                    log.warning("%s: line %d: missing questionId/prediction; skipped", path, lineno)
                    continue
                qid, answer = obj["questionId"], obj["prediction"]
                if not isinstance(qid, str) or not isinstance(answer, str):
                    log.warning("%s: line %d: non-string questionId/prediction; skipped", path, lineno)
                    continue
                if qid in entries:
                    duplicates += 1
                    log.warning("%s: duplicate prediction for %r; keeping the last", path, qid)
                entries[qid] = normalize_answer(answer)
    else:
        with open(path, "rb") as fh:
            for qid, value, _offset in iter_json_object_items(fh, str(path)):
                if not isinstance(value, str):
                    log.warning("%s: prediction for %r is not a string; skipped", path, qid)
                    continue
                if qid in entries:
                    duplicates += 1
                    log.warning("%s: duplicate prediction for %r; keeping the last", path, qid)
                entries[str(qid)] = normalize_answer(value)

    if not entries:
        log.warning("%s: no usable predictions found", path)
    return PredictionSet(entries, label, duplicates)


def write_predictions(preds: PredictionSet, path: str | Path) -> None:
    """Write predictions in the mapping format, sorted, one entry per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("{")
        first = True
        for qid in sorted(preds.entries):
            if not first:
                fh.write(",")
            fh.write("\n")
            fh.write(f"{json.dumps(qid, ensure_ascii=False)}: {json.dumps(preds.entries[qid], ensure_ascii=False)}")
            first = False
        fh.write("\n}\n")
