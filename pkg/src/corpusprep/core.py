"""Canonical document model, text normalization, and streaming JSONL I/O.

The JSONL interchange schema is exactly
``{"id": str, "source": str, "url": str|null, "text": str, "meta": {str: str}}``
with that key order and alphabetically sorted meta keys, so that
write(read(f)) is byte-identical for canonical files. A document's subword
token count, when known, rides in ``meta["token_count"]`` on disk and is
lifted into ``Document.token_count`` on read.

Rejected records go to a ``<output>.rejects`` sidecar as
``{"id", "stage", "reason"}`` JSONL lines.
"""

from __future__ import annotations

import json
import re
import time
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

_WS_RUN = re.compile(r"\s+")

TOKEN_COUNT_META_KEY = "token_count"


def _collapse_run(m: re.Match) -> str:
    # A run containing a line break stays a line break; everything else
    # becomes a single space. Line structure is load-bearing downstream
    # (boilerplate stripping, newline sentence splitting).
    run = m.group(0)
    return "\n" if ("\n" in run or "\r" in run) else " "


def normalize_text(text: str) -> str:
    """NFC-normalize and collapse whitespace runs; idempotent."""
    text = unicodedata.normalize("NFC", text)
    return _WS_RUN.sub(_collapse_run, text).strip()


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs."""
    return len(text.split())


@dataclass
class Document:
    """One corpus record; ``word_count`` is always derived from ``text``."""

    id: str
    source: str
    text: str
    url: Optional[str] = None
    meta: dict = field(default_factory=dict)
    token_count: Optional[int] = None
    word_count: int = field(init=False)

    def __post_init__(self):
        self.word_count = word_count(self.text)

    def with_text(self, text: str) -> "Document":
        """Copy with new text and recomputed word count."""
        return Document(
            id=self.id,
            source=self.source,
            text=text,
            url=self.url,
            meta=dict(self.meta),
            token_count=self.token_count,
        )

    def to_json_line(self) -> str:
        meta = {str(k): str(v) for k, v in self.meta.items()}
        if self.token_count is not None:
            meta[TOKEN_COUNT_META_KEY] = str(self.token_count)
        record = {
            "id": self.id,
            "source": self.source,
            "url": self.url,
            "text": self.text,
            "meta": {k: meta[k] for k in sorted(meta)},
        }
        return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))

    @classmethod
    def from_record(cls, record: dict) -> "Document":
        if "id" not in record or "text" not in record:
            raise KeyError("record missing id/text")
        meta = dict(record.get("meta") or {})
        token_count = meta.pop(TOKEN_COUNT_META_KEY, None)
        return cls(
            id=str(record["id"]),
            source=str(record.get("source", "")),
            text=str(record["text"]),
            url=record.get("url"),
            meta=meta,
            token_count=int(token_count) if token_count is not None else None,
        )


@dataclass
class SourceStats:
    docs_in: int = 0
    docs_out: int = 0
    words_in: int = 0
    words_out: int = 0
    rejected_docs: int = 0
    rejected_words: int = 0


@dataclass
class StageStats:
    """Per-stage accounting; every input doc is counted exactly once as
    output or reject (transform stages may shrink word counts in place)."""

    stage: str
    docs_in: int = 0
    docs_out: int = 0
    words_in: int = 0
    words_out: int = 0
    rejected: dict = field(default_factory=dict)  # reason -> count
    per_source: dict = field(default_factory=dict)  # source -> SourceStats
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0
    _t0: float = field(default_factory=time.monotonic, repr=False)

    def _src(self, source: str) -> SourceStats:
        return self.per_source.setdefault(source, SourceStats())

    def record_in(self, doc: Document) -> None:
        self.docs_in += 1
        self.words_in += doc.word_count
        s = self._src(doc.source)
        s.docs_in += 1
        s.words_in += doc.word_count

    def record_out(self, doc: Document) -> None:
        self.docs_out += 1
        self.words_out += doc.word_count
        s = self._src(doc.source)
        s.docs_out += 1
        s.words_out += doc.word_count

    def record_reject(self, doc: Document, reason: str) -> None:
        self.rejected[reason] = self.rejected.get(reason, 0) + 1
        s = self._src(doc.source)
        s.rejected_docs += 1
        s.rejected_words += doc.word_count

    def finish(self) -> "StageStats":
        self.wall_time = time.monotonic() - self._t0
        return self

    @property
    def rejected_docs(self) -> int:
        return sum(self.rejected.values())

    def check_conservation(self) -> None:
        """Every input doc is an output or a reject; per-source sums match."""
        assert self.docs_in == self.docs_out + self.rejected_docs, self.stage
        assert self.docs_in == sum(s.docs_in for s in self.per_source.values())
        assert self.docs_out == sum(s.docs_out for s in self.per_source.values())
        assert self.words_in == sum(s.words_in for s in self.per_source.values())
        assert self.words_out == sum(s.words_out for s in self.per_source.values())
        for src, s in self.per_source.items():
            assert s.docs_in == s.docs_out + s.rejected_docs, (self.stage, src)

    def to_dict(self) -> dict:
        # wall_time deliberately excluded: serialized stats must be
        # byte-stable across reruns of an identical configuration.
        return {
            "stage": self.stage,
            "docs_in": self.docs_in,
            "docs_out": self.docs_out,
            "words_in": self.words_in,
            "words_out": self.words_out,
            "rejected": {k: self.rejected[k] for k in sorted(self.rejected)},
            "per_source": {
                src: vars(self.per_source[src]) for src in sorted(self.per_source)
            },
            "extra": {k: self.extra[k] for k in sorted(self.extra)},
        }


class JsonlReadError(IOError):
    pass


def read_jsonl(path, diagnostics: Optional[list] = None) -> Iterator[Document]:
    """Stream Documents from a JSONL file.

    Malformed or schema-violating lines are skipped; each skip appends a
    ``{"line", "reason"}`` entry to *diagnostics* when given. Hard I/O /
    encoding failures raise JsonlReadError with path and line number.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise JsonlReadError(f"{path}:{lineno}: invalid UTF-8: {e}") from e
            try:
                record = json.loads(line)
                doc = Document.from_record(record)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                if diagnostics is not None:
                    diagnostics.append({"line": lineno, "reason": str(e)})
                continue
            yield doc


def write_jsonl(docs: Iterable[Document], path) -> int:
    """Write documents in canonical serialization; returns count written."""
    path = Path(path)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(doc.to_json_line())
            fh.write("\n")
            n += 1
    return n


def write_rejects(records: Iterable[dict], path) -> int:
    """Write reject sidecar lines ``{"id", "stage", "reason"}``."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            line = json.dumps(
                {"id": rec["id"], "stage": rec["stage"], "reason": rec["reason"]},
                ensure_ascii=False,
                separators=(", ", ": "),
            )
            fh.write(line + "\n")
            n += 1
    return n
