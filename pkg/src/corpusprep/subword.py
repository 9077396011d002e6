"""Fixed subword vocabulary loading and greedy longest-match tokenization.

Vocabulary file format: plain UTF-8, one token per line, id = line number
(0-based). Non-printable bytes are escaped as ``\\xNN``; tokens that do not
decode as printable UTF-8 are written fully byte-escaped. Continuation
pieces (word-internal) carry a ``##`` prefix; specials are literal
``<unk> <pad> <mask> <s> </s>`` lines and never participate in matching.

Words (whitespace-delimited) are segmented over their UTF-8 bytes by
greedy longest-match-first; a byte with no matching piece becomes <unk>.
For <unk>-free text, detokenize() recovers the exact byte sequence of the
whitespace-normalized input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from corpusprep.core import Document

SPECIAL_TOKENS = ("<unk>", "<pad>", "<mask>", "<s>", "</s>")
CONT_PREFIX = b"##"

_ESCAPE_RE = re.compile(r"\\x([0-9a-fA-F]{2})")


class VocabError(ValueError):
    pass


def unescape_token(line: str) -> bytes:
    """Decode a vocab-file line to the token's raw bytes."""
    out = bytearray()
    pos = 0
    for m in _ESCAPE_RE.finditer(line):
        out += line[pos : m.start()].encode("utf-8")
        out.append(int(m.group(1), 16))
        pos = m.end()
    out += line[pos:].encode("utf-8")
    return bytes(out)


def escape_token(token: bytes) -> str:
    """Canonical vocab-file rendering of a token's bytes."""
    try:
        text = token.decode("utf-8")
        if text.isprintable() and "\\" not in text and text != "":
            return text
    except UnicodeDecodeError:
        pass
    return "".join(
        chr(b) if 0x21 <= b <= 0x7E and b != 0x5C else f"\\x{b:02x}"
        for b in token
    )


@dataclass
class SubwordVocab:
    pieces: list  # list[bytes], id = index
    specials: dict = field(default_factory=dict)  # name -> id
    initial: dict = field(init=False)  # bytes -> id (word-initial pieces)
    continuation: dict = field(init=False)  # bytes -> id (## pieces, stripped)
    _max_init: int = field(init=False, default=0)
    _max_cont: int = field(init=False, default=0)

    def __post_init__(self):
        self.initial = {}
        self.continuation = {}
        special_ids = set(self.specials.values())
        for i, piece in enumerate(self.pieces):
            if i in special_ids:
                continue
            if piece.startswith(CONT_PREFIX):
                body = piece[len(CONT_PREFIX):]
                self.continuation[body] = i
                self._max_cont = max(self._max_cont, len(body))
            else:
                self.initial[piece] = i
                self._max_init = max(self._max_init, len(piece))

    @property
    def size(self) -> int:
        return len(self.pieces)

    @property
    def unk_id(self) -> int:
        return self.specials["<unk>"]

    @property
    def pad_id(self) -> int:
        return self.specials["<pad>"]

    @property
    def mask_id(self) -> int:
        return self.specials["<mask>"]

    @property
    def bos_id(self) -> int:
        return self.specials["<s>"]

    @property
    def eos_id(self) -> int:
        return self.specials["</s>"]

    @property
    def special_ids(self) -> frozenset:
        return frozenset(self.specials.values())


def load_vocab(path, expected_size: Optional[int] = None) -> SubwordVocab:
    path = Path(path)
    if not path.exists():
        raise VocabError(f"{path}: vocabulary file not found")
    pieces = []
    seen: dict = {}
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh):
            token = unescape_token(line.rstrip("\n"))
            if token in seen:
                raise VocabError(
                    f"{path}:{lineno + 1}: duplicate token "
                    f"{escape_token(token)!r} (first at line {seen[token] + 1})"
                )
            seen[token] = lineno
            pieces.append(token)
    specials = {}
    for name in SPECIAL_TOKENS:
        token = name.encode("utf-8")
        if token not in seen:
            raise VocabError(f"{path}: missing special token {name}")
        specials[name] = seen[token]
    if expected_size is not None and len(pieces) != expected_size:
        raise VocabError(
            f"{path}: vocabulary size {len(pieces)} != declared {expected_size}"
        )
    return SubwordVocab(pieces=pieces, specials=specials)


def save_vocab(vocab: SubwordVocab, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for piece in vocab.pieces:
            fh.write(escape_token(piece) + "\n")


def _match_longest(data: bytes, pos: int, table: dict, max_len: int) -> Optional[int]:
    end = min(len(data), pos + max_len)
    for j in range(end, pos, -1):
        piece_id = table.get(data[pos:j])
        if piece_id is not None:
            return piece_id
    return None


def tokenize(text: str, vocab: SubwordVocab) -> list[int]:
    """Greedy longest-match segmentation of each whitespace-split word."""
    ids: list[int] = []
    for word in text.split():
        data = word.encode("utf-8")
        pos = 0
        first = True
        while pos < len(data):
            if first:
                piece_id = _match_longest(data, pos, vocab.initial, vocab._max_init)
            else:
                piece_id = _match_longest(
                    data, pos, vocab.continuation, vocab._max_cont
                )
            if piece_id is None:
                ids.append(vocab.unk_id)
                pos += 1
            else:
                piece = vocab.pieces[piece_id]
                pos += len(piece) - (0 if first else len(CONT_PREFIX))
                ids.append(piece_id)
            first = False
    return ids


def detokenize(ids, vocab: SubwordVocab) -> bytes:
    """Inverse of tokenize for <unk>-free sequences of non-special ids."""
    words: list[bytearray] = []
    for i in ids:
        piece = vocab.pieces[i]
        if piece.startswith(CONT_PREFIX) and words:
            words[-1] += piece[len(CONT_PREFIX):]
        else:
            words.append(bytearray(piece))
    return b" ".join(bytes(w) for w in words)


def token_count(doc: Document, vocab: SubwordVocab) -> int:
    n = len(tokenize(doc.text, vocab))
    doc.token_count = n
    return n
