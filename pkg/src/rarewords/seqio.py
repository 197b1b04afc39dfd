"""FASTA ingestion and overlapping word counts."""
from __future__ import annotations

import gzip
import io
import os
from dataclasses import dataclass
from typing import BinaryIO, Iterable

import numpy as np

_INVALID = 255
_WHITESPACE = b" \t\r\n\v\f"


class FastaError(ValueError):
    """Raised on malformed FASTA input or a symbol outside the alphabet."""

    def __init__(self, message: str, line: int | None = None, char: str | None = None):
        super().__init__(message)
        self.line = line
        self.char = char


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of single-character symbols; codes are positions in ``symbols``."""

    symbols: str

    def __post_init__(self):
        lowered = self.symbols.lower()
        if lowered != self.symbols:
            object.__setattr__(self, "symbols", lowered)
        if len(set(lowered)) != len(lowered):
            raise ValueError(f"alphabet {self.symbols!r} has duplicate symbols")
        if len(lowered) < 2:
            raise ValueError("alphabet needs at least two symbols")
        if len(lowered) >= _INVALID or not lowered.isascii():
            raise ValueError("alphabet must be fewer than 255 ASCII symbols")
        if any(c.isspace() or c == ">" for c in lowered):
            raise ValueError("alphabet symbols cannot be whitespace or '>'")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def lookup(self) -> np.ndarray:
        table = np.full(256, _INVALID, dtype=np.uint8)
        for code, c in enumerate(self.symbols):
            table[ord(c)] = code
            table[ord(c.upper())] = code
        return table

    def encode(self, text: str) -> np.ndarray:
        raw = text.encode("ascii", errors="replace")
        codes = self.lookup[np.frombuffer(raw, dtype=np.uint8)]
        bad = np.flatnonzero(codes == _INVALID)
        if bad.size:
            raise ValueError(f"symbol {text[bad[0]]!r} is not in alphabet {self.symbols!r}")
        return codes

    def decode(self, codes: Iterable[int]) -> str:
        return "".join(self.symbols[int(c)] for c in codes)


DNA = Alphabet("acgt")


@dataclass(frozen=True, eq=False)
class Sequence:
    data: np.ndarray
    alphabet: Alphabet
    id: str = ""

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if data.ndim != 1:
            raise ValueError("sequence data must be one-dimensional")
        if data.size and int(data.max()) >= self.alphabet.size:
            raise ValueError("sequence contains codes outside the alphabet")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_string(cls, text: str, alphabet: Alphabet = DNA, id: str = "") -> "Sequence":
        return cls(alphabet.encode(text), alphabet, id)

    @property
    def length(self) -> int:
        return int(self.data.size)

    def __len__(self) -> int:
        return self.length

    def __str__(self) -> str:
        return self.alphabet.decode(self.data)


@dataclass(frozen=True)
class Word:
    symbols: tuple[int, ...]
    alphabet: Alphabet

    def __post_init__(self):
        symbols = tuple(int(c) for c in self.symbols)
        if not symbols:
            raise ValueError("word must contain at least one symbol")
        if any(c < 0 or c >= self.alphabet.size for c in symbols):
            raise ValueError("word contains codes outside the alphabet")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def from_string(cls, text: str, alphabet: Alphabet = DNA) -> "Word":
        text = text.strip()
        if not text:
            raise ValueError("empty word")
        return cls(tuple(alphabet.encode(text)), alphabet)

    @property
    def length(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.symbols, dtype=np.uint8)

    @property
    def text(self) -> str:
        return self.alphabet.decode(self.symbols)

    def __str__(self) -> str:
        return self.text


def parse_fasta(raw: bytes | str | BinaryIO, alphabet: Alphabet = DNA) -> list[Sequence]:
    """Parse FASTA records into encoded sequences.

    Symbols are case-insensitive and whitespace inside sequence lines is
    ignored. Any other character outside ``alphabet`` aborts parsing with a
    :class:`FastaError` carrying the 1-based line number and the character.
    Records are returned separately and never concatenated.
    """
    if isinstance(raw, str):
        raw = raw.encode("ascii", errors="replace")
    stream = io.BytesIO(raw) if isinstance(raw, (bytes, bytearray)) else raw
    table = alphabet.lookup

    records: list[Sequence] = []
    header: str | None = None
    chunks: list[np.ndarray] = []

    def flush():
        if header is not None:
            data = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.uint8)
            rid = header.split()[0] if header.split() else ""
            records.append(Sequence(data, alphabet, rid))

    for lineno, line in enumerate(stream, start=1):
        if line.startswith(b">"):
            flush()
            header = line[1:].decode("ascii", errors="replace").strip()
            chunks = []
            continue
        body = line.translate(None, _WHITESPACE)
        if not body:
            continue
        if header is None:
            raise FastaError(f"line {lineno}: sequence data before the first '>' header", lineno)
        codes = table[np.frombuffer(body, dtype=np.uint8)]
        bad = np.flatnonzero(codes == _INVALID)
        if bad.size:
            char = chr(body[bad[0]])
            raise FastaError(f"line {lineno}: invalid symbol {char!r} for alphabet {alphabet.symbols!r}",
                             lineno, char)
        chunks.append(codes)
    flush()
    return records


def read_fasta(path: str | os.PathLike, alphabet: Alphabet = DNA) -> list[Sequence]:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        return parse_fasta(fh, alphabet)


def count_overlapping(seq: Sequence, word: Word) -> int:
    """Number of start positions where ``word`` occurs; overlapping hits all count.

    Returns 0 when the word is longer than the sequence.
    """
    if word.alphabet != seq.alphabet:
        raise ValueError("word and sequence use different alphabets")
    n, t = word.length, seq.length
    if n > t:
        return 0
    data = seq.data
    pattern = word.array
    # Candidate starts from the first symbol, then narrow column by column.
    hits = np.flatnonzero(data[: t - n + 1] == pattern[0])
    for j in range(1, n):
        if not hits.size:
            break
        hits = hits[data[hits + j] == pattern[j]]
    return int(hits.size)
