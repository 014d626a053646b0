"""Tokenization and a lightweight dependency structure.

The downstream pipeline consumes only linear adjacency, preposition
linkage, and conjunction linkage from the tree, so the built-in parser is
a deterministic heuristic.  Trees produced by an external parser can be
ingested from a CoNLL-U subset instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import IO, Union

PREPOSITIONS = frozenset({"with", "by", "of", "whose", "on", "in", "from"})
CONJUNCTIONS = frozenset({"and", "or"})
_LEADING_VERBS = frozenset(
    {"find", "show", "list", "get", "give", "search", "retrieve", "return"}
)

# Straight single quotes open a span only at a word boundary so that
# apostrophes inside words survive.
_QUOTE_CLOSERS = {'"': '"', "“": "”", "‘": "’", "'": "'"}

_TOKEN_RE = re.compile(
    r"""
      \d{4}-\d{2}-\d{2}        # ISO date
    | [+-]?\d+\.\d+            # decimal number
    | [+-]?\d+                 # integer (sign handled by boundary check)
    | \w+(?:[-'’]\w+)*         # word; hyphens/apostrophes inside stay
    | \S                       # any other symbol stands alone
    """,
    re.VERBOSE | re.UNICODE,
)


class ConlluParseError(ValueError):
    def __init__(self, row_no: int, message: str):
        super().__init__(f"row {row_no}: {message}")
        self.row_no = row_no


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    start: int
    end: int
    index: int

    @property
    def is_quoted(self) -> bool:
        return len(self.surface) >= 2 and self.surface[0] in _QUOTE_CLOSERS

    @property
    def is_word(self) -> bool:
        return any(ch.isalnum() for ch in self.surface)


def _find_quote_spans(text: str) -> list[tuple[int, int]]:
    spans: list[tuple[int, int]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        closer = _QUOTE_CLOSERS.get(ch)
        if closer is None:
            i += 1
            continue
        if ch == "'" and i > 0 and text[i - 1].isalnum():
            i += 1
            continue
        j = text.find(closer, i + 1)
        while (
            j != -1
            and closer == "'"
            and j + 1 < len(text)
            and text[j + 1].isalnum()
        ):
            j = text.find(closer, j + 1)
        if j == -1:
            i += 1
            continue
        spans.append((i, j + 1))
        i = j + 1
    return spans


def tokenize(text: str) -> tuple[Token, ...]:
    """Whitespace/punctuation segmentation with exact character offsets.

    Quoted spans stay single tokens so local grammars can match them.
    """
    quote_spans = _find_quote_spans(text)
    boundaries = [0] + [b for span in quote_spans for b in span] + [len(text)]
    raw: list[tuple[int, int]] = []
    for (start, end), quoted in _segments(boundaries, quote_spans):
        if quoted:
            raw.append((start, end))
        else:
            for m in _TOKEN_RE.finditer(text, start, end):
                # A sign binds to a number only at a token boundary.
                s = m.start()
                if text[s] in "+-" and s > 0 and not text[s - 1].isspace():
                    for part in re.finditer(r"\d+(?:\.\d+)?|\S", m.group(0)):
                        raw.append((s + part.start(), s + part.end()))
                else:
                    raw.append((s, m.end()))
    tokens = []
    for idx, (s, e) in enumerate(sorted(raw)):
        surface = text[s:e]
        tokens.append(Token(surface, surface.lower(), s, e, idx))
    return tuple(tokens)


def _segments(boundaries, quote_spans):
    spans = set(quote_spans)
    pairs = sorted(set(boundaries))
    for a, b in zip(pairs, pairs[1:]):
        if a < b:
            yield (a, b), (a, b) in spans


@dataclass(frozen=True)
class DependencyTree:
    """Token nodes with per-node head index (the root points to itself)."""

    tokens: tuple[Token, ...]
    heads: tuple[int, ...]
    labels: tuple[str, ...]
    pos: tuple[str | None, ...] = ()

    def __post_init__(self):
        if len(self.heads) != len(self.tokens) or len(self.labels) != len(self.tokens):
            raise ValueError("heads/labels must align with tokens")
        if not self.pos:
            object.__setattr__(self, "pos", (None,) * len(self.tokens))
        roots = [i for i, h in enumerate(self.heads) if h == i]
        if len(roots) != 1:
            raise ValueError(f"tree must have exactly one root, got {len(roots)}")
        for i in range(len(self.tokens)):
            seen = set()
            node = i
            while node not in seen:
                seen.add(node)
                if self.heads[node] == node:
                    break
                node = self.heads[node]
            else:
                raise ValueError(f"cycle through node {i}")
            if self.heads[node] != node:
                raise ValueError(f"node {i} does not reach the root")

    @property
    def root(self) -> int:
        return next(i for i, h in enumerate(self.heads) if h == i)


def shallow_parse(tokens: tuple[Token, ...]) -> DependencyTree:
    """Heuristic tree: a verb-rooted chain with preposition and conjunction
    links, enough for attachment and conjunction scoping."""
    if not tokens:
        raise ValueError("cannot parse an empty token sequence")
    n = len(tokens)
    root = 0
    for tok in tokens:
        if tok.lemma in _LEADING_VERBS:
            root = tok.index
            break
    heads = list(range(n))
    labels = ["dep"] * n
    labels[root] = "root"
    last_content = root
    for i, tok in enumerate(tokens):
        if i == root:
            continue
        if tok.lemma in CONJUNCTIONS or tok.surface == ",":
            heads[i] = last_content
            labels[i] = "cc" if tok.lemma in CONJUNCTIONS else "punct"
        elif not tok.is_word:
            heads[i] = last_content
            labels[i] = "punct"
        elif tok.lemma in PREPOSITIONS:
            heads[i] = last_content
            labels[i] = "prep"
        elif i > 0 and tokens[i - 1].lemma in PREPOSITIONS:
            heads[i] = i - 1
            labels[i] = "pobj"
            last_content = i
        elif i > 0 and (tokens[i - 1].lemma in CONJUNCTIONS or tokens[i - 1].surface == ","):
            heads[i] = last_content
            labels[i] = "conj"
            last_content = i
        else:
            heads[i] = i - 1 if i > 0 else root
            labels[i] = "dep"
            last_content = i
    heads[root] = root
    return DependencyTree(tokens, tuple(heads), tuple(labels))


def load_dependency_tree(source: Union[str, bytes, IO]) -> DependencyTree:
    """Read the first sentence of a CoNLL-U stream.

    Columns used: ID, FORM, LEMMA, UPOS, HEAD, DEPREL; the rest are
    ignored.  Multiword ranges and empty nodes are skipped.  Raises
    ConlluParseError on malformed rows, head cycles, or a missing root.
    """
    if isinstance(source, bytes):
        content = source.decode("utf-8")
    elif isinstance(source, str):
        content = source
    else:
        data = source.read()
        content = data.decode("utf-8") if isinstance(data, bytes) else data

    rows: list[tuple[int, str, str, str, int, str]] = []
    for row_no, line in enumerate(content.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        if not stripped:
            if rows:
                break
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            raise ConlluParseError(row_no, "expected >= 8 tab-separated columns")
        if "-" in cols[0] or "." in cols[0]:
            continue
        try:
            idx = int(cols[0])
            head = int(cols[6])
        except ValueError:
            raise ConlluParseError(row_no, f"bad ID/HEAD: {cols[0]!r}/{cols[6]!r}") from None
        rows.append((idx, cols[1], cols[2], cols[3], head, cols[7]))
    if not rows:
        raise ConlluParseError(0, "no token rows found")

    tokens: list[Token] = []
    offset = 0
    for i, (idx, form, lemma, _upos, _head, _rel) in enumerate(rows):
        if idx != i + 1:
            raise ConlluParseError(i + 1, f"non-contiguous token id {idx}")
        lemma = form.lower() if lemma in ("", "_") else lemma.lower()
        tokens.append(Token(form, lemma, offset, offset + len(form), i))
        offset += len(form) + 1

    heads, labels, pos = [], [], []
    for i, (_idx, _form, _lemma, upos, head, rel) in enumerate(rows):
        if head == 0:
            heads.append(i)
        elif 1 <= head <= len(rows):
            heads.append(head - 1)
        else:
            raise ConlluParseError(i + 1, f"head {head} out of range")
        labels.append(rel if rel not in ("", "_") else "dep")
        pos.append(upos if upos not in ("", "_") else None)
    try:
        return DependencyTree(tuple(tokens), tuple(heads), tuple(labels), tuple(pos))
    except ValueError as exc:
        raise ConlluParseError(len(rows), str(exc)) from None
