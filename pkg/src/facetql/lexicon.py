"""Lexicons, the inverse index with fuzzy n-gram lookup, and aux bindings.

Lexicons map surface forms (lexemes) to entity values.  The auxiliary
table binds entity values to lexical types and database types, database
types to the predicate used in generated queries, and operator names to
comparators.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .logic import ENTITY, TEXT, FactStore

CONTEXT = "Context"
OPERATOR = "Operator"

NGRAM = 3
_PAD = "  "  # two-character boundary padding

_QUOTE_TRANSLATION = str.maketrans({"“": '"', "”": '"', "‘": "'", "’": "'"})
_WS_RE = re.compile(r"\s+")

# Unicode comparator spellings accepted in operator tables.
_COMPARATOR_ALIASES = {"≤": "<=", "≥": ">=", "==": "=", "<": "<", "<=": "<=",
                       ">": ">", ">=": ">=", "=": "="}


class UnknownDBTypeError(KeyError):
    """No predicate binding is declared for the requested database type."""


class LexiconConfigError(ValueError):
    """A lexicon-generation rule references something the store lacks."""


def normalize(text: str) -> str:
    """Lexeme normalization: NFC, quote unification, lowercase, collapsed
    whitespace.  Diacritics are preserved."""
    text = unicodedata.normalize("NFC", text).translate(_QUOTE_TRANSLATION)
    return _WS_RE.sub(" ", text).strip().lower()


def trigrams(text: str) -> frozenset[str]:
    padded = _PAD + text + _PAD
    return frozenset(padded[i : i + NGRAM] for i in range(len(padded) - NGRAM + 1))


def similarity(a: str, b: str) -> float:
    """Sørensen-Dice coefficient over boundary-padded character trigrams."""
    ta, tb = trigrams(a), trigrams(b)
    if not ta and not tb:
        return 1.0
    return 2 * len(ta & tb) / (len(ta) + len(tb))


@dataclass(frozen=True)
class LexiconEntry:
    entity_name: str
    lexemes: frozenset[str]

    def __post_init__(self):
        if not self.lexemes:
            raise ValueError(f"lexicon entry {self.entity_name!r} has no lexemes")
        normalized = frozenset(normalize(l) for l in self.lexemes)
        object.__setattr__(self, "lexemes", normalized)


@dataclass(frozen=True)
class AuxRecord:
    entity_name: str
    lex_type: str
    db_type: str


@dataclass(frozen=True)
class PredicateBinding:
    db_type: str
    predicate: str
    arity: int
    entity_position: int  # 0-based argument index holding the entity value

    def __post_init__(self):
        if self.arity not in (1, 2):
            raise ValueError(f"{self.db_type}: arity must be 1 or 2")
        if not 0 <= self.entity_position < self.arity:
            raise ValueError(f"{self.db_type}: entity position outside arity")


@dataclass(frozen=True)
class OperatorEntry:
    entity_name: str
    comparator: str

    def __post_init__(self):
        canon = _COMPARATOR_ALIASES.get(self.comparator)
        if canon is None:
            raise ValueError(f"unknown comparator {self.comparator!r}")
        object.__setattr__(self, "comparator", canon)


class InverseIndex:
    """Exact lexeme lookup plus a trigram table for fuzzy candidates."""

    def __init__(self, lexicons: Iterable[LexiconEntry]):
        exact: dict[str, set[str]] = {}
        by_trigram: dict[str, set[str]] = {}
        for entry in sorted(lexicons, key=lambda e: e.entity_name):
            for lexeme in entry.lexemes:
                exact.setdefault(lexeme, set()).add(entry.entity_name)
                for gram in trigrams(lexeme):
                    by_trigram.setdefault(gram, set()).add(lexeme)
        self._exact = {l: frozenset(es) for l, es in exact.items()}
        self._by_trigram = {g: frozenset(ls) for g, ls in by_trigram.items()}
        self.max_lexeme_tokens = max(
            (lexeme.count(" ") + 1 for lexeme in self._exact), default=0
        )

    @property
    def lexemes(self) -> frozenset[str]:
        return frozenset(self._exact)

    def entities_for(self, lexeme: str) -> frozenset[str]:
        return self._exact.get(lexeme, frozenset())

    def candidates(self, span: str) -> frozenset[str]:
        out: set[str] = set()
        for gram in trigrams(span):
            out |= self._by_trigram.get(gram, frozenset())
        return frozenset(out)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, InverseIndex)
            and self._exact == other._exact
            and self._by_trigram == other._by_trigram
        )

    def __len__(self) -> int:
        return len(self._exact)


def build_index(lexicons: Iterable[LexiconEntry]) -> InverseIndex:
    return InverseIndex(lexicons)


def lookup(
    span: str, index: InverseIndex, threshold: float = 0.7
) -> set[tuple[str, str, float]]:
    """Resolve a text span to (entity_name, matched lexeme, score) triples.

    Exact matches score 1.0 and preempt fuzzy search; otherwise every
    lexeme whose trigram similarity reaches the threshold is returned.
    """
    span = normalize(span)
    exact = index.entities_for(span)
    if exact:
        return {(name, span, 1.0) for name in exact}
    results: set[tuple[str, str, float]] = set()
    for lexeme in index.candidates(span):
        score = similarity(span, lexeme)
        if score >= threshold:
            for name in index.entities_for(lexeme):
                results.add((name, lexeme, score))
    return results


class AuxTable:
    """Entity bindings: ltype/dbtype records, predicate bindings, operators."""

    def __init__(
        self,
        records: Iterable[AuxRecord] = (),
        bindings: Iterable[PredicateBinding] = (),
        operators: Iterable[OperatorEntry] = (),
    ):
        self._records: dict[str, list[AuxRecord]] = {}
        seen: set[tuple[str, str]] = set()
        for rec in records:
            key = (rec.entity_name, rec.lex_type)
            if key in seen:
                raise ValueError(f"duplicate aux record for {key}")
            seen.add(key)
            self._records.setdefault(rec.entity_name, []).append(rec)
        self._bindings: dict[str, PredicateBinding] = {}
        for binding in bindings:
            if binding.db_type in self._bindings:
                raise ValueError(f"duplicate binding for {binding.db_type}")
            self._bindings[binding.db_type] = binding
        self._operators: dict[str, str] = {}
        for op in operators:
            self._operators[op.entity_name] = op.comparator

    def records_for(self, entity_name: str) -> tuple[AuxRecord, ...]:
        return tuple(self._records.get(entity_name, ()))

    def ltype(self, entity_name: str) -> frozenset[str]:
        return frozenset(r.lex_type for r in self.records_for(entity_name))

    def dbtype(self, entity_name: str) -> frozenset[str]:
        return frozenset(r.db_type for r in self.records_for(entity_name))

    def pred_e(self, db_type: str) -> PredicateBinding:
        try:
            return self._bindings[db_type]
        except KeyError:
            raise UnknownDBTypeError(db_type) from None

    def has_binding(self, db_type: str) -> bool:
        return db_type in self._bindings

    def is_operator(self, entity_name: str) -> bool:
        return entity_name in self._operators

    def comparator(self, entity_name: str) -> str:
        return self._operators[entity_name]

    @property
    def operators(self) -> Mapping[str, str]:
        return dict(self._operators)


@dataclass(frozen=True)
class GenerationRule:
    """How lexemes are produced for instances of one class predicate.

    Variants: 'full' emits the whole source string, 'words' each word,
    'self' the entity id's local name.  source_predicate is the binary
    predicate whose text value feeds 'full'/'words' (None for 'self').
    """

    class_predicate: str
    source_predicate: str | None
    variants: tuple[str, ...]

    def __post_init__(self):
        bad = set(self.variants) - {"full", "words", "self"}
        if bad:
            raise LexiconConfigError(f"unknown lexeme variants: {sorted(bad)}")


def _self_lexeme(entity_name: str) -> str:
    return normalize(entity_name.lstrip(":").replace("_", " ").replace("-", " "))


def generate_lexicons(
    store: FactStore, config: Sequence[GenerationRule]
) -> set[LexiconEntry]:
    """Build lexicon entries from designated predicates of the fact store."""
    schema = store.schema
    lexemes: dict[str, set[str]] = {}
    for rule in config:
        if rule.class_predicate not in schema:
            raise LexiconConfigError(f"unknown class predicate {rule.class_predicate!r}")
        if rule.source_predicate is not None and rule.source_predicate not in schema:
            raise LexiconConfigError(f"unknown source predicate {rule.source_predicate!r}")
        names: dict[str, list[str]] = {}
        if rule.source_predicate is not None:
            for fact in store.by_predicate(rule.source_predicate):
                subject, value = fact.args[0], fact.args[-1]
                if subject.kind == ENTITY and value.kind == TEXT:
                    names.setdefault(str(subject.value), []).append(str(value.value))
        for fact in store.by_predicate(rule.class_predicate):
            if fact.args[0].kind != ENTITY:
                continue
            name = str(fact.args[0].value)
            bucket = lexemes.setdefault(name, set())
            if "self" in rule.variants:
                bucket.add(_self_lexeme(name))
            for surface in names.get(name, ()):
                norm = normalize(surface)
                if "full" in rule.variants:
                    bucket.add(norm)
                if "words" in rule.variants:
                    bucket.update(norm.split(" "))
    return {
        LexiconEntry(name, frozenset(ls))
        for name, ls in lexemes.items()
        if ls and any(l for l in ls)
    }


# ---------------------------------------------------------------------------
# Tab-separated table formats
# ---------------------------------------------------------------------------

def _tsv_rows(content: str, n_cols: int, what: str) -> Iterable[tuple[int, list[str]]]:
    for line_no, line in enumerate(content.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if len(cols) != n_cols:
            raise ValueError(f"{what}: line {line_no}: expected {n_cols} columns")
        yield line_no, [c.strip() for c in cols]


def load_lexicon_tsv(content: str) -> set[LexiconEntry]:
    grouped: dict[str, set[str]] = {}
    for _, (name, lexeme) in _tsv_rows(content, 2, "lexicon"):
        grouped.setdefault(name, set()).add(lexeme)
    return {LexiconEntry(name, frozenset(ls)) for name, ls in grouped.items()}


def dump_lexicon_tsv(entries: Iterable[LexiconEntry]) -> str:
    rows = sorted((e.entity_name, l) for e in entries for l in e.lexemes)
    return "".join(f"{name}\t{lexeme}\n" for name, lexeme in rows)


def load_aux_tsv(content: str) -> list[AuxRecord]:
    return [AuxRecord(*cols) for _, cols in _tsv_rows(content, 3, "auxst")]


def load_bindings_tsv(content: str) -> list[PredicateBinding]:
    out = []
    for line_no, (db_type, predicate, arity, pos) in _tsv_rows(content, 4, "bindings"):
        try:
            out.append(PredicateBinding(db_type, predicate, int(arity), int(pos)))
        except ValueError as exc:
            raise ValueError(f"bindings: line {line_no}: {exc}") from None
    return out


def load_operators_tsv(content: str) -> list[OperatorEntry]:
    return [OperatorEntry(*cols) for _, cols in _tsv_rows(content, 2, "operators")]


def load_generation_config(content: str) -> list[GenerationRule]:
    rules = []
    for _, (class_pred, source_pred, variants) in _tsv_rows(content, 3, "lexicon config"):
        source = None if source_pred in ("-", "") else source_pred
        rules.append(GenerationRule(class_pred, source, tuple(variants.split(","))))
    return rules
