"""Logical core: typed constants, conjunctive rule queries, and a fact store.

A database instance is a flat set of ground facts over unary/binary
predicates.  Queries are rule-form conjunctive queries with comparison
atoms; a query may carry several rules with the same head, in which case
its answers are the union of the per-rule answers.
"""

from __future__ import annotations

import datetime as dt
import io
import re
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Mapping, Union

ENTITY = "entity"
TEXT = "text"
NUMBER = "number"
DATE = "date"

COMPARATORS = ("=", "<", "<=", ">", ">=")

# Observed arities in the target databases are 1 (class membership) and
# 2 (property edges); the facts loader enforces this bound.
MAX_ARITY = 2


class FactParseError(ValueError):
    """Malformed facts input; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnsafeQueryError(ValueError):
    """A head or comparison variable does not occur in any body atom."""


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    """Typed constant: kind is one of ENTITY, TEXT, NUMBER, DATE."""

    kind: str
    value: object

    def __str__(self) -> str:
        return render_constant(self)


Term = Union[Variable, Constant]


def entity(name: str) -> Constant:
    return Constant(ENTITY, name)


def text(value: str) -> Constant:
    return Constant(TEXT, value)


def number(value: Union[int, float]) -> Constant:
    return Constant(NUMBER, value)


def date(value: dt.date) -> Constant:
    return Constant(DATE, value)


_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?\d+\.\d+\Z")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}\Z")
_ENTITY_RE = re.compile(r":?[A-Za-z_][\w.\-]*\Z")


def parse_constant(token: str) -> Constant:
    """Parse one constant in its written form.

    Leading ':' or a bare identifier gives an entity id, surrounding double
    quotes give text, a decimal gives a number, yyyy-mm-dd gives a date.
    Raises ValueError on anything else (including invalid calendar dates).
    """
    token = token.strip()
    if not token:
        raise ValueError("empty constant")
    if token.startswith('"'):
        if len(token) < 2 or not token.endswith('"'):
            raise ValueError(f"unterminated text constant: {token!r}")
        return text(_unescape(token[1:-1]))
    if _INT_RE.match(token):
        return number(int(token))
    if _FLOAT_RE.match(token):
        return number(float(token))
    if _DATE_RE.match(token):
        try:
            return date(dt.date.fromisoformat(token))
        except ValueError as exc:
            raise ValueError(f"invalid date {token!r}: {exc}") from None
    if _ENTITY_RE.match(token):
        return entity(token)
    raise ValueError(f"cannot type constant {token!r}")


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def _unescape(value: str) -> str:
    out, i = [], 0
    while i < len(value):
        ch = value[i]
        if ch == "\\":
            if i + 1 >= len(value) or value[i + 1] not in ('"', "\\"):
                raise ValueError(f"bad escape in text constant: {value!r}")
            out.append(value[i + 1])
            i += 2
        elif ch == '"':
            raise ValueError(f"unescaped quote in text constant: {value!r}")
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def render_constant(c: Constant) -> str:
    """Written form that round-trips through parse_constant."""
    if c.kind == TEXT:
        return f'"{_escape(str(c.value))}"'
    if c.kind == DATE:
        return c.value.isoformat()  # type: ignore[union-attr]
    if c.kind == NUMBER:
        return repr(c.value)
    return str(c.value)


def value_key(c: Constant) -> str:
    """Canonical plain-string key for reports and gold-corpus matching."""
    if c.kind == TEXT:
        return str(c.value)
    if c.kind == DATE:
        return c.value.isoformat()  # type: ignore[union-attr]
    if c.kind == NUMBER:
        return repr(c.value)
    return str(c.value)


def sort_key(c: Constant) -> tuple:
    return (c.kind, value_key(c))


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(map(str, self.args))})"

    def variables(self) -> set[Variable]:
        return {a for a in self.args if isinstance(a, Variable)}


@dataclass(frozen=True)
class ComparisonAtom:
    left: Variable
    op: str
    right: Constant

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")

    def __str__(self) -> str:
        return f"({self.left} {self.op} {render_constant(self.right)})"


@dataclass(frozen=True)
class Fact:
    predicate: str
    args: tuple[Constant, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(render_constant(a) for a in self.args)})"


@dataclass(frozen=True)
class QueryRule:
    head: Atom
    body: tuple[Atom, ...]
    comparisons: tuple[ComparisonAtom, ...] = ()

    def body_variables(self) -> set[Variable]:
        out: set[Variable] = set()
        for atom in self.body:
            out |= atom.variables()
        return out

    def is_safe(self) -> bool:
        bound = self.body_variables()
        if not self.head.variables() <= bound:
            return False
        return all(c.left in bound for c in self.comparisons)

    def __str__(self) -> str:
        items = [str(a) for a in self.body] + [str(c) for c in self.comparisons]
        return f"{self.head} :- {', '.join(items)}."


@dataclass(frozen=True)
class DBQuery:
    """One or more rules sharing a syntactically identical head."""

    rules: tuple[QueryRule, ...]

    def __post_init__(self):
        if not self.rules:
            raise ValueError("a query needs at least one rule")
        head = self.rules[0].head
        for rule in self.rules[1:]:
            if rule.head != head:
                raise ValueError("all rules of a query must share one head")

    @property
    def head(self) -> Atom:
        return self.rules[0].head

    def __str__(self) -> str:
        return "\n".join(str(r) for r in self.rules)


class FactStore:
    """Immutable set of facts with a per-predicate index and inferred schema."""

    def __init__(self, facts: Iterable[Fact]):
        seen: set[Fact] = set()
        schema: dict[str, int] = {}
        hints: dict[str, list[set[str]]] = {}
        index: dict[str, list[Fact]] = {}
        for fact in facts:
            arity = len(fact.args)
            known = schema.setdefault(fact.predicate, arity)
            if known != arity:
                raise ValueError(
                    f"arity conflict for {fact.predicate}: {known} vs {arity}"
                )
            positions = hints.setdefault(fact.predicate, [set() for _ in range(arity)])
            for pos, arg in enumerate(fact.args):
                positions[pos].add(arg.kind)
            if fact in seen:
                continue
            seen.add(fact)
            index.setdefault(fact.predicate, []).append(fact)
        self._facts = frozenset(seen)
        self._schema = schema
        self._hints = {p: tuple(frozenset(s) for s in ps) for p, ps in hints.items()}
        self._index = {p: tuple(fs) for p, fs in index.items()}

    @property
    def facts(self) -> frozenset[Fact]:
        return self._facts

    @property
    def schema(self) -> Mapping[str, int]:
        return dict(self._schema)

    @property
    def type_hints(self) -> Mapping[str, tuple[frozenset[str], ...]]:
        """Observed constant kinds per predicate argument position."""
        return dict(self._hints)

    def by_predicate(self, predicate: str) -> tuple[Fact, ...]:
        return self._index.get(predicate, ())

    def constants(self) -> set[Constant]:
        return {arg for fact in self._facts for arg in fact.args}

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._facts

    def __iter__(self) -> Iterator[Fact]:
        return iter(self._facts)


_FACT_LINE_RE = re.compile(r"([A-Za-z_][\w.\-]*)\s*\((.*)\)\s*\Z")


def _split_args(raw: str, line_no: int) -> list[str]:
    parts, buf, in_text, i = [], [], False, 0
    while i < len(raw):
        ch = raw[i]
        if in_text:
            buf.append(ch)
            if ch == "\\" and i + 1 < len(raw):
                buf.append(raw[i + 1])
                i += 1
            elif ch == '"':
                in_text = False
        elif ch == '"':
            in_text = True
            buf.append(ch)
        elif ch == ",":
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
        i += 1
    if in_text:
        raise FactParseError(line_no, "unterminated text constant")
    parts.append("".join(buf))
    return parts


def load_facts(source: Union[str, bytes, IO]) -> FactStore:
    """Load a facts file: one `Pred(arg,...)` per line, '#' comment lines.

    Raises FactParseError (with line number) on malformed lines, arities
    outside 1..MAX_ARITY, or an arity conflict with an earlier line.
    """
    if isinstance(source, bytes):
        lines: Iterable[str] = source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    elif isinstance(source, io.TextIOBase):
        lines = source.read().splitlines()
    else:
        lines = source.read().decode("utf-8").splitlines()

    facts: list[Fact] = []
    arities: dict[str, tuple[int, int]] = {}  # predicate -> (arity, first line)
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _FACT_LINE_RE.match(stripped)
        if not m:
            raise FactParseError(line_no, f"expected Pred(arg,...): {stripped!r}")
        predicate, raw_args = m.group(1), m.group(2)
        tokens = _split_args(raw_args, line_no)
        if not (1 <= len(tokens) <= MAX_ARITY):
            raise FactParseError(
                line_no, f"{predicate} has arity {len(tokens)}, supported is 1..{MAX_ARITY}"
            )
        try:
            args = tuple(parse_constant(tok) for tok in tokens)
        except ValueError as exc:
            raise FactParseError(line_no, str(exc)) from None
        known = arities.get(predicate)
        if known is not None and known[0] != len(args):
            raise FactParseError(
                line_no,
                f"arity conflict for {predicate}: {known[0]} on line {known[1]}, "
                f"{len(args)} here",
            )
        arities.setdefault(predicate, (len(args), line_no))
        facts.append(Fact(predicate, args))
    return FactStore(facts)


def compare(left: Constant, op: str, right: Constant) -> bool:
    """Total comparison between constants.

    Same-kind values use their natural order (numeric, chronological,
    codepoint-lexicographic); entity ids support identity only; any
    cross-kind comparison is false.
    """
    if op not in COMPARATORS:
        raise ValueError(f"unknown comparator {op!r}")
    if left.kind != right.kind:
        return False
    if op == "=":
        return left.value == right.value
    if left.kind == ENTITY:
        return False
    lv, rv = left.value, right.value
    if op == "<":
        return lv < rv  # type: ignore[operator]
    if op == "<=":
        return lv <= rv  # type: ignore[operator]
    if op == ">":
        return lv > rv  # type: ignore[operator]
    return lv >= rv  # type: ignore[operator]


def _check_safe(rule: QueryRule) -> None:
    if not rule.is_safe():
        raise UnsafeQueryError(f"unsafe rule: {rule}")


def _match_atom(
    atom: Atom, fact: Fact, subst: dict[Variable, Constant]
) -> dict[Variable, Constant] | None:
    if fact.predicate != atom.predicate or len(fact.args) != len(atom.args):
        return None
    new = subst
    for term, const in zip(atom.args, fact.args):
        if isinstance(term, Constant):
            if term != const:
                return None
            continue
        bound = new.get(term)
        if bound is None:
            if new is subst:
                new = dict(subst)
            new[term] = const
        elif bound != const:
            return None
    return new if new is not subst else dict(subst)


def _evaluate_rule(rule: QueryRule, store: FactStore) -> set[tuple[Constant, ...]]:
    _check_safe(rule)
    answers: set[tuple[Constant, ...]] = set()

    def comparisons_ok(subst: dict[Variable, Constant], final: bool) -> bool:
        # Early filtering: a comparison fires as soon as its variable binds.
        for comp in rule.comparisons:
            bound = subst.get(comp.left)
            if bound is None:
                if final:
                    return False
                continue
            if not compare(bound, comp.op, comp.right):
                return False
        return True

    def walk(pos: int, subst: dict[Variable, Constant]) -> None:
        if pos == len(rule.body):
            if comparisons_ok(subst, final=True):
                answers.add(
                    tuple(subst[a] if isinstance(a, Variable) else a for a in rule.head.args)
                )
        else:
            atom = rule.body[pos]
            for fact in store.by_predicate(atom.predicate):
                extended = _match_atom(atom, fact, subst)
                if extended is not None and comparisons_ok(extended, final=False):
                    walk(pos + 1, extended)

    walk(0, {})
    return answers


def evaluate(query: Union[DBQuery, QueryRule], store: FactStore) -> set[tuple[Constant, ...]]:
    """Answer tuples of the query over the store (union across rules)."""
    rules = query.rules if isinstance(query, DBQuery) else (query,)
    answers: set[tuple[Constant, ...]] = set()
    for rule in rules:
        answers |= _evaluate_rule(rule, store)
    return answers
