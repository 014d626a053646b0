"""Build rule-form database queries from enriched entities, plus renderers.

Every query selects instances of one solar class.  Each non-solar entity
contributes a set of alternative atom lists (its "parts"); alternatives
multiply into separate rules under one head, which is how disjunction and
preserved ambiguity surface in the output.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .enrich import EnrichedEntity, EnrichedTuple
from .lexicon import CONTEXT, AuxTable
from .logic import (
    Atom,
    ComparisonAtom,
    Constant,
    DBQuery,
    QueryRule,
    Variable,
    parse_constant,
    render_constant,
)

HEAD_PREDICATE = "q"
SOLAR_VARIABLE = Variable("x")


class CompileError(Exception):
    """Query generation failed."""


class NoSolarClassError(CompileError):
    """No entity designates the class the query should select."""


@dataclass
class VariableFactory:
    """Fresh y1, y2, ... variables; x is reserved for the solar class."""

    counter: int = 0

    def fresh(self) -> Variable:
        self.counter += 1
        return Variable(f"y{self.counter}")


@dataclass(frozen=True)
class Part:
    """One alternative: atoms plus the comparison to conjoin into a body."""

    atoms: tuple[Atom, ...]
    comparison: ComparisonAtom

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("a part carries at least one atom")


def build_atom(
    aux: AuxTable, db_type: str, variable: Variable, solar_variable: Variable
) -> Atom:
    """Atom over the predicate bound to db_type.

    A unary binding gives Pred(variable); a binary one places the entity
    variable at its reserved position and the solar variable at the other.
    """
    binding = aux.pred_e(db_type)
    if binding.arity == 1:
        return Atom(binding.predicate, (variable,))
    args: list[Variable] = [solar_variable, solar_variable]
    args[binding.entity_position] = variable
    return Atom(binding.predicate, tuple(args))


def build_atom_op(value: Constant, variable: Variable, op: str) -> ComparisonAtom:
    return ComparisonAtom(variable, op, value)


def select_solar(
    entities: Sequence[EnrichedEntity], aux: AuxTable, tree: object = None
) -> EnrichedEntity:
    """The earliest context-only entity whose type maps to a unary predicate."""
    for entity in sorted(entities, key=lambda e: e.span):
        if not entity.is_context_only():
            continue
        for t in entity.sorted_tuples():
            if aux.has_binding(t.db_type) and aux.pred_e(t.db_type).arity == 1:
                return entity
    raise NoSolarClassError("no entity names a class with a unary predicate binding")


def _solar_tuple(
    solar: EnrichedEntity, aux: AuxTable, diagnostics: Optional[list[str]]
) -> EnrichedTuple:
    candidates = [
        t
        for t in solar.sorted_tuples()
        if aux.has_binding(t.db_type) and aux.pred_e(t.db_type).arity == 1
    ]
    if not candidates:
        raise NoSolarClassError("solar entity has no unary-bound type")
    if len(solar.tuples) > 1 and diagnostics is not None:
        diagnostics.append(
            f"solar entity has {len(solar.tuples)} tuples; using {candidates[0].db_type}"
        )
    return candidates[0]


def parts_for_entity(
    entity: EnrichedEntity,
    aux: AuxTable,
    variables: VariableFactory,
    diagnostics: Optional[list[str]] = None,
) -> list[Part]:
    """Alternative atom lists for one enriched entity.

    Context-typed tuples pair with same-value non-context tuples: the pair
    yields <reference atom, context atom, comparison>, or just <context
    atom, comparison> when the reference type is a raw value type with no
    predicate of its own.  Remaining tuples yield <atom, comparison>.
    """
    parts: list[Part] = []
    consumed: set[EnrichedTuple] = set()
    ordered = entity.sorted_tuples()
    for t in ordered:
        if t.lex_type != CONTEXT:
            continue
        partners = [
            t2 for t2 in ordered if t2.value == t.value and t2.lex_type != CONTEXT
        ]
        if not partners:
            if diagnostics is not None:
                diagnostics.append(
                    f"context tuple ({render_constant(t.value)}, {t.db_type}) has "
                    "no reference tuple; skipped"
                )
            continue
        for t2 in partners:
            y = variables.fresh()
            context_atom = build_atom(aux, t.db_type, y, SOLAR_VARIABLE)
            if aux.has_binding(t2.db_type):
                atoms = (build_atom(aux, t2.db_type, y, SOLAR_VARIABLE), context_atom)
            else:
                atoms = (context_atom,)
            parts.append(Part(atoms, build_atom_op(t.value, y, t.op)))
            consumed.add(t2)
        consumed.add(t)
    for t in ordered:
        if t in consumed:
            continue
        if not aux.has_binding(t.db_type):
            if diagnostics is not None:
                diagnostics.append(
                    f"tuple ({render_constant(t.value)}, {t.db_type}) has no "
                    "predicate binding; skipped"
                )
            continue
        y = variables.fresh()
        parts.append(
            Part((build_atom(aux, t.db_type, y, SOLAR_VARIABLE),), build_atom_op(t.value, y, t.op))
        )
    return parts


def _extend_rule(rule: QueryRule, part: Part) -> QueryRule:
    return QueryRule(
        head=rule.head,
        body=rule.body + part.atoms,
        comparisons=rule.comparisons + (part.comparison,),
    )


def entities_to_queries(
    entities: Sequence[EnrichedEntity],
    aux: AuxTable,
    solar: Optional[EnrichedEntity] = None,
    diagnostics: Optional[list[str]] = None,
    trace: Optional[list] = None,
) -> DBQuery:
    """Compile an enriched entity set into a (possibly multi-rule) query.

    The solar entity seeds q(x) <- A0; every further entity multiplies the
    rule set by its alternatives.  Entities whose alternatives all fail to
    build are skipped with a diagnostic.
    """
    if solar is None:
        solar = select_solar(entities, aux)
    variables = VariableFactory()
    t0 = _solar_tuple(solar, aux, diagnostics)
    head = Atom(HEAD_PREDICATE, (SOLAR_VARIABLE,))
    seed = QueryRule(
        head=head, body=(build_atom(aux, t0.db_type, SOLAR_VARIABLE, SOLAR_VARIABLE),)
    )
    rules: list[QueryRule] = [seed]
    ordered = [solar] + [
        e for e in sorted(entities, key=lambda e: e.span) if e is not solar
    ]
    for entity in ordered[1:]:
        parts = parts_for_entity(entity, aux, variables, diagnostics)
        if trace is not None:
            trace.append((entity, list(parts)))
        if not parts:
            if diagnostics is not None:
                diagnostics.append(f"entity at {entity.span} produced no parts; skipped")
            continue
        rules = [_extend_rule(rule, part) for rule in rules for part in parts]
    return DBQuery(tuple(rules))


# ---------------------------------------------------------------------------
# Text renderers
# ---------------------------------------------------------------------------

def render_datalog(query: DBQuery) -> str:
    """One rule per line: `q(x) :- Atom, ..., (comparison), ... .`"""
    return "\n".join(str(rule) for rule in query.rules)


_DATALOG_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<imp>:-)
    | (?P<punct>[(),.])
    | (?P<op><=|>=|[=<>])
    | (?P<text>"(?:\\.|[^"\\])*")
    | (?P<word>:?[A-Za-z_][\w.\-]*|\d{4}-\d{2}-\d{2}|[+-]?\d+(?:\.\d+)?)
    """,
    re.VERBOSE,
)

_VARIABLE_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


class _DatalogParser:
    """Recursive-descent parser for the datalog text form.

    Bare identifiers inside atoms are variables; comparison right-hand
    sides are always constants, so bare identifiers there are entity ids.
    """

    def __init__(self, text: str):
        self.tokens: list[tuple[str, str]] = []
        pos = 0
        while pos < len(text):
            m = _DATALOG_TOKEN_RE.match(text, pos)
            if not m:
                raise ValueError(f"datalog: unexpected character {text[pos]!r}")
            pos = m.end()
            kind = m.lastgroup
            if kind != "ws":
                self.tokens.append((kind, m.group(0)))
        self.pos = 0

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else ("eof", "")

    def take(self, kind: str, value: Optional[str] = None) -> str:
        k, v = self.peek()
        if k != kind or (value is not None and v != value):
            raise ValueError(f"datalog: expected {value or kind}, got {v!r}")
        self.pos += 1
        return v

    def parse_rule(self) -> QueryRule:
        head = self.parse_atom()
        self.take("imp")
        body: list[Atom] = []
        comparisons: list[ComparisonAtom] = []
        while True:
            kind, value = self.peek()
            if kind == "punct" and value == "(":
                comparisons.append(self.parse_comparison())
            elif kind == "word":
                body.append(self.parse_atom())
            else:
                raise ValueError(f"datalog: unexpected token {value!r} in body")
            kind, value = self.peek()
            if kind == "punct" and value == ",":
                self.take("punct", ",")
                continue
            self.take("punct", ".")
            break
        return QueryRule(head, tuple(body), tuple(comparisons))

    def parse_atom(self) -> Atom:
        name = self.take("word")
        self.take("punct", "(")
        args: list = []
        while True:
            args.append(self.parse_term())
            kind, value = self.peek()
            if kind == "punct" and value == ",":
                self.take("punct", ",")
                continue
            self.take("punct", ")")
            break
        return Atom(name, tuple(args))

    def parse_term(self):
        kind, value = self.peek()
        if kind == "text":
            self.take("text")
            return parse_constant(value)
        self.take("word")
        if not value.startswith(":") and _VARIABLE_RE.match(value):
            return Variable(value)
        return parse_constant(value)

    def parse_comparison(self) -> ComparisonAtom:
        self.take("punct", "(")
        var = self.take("word")
        if var.startswith(":") or not _VARIABLE_RE.match(var):
            raise ValueError(f"datalog: comparison left side must be a variable, got {var!r}")
        op = self.take("op")
        kind, value = self.peek()
        self.take(kind)
        const = parse_constant(value)
        self.take("punct", ")")
        return ComparisonAtom(Variable(var), op, const)

    def parse_query(self) -> DBQuery:
        rules = []
        while self.peek()[0] != "eof":
            rules.append(self.parse_rule())
        return DBQuery(tuple(rules))


def parse_datalog(text: str) -> DBQuery:
    return _DatalogParser(text).parse_query()


def _sparql_term(term) -> str:
    if isinstance(term, Variable):
        return f"?{term.name}"
    return _sparql_constant(term)


def _sparql_constant(c: Constant) -> str:
    from .logic import DATE, ENTITY, NUMBER

    if c.kind == ENTITY:
        name = str(c.value)
        return name if name.startswith(":") else f":{name}"
    if c.kind == NUMBER:
        return repr(c.value)
    if c.kind == DATE:
        return f'"{c.value.isoformat()}"^^xsd:date'
    escaped = str(c.value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def _sparql_block(rule: QueryRule, indent: str) -> str:
    lines = []
    for atom in rule.body:
        if len(atom.args) == 1:
            lines.append(f"{indent}{_sparql_term(atom.args[0])} a :{atom.predicate} .")
        else:
            subject, obj = atom.args
            lines.append(
                f"{indent}{_sparql_term(subject)} :{atom.predicate} {_sparql_term(obj)} ."
            )
    for comp in rule.comparisons:
        lines.append(
            f"{indent}FILTER(?{comp.left.name} {comp.op} {_sparql_constant(comp.right)})"
        )
    return "\n".join(lines)


def render_sparql(query: DBQuery) -> str:
    """SPARQL 1.1 subset: unary atoms as type patterns, binary atoms as
    triples, comparisons as FILTERs, extra rules as UNION branches."""
    for rule in query.rules:
        if not rule.is_safe():
            raise ValueError(f"cannot render unsafe rule: {rule}")
    projection = " ".join(
        f"?{a.name}" for a in query.head.args if isinstance(a, Variable)
    )
    if len(query.rules) == 1:
        body = _sparql_block(query.rules[0], "  ")
        return f"SELECT {projection} WHERE {{\n{body}\n}}"
    branches = []
    for rule in query.rules:
        branches.append("  {\n" + _sparql_block(rule, "    ") + "\n  }")
    joined = "\n  UNION\n".join(branches)
    return f"SELECT {projection} WHERE {{\n{joined}\n}}"


def to_record(query: DBQuery) -> dict:
    """Structured form (head, atoms, comparisons) for programmatic use."""

    def term(t) -> dict:
        if isinstance(t, Variable):
            return {"var": t.name}
        return {"const": render_constant(t), "kind": t.kind}

    return {
        "head": {
            "predicate": query.head.predicate,
            "args": [term(a) for a in query.head.args],
        },
        "rules": [
            {
                "atoms": [
                    {"predicate": a.predicate, "args": [term(x) for x in a.args]}
                    for a in rule.body
                ],
                "comparisons": [
                    {"var": c.left.name, "op": c.op, "value": render_constant(c.right)}
                    for c in rule.comparisons
                ],
            }
            for rule in query.rules
        ],
    }


# ---------------------------------------------------------------------------
# Alpha equivalence (variable renaming + body reordering)
# ---------------------------------------------------------------------------

def _rule_alpha_map(a: QueryRule, b: QueryRule) -> bool:
    if a.head.predicate != b.head.predicate or len(a.head.args) != len(b.head.args):
        return False
    if len(a.body) != len(b.body) or len(a.comparisons) != len(b.comparisons):
        return False

    def bind(mapping: dict, x: Variable, y: Variable) -> Optional[dict]:
        bound = mapping.get(x)
        if bound is None:
            if y in mapping.values():
                return None
            new = dict(mapping)
            new[x] = y
            return new
        return mapping if bound == y else None

    def match_terms(mapping: dict, ta, tb) -> Optional[dict]:
        if isinstance(ta, Variable) != isinstance(tb, Variable):
            return None
        if isinstance(ta, Variable):
            return bind(mapping, ta, tb)
        return mapping if ta == tb else None

    def match_atoms(mapping: dict, x: Atom, y: Atom) -> Optional[dict]:
        if x.predicate != y.predicate or len(x.args) != len(y.args):
            return None
        for ta, tb in zip(x.args, y.args):
            result = match_terms(mapping, ta, tb)
            if result is None:
                return None
            mapping = result
        return mapping

    def search(mapping: dict, remaining_a: list, remaining_b: list, matcher) -> Iterable[dict]:
        if not remaining_a:
            yield mapping
            return
        first, rest = remaining_a[0], remaining_a[1:]
        for k, candidate in enumerate(remaining_b):
            extended = matcher(mapping, first, candidate)
            if extended is not None:
                yield from search(extended, rest, remaining_b[:k] + remaining_b[k + 1 :], matcher)

    def match_comp(mapping: dict, x: ComparisonAtom, y: ComparisonAtom) -> Optional[dict]:
        if x.op != y.op or x.right != y.right:
            return None
        return bind(mapping, x.left, y.left)

    head_map: Optional[dict] = {}
    for ta, tb in zip(a.head.args, b.head.args):
        head_map = match_terms(head_map, ta, tb)
        if head_map is None:
            return False
    for mapping in search(head_map, list(a.body), list(b.body), match_atoms):
        for final in search(mapping, list(a.comparisons), list(b.comparisons), match_comp):
            return True
    return False


def alpha_equivalent(a: DBQuery, b: DBQuery) -> bool:
    """Structural equality up to variable renaming and body reordering."""
    if len(a.rules) != len(b.rules):
        return False
    for perm in itertools.permutations(range(len(b.rules))):
        if all(_rule_alpha_map(a.rules[i], b.rules[j]) for i, j in enumerate(perm)):
            return True
    return False
