"""Shared test helpers: the enumeration oracle and reference-table fixtures.

The oracle answers a query by enumerating every mapping from rule
variables to constants of the store's active domain and checking the
defining conditions directly.  It shares no code with the evaluator's
backtracking join.
"""

from __future__ import annotations

import itertools

from facetql.lexicon import (
    AuxRecord,
    AuxTable,
    LexiconEntry,
    OperatorEntry,
    PredicateBinding,
    build_index,
)
from facetql.logic import (
    Atom,
    ComparisonAtom,
    Constant,
    DBQuery,
    Fact,
    FactStore,
    QueryRule,
    Variable,
    compare,
)

NLQ_RUN = (
    "Find books with title 'Principles of Medicine' co-authored by Bob and Alice "
    "and whose price is less than 30 dollars"
)
NLQ_RUN_OR = (
    "Find books with title 'Principles of Medicine' written by Bob or Alice "
    "and whose price is less than 30 dollars"
)
NLQ_EDITED_OR_WRITTEN = "Find books edited or written by Bob"
NLQ_MIXED = "Find books written by Alice or Bob and Charlie"

DBQ_RUN_TEXT = (
    'q(x) :- Book(x), hasTitle(x, y1), writtenBy(x, y2), Person(y2), '
    'writtenBy(x, y3), Person(y3), hasPrice(x, y4), '
    '(y1 = "Principles of Medicine"), (y2 = :bob), (y3 = :alice), (y4 < 30).'
)


def oracle_evaluate(query, store: FactStore) -> set[tuple[Constant, ...]]:
    """Naive full-enumeration answer set: every substitution is tried."""
    rules = query.rules if isinstance(query, DBQuery) else (query,)
    domain = sorted(store.constants(), key=lambda c: (c.kind, str(c.value)))
    answers: set[tuple[Constant, ...]] = set()
    for rule in rules:
        variables = sorted(
            {v for atom in (rule.head, *rule.body) for v in atom.variables()}
            | {c.left for c in rule.comparisons},
            key=lambda v: v.name,
        )
        for values in itertools.product(domain, repeat=len(variables)):
            subst = dict(zip(variables, values))

            def ground(term):
                return subst[term] if isinstance(term, Variable) else term

            if not all(
                Fact(atom.predicate, tuple(ground(t) for t in atom.args)) in store
                for atom in rule.body
            ):
                continue
            if not all(
                compare(subst[c.left], c.op, c.right) for c in rule.comparisons
            ):
                continue
            answers.add(tuple(ground(t) for t in rule.head.args))
    return answers


# ---------------------------------------------------------------------------
# Reference lexicons / aux tables used by the golden tests
# ---------------------------------------------------------------------------

def reference_lexicons() -> set[LexiconEntry]:
    entries = {
        ":alice": {"Alice", "Wonderful", "Wonderful Alice"},
        ":bob": {"Sponge", "Bob", "Sponge Bob"},
        "author": {"co-authored", "written by", "created by"},
        "editor": {"edited", "edited by"},
        "lt": {"less than"},
        "book": {"book", "books"},
        "title": {"title"},
        "price": {"price"},
    }
    return {LexiconEntry(name, frozenset(ls)) for name, ls in entries.items()}


def reference_index():
    return build_index(reference_lexicons())


def reference_bindings() -> list[PredicateBinding]:
    return [
        PredicateBinding("Person", "Person", 1, 0),
        PredicateBinding("Author", "writtenBy", 2, 1),
        PredicateBinding("Book", "Book", 1, 0),
        PredicateBinding("Title", "hasTitle", 2, 1),
        PredicateBinding("MedicalDoc", "Doctor", 1, 0),
        PredicateBinding("Price", "hasPrice", 2, 1),
        PredicateBinding("Editor", "editedBy", 2, 1),
    ]


def reference_operators() -> list[OperatorEntry]:
    return [
        OperatorEntry("lt", "<"),
        OperatorEntry("leq", "<="),
        OperatorEntry("gt", ">"),
        OperatorEntry("geq", ">="),
        OperatorEntry("eq", "="),
    ]


def reference_aux(with_doctor_row: bool = False) -> AuxTable:
    """The worked-example aux table; the optional row adds the ambiguous
    doctor reading of :alice."""
    records = [
        AuxRecord(":alice", "Person", "Person"),
        AuxRecord("author", "Context", "Author"),
        AuxRecord(":bob", "Person", "Person"),
        AuxRecord("title", "Context", "Title"),
        AuxRecord("book", "Context", "Book"),
        AuxRecord("price", "Context", "Price"),
        AuxRecord("editor", "Context", "Editor"),
    ]
    if with_doctor_row:
        records.append(AuxRecord(":alice", "Doctor", "MedicalDoc"))
    return AuxTable(
        records=records,
        bindings=reference_bindings(),
        operators=reference_operators(),
    )


def book_store_with_one_match() -> FactStore:
    """Five books: one satisfies every condition of the running query, the
    others each violate exactly one."""
    from facetql.logic import load_facts

    return load_facts(
        "\n".join(
            [
                "Book(:good)",
                'hasTitle(:good,"Principles of Medicine")',
                "writtenBy(:good,:bob)",
                "writtenBy(:good,:alice)",
                "hasPrice(:good,25)",
                "Person(:bob)",
                "Person(:alice)",
                "Book(:wrong_title)",
                'hasTitle(:wrong_title,"Anatomy Atlas")',
                "writtenBy(:wrong_title,:bob)",
                "writtenBy(:wrong_title,:alice)",
                "hasPrice(:wrong_title,25)",
                "Book(:no_alice)",
                'hasTitle(:no_alice,"Principles of Medicine")',
                "writtenBy(:no_alice,:bob)",
                "hasPrice(:no_alice,25)",
                "Book(:too_pricey)",
                'hasTitle(:too_pricey,"Principles of Medicine")',
                "writtenBy(:too_pricey,:bob)",
                "writtenBy(:too_pricey,:alice)",
                "hasPrice(:too_pricey,45)",
                "Book(:no_bob)",
                'hasTitle(:no_bob,"Principles of Medicine")',
                "writtenBy(:no_bob,:alice)",
                "hasPrice(:no_bob,25)",
            ]
        )
    )


def make_rule(head_vars, body, comparisons=()) -> QueryRule:
    return QueryRule(
        head=Atom("q", tuple(Variable(v) for v in head_vars)),
        body=tuple(body),
        comparisons=tuple(comparisons),
    )


def atom(pred: str, *args) -> Atom:
    return Atom(pred, tuple(Variable(a) if isinstance(a, str) else a for a in args))


def comp(var: str, op: str, const: Constant) -> ComparisonAtom:
    return ComparisonAtom(Variable(var), op, const)
