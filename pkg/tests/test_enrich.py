"""Entity extraction, classification, enrichment, and coordination."""

from __future__ import annotations

import itertools
import random

import pytest

from facetql.enrich import (
    ConjunctionGroup,
    EnrichedEntity,
    EnrichedTuple,
    EntityClass,
    SimpleEntity,
    apply_conjunctions,
    classify,
    context_enrichment,
    enrich_entities,
    extend,
    extract_entities,
    operator_enrichment,
    UnknownOperatorError,
)
from facetql.grammar import default_registry
from facetql.lexicon import AuxRecord, AuxTable, LexiconEntry, build_index
from facetql.logic import entity, number, text
from facetql.parse import tokenize

import support
from support import NLQ_RUN, NLQ_EDITED_OR_WRITTEN, NLQ_MIXED, NLQ_RUN_OR


def simple(values, types_by_value, span=(0, 1), token_span=(0, 1)):
    mapping = {v: frozenset(ts) for v, ts in types_by_value.items()}
    return SimpleEntity(
        values=frozenset(values),
        lex_types=frozenset().union(*mapping.values()),
        mapping=mapping,
        span=span,
        token_span=token_span,
    )


def tuples(*rows):
    return frozenset(EnrichedTuple(v, d, l, op) for v, d, l, op in rows)


@pytest.fixture(scope="module")
def aux():
    return support.reference_aux()


@pytest.fixture(scope="module")
def index():
    return support.reference_index()


def extract(text_in, index, aux, threshold=0.7):
    tokens = tokenize(text_in)
    return tokens, extract_entities(
        tokens, index, default_registry(), aux, threshold=threshold
    )


# -- extraction ----------------------------------------------------------------

def test_running_example_extracts_nine_entities(index, aux):
    _, entities = extract(NLQ_RUN, index, aux)
    got = [(e.sorted_values(), sorted(e.lex_types)) for e in entities]
    assert got == [
        ([entity("book")], ["Context"]),
        ([entity("title")], ["Context"]),
        ([text("Principles of Medicine")], ["Text"]),
        ([entity("author")], ["Context"]),
        ([entity(":bob")], ["Person"]),
        ([entity(":alice")], ["Person"]),
        ([entity("price")], ["Context"]),
        ([entity("lt")], ["Operator"]),
        ([number(30)], ["Number"]),
    ]


def test_no_hits_yields_empty(index, aux):
    _, entities = extract("nothing relevant here", index, aux)
    assert entities == []


def test_overlap_union_merges_ambiguous_values():
    lexicons = {
        LexiconEntry(":paris", frozenset({"paris"})),
        LexiconEntry(":city_paris", frozenset({"paris"})),
    }
    aux = AuxTable(
        records=[
            AuxRecord(":paris", "Person", "Person"),
            AuxRecord(":city_paris", "City", "City"),
        ]
    )
    _, entities = extract("visit paris now", build_index(lexicons), aux)
    [e] = entities
    assert e.values == frozenset({entity(":paris"), entity(":city_paris")})
    assert e.types_of(entity(":paris")) == frozenset({"Person"})
    assert e.types_of(entity(":city_paris")) == frozenset({"City"})


def test_overlap_union_keeps_every_value(index, aux):
    # any two detections with overlapping spans merge; no value is dropped
    _, entities = extract("written by Sponge Bob", index, aux)
    values = {v for e in entities for v in e.values}
    assert entity(":bob") in values and entity("author") in values


def test_entities_ordered_by_span(index, aux):
    _, entities = extract(NLQ_RUN, index, aux)
    spans = [e.span for e in entities]
    assert spans == sorted(spans)


# -- classification --------------------------------------------------------------

def test_classify_examples(index, aux):
    _, entities = extract(NLQ_RUN, index, aux)
    by_value = {e.sorted_values()[0]: e for e in entities}
    assert classify(by_value[entity("lt")], aux) is EntityClass.OPERATOR
    assert classify(by_value[entity("title")], aux) is EntityClass.CONTEXT
    assert classify(by_value[number(30)], aux) is EntityClass.REFERENCE


def test_classify_operator_wins_conflicts():
    from facetql.lexicon import OperatorEntry

    aux = AuxTable(
        records=[AuxRecord("lt", "Context", "Less")],
        operators=[OperatorEntry("lt", "<")],
    )
    diags: list[str] = []
    e = simple({entity("lt")}, {entity("lt"): {"Context"}})
    assert classify(e, aux, diags) is EntityClass.OPERATOR
    assert diags


# -- extend / context / operator enrichment ---------------------------------------

def test_extend_solar_entity(aux):
    e = simple({entity("book")}, {entity("book"): {"Context"}})
    assert extend(e, aux).tuples == tuples((entity("book"), "Book", "Context", "="))


def test_extend_value_type_entity(aux):
    e = simple({number(30)}, {number(30): {"Number"}})
    assert extend(e, aux).tuples == tuples((number(30), "Number", "Number", "="))


def test_extend_unknown_value_self_typed():
    empty_aux = AuxTable()
    e = simple({number(30)}, {number(30): {"Number"}})
    assert extend(e, empty_aux).tuples == tuples((number(30), "Number", "Number", "="))


def test_context_enrichment_title_into_text(aux):
    title = simple({entity("title")}, {entity("title"): {"Context"}})
    quoted = simple({text("Princ. of Medicine")}, {text("Princ. of Medicine"): {"Text"}})
    got = context_enrichment(title, quoted, aux)
    assert got.tuples == tuples(
        (text("Princ. of Medicine"), "Text", "Text", "="),
        (text("Princ. of Medicine"), "Title", "Context", "="),
    )


def test_context_enrichment_author_into_person(aux):
    author = simple({entity("author")}, {entity("author"): {"Context"}})
    bob = simple({entity(":bob")}, {entity(":bob"): {"Person"}})
    got = context_enrichment(author, bob, aux)
    assert got.tuples == tuples(
        (entity(":bob"), "Person", "Person", "="),
        (entity(":bob"), "Author", "Context", "="),
    )


def test_context_enrichment_cardinality(aux):
    # |result| = |V| + |V_C| * |V| when every inserted tuple is distinct
    rng = random.Random(6)
    for _ in range(20):
        n_v, n_c = rng.randint(1, 4), rng.randint(0, 3)
        records = [AuxRecord(f":v{i}", f"T{i}", f"D{i}") for i in range(n_v)]
        records += [AuxRecord(f"c{j}", "Context", f"C{j}") for j in range(n_c)]
        table = AuxTable(records=records)
        ref = simple(
            {entity(f":v{i}") for i in range(n_v)},
            {entity(f":v{i}"): {f"T{i}"} for i in range(n_v)},
        )
        ctx = simple(
            {entity(f"c{j}") for j in range(n_c)},
            {entity(f"c{j}"): {"Context"} for j in range(n_c)},
        ) if n_c else None
        got = context_enrichment(ctx, ref, table) if ctx else extend(ref, table)
        assert len(got.tuples) == n_v + n_c * n_v


def test_context_with_empty_aux_records_only_extends(aux):
    ghost = simple({entity("ghostling")}, {entity("ghostling"): {"Context"}})
    ref = simple({number(5)}, {number(5): {"Number"}})
    diags: list[str] = []
    got = context_enrichment(ghost, ref, aux, diagnostics=diags)
    assert got.tuples == tuples((number(5), "Number", "Number", "="))
    assert diags


def test_operator_enrichment_installs_comparator(aux):
    lt = simple({entity("lt")}, {entity("lt"): {"Operator"}})
    base = EnrichedEntity(
        tuples=tuples(
            (number(30), "Number", "Number", "="),
            (number(30), "Price", "Context", "="),
        )
    )
    got = operator_enrichment(lt, base, aux)
    assert got.tuples == tuples(
        (number(30), "Number", "Number", "<"),
        (number(30), "Price", "Context", "<"),
    )


def test_operator_enrichment_equality_is_identity(aux):
    eq = simple({entity("eq")}, {entity("eq"): {"Operator"}})
    base = EnrichedEntity(tuples=tuples((entity(":bob"), "Person", "Person", "=")))
    assert operator_enrichment(eq, base, aux).tuples == base.tuples


def test_operator_enrichment_geq_on_date(aux):
    import datetime as dt
    from facetql.logic import date

    geq = simple({entity("geq")}, {entity("geq"): {"Operator"}})
    d = date(dt.date(2018, 5, 1))
    base = EnrichedEntity(
        tuples=tuples((d, "Date", "Date", "="), (d, "PubDate", "Context", "="))
    )
    got = operator_enrichment(geq, base, aux)
    assert {t.op for t in got.tuples} == {">="}


def test_operator_enrichment_unknown_operator(aux):
    ghost = simple({entity("sorta")}, {entity("sorta"): {"Operator"}})
    base = EnrichedEntity(tuples=tuples((number(1), "Number", "Number", "=")))
    with pytest.raises(UnknownOperatorError):
        operator_enrichment(ghost, base, aux)


# -- full enrichment of the running example ---------------------------------------

EXAMPLE_EE = [
    tuples((entity("book"), "Book", "Context", "=")),
    tuples(
        (text("Principles of Medicine"), "Text", "Text", "="),
        (text("Principles of Medicine"), "Title", "Context", "="),
    ),
    tuples(
        (entity(":bob"), "Person", "Person", "="),
        (entity(":bob"), "Author", "Context", "="),
    ),
    tuples(
        (entity(":alice"), "Person", "Person", "="),
        (entity(":alice"), "Author", "Context", "="),
    ),
    tuples(
        (number(30), "Number", "Number", "<"),
        (number(30), "Price", "Context", "<"),
    ),
]


def enrich_text(text_in, index, aux, diagnostics=None):
    tokens, entities = extract(text_in, index, aux)
    return enrich_entities(entities, tokens, aux, diagnostics)


def test_running_example_enrichment(index, aux):
    got = enrich_text(NLQ_RUN, index, aux)
    assert [e.tuples for e in got] == EXAMPLE_EE


def test_and_keeps_entities_independent(index, aux):
    got = enrich_text(NLQ_RUN, index, aux)
    bobs = [e for e in got if entity(":bob") in {t.value for t in e.tuples}]
    alices = [e for e in got if entity(":alice") in {t.value for t in e.tuples}]
    assert len(bobs) == 1 and len(alices) == 1 and bobs[0] is not alices[0]


E_NEW = tuples(
    (entity(":bob"), "Person", "Person", "="),
    (entity(":bob"), "Author", "Context", "="),
    (entity(":alice"), "Person", "Person", "="),
    (entity(":alice"), "Author", "Context", "="),
)


def test_or_merges_entities(index, aux):
    got = enrich_text(NLQ_RUN_OR, index, aux)
    assert E_NEW in [e.tuples for e in got]
    merged = [e for e in got if e.tuples == E_NEW]
    assert len(merged) == 1


def test_edited_or_written_by_bob(index, aux):
    got = enrich_text(NLQ_EDITED_OR_WRITTEN, index, aux)
    expected = tuples(
        (entity(":bob"), "Person", "Person", "="),
        (entity(":bob"), "Author", "Context", "="),
        (entity(":bob"), "Editor", "Context", "="),
    )
    assert expected in [e.tuples for e in got]


def test_mixed_and_or_widens_to_one_merged_entity(index, aux):
    lexicons = support.reference_lexicons() | {
        LexiconEntry(":charlie", frozenset({"charlie"}))
    }
    table = AuxTable(
        records=[
            AuxRecord(":alice", "Person", "Person"),
            AuxRecord(":bob", "Person", "Person"),
            AuxRecord(":charlie", "Person", "Person"),
            AuxRecord("author", "Context", "Author"),
            AuxRecord("book", "Context", "Book"),
        ],
        bindings=support.reference_bindings(),
        operators=support.reference_operators(),
    )
    got = enrich_text(NLQ_MIXED, build_index(lexicons), table)
    persons = [
        e
        for e in got
        if {t.value for t in e.tuples}
        >= {entity(":alice"), entity(":bob"), entity(":charlie")}
    ]
    assert len(persons) == 1


def test_or_merge_commutative_associative():
    parts = [
        EnrichedEntity(
            tuples=tuples((entity(f":p{i}"), "Person", "Person", "=")),
            span=(i, i + 1),
        )
        for i in range(3)
    ]
    results = set()
    for perm in itertools.permutations(range(3)):
        ordered = [parts[i] for i in perm]
        merged = apply_conjunctions(
            ordered, [ConjunctionGroup((0, 1, 2), "or")]
        )
        assert len(merged) == 1
        results.add(merged[0].tuples)
    assert len(results) == 1


def test_or_merge_commutes_with_enrichment(index, aux):
    # merging simple entities then enriching equals enriching then merging
    author = simple({entity("author")}, {entity("author"): {"Context"}})
    bob = simple({entity(":bob")}, {entity(":bob"): {"Person"}}, span=(0, 3), token_span=(0, 1))
    alice = simple({entity(":alice")}, {entity(":alice"): {"Person"}}, span=(4, 9), token_span=(2, 3))
    from facetql.enrich import merge_simple

    merged_first = context_enrichment(author, merge_simple([bob, alice]), aux)
    enriched_then_merged = apply_conjunctions(
        [context_enrichment(author, bob, aux), context_enrichment(author, alice, aux)],
        [ConjunctionGroup((0, 1), "or")],
    )
    assert [merged_first.tuples] == [e.tuples for e in enriched_then_merged]


def test_default_op_everywhere_unless_operator(index, aux):
    got = enrich_text(NLQ_RUN, index, aux)
    for e in got[:-1]:
        assert {t.op for t in e.tuples} == {"="}
    assert {t.op for t in got[-1].tuples} == {"<"}


def test_unattached_context_dropped_with_diagnostic(index, aux):
    diags: list[str] = []
    got = enrich_text("Find books with title", index, aux, diags)
    assert [e.tuples for e in got] == [tuples((entity("book"), "Book", "Context", "="))]
    assert any("no reference" in d for d in diags)
