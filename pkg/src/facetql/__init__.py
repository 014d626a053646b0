"""facetql: natural-language facet queries compiled to database queries.

The pipeline extracts simple entities from a query (lexicon lookup with
fuzzy matching plus local grammars), enriches them with context and
operator information, resolves and/or coordination, and emits a
conjunctive rule query that a built-in evaluator can answer over a flat
fact store.
"""

from .enrich import (
    EnrichedEntity,
    EnrichedTuple,
    EntityClass,
    SimpleEntity,
    apply_conjunctions,
    classify,
    context_enrichment,
    extend,
    extract_entities,
    operator_enrichment,
)
from .evalkit import GoldAnnotation, Metrics, evaluate_corpus
from .lexicon import (
    AuxTable,
    InverseIndex,
    LexiconEntry,
    build_index,
    generate_lexicons,
    lookup,
)
from .logic import (
    Atom,
    ComparisonAtom,
    Constant,
    DBQuery,
    Fact,
    FactStore,
    QueryRule,
    Variable,
    compare,
    evaluate,
    load_facts,
)
from .pipeline import Workspace, WorkspaceOptions
from .querygen import (
    alpha_equivalent,
    entities_to_queries,
    parse_datalog,
    render_datalog,
    render_sparql,
    select_solar,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "AuxTable",
    "ComparisonAtom",
    "Constant",
    "DBQuery",
    "EnrichedEntity",
    "EnrichedTuple",
    "EntityClass",
    "Fact",
    "FactStore",
    "GoldAnnotation",
    "InverseIndex",
    "LexiconEntry",
    "Metrics",
    "QueryRule",
    "SimpleEntity",
    "Variable",
    "Workspace",
    "WorkspaceOptions",
    "alpha_equivalent",
    "apply_conjunctions",
    "build_index",
    "classify",
    "compare",
    "context_enrichment",
    "entities_to_queries",
    "evaluate",
    "evaluate_corpus",
    "extend",
    "extract_entities",
    "generate_lexicons",
    "load_facts",
    "lookup",
    "operator_enrichment",
    "parse_datalog",
    "render_datalog",
    "render_sparql",
    "select_solar",
]
