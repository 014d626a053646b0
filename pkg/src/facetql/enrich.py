"""Entity extraction and enrichment.

Simple entities are detected by lexicon lookup and local grammars;
overlapping detections are unified to preserve ambiguity.  Entities are
classified (reference, operator, context), contexts and operators are
integrated into their reference entities, and coordination is resolved:
or-linked same-type entities merge, and-linked ones stay independent, a
mixed and/or run is widened to all-or.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .grammar import GrammarRule, run_grammars
from .lexicon import CONTEXT, OPERATOR, AuxTable, InverseIndex, lookup, normalize
from .logic import ENTITY, Constant, sort_key
from .parse import CONJUNCTIONS, Token

# Spans shorter than this never go through fuzzy lookup; short function
# words would otherwise drown the index in near-matches.
MIN_FUZZY_CHARS = 4
# An operator binds the nearest reference starting within this many tokens.
OPERATOR_WINDOW = 4

DEFAULT_OP = "="


class UnknownOperatorError(KeyError):
    """An operator entity value has no comparator in the dictionary."""


class EntityClass(enum.Enum):
    REFERENCE = "reference"
    OPERATOR = "operator"
    CONTEXT = "context"
    SOLAR = "solar"


@dataclass(frozen=True)
class Detection:
    start: int
    end: int
    token_start: int
    token_end: int
    value: Constant
    lex_types: frozenset[str]
    source: str  # "lexicon" or "grammar:<rule>"
    matched: str  # lexeme or grammar rule name
    score: float


@dataclass(frozen=True)
class SimpleEntity:
    """Detected span abstracted as (values, lexical types, value->types map)."""

    values: frozenset[Constant]
    lex_types: frozenset[str]
    mapping: Mapping[Constant, frozenset[str]]
    span: tuple[int, int]
    token_span: tuple[int, int]
    provenance: tuple[Detection, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.values:
            raise ValueError("an entity carries at least one value")

    def sorted_values(self) -> list[Constant]:
        return sorted(self.values, key=sort_key)

    def types_of(self, value: Constant) -> frozenset[str]:
        return self.mapping.get(value, frozenset())


@dataclass(frozen=True)
class EnrichedTuple:
    value: Constant
    db_type: str
    lex_type: str
    op: str


@dataclass(frozen=True)
class EnrichedEntity:
    """Relation over [value, db_type, lex_type, op]; spans kept as provenance."""

    tuples: frozenset[EnrichedTuple]
    span: tuple[int, int] = field(default=(0, 0), compare=False)
    token_span: tuple[int, int] = field(default=(0, 0), compare=False)

    def sorted_tuples(self) -> list[EnrichedTuple]:
        return sorted(self.tuples, key=lambda t: (sort_key(t.value), t.db_type, t.lex_type, t.op))

    def is_context_only(self) -> bool:
        return all(t.lex_type == CONTEXT for t in self.tuples)

    def values(self) -> list[Constant]:
        return sorted({t.value for t in self.tuples}, key=sort_key)


def _entity_name(value: Constant) -> Optional[str]:
    return str(value.value) if value.kind == ENTITY else None


def _diag(diagnostics: Optional[list[str]], message: str) -> None:
    if diagnostics is not None:
        diagnostics.append(message)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def _lexicon_detections(
    tokens: Sequence[Token], index: InverseIndex, aux: AuxTable, threshold: float
) -> list[Detection]:
    detections: list[Detection] = []
    max_width = max(1, index.max_lexeme_tokens)
    for width in range(1, max_width + 1):
        for i in range(len(tokens) - width + 1):
            window = tokens[i : i + width]
            if any(t.is_quoted or not t.is_word for t in window):
                continue
            span_text = normalize(" ".join(t.surface for t in window))
            exact = index.entities_for(span_text)
            if exact:
                hits = [(name, span_text, 1.0) for name in exact]
            else:
                if (
                    len(span_text) < MIN_FUZZY_CHARS
                    or window[0].lemma in CONJUNCTIONS
                    or window[-1].lemma in CONJUNCTIONS
                ):
                    continue
                # A substitution typo never changes the token count, so a
                # fuzzy candidate must match the window's width.
                hits = [
                    (name, lexeme, score)
                    for name, lexeme, score in lookup(span_text, index, threshold)
                    if lexeme.count(" ") + 1 == width
                ]
            for name, lexeme, score in hits:
                lex_types = aux.ltype(name)
                if not lex_types:
                    lex_types = frozenset({OPERATOR if aux.is_operator(name) else "Unknown"})
                detections.append(
                    Detection(
                        start=window[0].start,
                        end=window[-1].end,
                        token_start=i,
                        token_end=i + width,
                        value=Constant(ENTITY, name),
                        lex_types=lex_types,
                        source="lexicon",
                        matched=lexeme,
                        score=score,
                    )
                )
    return _prune_contained(detections)


def _prune_contained(detections: list[Detection]) -> list[Detection]:
    """Maximal-match rule: a lexicon hit strictly inside a hit of at least
    the same score loses ("more than" inside "no more than")."""

    def swallowed(d: Detection) -> bool:
        return any(
            other is not d
            and other.score >= d.score
            and other.start <= d.start
            and d.end <= other.end
            and (other.start, other.end) != (d.start, d.end)
            for other in detections
        )

    return [d for d in detections if not swallowed(d)]


def _union_overlaps(detections: list[Detection]) -> list[SimpleEntity]:
    entities: list[SimpleEntity] = []
    for group in _overlap_components(detections):
        mapping: dict[Constant, set[str]] = {}
        for d in group:
            mapping.setdefault(d.value, set()).update(d.lex_types)
        frozen = {v: frozenset(ts) for v, ts in mapping.items()}
        entities.append(
            SimpleEntity(
                values=frozenset(frozen),
                lex_types=frozenset().union(*frozen.values()),
                mapping=frozen,
                span=(min(d.start for d in group), max(d.end for d in group)),
                token_span=(
                    min(d.token_start for d in group),
                    max(d.token_end for d in group),
                ),
                provenance=tuple(sorted(group, key=lambda d: (d.start, d.end, d.matched))),
            )
        )
    entities.sort(key=lambda e: e.span)
    return entities


def _overlap_components(detections: list[Detection]) -> list[list[Detection]]:
    components: list[list[Detection]] = []
    current: list[Detection] = []
    current_end = -1
    for d in sorted(detections, key=lambda d: (d.start, d.end)):
        if current and d.start < current_end:
            current.append(d)
            current_end = max(current_end, d.end)
        else:
            if current:
                components.append(current)
            current = [d]
            current_end = d.end
    if current:
        components.append(current)
    return components


def extract_entities(
    tokens: Sequence[Token],
    index: InverseIndex,
    registry: Iterable[GrammarRule],
    aux: AuxTable,
    *,
    threshold: float = 0.7,
) -> list[SimpleEntity]:
    """Detect simple entities in a token sequence, span-ordered.

    Lexicon and grammar detections are computed independently; detections
    with overlapping character spans collapse into one entity whose value
    and type sets are the unions of the constituents.
    """
    detections = _lexicon_detections(tokens, index, aux, threshold)
    for m in run_grammars(tokens, registry):
        detections.append(
            Detection(
                start=m.start,
                end=m.end,
                token_start=m.token_start,
                token_end=m.token_end,
                value=m.value,
                lex_types=frozenset({m.lex_type}),
                source=f"grammar:{m.rule}",
                matched=m.rule,
                score=1.0,
            )
        )
    return _union_overlaps(detections)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def classify(
    entity: SimpleEntity, aux: AuxTable, diagnostics: Optional[list[str]] = None
) -> EntityClass:
    """Reference / operator / context classification.

    Operators win over contexts when a value sits in both tables; the
    solar tag is applied later, once the target class is known.
    """
    names = [n for v in entity.sorted_values() if (n := _entity_name(v)) is not None]
    is_op = any(aux.is_operator(n) for n in names)
    is_ctx = any(CONTEXT in aux.ltype(n) for n in names)
    if is_op and is_ctx:
        _diag(diagnostics, f"entity {names} is both operator and context; operator wins")
    if is_op:
        return EntityClass.OPERATOR
    if is_ctx:
        return EntityClass.CONTEXT
    return EntityClass.REFERENCE


# ---------------------------------------------------------------------------
# Enrichment
# ---------------------------------------------------------------------------

def _extend_tuples(
    entity: SimpleEntity, aux: AuxTable, op: str, diagnostics: Optional[list[str]]
) -> set[EnrichedTuple]:
    tuples: set[EnrichedTuple] = set()
    for v in entity.sorted_values():
        name = _entity_name(v)
        records = aux.records_for(name) if name is not None else ()
        if records:
            db_types = {r.db_type for r in records}
            if len(db_types) > 1:
                _diag(
                    diagnostics,
                    f"value {name} carries multiple database types: {sorted(db_types)}",
                )
            for rec in records:
                tuples.add(EnrichedTuple(v, rec.db_type, rec.lex_type, op))
        else:
            # A value the aux table does not know carries its own lexical
            # value type (Number/Text/Date) as both types.
            kinds = entity.types_of(v) or frozenset({"Unknown"})
            lex = sorted(kinds)[0]
            tuples.add(EnrichedTuple(v, lex, lex, op))
    return tuples


def extend(
    entity: SimpleEntity,
    aux: AuxTable,
    op: str = DEFAULT_OP,
    diagnostics: Optional[list[str]] = None,
) -> EnrichedEntity:
    """Convert a simple entity into its enriched counterpart."""
    return EnrichedEntity(
        tuples=frozenset(_extend_tuples(entity, aux, op, diagnostics)),
        span=entity.span,
        token_span=entity.token_span,
    )


def context_enrichment(
    context: SimpleEntity,
    reference: SimpleEntity,
    aux: AuxTable,
    op: str = DEFAULT_OP,
    diagnostics: Optional[list[str]] = None,
) -> EnrichedEntity:
    """Integrate a context entity into its reference entity.

    For every reference value v the result holds (v, dbtype(v), ltype(v),
    op), and for every context value u additionally (v, dbtype(u),
    ltype(u), op).
    """
    return _enrich_reference(reference, [context], op, aux, diagnostics)


def _enrich_reference(
    reference: SimpleEntity,
    contexts: Sequence[SimpleEntity],
    op: str,
    aux: AuxTable,
    diagnostics: Optional[list[str]],
) -> EnrichedEntity:
    tuples = _extend_tuples(reference, aux, op, diagnostics)
    for context in contexts:
        for u in context.sorted_values():
            name = _entity_name(u)
            records = aux.records_for(name) if name is not None else ()
            if not records:
                _diag(diagnostics, f"context value {u} has no aux records; skipped")
                continue
            for rec in records:
                for v in reference.sorted_values():
                    tuples.add(EnrichedTuple(v, rec.db_type, rec.lex_type, op))
    span = reference.span
    token_span = reference.token_span
    return EnrichedEntity(tuples=frozenset(tuples), span=span, token_span=token_span)


def operator_enrichment(
    operator: SimpleEntity, reference: EnrichedEntity, aux: AuxTable
) -> EnrichedEntity:
    """Install the operator's comparator on every tuple of the reference."""
    op = _operator_comparator(operator, aux, None)
    if op is None:
        raise UnknownOperatorError(sorted(map(str, operator.values)))
    return EnrichedEntity(
        tuples=frozenset(
            EnrichedTuple(t.value, t.db_type, t.lex_type, op) for t in reference.tuples
        ),
        span=reference.span,
        token_span=reference.token_span,
    )


def _operator_comparator(
    operator: SimpleEntity, aux: AuxTable, diagnostics: Optional[list[str]]
) -> Optional[str]:
    names = [n for v in operator.sorted_values() if (n := _entity_name(v)) is not None]
    known = [n for n in names if aux.is_operator(n)]
    if not known:
        return None
    if len(known) > 1:
        _diag(diagnostics, f"ambiguous operator {known}; using {known[0]}")
    return aux.comparator(known[0])


# ---------------------------------------------------------------------------
# Coordination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConjunctionGroup:
    members: tuple[int, ...]  # indexes into the span-ordered entity list
    kind: str  # "and", "or", or "mixed"


def conjunction_groups(
    entities: Sequence[SimpleEntity], tokens: Sequence[Token]
) -> list[ConjunctionGroup]:
    """Maximal runs of same-type entities separated only by and/or/commas.

    A run of commas without an explicit conjunction counts as "and".
    """
    groups: list[ConjunctionGroup] = []
    run: list[int] = []
    run_kinds: set[str] = set()

    def close() -> None:
        nonlocal run, run_kinds
        if len(run) > 1:
            explicit = run_kinds & {"and", "or"}
            if explicit == {"and", "or"}:
                kind = "mixed"
            elif explicit == {"or"}:
                kind = "or"
            else:
                kind = "and"
            groups.append(ConjunctionGroup(tuple(run), kind))
        run, run_kinds = [], set()

    for i, entity in enumerate(entities):
        if not run:
            run = [i]
            continue
        prev = entities[run[-1]]
        gap = [t for t in tokens[prev.token_span[1] : entity.token_span[0]]]
        linked = (
            gap
            and all(t.lemma in CONJUNCTIONS or t.surface == "," for t in gap)
            and prev.lex_types & entity.lex_types
        )
        if linked:
            run.append(i)
            run_kinds.update(t.lemma for t in gap if t.lemma in CONJUNCTIONS)
        else:
            close()
            run = [i]
    close()
    return groups


def merge_simple(entities: Sequence[SimpleEntity]) -> SimpleEntity:
    """Union of values/types/mappings; the covering span is kept."""
    mapping: dict[Constant, set[str]] = {}
    for e in entities:
        for v, ts in e.mapping.items():
            mapping.setdefault(v, set()).update(ts)
    frozen = {v: frozenset(ts) for v, ts in mapping.items()}
    return SimpleEntity(
        values=frozenset(frozen),
        lex_types=frozenset().union(*frozen.values()),
        mapping=frozen,
        span=(min(e.span[0] for e in entities), max(e.span[1] for e in entities)),
        token_span=(
            min(e.token_span[0] for e in entities),
            max(e.token_span[1] for e in entities),
        ),
        provenance=tuple(d for e in entities for d in e.provenance),
    )


def apply_conjunctions(
    entities: Sequence[EnrichedEntity], groups: Iterable[ConjunctionGroup]
) -> list[EnrichedEntity]:
    """Merge or-linked (and widened mixed) groups of enriched entities.

    Members of an or-group collapse into one entity holding the union of
    their tuple sets; and-groups stay untouched.
    """
    out: list[Optional[EnrichedEntity]] = list(entities)
    for group in groups:
        if group.kind == "and":
            continue
        members = [entities[i] for i in group.members]
        merged = EnrichedEntity(
            tuples=frozenset().union(*(m.tuples for m in members)),
            span=(min(m.span[0] for m in members), max(m.span[1] for m in members)),
            token_span=(
                min(m.token_span[0] for m in members),
                max(m.token_span[1] for m in members),
            ),
        )
        out[group.members[0]] = merged
        for i in group.members[1:]:
            out[i] = None
    return [e for e in out if e is not None]


# ---------------------------------------------------------------------------
# Full enrichment pass
# ---------------------------------------------------------------------------

def _pick_solar(
    entities: Sequence[SimpleEntity], classes: Sequence[EntityClass], aux: AuxTable
) -> Optional[int]:
    for i, entity in enumerate(entities):
        if classes[i] is not EntityClass.CONTEXT:
            continue
        for v in entity.sorted_values():
            name = _entity_name(v)
            if name is None:
                continue
            for rec in aux.records_for(name):
                if aux.has_binding(rec.db_type) and aux.pred_e(rec.db_type).arity == 1:
                    return i
    return None


def _attachments(
    entities: Sequence[SimpleEntity],
    classes: Sequence[EntityClass],
    solar: Optional[int],
    diagnostics: Optional[list[str]],
) -> tuple[dict[int, list[int]], dict[int, list[int]]]:
    """Resolve operator and context attachments to reference entities.

    An operator binds the nearest reference to its right within
    OPERATOR_WINDOW tokens.  A context binds the nearest reference to its
    right, unless another context intervenes (operators are transparent);
    failing that, the nearest reference to its left.
    """
    operators_for: dict[int, list[int]] = {}
    contexts_for: dict[int, list[int]] = {}

    def scan(start: int, step: int) -> Optional[int]:
        j = start + step
        while 0 <= j < len(entities):
            if classes[j] is EntityClass.REFERENCE:
                return j
            if classes[j] is EntityClass.CONTEXT:
                return None
            j += step
        return None

    for i, entity in enumerate(entities):
        cls = classes[i]
        if cls is EntityClass.OPERATOR:
            target = scan(i, +1)
            if target is not None:
                gap = entities[target].token_span[0] - entity.token_span[1]
                if gap > OPERATOR_WINDOW:
                    target = None
            if target is None:
                _diag(diagnostics, f"operator at {entity.span} has no reference; dropped")
                continue
            operators_for.setdefault(target, []).append(i)
        elif cls is EntityClass.CONTEXT and i != solar:
            target = scan(i, +1)
            if target is None:
                target = scan(i, -1)
            if target is None:
                continue  # reported by the caller when dropping the entity
            contexts_for.setdefault(target, []).append(i)
    return operators_for, contexts_for


def _distribute_over_groups(
    attachments: dict[int, list[int]], groups: Iterable[ConjunctionGroup]
) -> dict[int, list[int]]:
    out = {k: list(v) for k, v in attachments.items()}
    for group in groups:
        if group.kind != "and":
            continue
        shared: list[int] = []
        for m in group.members:
            shared.extend(a for a in attachments.get(m, ()) if a not in shared)
        if shared:
            for m in group.members:
                out[m] = list(shared)
    return out


def enrich_entities(
    entities: Sequence[SimpleEntity],
    tokens: Sequence[Token],
    aux: AuxTable,
    diagnostics: Optional[list[str]] = None,
) -> list[EnrichedEntity]:
    """Run coordination, attachment, and enrichment over extracted entities.

    Returns span-ordered enriched entities: the solar-class candidate (if
    any) as a context-only entity, one enriched entity per reference, with
    operator comparators installed and or-groups merged.  Operators and
    consumed contexts do not reappear; unattachable contexts are dropped
    with a diagnostic.
    """
    entities = list(entities)
    groups = conjunction_groups(entities, tokens)

    # Merge or/mixed runs at the simple-entity level; survivors keep their
    # position so group indexes stay valid for and-distribution.
    merged: list[Optional[SimpleEntity]] = list(entities)
    for group in groups:
        if group.kind == "and":
            continue
        merged_entity = merge_simple([entities[i] for i in group.members])
        merged[group.members[0]] = merged_entity
        for i in group.members[1:]:
            merged[i] = None
    keep = [i for i, e in enumerate(merged) if e is not None]
    remap = {old: new for new, old in enumerate(keep)}
    entities = [merged[i] for i in keep]  # type: ignore[misc]
    and_groups = [
        ConjunctionGroup(tuple(remap[m] for m in g.members), g.kind)
        for g in groups
        if g.kind == "and" and all(m in remap for m in g.members)
    ]

    classes = [classify(e, aux, diagnostics) for e in entities]
    solar = _pick_solar(entities, classes, aux)
    operators_for, contexts_for = _attachments(entities, classes, solar, diagnostics)
    operators_for = _distribute_over_groups(operators_for, and_groups)
    contexts_for = _distribute_over_groups(contexts_for, and_groups)
    consumed_contexts = {c for cs in contexts_for.values() for c in cs}

    enriched: list[EnrichedEntity] = []
    for i, entity in enumerate(entities):
        cls = classes[i]
        if cls is EntityClass.OPERATOR:
            continue
        if cls is EntityClass.CONTEXT:
            if i == solar:
                enriched.append(extend(entity, aux, DEFAULT_OP, diagnostics))
            elif i not in consumed_contexts:
                _diag(
                    diagnostics,
                    f"context entity at {entity.span} has no reference; dropped",
                )
            continue
        op = DEFAULT_OP
        attached_ops = operators_for.get(i, [])
        if attached_ops:
            if len(attached_ops) > 1:
                _diag(diagnostics, f"multiple operators bind entity at {entity.span}")
            op = _operator_comparator(entities[attached_ops[0]], aux, diagnostics)
            if op is None:
                raise UnknownOperatorError(
                    sorted(map(str, entities[attached_ops[0]].values))
                )
        contexts = [entities[j] for j in contexts_for.get(i, [])]
        enriched.append(_enrich_reference(entity, contexts, op, aux, diagnostics))
    return enriched
