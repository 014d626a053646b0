"""Workspace loading and the end-to-end query pipeline.

A workspace directory holds the fact store and all lookup tables:

    facts.txt      one fact per line
    lexicon.tsv    entity_name <TAB> lexeme
    auxst.tsv      entity_name <TAB> lex_type <TAB> db_type
    bindings.tsv   db_type <TAB> predicate <TAB> arity <TAB> entity_position
    operators.tsv  entity_name <TAB> comparator
    grammars.tsv   grammar registry (see the grammar module)

The bundled demo workspace ships inside the package.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from . import enrich, querygen
from .enrich import EnrichedEntity, EntityClass, SimpleEntity
from .grammar import GrammarRule, load_registry
from .lexicon import (
    AuxTable,
    InverseIndex,
    build_index,
    load_aux_tsv,
    load_bindings_tsv,
    load_lexicon_tsv,
    load_operators_tsv,
)
from .logic import Constant, DBQuery, FactStore, evaluate, load_facts, sort_key, value_key
from .parse import DependencyTree, Token, load_dependency_tree, shallow_parse, tokenize

WORKSPACE_FILES = (
    "facts.txt",
    "lexicon.tsv",
    "auxst.tsv",
    "bindings.tsv",
    "operators.tsv",
    "grammars.tsv",
)


class WorkspaceError(Exception):
    """A workspace file is missing or does not parse."""


@dataclass
class WorkspaceOptions:
    fuzzy_threshold: float = 0.7
    parser: str = "builtin"  # "builtin" or "conllu"
    conllu_path: Optional[Path] = None
    single_value: bool = False


@dataclass
class CompileInfo:
    """Everything the --explain output shows about one compilation."""

    tokens: tuple[Token, ...] = ()
    tree: Optional[DependencyTree] = None
    entities: list[SimpleEntity] = field(default_factory=list)
    classes: list[EntityClass] = field(default_factory=list)
    enriched: list[EnrichedEntity] = field(default_factory=list)
    parts: list = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def demo_root():
    return importlib.resources.files("facetql").joinpath("data/demo")


def _read(root, name: str) -> str:
    try:
        return root.joinpath(name).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise WorkspaceError(f"missing workspace file: {root}/{name}") from None
    except OSError as exc:
        raise WorkspaceError(f"cannot read {root}/{name}: {exc}") from None


class Workspace:
    """Loaded tables plus the pipeline operations over them."""

    def __init__(
        self,
        store: FactStore,
        index: InverseIndex,
        aux: AuxTable,
        registry: tuple[GrammarRule, ...],
        options: Optional[WorkspaceOptions] = None,
    ):
        self.store = store
        self.index = index
        self.aux = aux
        self.registry = registry
        self.options = options or WorkspaceOptions()

    @classmethod
    def load(
        cls,
        root: Union[Path, str, None] = None,
        options: Optional[WorkspaceOptions] = None,
    ) -> "Workspace":
        """Load a workspace directory; None loads the bundled demo."""
        base = demo_root() if root is None else Path(root)
        try:
            store = load_facts(_read(base, "facts.txt"))
            lexicons = load_lexicon_tsv(_read(base, "lexicon.tsv"))
            aux = AuxTable(
                records=load_aux_tsv(_read(base, "auxst.tsv")),
                bindings=load_bindings_tsv(_read(base, "bindings.tsv")),
                operators=load_operators_tsv(_read(base, "operators.tsv")),
            )
            registry = load_registry(_read(base, "grammars.tsv"))
        except WorkspaceError:
            raise
        except Exception as exc:
            raise WorkspaceError(f"workspace {base}: {exc}") from exc
        return cls(store, build_index(lexicons), aux, registry, options)

    # -- parsing ------------------------------------------------------------

    def tokens_and_tree(self, text: str) -> tuple[tuple[Token, ...], DependencyTree]:
        if self.options.parser == "conllu":
            if self.options.conllu_path is None:
                raise WorkspaceError("conllu parser mode needs a tree file path")
            try:
                tree = load_dependency_tree(
                    Path(self.options.conllu_path).read_text(encoding="utf-8")
                )
            except OSError as exc:
                raise WorkspaceError(f"cannot read dependency tree: {exc}") from None
            return tree.tokens, tree
        tokens = tokenize(text)
        tree = shallow_parse(tokens) if tokens else None
        return tokens, tree  # type: ignore[return-value]

    # -- pipeline stages ----------------------------------------------------

    def compile(self, text: str) -> tuple[DBQuery, CompileInfo]:
        """Full pipeline: tokens -> entities -> enrichment -> query."""
        info = CompileInfo()
        info.tokens, info.tree = self.tokens_and_tree(text)
        if not info.tokens:
            raise querygen.NoSolarClassError("empty query")
        info.entities = enrich.extract_entities(
            info.tokens,
            self.index,
            self.registry,
            self.aux,
            threshold=self.options.fuzzy_threshold,
        )
        info.classes = [enrich.classify(e, self.aux) for e in info.entities]
        info.enriched = enrich.enrich_entities(
            info.entities, info.tokens, self.aux, info.diagnostics
        )
        query = querygen.entities_to_queries(
            info.enriched,
            self.aux,
            diagnostics=info.diagnostics,
            trace=info.parts,
        )
        return query, info

    def enriched_entities(self, text: str) -> tuple[list[EnrichedEntity], list[str]]:
        diagnostics: list[str] = []
        tokens, _tree = self.tokens_and_tree(text)
        entities = enrich.extract_entities(
            tokens,
            self.index,
            self.registry,
            self.aux,
            threshold=self.options.fuzzy_threshold,
        )
        return enrich.enrich_entities(entities, tokens, self.aux, diagnostics), diagnostics

    def answer(self, query: DBQuery) -> list[tuple[Constant, ...]]:
        rows = evaluate(query, self.store)
        return sorted(rows, key=lambda row: tuple(sort_key(c) for c in row))

    def predict_pairs(self, text: str) -> set[tuple[str, str]]:
        """(value, db_type) pairs of the enriched entities, for evaluation.

        In single-value mode each entity contributes only its first value,
        mirroring an evaluation protocol that ignores ambiguity.
        """
        enriched, _ = self.enriched_entities(text)
        pairs: set[tuple[str, str]] = set()
        for entity in enriched:
            tuples = entity.sorted_tuples()
            if self.options.single_value and tuples:
                first_value = tuples[0].value
                tuples = [t for t in tuples if t.value == first_value]
            pairs.update((value_key(t.value), t.db_type) for t in tuples)
        return pairs
