"""Command-line entry point.

Commands: build-lexicon, compile, query, eval, repl.  Standard output
carries only payload (rendered queries, answer rows, metrics tables);
diagnostics and --explain records go to standard error.

Exit codes: 0 success, 1 usage error, 2 compile failure, 3 I/O or
configuration failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .enrich import UnknownOperatorError
from .evalkit import EmptyCorpusError, evaluate_corpus, load_gold, render_table
from .lexicon import (
    UnknownDBTypeError,
    build_index,
    dump_lexicon_tsv,
    load_generation_config,
    load_lexicon_tsv,
    generate_lexicons,
    LexiconConfigError,
)
from .logic import FactParseError, load_facts, render_constant
from .parse import ConlluParseError
from .pipeline import CompileInfo, Workspace, WorkspaceError, WorkspaceOptions
from .querygen import (
    CompileError,
    render_datalog,
    render_sparql,
    select_solar,
    to_record,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPILE = 2
EXIT_IO = 3

_COMPILE_ERRORS = (CompileError, UnknownDBTypeError, UnknownOperatorError)
_IO_ERRORS = (
    WorkspaceError,
    FactParseError,
    ConlluParseError,
    LexiconConfigError,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_workspace_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--workspace",
        metavar="DIR",
        default=None,
        help="workspace directory (default: the bundled demo)",
    )
    parser.add_argument(
        "--fuzzy",
        type=float,
        default=0.7,
        metavar="T",
        help="fuzzy lookup similarity threshold in [0,1] (default 0.7)",
    )
    parser.add_argument(
        "--parser",
        default="builtin",
        metavar="MODE",
        help="'builtin' or 'conllu:<path>' to feed an external dependency tree",
    )


def _workspace(args: argparse.Namespace) -> Workspace:
    options = WorkspaceOptions(fuzzy_threshold=args.fuzzy)
    if args.parser != "builtin":
        if not args.parser.startswith("conllu:"):
            raise WorkspaceError(f"unknown parser mode {args.parser!r}")
        options.parser = "conllu"
        options.conllu_path = Path(args.parser.split(":", 1)[1])
    if getattr(args, "single_value", False):
        options.single_value = True
    return Workspace.load(args.workspace, options)


def _emit_explain(info: CompileInfo, workspace: Workspace) -> None:
    def emit(record: dict) -> None:
        print(json.dumps(record, ensure_ascii=False), file=sys.stderr)

    for tok in info.tokens:
        emit({"kind": "token", "surface": tok.surface, "start": tok.start, "end": tok.end})
    for entity, cls in zip(info.entities, info.classes):
        emit(
            {
                "kind": "entity",
                "values": [render_constant(v) for v in entity.sorted_values()],
                "types": sorted(entity.lex_types),
                "span": list(entity.span),
                "class": cls.value,
            }
        )
    try:
        solar = select_solar(info.enriched, workspace.aux)
    except CompileError:
        solar = None
    for enriched in info.enriched:
        emit(
            {
                "kind": "enriched",
                "tuples": [
                    [render_constant(t.value), t.db_type, t.lex_type, t.op]
                    for t in enriched.sorted_tuples()
                ],
                "span": list(enriched.span),
                "solar": enriched is solar,
            }
        )
    for entity, parts in info.parts:
        emit(
            {
                "kind": "parts",
                "entity_span": list(entity.span),
                "alternatives": [
                    [str(a) for a in part.atoms] + [str(part.comparison)]
                    for part in parts
                ],
            }
        )
    for message in info.diagnostics:
        emit({"kind": "diagnostic", "message": message})


def _render(query, fmt: str) -> str:
    if fmt == "sparql":
        return render_sparql(query)
    if fmt == "json":
        return json.dumps(to_record(query), indent=2)
    return render_datalog(query)


def cmd_build_lexicon(args: argparse.Namespace) -> int:
    facts_path = Path(args.facts)
    if not facts_path.exists():
        print(f"facts file not found: {facts_path}", file=sys.stderr)
        return EXIT_IO
    store = load_facts(facts_path.read_text(encoding="utf-8"))
    config = load_generation_config(Path(args.config).read_text(encoding="utf-8"))
    entries = generate_lexicons(store, config)
    if args.merge:
        entries |= load_lexicon_tsv(Path(args.merge).read_text(encoding="utf-8"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lexicon_path = out_dir / "lexicon.tsv"
    lexicon_path.write_text(dump_lexicon_tsv(entries), encoding="utf-8")
    index = build_index(entries)
    manifest = {
        "entities": sorted({e.entity_name for e in entries}),
        "lexemes": sorted(index.lexemes),
        "exact": {l: sorted(index.entities_for(l)) for l in sorted(index.lexemes)},
        "ngram": 3,
    }
    manifest_path = out_dir / "index-manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {lexicon_path} and {manifest_path}", file=sys.stderr)
    return EXIT_OK


def cmd_compile(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    query, info = workspace.compile(args.text)
    if args.explain:
        _emit_explain(info, workspace)
    print(_render(query, args.format))
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    query, info = workspace.compile(args.text)
    if args.explain:
        _emit_explain(info, workspace)
    for row in workspace.answer(query):
        print(", ".join(render_constant(c) for c in row))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    corpus_path = Path(args.corpus)
    if not corpus_path.exists():
        print(f"corpus file not found: {corpus_path}", file=sys.stderr)
        return EXIT_IO

    def predict(text: str):
        try:
            return workspace.predict_pairs(text)
        except Exception as exc:  # a failed query scores zero, not a crash
            print(f"prediction failed for {text!r}: {exc}", file=sys.stderr)
            return ()

    try:
        corpus = load_gold(corpus_path.read_text(encoding="utf-8"))
        metrics = evaluate_corpus(corpus, predict)
    except (EmptyCorpusError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_IO
    print(render_table(metrics))
    if args.out:
        from .report import write_report

        paths = write_report(metrics, Path(args.out))
        print("wrote " + ", ".join(str(p) for p in paths), file=sys.stderr)
    return EXIT_OK


def cmd_repl(args: argparse.Namespace) -> int:
    workspace = _workspace(args)
    explain = False
    stream = sys.stdin
    while True:
        print("> ", end="", file=sys.stderr, flush=True)
        line = stream.readline()
        if not line:
            return EXIT_OK
        line = line.strip()
        if not line:
            continue
        if line in (":quit", ":q", ":exit"):
            return EXIT_OK
        if line == ":explain":
            explain = not explain
            print(f"explain {'on' if explain else 'off'}", file=sys.stderr)
            continue
        try:
            query, info = workspace.compile(line)
            if explain:
                _emit_explain(info, workspace)
            print(render_datalog(query))
            for row in workspace.answer(query):
                print(", ".join(render_constant(c) for c in row))
        except _COMPILE_ERRORS as exc:
            print(f"cannot compile: {exc}", file=sys.stderr)
        except _IO_ERRORS as exc:
            print(str(exc), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="facetql", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-lexicon", help="generate lexicons from a facts file")
    p.add_argument("--facts", required=True, help="facts file")
    p.add_argument("--config", required=True, help="lexeme generation config (TSV)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--merge", default=None, help="hand-written lexicon TSV to merge in")
    p.set_defaults(func=cmd_build_lexicon)

    p = sub.add_parser("compile", help="compile a query without running it")
    _add_workspace_options(p)
    p.add_argument("text", help="the natural-language query")
    p.add_argument(
        "--format", choices=("datalog", "sparql", "json"), default="datalog"
    )
    p.add_argument("--explain", action="store_true", help="dump pipeline stages to stderr")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("query", help="compile and answer over the workspace facts")
    _add_workspace_options(p)
    p.add_argument("text", help="the natural-language query")
    p.add_argument("--explain", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score extraction quality against a gold corpus")
    _add_workspace_options(p)
    p.add_argument("corpus", help="gold corpus (JSON lines)")
    p.add_argument(
        "--single-value",
        action="store_true",
        help="count only one value per entity (ambiguity-free protocol)",
    )
    p.add_argument("--out", default=None, help="directory for metrics.tsv/json/png")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("repl", help="interactive query loop")
    _add_workspace_options(p)
    p.set_defaults(func=cmd_repl)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _COMPILE_ERRORS as exc:
        print(f"cannot compile: {exc}", file=sys.stderr)
        return EXIT_COMPILE
    except _IO_ERRORS as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
