"""Local grammars for entities whose values are not stored in the database.

Each rule matches token sequences and parses the surface into a typed
constant.  The registry is data-extensible: rules can be declared in a
tab-separated file with a token pattern and a value-format tag.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .logic import Constant, date, number, text
from .parse import Token

LEX_NUMBER = "Number"
LEX_TEXT = "Text"
LEX_DATE = "Date"

_MONTH_NAMES = (
    "january february march april may june july august september october november december"
).split()
_MONTHS = {name: i + 1 for i, name in enumerate(_MONTH_NAMES)}
_MONTHS.update({name[:3]: i + 1 for i, name in enumerate(_MONTH_NAMES)})
_MONTH_ALT = "|".join(sorted(_MONTHS))

_NUMBER_PAT = r"[+-]?\d+(\.\d+)?"
_ISO_DATE_PAT = r"\d{4}-\d{2}-\d{2}"


@dataclass(frozen=True)
class GrammarRule:
    """A named token-level pattern producing one lexical type.

    kind 'token' matches a single token, 'seq' a fixed sequence of token
    patterns (space-separated), 'quoted' any quoted region token.
    """

    name: str
    kind: str
    pattern: str
    lex_type: str
    value_format: str

    def __post_init__(self):
        if self.kind not in ("token", "seq", "quoted"):
            raise ValueError(f"grammar rule {self.name}: unknown kind {self.kind!r}")
        if self.lex_type not in (LEX_NUMBER, LEX_TEXT, LEX_DATE):
            raise ValueError(f"grammar rule {self.name}: unsupported lex type")
        if self.value_format not in VALUE_PARSERS:
            raise ValueError(f"grammar rule {self.name}: unknown value format")

    def token_patterns(self) -> tuple[re.Pattern, ...]:
        parts = self.pattern.split(" ") if self.kind == "seq" else [self.pattern]
        return tuple(re.compile(p, re.IGNORECASE) for p in parts)


@dataclass(frozen=True)
class GrammarMatch:
    start: int
    end: int
    token_start: int
    token_end: int
    lex_type: str
    value: Constant
    rule: str


def _parse_decimal(tokens: Sequence[Token]) -> Optional[Constant]:
    surface = tokens[0].surface
    try:
        return number(int(surface))
    except ValueError:
        try:
            return number(float(surface))
        except ValueError:
            return None


def _parse_iso_date(tokens: Sequence[Token]) -> Optional[Constant]:
    try:
        return date(dt.date.fromisoformat(tokens[0].surface))
    except ValueError:
        return None


def _make_date(year: str, month_name: str, day: str) -> Optional[Constant]:
    month = _MONTHS.get(month_name.lower())
    if month is None:
        return None
    try:
        return date(dt.date(int(year), month, int(day)))
    except ValueError:
        return None


def _parse_month_day_year(tokens: Sequence[Token]) -> Optional[Constant]:
    return _make_date(tokens[3].surface, tokens[0].surface, tokens[1].surface)


def _parse_day_month_year(tokens: Sequence[Token]) -> Optional[Constant]:
    return _make_date(tokens[2].surface, tokens[1].surface, tokens[0].surface)


def _parse_quoted(tokens: Sequence[Token]) -> Optional[Constant]:
    surface = tokens[0].surface
    if len(surface) < 2:
        return None
    return text(surface[1:-1])


VALUE_PARSERS: dict[str, Callable[[Sequence[Token]], Optional[Constant]]] = {
    "decimal": _parse_decimal,
    "iso_date": _parse_iso_date,
    "month_day_year": _parse_month_day_year,
    "day_month_year": _parse_day_month_year,
    "quoted_text": _parse_quoted,
}


def default_registry() -> tuple[GrammarRule, ...]:
    return (
        GrammarRule("number", "token", _NUMBER_PAT, LEX_NUMBER, "decimal"),
        GrammarRule("quoted_text", "quoted", "-", LEX_TEXT, "quoted_text"),
        GrammarRule("iso_date", "token", _ISO_DATE_PAT, LEX_DATE, "iso_date"),
        GrammarRule(
            "month_day_year",
            "seq",
            rf"({_MONTH_ALT}) \d{{1,2}} , \d{{4}}",
            LEX_DATE,
            "month_day_year",
        ),
        GrammarRule(
            "day_month_year",
            "seq",
            rf"\d{{1,2}} ({_MONTH_ALT}) \d{{4}}",
            LEX_DATE,
            "day_month_year",
        ),
    )


def load_registry(content: str) -> tuple[GrammarRule, ...]:
    """Registry file: name<TAB>kind<TAB>pattern<TAB>lex_type<TAB>value_format."""
    rules = []
    for line_no, line in enumerate(content.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if len(cols) != 5:
            raise ValueError(f"grammar registry: line {line_no}: expected 5 columns")
        rules.append(GrammarRule(*[c.strip() for c in cols]))
    return tuple(rules)


def _rule_match_at(
    rule: GrammarRule, tokens: Sequence[Token], pos: int
) -> Optional[GrammarMatch]:
    if rule.kind == "quoted":
        tok = tokens[pos]
        if not tok.is_quoted:
            return None
        window = [tok]
    else:
        patterns = rule.token_patterns()
        if pos + len(patterns) > len(tokens):
            return None
        window = list(tokens[pos : pos + len(patterns)])
        for pattern, tok in zip(patterns, window):
            if tok.is_quoted or not pattern.fullmatch(tok.surface):
                return None
    value = VALUE_PARSERS[rule.value_format](window)
    if value is None:
        return None
    return GrammarMatch(
        start=window[0].start,
        end=window[-1].end,
        token_start=pos,
        token_end=pos + len(window),
        lex_type=rule.lex_type,
        value=value,
        rule=rule.name,
    )


def run_grammars(
    tokens: Sequence[Token], registry: Iterable[GrammarRule]
) -> list[GrammarMatch]:
    """All maximal non-overlapping matches per rule, ordered by offset.

    Matches from different rules may overlap; overlap resolution happens
    downstream.  Candidate spans whose value fails to parse are skipped.
    """
    matches: list[GrammarMatch] = []
    for rule in registry:
        pos = 0
        while pos < len(tokens):
            m = _rule_match_at(rule, tokens, pos)
            if m is None:
                pos += 1
            else:
                matches.append(m)
                pos = m.token_end
    return sorted(matches, key=lambda m: (m.start, m.end, m.rule))
