"""Local grammars: numbers, quoted text, dates."""

from __future__ import annotations

import datetime as dt
import random

from facetql.grammar import (
    GrammarRule,
    default_registry,
    load_registry,
    run_grammars,
)
from facetql.logic import date, number, parse_constant, render_constant, text
from facetql.parse import tokenize


def _matches(text_in: str):
    return run_grammars(tokenize(text_in), default_registry())


def test_number_detection():
    [m] = [m for m in _matches("less than 30 dollars") if m.lex_type == "Number"]
    assert m.value == number(30)
    assert "less than 30 dollars"[m.start : m.end] == "30"


def test_quoted_text_detection():
    [m] = _matches('"Principles of Medicine"')
    assert m.lex_type == "Text"
    assert m.value == text("Principles of Medicine")


def test_quote_styles_and_exclusion():
    for raw in ('"Anatomy Atlas"', "'Anatomy Atlas'", "“Anatomy Atlas”", "‘Anatomy Atlas’"):
        [m] = _matches(raw)
        assert m.value == text("Anatomy Atlas"), raw


def test_iso_date_detection():
    ms = _matches("published after 2018-05-01")
    dates = [m for m in ms if m.lex_type == "Date"]
    assert [m.value for m in dates] == [date(dt.date(2018, 5, 1))]


def test_month_name_dates():
    ms = _matches("between May 3, 2019 and 7 June 2021")
    got = {m.value for m in ms if m.lex_type == "Date"}
    assert got == {date(dt.date(2019, 5, 3)), date(dt.date(2021, 6, 7))}


def test_invalid_dates_skipped():
    assert not [m for m in _matches("code 2018-13-40 here") if m.lex_type == "Date"]
    assert not [m for m in _matches("February 31, 2019") if m.lex_type == "Date"]


def test_offsets_align_with_tokens():
    src = 'Find 3 books titled "X" from 12 May 2018 under 9.50'
    tokens = tokenize(src)
    starts = {t.start for t in tokens}
    ends = {t.end for t in tokens}
    for m in run_grammars(tokens, default_registry()):
        assert 0 <= m.start < m.end <= len(src)
        assert m.start in starts and m.end in ends


def test_number_round_trip():
    rng = random.Random(4)
    values = [0, 7, -3, 12345, 2.5, -0.75, 1000.125] + [
        rng.randint(-10**6, 10**6) for _ in range(20)
    ]
    for v in values:
        rendered = render_constant(number(v))
        assert parse_constant(rendered) == number(v)


def test_determinism():
    src = "published after May 3, 2019 under 30"
    tokens = tokenize(src)
    first = run_grammars(tokens, default_registry())
    for _ in range(3):
        assert run_grammars(tokens, default_registry()) == first


def test_registry_file_matches_default(demo_workspace):
    assert demo_workspace.registry == default_registry()


def test_registry_load_and_extension():
    content = "year\ttoken\t(19|20)\\d{2}\tNumber\tdecimal\n"
    [rule] = load_registry(content)
    assert rule == GrammarRule("year", "token", r"(19|20)\d{2}", "Number", "decimal")
    [m] = run_grammars(tokenize("in 1999"), [rule])
    assert m.value == number(1999)
