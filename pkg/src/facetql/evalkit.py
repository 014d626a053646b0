"""Extraction-quality metrics against gold annotations.

Predictions and gold annotations are (value, database type) pairs per
query.  Metrics are computed per database type in exact rational
arithmetic, with a support-weighted average row, and rendered as an
aligned table or structured records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

Pair = tuple[str, str]  # (canonical value, db_type)
WEIGHTED_ROW = "Weighted avg."


class EmptyCorpusError(ValueError):
    """Metrics over an empty corpus are undefined."""


@dataclass(frozen=True)
class GoldAnnotation:
    text: str
    expected: frozenset[Pair]

    def __post_init__(self):
        if len({p for p in self.expected}) != len(self.expected):
            raise ValueError("gold pairs must be unique per query")


@dataclass(frozen=True)
class TypeMetrics:
    precision: Fraction
    recall: Fraction
    f1: Fraction
    support: int
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass(frozen=True)
class Metrics:
    by_type: Mapping[str, TypeMetrics]
    weighted: TypeMetrics

    def types(self) -> list[str]:
        return sorted(self.by_type)


def _type_metrics(tp: int, fp: int, fn: int, support: int) -> TypeMetrics:
    precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else Fraction(0)
    )
    return TypeMetrics(precision, recall, f1, support, tp, fp, fn)


def evaluate_corpus(
    corpus: Sequence[GoldAnnotation],
    predict: Callable[[str], Iterable[Pair]],
) -> Metrics:
    """Score a prediction function over a gold corpus.

    A predicted pair is a true positive when the gold set of the same
    query holds the identical (value, db_type) pair.  Support is the gold
    count per type; types predicted but absent from gold are surfaced
    with support 0.
    """
    if not corpus:
        raise EmptyCorpusError("cannot evaluate an empty corpus")
    tallies: dict[str, list[int]] = {}  # db_type -> [tp, fp, fn]

    def tally(db_type: str) -> list[int]:
        return tallies.setdefault(db_type, [0, 0, 0])

    supports: dict[str, int] = {}
    for item in corpus:
        predicted = frozenset(predict(item.text))
        for value, db_type in predicted & item.expected:
            tally(db_type)[0] += 1
        for value, db_type in predicted - item.expected:
            tally(db_type)[1] += 1
        for value, db_type in item.expected - predicted:
            tally(db_type)[2] += 1
        for _value, db_type in item.expected:
            supports[db_type] = supports.get(db_type, 0) + 1

    by_type = {
        db_type: _type_metrics(tp, fp, fn, supports.get(db_type, 0))
        for db_type, (tp, fp, fn) in tallies.items()
    }
    total_support = sum(supports.values())
    if total_support == 0:
        raise EmptyCorpusError("gold corpus contains no expected pairs")
    weighted = TypeMetrics(
        precision=sum(
            (m.precision * m.support for m in by_type.values()), Fraction(0)
        )
        / total_support,
        recall=sum((m.recall * m.support for m in by_type.values()), Fraction(0))
        / total_support,
        f1=sum((m.f1 * m.support for m in by_type.values()), Fraction(0))
        / total_support,
        support=total_support,
        tp=sum(m.tp for m in by_type.values()),
        fp=sum(m.fp for m in by_type.values()),
        fn=sum(m.fn for m in by_type.values()),
    )
    return Metrics(by_type=by_type, weighted=weighted)


def load_gold(content: str) -> list[GoldAnnotation]:
    """Gold corpus: one JSON record per line with `text` and `expected`
    (a list of {"value": ..., "dbtype": ...} objects)."""
    corpus = []
    for line_no, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            pairs = frozenset(
                (str(p["value"]), str(p["dbtype"])) for p in record["expected"]
            )
            corpus.append(GoldAnnotation(str(record["text"]), pairs))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"gold corpus: line {line_no}: {exc}") from None
    return corpus


def fmt(value: Fraction) -> str:
    return f"{float(value):.2f}"


def render_table(metrics: Metrics) -> str:
    """Aligned text table: one row per database type plus the weighted row."""
    rows = [(name, metrics.by_type[name]) for name in metrics.types()]
    rows.append((WEIGHTED_ROW, metrics.weighted))
    name_width = max(len("DBType"), max(len(name) for name, _ in rows))
    header = f"{'DBType':<{name_width}}  precision  recall  f1-score  support"
    lines = [header, "-" * len(header)]
    for name, m in rows:
        lines.append(
            f"{name:<{name_width}}  {fmt(m.precision):>9}  {fmt(m.recall):>6}"
            f"  {fmt(m.f1):>8}  {m.support:>7}"
        )
    return "\n".join(lines)


def to_records(metrics: Metrics) -> list[dict]:
    records = []
    for name in metrics.types() + [WEIGHTED_ROW]:
        m = metrics.weighted if name == WEIGHTED_ROW else metrics.by_type[name]
        records.append(
            {
                "dbtype": name,
                "precision": float(m.precision),
                "recall": float(m.recall),
                "f1": float(m.f1),
                "support": m.support,
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
            }
        )
    return records


def to_tsv(metrics: Metrics) -> str:
    lines = ["dbtype\tprecision\trecall\tf1\tsupport"]
    for rec in to_records(metrics):
        lines.append(
            f"{rec['dbtype']}\t{rec['precision']:.6f}\t{rec['recall']:.6f}"
            f"\t{rec['f1']:.6f}\t{rec['support']}"
        )
    return "\n".join(lines) + "\n"
