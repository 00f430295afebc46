"""Threshold filters applied to a Pareto set after exploration.

A filter expression is a ``;``-separated conjunction of clauses of the form
``<metric> <op> <number>``::

    snr_db >= 30; area_per_bit <= 3000; B_adc = 3
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import ParseError, ValidationError
from .explorer import ParetoEntry, ParetoSet

PERFORMANCE_METRICS = ("snr_db", "throughput", "energy_per_op", "area_per_bit")
POINT_METRICS = ("H", "W", "L", "B_adc")
METRICS = PERFORMANCE_METRICS + POINT_METRICS

_OPS: dict[str, tuple[str, Callable[[float, float], bool]]] = {
    ">=": (">=", operator.ge),
    "≥": (">=", operator.ge),
    "<=": ("<=", operator.le),
    "≤": ("<=", operator.le),
    "=": ("=", operator.eq),
    "==": ("=", operator.eq),
}
_COMPARE = {">=": operator.ge, "<=": operator.le, "=": operator.eq}

_TOKEN = re.compile(r"\s*(?:(?P<op>>=|<=|==|=|≥|≤)|(?P<sep>;)|(?P<word>[^\s;<>=≥≤]+)|(?P<bad>\S))")


@dataclass(frozen=True)
class Clause:
    metric: str
    op: str
    bound: float

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric '{self.metric}'")
        if self.op not in _COMPARE:
            raise ValidationError(f"unknown comparator '{self.op}'")

    def holds(self, entry: ParetoEntry) -> bool:
        return _COMPARE[self.op](metric_value(entry, self.metric), self.bound)

    def __str__(self) -> str:
        return f"{self.metric} {self.op} {self.bound!r}"


@dataclass(frozen=True)
class FilterSpec:
    clauses: tuple[Clause, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.clauses)

    def accepts(self, entry: ParetoEntry) -> bool:
        return all(c.holds(entry) for c in self.clauses)

    def __and__(self, other: "FilterSpec") -> "FilterSpec":
        return FilterSpec(self.clauses + other.clauses)

    def __str__(self) -> str:
        return "; ".join(str(c) for c in self.clauses)


def metric_value(entry: ParetoEntry, metric: str) -> float:
    if metric in POINT_METRICS:
        return getattr(entry.point, metric)
    return getattr(entry.performance, metric)


def _tokens(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # only trailing whitespace left
            break
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return out


def _number(token: str, position: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"malformed number '{token}'", token, position) from None
    if math.isnan(value):
        raise ParseError(f"malformed number '{token}'", token, position)
    return value


def parse_filter(text: str) -> FilterSpec:
    """Parse a filter expression; the empty string accepts everything."""
    toks = _tokens(text)
    clauses: list[Clause] = []
    i = 0
    end = len(text)

    def expect(kind: str, what: str) -> tuple[str, int]:
        nonlocal i
        if i >= len(toks):
            raise ParseError(f"expected {what} at end of input", "", end)
        k, value, pos = toks[i]
        if k != kind:
            raise ParseError(f"expected {what}, found '{value}'", value, pos)
        i += 1
        return value, pos

    while i < len(toks):
        if toks[i][0] == "bad":
            _, value, pos = toks[i]
            raise ParseError(f"unexpected character '{value}'", value, pos)
        metric, pos = expect("word", "metric")
        if metric not in METRICS:
            raise ParseError(f"unknown metric '{metric}'", metric, pos)
        op, _ = expect("op", "comparator")
        raw, pos = expect("word", "number")
        clauses.append(Clause(metric, _OPS[op][0], _number(raw, pos)))
        if i < len(toks):
            expect("sep", "';'")
            if i >= len(toks):
                raise ParseError("expected clause after ';'", "", end)
    return FilterSpec(tuple(clauses))


def apply_filter(pareto: ParetoSet | Iterable[ParetoEntry], spec: FilterSpec) -> ParetoSet:
    """Keep the entries satisfying every clause, in their original order."""
    entries = pareto.entries if isinstance(pareto, ParetoSet) else list(pareto)
    return ParetoSet([e for e in entries if spec.accepts(e)])
