"""Built-in symbols with their closed forms and expected verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .funcspace import DifferentiableFunction


@dataclass(frozen=True)
class Entry:
    name: str
    text: str
    singularities: tuple[float, ...]
    closed_form: Callable[[float], float]
    w0: str
    full: str
    domain: tuple[float, float] = (0.0, 1.0)

    def function(self) -> DifferentiableFunction:
        return DifferentiableFunction.from_expr(self.text, self.singularities, self.name)


def _semi(x):
    return math.sqrt(0.25 - (x - 0.5) ** 2)


ENTRIES = (
    Entry("sine", "sin(1/x)", (0.0,), lambda x: math.sin(1 / x), "yes", "no", (0.0, 1.0)),
    Entry("pole", "1/x", (0.0,), lambda x: 1 / x, "yes", "no"),
    Entry("essential", "exp(1/x)", (0.0,), lambda x: math.exp(1 / x), "yes", "no"),
    Entry("semicircle", "sqrt(1/4-(x-1/2)^2)", (0.0, 1.0), _semi, "yes", "no"),
    Entry("bubble", "x*(1-x)", (), lambda x: x * (1 - x), "yes", "yes"),
    Entry("cubic-bubble", "x^2*(1-x)", (), lambda x: x * x * (1 - x), "yes", "yes"),
    Entry("zero", "0", (), lambda x: 0.0, "yes", "yes"),
    Entry("one", "1", (), lambda x: 1.0, "yes", "yes"),
    Entry("x", "x", (), lambda x: x, "yes", "yes"),
    Entry("x^2", "x^2", (), lambda x: x * x, "yes", "yes"),
)

CATALOG = {e.name: e for e in ENTRIES}


def lookup(name: str) -> Entry:
    """Exact name, or the unique entry whose expression text matches."""
    if name in CATALOG:
        return CATALOG[name]
    hits = [e for e in ENTRIES if e.text == name]
    if len(hits) != 1:
        raise KeyError(f"unknown catalog entry {name!r}; choose from {', '.join(CATALOG)}")
    return hits[0]
