"""Ordinal notations below omega^omega in Cantor normal form.

A notation is a tuple of ``(exponent, coefficient)`` terms with strictly
decreasing exponents and positive coefficients, read as
``omega^e0 * c0 + omega^e1 * c1 + ...``.  The empty tuple is ordinal 0.
Every ordinal below omega^omega has exactly one such notation, so the
order is decidable and equality is structural.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from functools import total_ordering
from typing import Iterable, Sequence


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@total_ordering
@dataclass(frozen=True)
class Notation:
    terms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        terms = tuple((int(e), int(c)) for e, c in self.terms)
        for i, (e, c) in enumerate(terms):
            if e < 0:
                raise ValueError(f"negative exponent in {terms!r}")
            if c < 1:
                raise ValueError(f"coefficient must be positive, got {c}")
            if i and terms[i - 1][0] <= e:
                raise ValueError(f"exponents must strictly decrease: {terms!r}")
        object.__setattr__(self, "terms", terms)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, Notation):
            return NotImplemented
        return cmp(self, other) is Ordering.LESS

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_finite(self) -> bool:
        return not self.terms or self.terms[0][0] == 0

    @property
    def finite_value(self) -> int:
        if not self.is_finite:
            raise ValueError(f"{self} is infinite")
        return self.terms[0][1] if self.terms else 0

    def to_json(self) -> list[list[int]]:
        return [[e, c] for e, c in self.terms]

    @classmethod
    def from_json(cls, data: Iterable[Sequence[int]]) -> Notation:
        return cls(tuple((int(e), int(c)) for e, c in data))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            if e == 0:
                parts.append(str(c))
                continue
            base = "ω" if e == 1 else f"ω^{e}"
            parts.append(base if c == 1 else f"{base}·{c}")
        return "+".join(parts)


def cmp(a: Notation, b: Notation) -> Ordering:
    """Compare two notations in ordinal order."""
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        if ea != eb:
            return Ordering.GREATER if ea > eb else Ordering.LESS
        if ca != cb:
            return Ordering.GREATER if ca > cb else Ordering.LESS
    if len(a.terms) == len(b.terms):
        return Ordering.EQUAL
    return Ordering.GREATER if len(a.terms) > len(b.terms) else Ordering.LESS


def fin(n: int) -> Notation:
    if n < 0:
        raise ValueError("finite notations are for naturals")
    return Notation(((0, n),)) if n else Notation()


def omega(k: int = 1) -> Notation:
    """omega * k."""
    return Notation(((1, k),))


ZERO = Notation()


def successor(a: Notation) -> Notation:
    if a.terms and a.terms[-1][0] == 0:
        return Notation(a.terms[:-1] + ((0, a.terms[-1][1] + 1),))
    return Notation(a.terms + ((0, 1),))


def predecessor(a: Notation) -> Notation:
    """a - 1 for successor notations; raises for 0 and limits."""
    if not a.terms or a.terms[-1][0] != 0:
        raise ValueError(f"{a} has no immediate predecessor")
    c = a.terms[-1][1]
    return Notation(a.terms[:-1] + (((0, c - 1),) if c > 1 else ()))


def random_below(a: Notation, rng: random.Random, max_coef: int = 4) -> Notation | None:
    """A pseudo-random notation strictly below ``a``, or None when ``a`` is 0."""
    if a.is_zero:
        return None
    k = rng.randrange(len(a.terms))
    e, c = a.terms[k]
    head = list(a.terms[:k])
    new_c = rng.randrange(c)
    if new_c:
        head.append((e, new_c))
    # below omega^e we may append any tail with smaller exponents
    if e > 0 and rng.random() < 0.7:
        exps = sorted(rng.sample(range(e), rng.randint(1, e)), reverse=True)
        head.extend((x, rng.randint(1, max_coef)) for x in exps)
    return Notation(tuple(head))


def descent_length_bound(a: Notation) -> int | None:
    """Longest strictly decreasing chain starting at a finite ``a`` (counting ``a``)."""
    return a.finite_value + 1 if a.is_finite else None
