"""Stage-indexed approximating pairs and finite machine stand-ins.

An :class:`ApproxTrace` stores the pair ``<f, gamma>`` sparsely: a list of
change records ``(z, t, new_f, new_gamma)`` meaning that from tick ``t`` on
cell ``z`` has value ``new_f`` and counter ``new_gamma``.  Unrecorded cells
keep the initial value (0 for Sigma, 1 for Pi) and the counter ``level``.

For relation traces a cell is the Cantor code of an ordered pair ``(x, y)``
with ``x < y < support``; the diagonal is implicitly related and carries no
cell.  For set traces a cell is any index ``z < support``.
"""

from __future__ import annotations

import bisect
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from ershov.notation import Notation, cmp, Ordering, random_below

SIGMA = "Sigma"
PI = "Pi"
RELATION = "relation"
SET = "set"


def pair_code(x: int, y: int) -> int:
    return (x + y) * (x + y + 1) // 2 + y


def unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def cell(x: int, y: int) -> int:
    """Canonical cell of the unordered pair {x, y}, x != y."""
    if x == y:
        raise ValueError("diagonal pairs have no cell")
    return pair_code(min(x, y), max(x, y))


def relation_cells(support: int) -> Iterator[int]:
    for y in range(support):
        for x in range(y):
            yield pair_code(x, y)


@dataclass(frozen=True)
class Change:
    z: int
    t: int
    new_f: int
    new_gamma: Notation

    def to_json(self) -> dict:
        return {"z": self.z, "t": self.t, "new_f": self.new_f,
                "new_gamma": self.new_gamma.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> Change:
        return cls(int(d["z"]), int(d["t"]), int(d["new_f"]),
                   Notation.from_json(d["new_gamma"]))


@dataclass(frozen=True)
class ApproxTrace:
    kind: str
    level: Notation
    domain: str
    support: int
    budget: int
    changes: tuple[Change, ...] = ()
    # ticks at which construction stages end; empty means every tick
    checkpoints: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (SIGMA, PI):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.domain not in (RELATION, SET):
            raise ValueError(f"unknown domain {self.domain!r}")
        object.__setattr__(self, "changes", tuple(self.changes))
        object.__setattr__(self, "checkpoints", tuple(self.checkpoints))

    @property
    def initial(self) -> int:
        return 0 if self.kind == SIGMA else 1

    @cached_property
    def _history(self) -> dict[int, tuple[list[int], list[Change]]]:
        per: dict[int, list[Change]] = defaultdict(list)
        for ch in self.changes:
            per[ch.z].append(ch)
        out = {}
        for z, chs in per.items():
            chs.sort(key=lambda c: c.t)
            out[z] = ([c.t for c in chs], chs)
        return out

    def in_range(self, z: int) -> bool:
        if z < 0:
            return False
        if self.domain == SET:
            return z < self.support
        x, y = unpair(z)
        return x < y < self.support

    def _last(self, z: int, t: int) -> Change | None:
        h = self._history.get(z)
        if h is None:
            return None
        i = bisect.bisect_right(h[0], t)
        return h[1][i - 1] if i else None

    def value(self, z: int, t: int) -> int:
        """f(z, t); cells without records keep the initial value."""
        ch = self._last(z, t)
        return self.initial if ch is None else ch.new_f

    def gamma(self, z: int, t: int) -> Notation:
        ch = self._last(z, t)
        return self.level if ch is None else ch.new_gamma

    def related(self, x: int, y: int, t: int) -> bool:
        return x == y or self.value(cell(x, y), t) == 1

    def cells(self) -> Iterable[int]:
        if self.domain == SET:
            return range(self.support)
        return relation_cells(self.support)

    def touched(self) -> list[int]:
        return sorted(self._history)

    def stage_ticks(self) -> tuple[int, ...]:
        return self.checkpoints or tuple(range(self.budget + 1))

    def slice_at(self, t: int) -> set[tuple[int, int]]:
        """Off-diagonal pairs (x, y), x < y, with f = 1 at tick t."""
        if self.initial == 1:
            pairs = {(x, y) for y in range(self.support) for x in range(y)}
            for z in self._history:
                if self.value(z, t) == 0:
                    pairs.discard(unpair(z))
            return pairs
        return {unpair(z) for z in self._history if self.value(z, t) == 1}

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "level": self.level.to_json(),
            "domain": self.domain,
            "support": self.support,
            "budget": self.budget,
            "changes": [c.to_json() for c in self.changes],
            "checkpoints": list(self.checkpoints),
        }

    @classmethod
    def from_json(cls, d: dict) -> ApproxTrace:
        return cls(
            kind=d["kind"],
            level=Notation.from_json(d["level"]),
            domain=d.get("domain", SET),
            support=int(d["support"]),
            budget=int(d["budget"]),
            changes=tuple(Change.from_json(c) for c in d.get("changes", [])),
            checkpoints=tuple(int(t) for t in d.get("checkpoints", [])),
        )


@dataclass(frozen=True)
class Violation:
    rule: str
    z: int | None
    t: int | None
    detail: str

    def to_json(self) -> dict:
        return {"rule": self.rule, "z": self.z, "t": self.t, "detail": self.detail}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"pass": self.ok, "violations": [v.to_json() for v in self.violations]}


def validate(trace: ApproxTrace) -> ValidationReport:
    """Check the approximating-pair conditions up to the trace budget."""
    report = ValidationReport()
    bad = report.violations
    seen: set[tuple[int, int]] = set()
    flips_per_tick: dict[int, list[int]] = defaultdict(list)
    for ch in trace.changes:
        if not trace.in_range(ch.z):
            bad.append(Violation("index", ch.z, ch.t, "cell outside support"))
        if ch.t < 1:
            bad.append(Violation("initial", ch.z, ch.t, "records must start at tick 1"))
        if ch.t > trace.budget:
            bad.append(Violation("budget", ch.z, ch.t, f"tick beyond budget {trace.budget}"))
        if ch.new_f not in (0, 1):
            bad.append(Violation("bit", ch.z, ch.t, f"f value {ch.new_f}"))
        if (ch.z, ch.t) in seen:
            bad.append(Violation("duplicate", ch.z, ch.t, "two records for one cell and tick"))
        seen.add((ch.z, ch.t))
    for z, (_, chs) in trace._history.items():
        f, g = trace.initial, trace.level
        for ch in chs:
            order = cmp(ch.new_gamma, g)
            if order is Ordering.GREATER:
                bad.append(Violation("gamma-increase", z, ch.t,
                                     f"gamma {g} -> {ch.new_gamma}"))
            if ch.new_f != f:
                flips_per_tick[ch.t].append(z)
                if order is not Ordering.LESS:
                    bad.append(Violation("no-descent", z, ch.t,
                                         f"f changed {f}->{ch.new_f} with gamma {g} -> {ch.new_gamma}"))
            f, g = ch.new_f, ch.new_gamma
    for t in sorted(flips_per_tick):
        zs = flips_per_tick[t]
        if len(zs) > 1:
            bad.append(Violation("one-change", min(zs), t, f"cells {sorted(zs)} change together"))
    return report


def _check_index(trace: ApproxTrace, z: int) -> None:
    if not trace.in_range(z):
        raise IndexError(f"cell {z} outside support {trace.support}")


def mind_changes(trace: ApproxTrace, z: int) -> int:
    _check_index(trace, z)
    h = trace._history.get(z)
    if h is None:
        return 0
    count, f = 0, trace.initial
    for ch in h[1]:
        if ch.t > trace.budget:
            break
        if ch.new_f != f:
            count += 1
        f = ch.new_f
    return count


def limit_value(trace: ApproxTrace, z: int) -> int:
    _check_index(trace, z)
    return trace.value(z, trace.budget)


class TraceBuilder:
    """Mutable recorder that emits one record per tick."""

    def __init__(self, kind: str, level: Notation, domain: str, support: int) -> None:
        self.kind, self.level, self.domain, self.support = kind, level, domain, support
        self.initial = 0 if kind == SIGMA else 1
        self.tick = 0
        self._f: dict[int, int] = {}
        self._gamma: dict[int, Notation] = {}
        self.changes: list[Change] = []
        self.checkpoints: list[int] = []

    def f(self, z: int) -> int:
        return self._f.get(z, self.initial)

    def gamma(self, z: int) -> Notation:
        return self._gamma.get(z, self.level)

    def related(self, x: int, y: int) -> bool:
        return x == y or self.f(cell(x, y)) == 1

    def set(self, z: int, f: int, gamma: Notation) -> bool:
        """Record (f, gamma) for z at a fresh tick; returns False on a no-op."""
        if self.f(z) == f and self.gamma(z) == gamma:
            return False
        self.tick += 1
        self._f[z], self._gamma[z] = f, gamma
        self.changes.append(Change(z, self.tick, f, gamma))
        return True

    def end_stage(self) -> None:
        self.checkpoints.append(self.tick)

    def ones(self) -> set[int]:
        if self.initial == 1:
            raise ValueError("ones() is only cheap for Sigma builders")
        return {z for z, v in self._f.items() if v == 1}

    def build(self) -> ApproxTrace:
        return ApproxTrace(self.kind, self.level, self.domain, self.support,
                           self.tick, tuple(self.changes), tuple(self.checkpoints))


@dataclass(frozen=True)
class ClockedMachine:
    """Finite table x -> (output, convergence stage); absent inputs diverge."""

    entries: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries",
                           {int(x): (int(o), int(s)) for x, (o, s) in dict(self.entries).items()})

    def value(self, x: int, stage: int) -> int | None:
        hit = self.entries.get(x)
        if hit is None or hit[1] > stage:
            return None
        return hit[0]

    def enumerated(self, stage: int) -> set[int]:
        """W[stage]: inputs whose computation has converged by ``stage``."""
        return {x for x, (_, s) in self.entries.items() if s <= stage}

    def to_json(self) -> dict:
        return {"entries": [[x, o, s] for x, (o, s) in sorted(self.entries.items())]}

    @classmethod
    def from_json(cls, d: dict) -> ClockedMachine:
        return cls({int(x): (int(o), int(s)) for x, o, s in d.get("entries", [])})

    @classmethod
    def enumeration(cls, elements: dict[int, int]) -> ClockedMachine:
        """A machine enumerating each key at the given stage."""
        return cls({x: (0, s) for x, s in elements.items()})


@dataclass(frozen=True)
class OracleEntry:
    query: tuple[tuple[int, int], ...]
    element: int
    stage: int

    def fires(self, sigma: Sequence[int], stage: int) -> bool:
        if self.stage > stage:
            return False
        return all(p < len(sigma) and sigma[p] == b for p, b in self.query)

    @property
    def use(self) -> int:
        """Length of the shortest oracle string that can fire this entry."""
        return max((p + 1 for p, _ in self.query), default=0)


@dataclass(frozen=True)
class OracleMachine:
    entries: tuple[OracleEntry, ...] = ()

    def to_json(self) -> dict:
        return {"entries": [{"query": [[p, b] for p, b in e.query],
                             "element": e.element, "stage": e.stage}
                            for e in self.entries]}

    @classmethod
    def from_json(cls, d: dict) -> OracleMachine:
        return cls(tuple(
            OracleEntry(tuple((int(p), int(b)) for p, b in e.get("query", [])),
                        int(e["element"]), int(e["stage"]))
            for e in d.get("entries", [])))


def oracle_enumerate(m: OracleMachine, sigma: Sequence[int] | str, stage: int) -> set[int]:
    bits = [int(c) for c in sigma] if isinstance(sigma, str) else list(sigma)
    return {e.element for e in m.entries if e.fires(bits, stage)}


def _descent(level: Notation, rng: random.Random, limit: int) -> list[Notation]:
    chain, g = [], level
    while len(chain) < limit:
        nxt = random_below(g, rng)
        if nxt is None:
            break
        chain.append(nxt)
        g = nxt
    return chain


def opponent_family(seed: int, count: int, kind: str, level: Notation, support: int,
                    budget: int, domain: str = RELATION,
                    focus: Sequence[int] | None = None,
                    max_cells: int = 6, max_changes: int = 4) -> list[ApproxTrace]:
    """Seed-reproducible valid traces; the first one never changes.

    ``focus`` lists preferred cells (for example the codes of likely
    witness pairs) so that random opponents actually contest them.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = random.Random(seed)
    probe = ApproxTrace(kind, level, domain, support, budget)
    universe = [z for z in probe.cells()]
    preferred = [z for z in (focus or ()) if probe.in_range(z)]
    out = [probe]
    initial = probe.initial
    for _ in range(count - 1):
        n_cells = rng.randint(1, max_cells)
        pool = preferred if preferred and rng.random() < 0.7 else universe
        if not pool:
            out.append(probe)
            continue
        chosen = sorted(set(rng.choice(pool) for _ in range(n_cells)))
        plans = []
        for z in chosen:
            chain = _descent(level, rng, rng.randint(1, max_changes))
            plans.append((z, chain))
        total = sum(len(c) for _, c in plans)
        if total > budget:
            plans, total = [], 0
        ticks = sorted(rng.sample(range(1, budget + 1), total)) if total else []
        # interleave: deal ticks to cells in random order but keep each cell's ticks increasing
        owners = [z for z, chain in plans for _ in chain]
        rng.shuffle(owners)
        per_cell: dict[int, list[int]] = defaultdict(list)
        for t, z in zip(ticks, owners):
            per_cell[z].append(t)
        changes = []
        for z, chain in plans:
            f = initial
            for t, g in zip(per_cell[z], chain):
                f = 1 - f
                changes.append(Change(z, t, f, g))
        changes.sort(key=lambda c: (c.t, c.z))
        out.append(ApproxTrace(kind, level, domain, support, budget, tuple(changes)))
    return out
