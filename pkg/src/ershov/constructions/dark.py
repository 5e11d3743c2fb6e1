"""Properly dark relations at a level of the Ershov hierarchy.

Requirements, in priority order ``F_0 < Q_0 < P_0 < F_1 < ...``:

* ``F_e``: the class of ``e`` is finite (a restraint only, never acts);
* ``Q_e``: the relation differs from opponent ``E_e`` at a witness pair;
* ``P_e``: enumeration ``W_e`` is not an infinite transversal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ershov.approximation import (
    PI, RELATION, SIGMA, ApproxTrace, ClockedMachine, TraceBuilder, cell, pair_code,
)
from ershov.constructions.common import (
    SURROGATE_NOTE, PreconditionError, Requirement, StageTrace,
)
from ershov.eqrel import Partition, collapse, id_rel, split
from ershov.notation import ZERO, Notation, Ordering, cmp, fin

SLOT = {"F": 0, "Q": 1, "P": 2}


@dataclass
class DarkConfig:
    level: Notation
    variant: str
    support: int
    stages: int
    opponents: list[ApproxTrace] = field(default_factory=list)
    machines: list[ClockedMachine] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"level": self.level.to_json(), "variant": self.variant,
                "support": self.support, "stages": self.stages,
                "opponents": [o.to_json() for o in self.opponents],
                "machines": [m.to_json() for m in self.machines]}


def dark_requirements(n_opponents: int, n_machines: int) -> list[Requirement]:
    reqs = []
    for e in range(max(n_opponents, n_machines)):
        reqs.append(Requirement("F", e, "single", 3 * e + SLOT["F"]))
        if e < n_opponents:
            reqs.append(Requirement("Q", e, "single", 3 * e + SLOT["Q"]))
        if e < n_machines:
            reqs.append(Requirement("P", e, "single", 3 * e + SLOT["P"]))
    return reqs


def check_level(level: Notation, variant: str) -> None:
    if variant not in (SIGMA, PI):
        raise PreconditionError(f"unknown variant {variant!r}")
    if variant == PI and cmp(level, fin(1)) is not Ordering.GREATER:
        raise PreconditionError("the Pi variant needs a level above 1")
    if level.is_zero:
        raise PreconditionError("level 0 admits no approximating pair for a relation")


def bootstrap(b: TraceBuilder, variant: str) -> Partition:
    """Stage 1: Id for Sigma; Id plus the pairs {2i, 2i+1} for Pi."""
    n = b.support
    if variant == SIGMA:
        return id_rel(n)
    pairs = []
    for y in range(n):
        for x in range(y):
            if x % 2 == 0 and y == x + 1:
                pairs.append((x, y))
            else:
                b.set(cell(x, y), 0, fin(1))
    return Partition.from_pairs(n, pairs)


class RelationState:
    """Relation under construction: the trace builder plus its current partition."""

    def __init__(self, builder: TraceBuilder, part: Partition) -> None:
        self.b = builder
        self.part = part
        self.mentioned = 0

    def mention(self, *xs: int) -> None:
        self.mentioned = max(self.mentioned, *xs)

    def threshold(self, bound: int) -> int:
        """Largest number in the classes of i <= bound."""
        top = bound
        for i in range(min(bound, self.part.support - 1) + 1):
            top = max(top, max(self.part.class_of(i)))
        return top

    def collapse_cells(self, u: int, v: int) -> list[int]:
        return [cell(x, y) for x in self.part.class_of(u) for y in self.part.class_of(v)]

    def can_collapse(self, u: int, v: int) -> bool:
        return all(not self.b.gamma(z).is_zero for z in self.collapse_cells(u, v))

    def do_collapse(self, u: int, v: int) -> list[int]:
        zs = self.collapse_cells(u, v)
        for z in sorted(zs):
            self.b.set(z, 1, ZERO)
        self.part = collapse(self.part, u, v)
        return sorted(zs)

    def toggle(self, x: int, y: int, f: int, gamma: Notation) -> None:
        self.b.set(cell(x, y), f, gamma)
        if f == 1 and not self.part.related(x, y):
            self.part = collapse(self.part, x, y)
        elif f == 0 and self.part.related(x, y):
            self.part = split(self.part, y)


def fresh_pair(state: RelationState, floor: int) -> tuple[int, int] | None:
    i = max(state.mentioned, floor) // 2 + 1
    x, y = 2 * i, 2 * i + 1
    if y >= state.b.support:
        return None
    return x, y


def find_p_pair(state: RelationState, elems: set[int], bound: int) -> tuple[int, int] | None:
    top = state.threshold(bound)
    cand = sorted(x for x in elems if top < x < state.b.support)
    best = None
    for i, u in enumerate(cand):
        for v in cand[i + 1:]:
            if (u - v) % 2 or state.part.related(u, v):
                continue
            if not state.can_collapse(u, v):
                continue
            if best is None or pair_code(u, v) < pair_code(*best):
                best = (u, v)
    return best


def has_related_pair(part: Partition, elems: set[int]) -> tuple[int, int] | None:
    seen: dict[int, int] = {}
    for x in sorted(elems):
        r = part.rep(x)
        if r in seen:
            return seen[r], x
        seen[r] = x
    return None


def run_dark(cfg: DarkConfig) -> tuple[ApproxTrace, StageTrace]:
    check_level(cfg.level, cfg.variant)
    reqs = dark_requirements(len(cfg.opponents), len(cfg.machines))
    log = StageTrace("dark", cfg.to_json(), header={"surrogate": SURROGATE_NOTE})
    b = TraceBuilder(cfg.variant, cfg.level, RELATION, cfg.support)
    witness: dict[int, tuple[int, int] | None] = {r.index: None for r in reqs if r.kind == "Q"}

    log.log(0, None, "initialized", requirements=[r.to_json() for r in reqs])
    b.end_stage()
    state = RelationState(b, bootstrap(b, cfg.variant))
    log.log(1, None, "bootstrap", variant=cfg.variant, cells=b.tick)
    b.end_stage()

    def bound_for(e: int) -> int:
        top = e
        for j, w in witness.items():
            if j <= e and w is not None:
                top = max(top, w[0] + w[1])
        return top

    for stage in range(2, cfg.stages + 1):
        s = stage - 1
        acted = None
        stalled = []
        for r in reqs:
            if r.kind == "F":
                continue
            e = r.index
            if r.kind == "Q":
                opp = cfg.opponents[e]
                w = witness[e]
                if w is None:
                    pair = fresh_pair(state, e)
                    if pair is None:
                        stalled.append(r.name)
                        continue
                    witness[e] = pair
                    state.mention(*pair)
                    z = cell(*pair)
                    log.log(stage, r, "appointed", x=pair[0], y=pair[1], cell=z,
                            f=b.f(z), opponent_f=opp.value(z, stage))
                    acted = r
                    break
                z = cell(*w)
                if b.f(z) == opp.value(z, stage):
                    g = opp.gamma(z, stage)
                    if cmp(g, b.gamma(z)) is not Ordering.LESS:
                        stalled.append(r.name)
                        continue
                    new_f = 1 - opp.value(z, stage)
                    state.toggle(w[0], w[1], new_f, g)
                    log.log(stage, r, "diagonalized", x=w[0], y=w[1], cell=z,
                            f=new_f, gamma=g.to_json())
                    acted = r
                    break
            else:
                m = cfg.machines[e]
                if has_related_pair(state.part, m.enumerated(s)) is not None:
                    continue
                pair = find_p_pair(state, m.enumerated(stage), bound_for(e))
                if pair is None:
                    continue
                u, v = pair
                zs = state.do_collapse(u, v)
                state.mention(*state.part.class_of(u))
                log.log(stage, r, "collapsed", u=u, v=v, cells=zs)
                acted = r
                break
        if acted is None:
            log.log(stage, None, "idle", stalled=stalled)
        else:
            lower = [q for q in reqs if q.kind == "Q" and q.position > acted.position
                     and witness[q.index] is not None]
            for q in lower:
                witness[q.index] = None
            if lower:
                log.log(stage, acted, "initialized-others", cancelled=[q.name for q in lower])
        b.end_stage()

    trace = b.build()
    log.final = {
        "relations": {"R": state.part.to_json()},
        "witnesses": {str(e): list(w) for e, w in sorted(witness.items()) if w is not None},
        "restraints": {},
        "ticks": trace.budget,
    }
    return trace, log
