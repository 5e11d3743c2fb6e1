"""A mutually dark pair U, V at a level of the Ershov hierarchy.

Priority positions are ``6e + slot`` with slots
``F^U, F^V, Q^U, Q^V, P^U, P^V``.  ``P^U_e`` looks at ``W_e`` relative to
an initial segment of the characteristic function of U and collapses in V;
``P^V_e`` is the mirror image.

Every restraint string is an initial segment of the current characteristic
function of its relation, so it is stored as a length.  A requirement's
effective restraint is the maximum of its own length and the one inherited
from higher priority, which keeps restraints nested.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ershov.approximation import (
    RELATION, ApproxTrace, OracleMachine, TraceBuilder, cell, pair_code, unpair,
)
from ershov.constructions.common import SURROGATE_NOTE, Requirement, StageTrace
from ershov.constructions.dark import RelationState, bootstrap, check_level
from ershov.eqrel import Partition, collapse
from ershov.notation import Notation, Ordering, cmp

SLOTS = {("F", "U"): 0, ("F", "V"): 1, ("Q", "U"): 2, ("Q", "V"): 3,
         ("P", "U"): 4, ("P", "V"): 5}
OTHER = {"U": "V", "V": "U"}


@dataclass
class MutualConfig:
    level: Notation
    variant: str
    support: int
    stages: int
    opponents: list[ApproxTrace] = field(default_factory=list)
    machines_u: list[OracleMachine] = field(default_factory=list)
    machines_v: list[OracleMachine] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"level": self.level.to_json(), "variant": self.variant,
                "support": self.support, "stages": self.stages,
                "opponents": [o.to_json() for o in self.opponents],
                "oracle_machines_U": [m.to_json() for m in self.machines_u],
                "oracle_machines_V": [m.to_json() for m in self.machines_v]}


def mutual_requirements(cfg: MutualConfig) -> list[Requirement]:
    n = max(len(cfg.opponents), len(cfg.machines_u), len(cfg.machines_v))
    present = {
        "F": lambda e, side: True,
        "Q": lambda e, side: e < len(cfg.opponents),
        "P": lambda e, side: e < len(cfg.machines_u if side == "U" else cfg.machines_v),
    }
    reqs = []
    for e in range(n):
        for (kind, side), slot in sorted(SLOTS.items(), key=lambda kv: kv[1]):
            if present[kind](e, side):
                reqs.append(Requirement(kind, e, side, 6 * e + slot))
    return reqs


def char_bit(part: Partition, p: int) -> int:
    x, y = unpair(p)
    return int(part.related(x, y))


def cell_codes(z: int) -> tuple[int, int]:
    x, y = unpair(z)
    return pair_code(x, y), pair_code(y, x)


def uses_under(m: OracleMachine, part: Partition, stage: int) -> dict[int, int]:
    """Least use of an entry enumerating each element under the full char. function."""
    out: dict[int, int] = {}
    for ent in m.entries:
        if ent.stage > stage:
            continue
        if all(char_bit(part, p) == b for p, b in ent.query):
            out[ent.element] = min(out.get(ent.element, ent.use), ent.use)
    return out


def enumerated_within(m: OracleMachine, part: Partition, length: int, stage: int) -> set[int]:
    """W^sigma for sigma the initial segment of length ``length``."""
    return {ent.element for ent in m.entries
            if ent.stage <= stage and ent.use <= length
            and all(char_bit(part, p) == b for p, b in ent.query)}


def run_mutually_dark(cfg: MutualConfig) -> tuple[ApproxTrace, ApproxTrace, StageTrace]:
    check_level(cfg.level, cfg.variant)
    reqs = mutual_requirements(cfg)
    log = StageTrace("mutually-dark", cfg.to_json(), header={
        "surrogate": SURROGATE_NOTE,
        "flags": ["protection clause ranges over priority positions"],
    })
    rel = {S: RelationState(TraceBuilder(cfg.variant, cfg.level, RELATION, cfg.support), None)
           for S in ("U", "V")}
    log.log(0, None, "initialized", requirements=[r.to_json() for r in reqs])
    for S in ("U", "V"):
        rel[S].b.end_stage()
    for S in ("U", "V"):
        rel[S].part = bootstrap(rel[S].b, cfg.variant)
    log.log(1, None, "bootstrap", variant=cfg.variant)
    for S in ("U", "V"):
        rel[S].b.end_stage()

    witness: dict[Requirement, tuple[int, int] | None] = {r: None for r in reqs if r.kind == "Q"}
    own: dict[Requirement, dict[str, int] | None] = {r: None for r in reqs}
    mentioned = [0]

    def inherited(r: Requirement) -> dict[str, int]:
        out = {"U": 0, "V": 0}
        for q in reqs:
            if q.position < r.position and own[q] is not None:
                for S in out:
                    out[S] = max(out[S], own[q][S])
        return out

    def fresh(r: Requirement, floor: int) -> tuple[int, int] | None:
        i = max(mentioned[0], r.position) // 2 + 1
        while True:
            x, y = 2 * i, 2 * i + 1
            if y >= cfg.support:
                return None
            if pair_code(y, x) >= floor:
                return x, y
            i += 1

    def p_candidate(r: Requirement, stage: int, rminus: dict[str, int]):
        S, T = r.side, OTHER[r.side]
        m = (cfg.machines_u if S == "U" else cfg.machines_v)[r.index]
        src, dst = rel[S], rel[T]
        # inactive: a related pair already enumerated below the restraint
        below = enumerated_within(m, src.part, rminus[S], stage - 1)
        for u in below:
            for v in below:
                if u < v and dst.part.related(u, v) and \
                        max(pair_code(u, v), pair_code(v, u)) < rminus[T]:
                    return "inactive"
        uses = uses_under(m, src.part, stage)
        elems = sorted(x for x in uses if x < cfg.support)
        protected = set(range(r.position))
        for q, w in witness.items():
            if w is not None and q.side == T and q.position < r.position:
                protected.update(w)
        best = None
        for i, u in enumerate(elems):
            for v in elems[i + 1:]:
                if (u - v) % 2 or dst.part.related(u, v):
                    continue
                merged = dst.part.class_of(u) | dst.part.class_of(v)
                if merged & protected:
                    continue
                zs = dst.collapse_cells(u, v)
                if min(min(cell_codes(z)) for z in zs) < rminus[T]:
                    continue
                if not dst.can_collapse(u, v):
                    continue
                sig = max(rminus[S], uses[u], uses[v])
                tau = max(rminus[T], pair_code(u, v) + 1, pair_code(v, u) + 1)
                key = (sig, tau, u, v)
                if best is None or key[:2] < best[0][:2]:
                    best = (key, [key])
                elif key[:2] == best[0][:2]:
                    best[1].append(key)
        if best is None:
            return None
        # ties on lengths: compare the tau strings themselves
        scored = []
        for sig, tau, u, v in best[1]:
            after = collapse(dst.part, u, v)
            bits = tuple(char_bit(after, p) for p in range(tau))
            scored.append(((sig, tau, bits, u, v), (sig, tau, u, v)))
        return min(scored)[1]

    for stage in range(2, cfg.stages + 1):
        acted = None
        changed: dict[str, list[int]] = {"U": [], "V": []}
        stalled = []
        for r in reqs:
            if r.kind == "F":
                continue
            rminus = inherited(r)
            S = r.side
            if r.kind == "Q":
                opp = cfg.opponents[r.index]
                st = rel[S]
                w = witness[r]
                if w is None:
                    pair = fresh(r, rminus[S])
                    if pair is None:
                        stalled.append(r.name)
                        continue
                    witness[r] = pair
                    mentioned[0] = max(mentioned[0], *pair)
                    z = cell(*pair)
                    own[r] = {S: max(rminus[S], max(cell_codes(z)) + 1),
                              OTHER[S]: rminus[OTHER[S]]}
                    log.log(stage, r, "appointed", x=pair[0], y=pair[1], cell=z,
                            restraint=own[r])
                    acted = r
                    break
                z = cell(*w)
                if st.b.f(z) == opp.value(z, stage):
                    g = opp.gamma(z, stage)
                    if cmp(g, st.b.gamma(z)) is not Ordering.LESS:
                        stalled.append(r.name)
                        continue
                    new_f = 1 - opp.value(z, stage)
                    st.toggle(w[0], w[1], new_f, g)
                    changed[S].append(z)
                    own[r] = {S: max(rminus[S], max(cell_codes(z)) + 1),
                              OTHER[S]: rminus[OTHER[S]]}
                    log.log(stage, r, "diagonalized", x=w[0], y=w[1], cell=z, f=new_f,
                            gamma=g.to_json(), restraint=own[r])
                    acted = r
                    break
            else:
                if own[r] is not None:
                    continue
                found = p_candidate(r, stage, rminus)
                if found is None or found == "inactive":
                    continue
                sig, tau, u, v = found
                T = OTHER[S]
                zs = rel[T].do_collapse(u, v)
                mentioned[0] = max(mentioned[0], *rel[T].part.class_of(u))
                changed[T].extend(zs)
                own[r] = {S: sig, T: tau}
                log.log(stage, r, "collapsed", u=u, v=v, side=T, cells=zs,
                        sigma_len=sig, tau_len=tau)
                acted = r
                break
        if acted is None:
            log.log(stage, None, "idle", stalled=stalled)
        else:
            cancelled = []
            for q in reqs:
                if q.position <= acted.position:
                    continue
                if q.kind == "Q" and witness[q] is not None:
                    witness[q] = None
                    own[q] = None
                    cancelled.append(q.name)
                elif q.kind == "P" and own[q] is not None:
                    low = {S: min((min(cell_codes(z)) for z in changed[S]), default=None)
                           for S in ("U", "V")}
                    if any(low[S] is not None and low[S] < own[q][S] for S in ("U", "V")):
                        own[q] = None
                        cancelled.append(q.name)
            if cancelled:
                log.log(stage, acted, "initialized-others", cancelled=cancelled)
        for S in ("U", "V"):
            rel[S].b.end_stage()

    tu, tv = rel["U"].b.build(), rel["V"].b.build()
    log.final = {
        "relations": {S: rel[S].part.to_json() for S in ("U", "V")},
        "witnesses": {q.name: list(w) for q, w in witness.items() if w is not None},
        "restraints": {r.name: own[r] for r in reqs if own[r] is not None},
        "ticks": {"U": tu.budget, "V": tv.budget},
    }
    return tu, tv, log
