"""An omega-c.e. pair U, V built from equivalence strings.

Priority positions are ``6e + slot`` with slots
``F^V, F^U, P^V, P^U, I^{UV}, I^{VU}``.  A requirement's restraints are
equivalence strings extending those it inherits from the requirement just
above it; after every action the approximations become the relations coded
by the acting requirement's strings and everything below is initialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ershov.approximation import (
    RELATION, SIGMA, ApproxTrace, ClockedMachine, OracleMachine, TraceBuilder, cell,
    pair_code, unpair,
)
from ershov.constructions.common import (
    SURROGATE_NOTE, Requirement, StageTrace, apply_partition,
)
from ershov.eqrel import Partition, id_rel
from ershov.notation import Notation, fin, omega

SLOTS = [("F", "V"), ("F", "U"), ("P", "V"), ("P", "U"), ("I", "UV"), ("I", "VU")]


@dataclass(frozen=True)
class EqString:
    """Equivalence string of length ``length`` coding ``rel``.

    Bits at diagonal codes are 1; every related off-diagonal pair has both
    codes below ``length``.
    """

    rel: Partition
    length: int

    def bit(self, p: int) -> int | None:
        if p >= self.length:
            return None
        x, y = unpair(p)
        return int(self.rel.related(x, y))

    def bits(self) -> tuple[int, ...]:
        return tuple(self.bit(p) for p in range(self.length))

    def to_json(self) -> dict:
        return {"length": self.length, "rel": self.rel.to_json()}


def pair_top(x: int, y: int) -> int:
    return max(pair_code(x, y), pair_code(y, x))


def least_extension(base: EqString, min_len: int = 0, force1=(), force0=()) -> EqString | None:
    """Least equivalence string extending ``base`` with the forced bits, or None."""
    rel = base.rel
    n = rel.support
    pairs = set(rel.pairs())
    for x, y in force1:
        if x == y:
            continue
        if max(x, y) >= n:
            return None
        pairs.add((min(x, y), max(x, y)))
    new = Partition.from_pairs(n, pairs)
    length = max(base.length, min_len)
    for x, y in new.pairs():
        if not rel.related(x, y) and min(pair_code(x, y), pair_code(y, x)) < base.length:
            return None
        length = max(length, pair_top(x, y) + 1)
    for x, y in force0:
        if x == y or new.related(x, y):
            return None
        length = max(length, pair_top(x, y) + 1)
    return EqString(new, length)


@dataclass
class OmegaConfig:
    support: int
    stages: int
    machines_u: list[OracleMachine] = field(default_factory=list)
    machines_v: list[OracleMachine] = field(default_factory=list)
    reductions: list[ClockedMachine] = field(default_factory=list)
    requirements: int = 0

    @property
    def groups(self) -> int:
        return max(self.requirements, len(self.machines_u), len(self.machines_v),
                   len(self.reductions))

    def to_json(self) -> dict:
        return {"support": self.support, "stages": self.stages,
                "oracle_machines_U": [m.to_json() for m in self.machines_u],
                "oracle_machines_V": [m.to_json() for m in self.machines_v],
                "reduction_machines": [m.to_json() for m in self.reductions],
                "requirements": self.requirements}


def omega_requirements(groups: int) -> list[Requirement]:
    return [Requirement(kind, e, side, 6 * e + k)
            for e in range(groups) for k, (kind, side) in enumerate(SLOTS)]


def f_position_above(u: int) -> int:
    """Least priority position of an F-requirement exceeding u."""
    q, r = divmod(u, 6)
    return 6 * q + 1 if r == 0 else 6 * (q + 1)


def cell_exponent(z: int) -> int:
    x, y = unpair(z)
    return f_position_above(min(pair_code(x, y), pair_code(y, x)))


def change_bound(z: int) -> int:
    return 2 ** cell_exponent(z)


def run_omega_pair(cfg: OmegaConfig) -> tuple[ApproxTrace, ApproxTrace, StageTrace]:
    reqs = omega_requirements(cfg.groups)
    n = cfg.support
    log = StageTrace("omega-pair", cfg.to_json(), header={"surrogate": SURROGATE_NOTE})
    build = {S: TraceBuilder(SIGMA, omega(), RELATION, n) for S in ("U", "V")}
    counts = {S: {} for S in ("U", "V")}
    empty = EqString(id_rel(n), 0)
    strings: list[dict[str, EqString] | None] = [None] * len(reqs)
    witness: list[int | None] = [None] * len(reqs)
    acted_since_init = [False] * len(reqs)
    mentioned = [0]

    def gamma_for(S: str):
        def g(z: int, _new_f: int) -> Notation:
            k = counts[S].get(z, 0)
            counts[S][z] = k + 1
            return fin(max(change_bound(z) - 1 - k, 0))
        return g

    log.log(0, None, "initialized", requirements=len(reqs))
    for S in build:
        build[S].end_stage()
    current = {"U": id_rel(n), "V": id_rel(n)}

    def rminus(k: int) -> dict[str, EqString]:
        for j in range(k - 1, -1, -1):
            if strings[j] is not None:
                return strings[j]
        return {"U": empty, "V": empty}

    def p_search(k: int, r: Requirement, base: dict[str, EqString], stage: int):
        # P^S: W_e^S is not a transversal for the other relation T
        S = r.side
        T = "U" if S == "V" else "V"
        ms = cfg.machines_u if S == "U" else cfg.machines_v
        if r.index >= len(ms):
            return None
        m = ms[r.index]
        live = [e for e in m.entries if e.stage <= stage and e.element < n]
        tb = base[T].rel
        low = set()
        for i in range(min(r.position, n - 1) + 1):
            low |= tb.class_of(i)
        best = None
        for ea in live:
            for eb in live:
                a, b = ea.element, eb.element
                if not a < b or a in low or b in low or tb.related(a, b):
                    continue
                f1 = [unpair(p) for p, bit in ea.query + eb.query if bit == 1]
                f0 = [unpair(p) for p, bit in ea.query + eb.query if bit == 0]
                if any(x == y for x, y in f0):
                    continue
                sigma = least_extension(base[S], max(ea.use, eb.use), f1, f0)
                if sigma is None:
                    continue
                key = (a, b, sigma.length, sigma.bits())
                if best is not None and key >= best[0]:
                    continue
                col = least_extension(base[T], 0, [(a, b)])
                if col is not None:
                    best = (key, a, b, sigma, col)
        return best

    def fresh_x(base: dict[str, EqString]) -> int | None:
        floor = max(base["U"].length, base["V"].length)
        x = max(mentioned[0] + 1, 1)
        while x * (x + 1) // 2 < floor:
            x += 1
        return x if x < n else None

    for stage in range(1, cfg.stages + 1):
        acted = None
        for k, r in enumerate(reqs):
            base = rminus(k)
            init = strings[k] is None
            new = None
            if r.kind == "F":
                if init:
                    new = {S: least_extension(base[S], r.position) for S in ("U", "V")}
                    log.log(stage, r, "restrained", lengths={S: new[S].length for S in new})
            elif r.kind == "P":
                if init:
                    new = dict(base)
                    log.log(stage, r, "restrained", lengths={S: new[S].length for S in new})
                elif not acted_since_init[k]:
                    found = p_search(k, r, base, stage)
                    if found is not None:
                        _, a, b, sigma, col = found
                        S = r.side
                        T = "U" if S == "V" else "V"
                        new = {S: sigma, T: col}
                        acted_since_init[k] = True
                        mentioned[0] = max(mentioned[0], a, b)
                        log.log(stage, r, "collapsed", a=a, b=b, side=T,
                                lengths={S: sigma.length, T: col.length})
            else:
                S, T = ("U", "V") if r.side == "UV" else ("V", "U")
                phi = cfg.reductions[r.index] if r.index < len(cfg.reductions) else None
                if init:
                    x = fresh_x(base)
                    ext = None if x is None else least_extension(base[S], 0, force0=[(0, x)])
                    if ext is None:
                        continue
                    witness[k] = x
                    mentioned[0] = max(mentioned[0], x)
                    new = {S: ext, T: base[T]}
                    log.log(stage, r, "appointed", x=x)
                elif not acted_since_init[k] and phi is not None:
                    x = witness[k]
                    w = phi.value(x, stage)
                    if w is not None:
                        acted_since_init[k] = True
                        if w == 0 or base[T].bit(pair_code(0, w)) == 1:
                            new = {S: strings[k][S], T: base[T]}
                            log.log(stage, r, "restrained", x=x, w=w, kept=True)
                        else:
                            us = least_extension(base[S], 0, force1=[(0, x)])
                            vs = least_extension(base[T], 0, force0=[(0, w)])
                            if us is None or vs is None:
                                log.log(stage, r, "stalled", x=x, w=w)
                                new = {S: strings[k][S], T: base[T]}
                            else:
                                new = {S: us, T: vs}
                                log.log(stage, r, "collapsed", x=x, w=w, side=S)
            if new is not None:
                strings[k] = new
                acted = k
                break
        if acted is None:
            log.log(stage, None, "idle")
        else:
            dropped = [reqs[j].name for j in range(acted + 1, len(reqs)) if strings[j] is not None]
            for j in range(acted + 1, len(reqs)):
                strings[j] = None
                witness[j] = None
                acted_since_init[j] = False
            if dropped:
                log.log(stage, reqs[acted], "initialized-others", cancelled=dropped)
            for S in ("U", "V"):
                target = strings[acted][S].rel
                if target != current[S]:
                    apply_partition(build[S], target, gamma_for(S))
                    current[S] = target
        for S in build:
            build[S].end_stage()

    tu, tv = build["U"].build(), build["V"].build()
    log.final = {
        "relations": {S: current[S].to_json() for S in ("U", "V")},
        "restraints": {reqs[k].name: {S: strings[k][S].length for S in ("U", "V")}
                       for k in range(len(reqs)) if strings[k] is not None},
        "witnesses": {reqs[k].name: witness[k] for k in range(len(reqs))
                      if witness[k] is not None},
    }
    return tu, tv, log
