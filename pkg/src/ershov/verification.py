"""Post-hoc audits of emitted traces and event logs.

Every audit is a pure function returning an :class:`AuditReport`; a failed
check always carries the concrete stage, cell and values that violate it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Sequence

from ershov.approximation import (
    PI, RELATION, ApproxTrace, ClockedMachine, OracleMachine, cell, mind_changes, pair_code,
    unpair, validate,
)
from ershov.constructions.common import Requirement, StageTrace
from ershov.eqrel import Partition, direct_sum, verify_reduction

ACTIONS = ("appointed", "diagonalized", "collapsed", "restrained")


@dataclass(frozen=True)
class Check:
    claim: str
    passed: bool
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"claim": self.claim, "pass": self.passed, "witness": self.witness}


@dataclass
class AuditReport:
    suite: str
    checks: list[Check] = field(default_factory=list)
    coverage: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, claim: str, passed: bool, **witness: Any) -> None:
        self.checks.append(Check(claim, passed, witness))

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {"suite": self.suite, "pass": self.ok,
                "checks": [c.to_json() for c in self.checks], "coverage": self.coverage}


def _block_pair_count(part: Partition) -> int:
    return sum(len(b) * (len(b) - 1) // 2 for b in part.blocks)


def audit_trace(trace: ApproxTrace, name: str = "trace") -> AuditReport:
    """Approximating-pair conditions plus equivalence-ness of every stage slice."""
    rep = AuditReport("trace")
    v = validate(trace)
    for bad in v.violations:
        rep.add(f"{name}:{bad.rule}", False, z=bad.z, t=bad.t, detail=bad.detail)
    if v.ok:
        rep.add(f"{name}:approximating-pair", True)
    rep.coverage = {"changes": len(trace.changes), "ticks": trace.budget}
    if trace.domain != RELATION:
        return rep
    ticks = trace.stage_ticks()
    # incremental sweep over ticks, checking at stage ends
    if trace.initial == 1:
        ones = {pair_code(x, y) for y in range(trace.support) for x in range(y)}
    else:
        ones = set()
    changes = sorted(trace.changes, key=lambda c: (c.t, c.z))
    i, dirty, checked, bad_stage = 0, True, 0, None
    for stage, tick in enumerate(ticks):
        while i < len(changes) and changes[i].t <= tick:
            ch = changes[i]
            if ch.new_f == 1:
                ones.add(ch.z)
            else:
                ones.discard(ch.z)
            dirty = True
            i += 1
        if stage == 0 and trace.initial == 0 and not ones:
            continue
        if not dirty:
            continue
        dirty = False
        checked += 1
        part = Partition.from_pairs(trace.support, (unpair(z) for z in ones))
        if _block_pair_count(part) != len(ones):
            missing = next((x, y) for x, y in sorted(part.pairs())
                           if pair_code(x, y) not in ones)
            bad_stage = stage
            rep.add(f"{name}:equivalence", False, stage=stage, tick=tick,
                    z=pair_code(*missing), pair=list(missing),
                    detail="pair forced by transitivity has f = 0")
            break
    if bad_stage is None:
        rep.add(f"{name}:equivalence", True, stages=len(ticks))
    rep.coverage["slices_checked"] = checked
    return rep


def _events(log: StageTrace, *actions: str) -> list:
    return [e for e in log.events if e.action in actions and e.requirement is not None]


def _count_actions(log: StageTrace) -> Counter:
    per: Counter = Counter()
    for e in _events(log, *ACTIONS):
        per[e.requirement] += 1
    return per


def _final_relations(log: StageTrace) -> dict[str, Partition]:
    return {k: Partition.from_json(v) for k, v in log.final.get("relations", {}).items()}


def _opponents(log: StageTrace) -> list[ApproxTrace]:
    return [ApproxTrace.from_json(o) for o in log.config.get("opponents", [])]


def _class_at(trace: ApproxTrace, x: int, tick: int) -> set[int]:
    return {y for y in range(trace.support) if trace.related(x, y, tick)}


def _p_status_dark(log, r, part, machine, stages, witnesses, support, trace):
    from ershov.constructions.dark import has_related_pair
    w_final = machine.enumerated(stages)
    collapses = [e for e in log.actions_of(r) if e.action == "collapsed"]
    hit = has_related_pair(part, w_final)
    if hit is not None:
        logged = next(((e.data["u"], e.data["v"]) for e in reversed(collapses)
                       if e.data["u"] in w_final and e.data["v"] in w_final), None)
        return "defeated", list(logged or hit)
    # starved unless some eligible same-parity pair remains
    bound = r.index
    for name, w in witnesses.items():
        if int(name) <= r.index:
            bound = max(bound, w[0] + w[1])
    top = bound
    for i in range(min(bound, support - 1) + 1):
        top = max(top, max(part.class_of(i)))
    elig = sorted(x for x in w_final if top < x < support)
    for i, u in enumerate(elig):
        for v in elig[i + 1:]:
            if (u - v) % 2 == 0:
                zs = [cell(a, b) for a in part.class_of(u) for b in part.class_of(v)]
                if trace is None or all(not trace.gamma(z, trace.budget).is_zero for z in zs):
                    return "missed", [u, v]
    return "starved", None


def audit_requirements(log: StageTrace, cfg=None,
                       traces: dict[str, ApproxTrace] | None = None) -> AuditReport:
    """Final status of every requirement of a dark or mutually dark run."""
    if log.scenario not in ("dark", "mutually-dark"):
        raise ValueError(f"no requirement audit for scenario {log.scenario!r}")
    rep = AuditReport("requirements")
    conf = log.config
    stages = int(conf["stages"])
    support = int(conf["support"])
    reqs = [Requirement.from_json(r) for r in log.events[0].data["requirements"]]
    rels = _final_relations(log)
    opps = _opponents(log)
    per = _count_actions(log)
    last_action: dict[Requirement, int] = {}
    for e in _events(log, *ACTIONS):
        last_action[e.requirement] = e.stage
    witnesses = log.final.get("witnesses", {})
    mutual = log.scenario == "mutually-dark"

    for r in reqs:
        rel_name = "R" if not mutual else r.side
        if r.kind == "Q":
            key = str(r.index) if not mutual else r.name
            w = witnesses.get(key)
            opp = opps[r.index]
            if w is None:
                rep.add(f"{r.name}:unsettled", True, reason="no active witness at the end")
                continue
            z = cell(*w)
            lim = opp.value(z, opp.budget)
            if opp.value(z, stages) != lim:
                rep.add(f"{r.name}:unsettled", True, reason="opponent changes after the run")
                continue
            val = int(rels[rel_name].related(*w))
            rep.add(f"{r.name}:diagonalized", val != lim, x=w[0], y=w[1], cell=z,
                    final=val, opponent_limit=lim)
            # each diagonalization answers one opponent change at a witness
            diags = Counter(tuple((e.data["x"], e.data["y"])) for e in log.actions_of(r)
                            if e.action == "diagonalized")
            for (x, y), k in diags.items():
                bound = mind_changes(opp, cell(x, y)) if opp.in_range(cell(x, y)) else 0
                rep.add(f"{r.name}:diagonalization-count", k <= bound, x=x, y=y,
                        diagonalizations=k, opponent_changes=bound)
        elif r.kind == "P":
            if not mutual:
                machine = ClockedMachine.from_json(conf["machines"][r.index])
                tr = traces.get("R") if traces else None
                status, pair = _p_status_dark(log, r, rels["R"], machine, stages,
                                              witnesses, support, tr)
            else:
                status, pair = _p_status_mutual(log, r, reqs, rels, stages, support, traces)
            rep.add(f"{r.name}:{status}", status != "missed", pair=pair)
        if r.kind in ("F", "P", "Q"):
            higher = sum(k for q, k in per.items() if q.position < r.position)
            mine = per.get(r, 0)
            if r.kind == "Q":
                apps = sum(1 for e in log.actions_of(r) if e.action == "appointed")
                rep.add(f"{r.name}:appointments", apps <= higher + 1, appointments=apps,
                        higher_actions=higher)
            else:
                rep.add(f"{r.name}:action-bound", mine <= 2 * higher + 2, actions=mine,
                        higher_actions=higher)
        if r.kind == "F" and traces:
            tr = traces.get(rel_name if not mutual else r.side)
            settle = max((st for q, st in last_action.items() if q.position < r.position),
                         default=1)
            if tr is None or r.index >= tr.support:
                continue
            ticks = tr.stage_ticks()
            t0 = ticks[min(settle, len(ticks) - 1)]
            before = _class_at(tr, r.index, t0)
            after = _class_at(tr, r.index, tr.budget)
            rep.add(f"{r.name}:class-frozen", after <= before, settlement_stage=settle,
                    added=sorted(after - before))
    rep.coverage = {"requirements": len(reqs), "stages": stages}
    return rep


def _p_status_mutual(log, r, reqs, rels, stages, support, traces):
    from ershov.constructions.mutual import OTHER, cell_codes, enumerated_within, uses_under
    S, T = r.side, OTHER[r.side]
    m = OracleMachine.from_json(log.config[f"oracle_machines_{S}"][r.index])
    src, dst = rels[S], rels[T]
    w_final = enumerated_within(m, src, 10 ** 9, stages)
    collapses = [e for e in log.actions_of(r) if e.action == "collapsed"]
    from ershov.constructions.dark import has_related_pair
    hit = has_related_pair(dst, w_final)
    if hit is not None:
        logged = next(((e.data["u"], e.data["v"]) for e in reversed(collapses)
                       if e.data["u"] in w_final and e.data["v"] in w_final), None)
        return "defeated", list(logged or hit)
    restraints = log.final.get("restraints", {})
    rminus = {"U": 0, "V": 0}
    for q in reqs:
        if q.position < r.position and q.name in restraints:
            for side in rminus:
                rminus[side] = max(rminus[side], restraints[q.name][side])
    protected = set(range(r.position))
    for q in reqs:
        w = log.final.get("witnesses", {}).get(q.name)
        if w and q.kind == "Q" and q.side == T and q.position < r.position:
            protected.update(w)
    uses = uses_under(m, src, stages)
    elems = sorted(x for x in uses if x < support)
    tr = traces.get(T) if traces else None
    for i, u in enumerate(elems):
        for v in elems[i + 1:]:
            if (u - v) % 2 or dst.related(u, v):
                continue
            if (dst.class_of(u) | dst.class_of(v)) & protected:
                continue
            zs = [cell(a, b) for a in dst.class_of(u) for b in dst.class_of(v)]
            if min(min(cell_codes(z)) for z in zs) < rminus[T]:
                continue
            if tr is not None and any(tr.gamma(z, tr.budget).is_zero for z in zs):
                continue
            return "missed", [u, v]
    return "starved", None


def _bootstrap_tick(trace: ApproxTrace) -> int:
    cps = trace.checkpoints
    return cps[1] if trace.kind == PI and len(cps) > 1 else 0


def audit_parity(log: StageTrace | None, traces: dict[str, ApproxTrace]) -> AuditReport:
    """Equal-parity cells change at most once after the bootstrap, from 0 to 1."""
    rep = AuditReport("parity")
    examined = 0
    for name, tr in sorted(traces.items()):
        start = _bootstrap_tick(tr)
        bad = None
        for z in tr.touched():
            x, y = unpair(z)
            if x == y or (x - y) % 2:
                continue
            examined += 1
            f = tr.value(z, start)
            flips = []
            for t, ch in zip(*tr._history[z]):
                if t <= start:
                    continue
                if ch.new_f != f:
                    flips.append((t, f, ch.new_f))
                f = ch.new_f
            if len(flips) > 1 or any(a != 0 or b != 1 for _, a, b in flips):
                bad = (z, x, y, flips)
                break
        if bad is None:
            rep.add(f"{name}:same-parity-monotone", True)
        else:
            z, x, y, flips = bad
            rep.add(f"{name}:same-parity-monotone", False, z=z, pair=[x, y],
                    flips=[list(f) for f in flips])
    rep.coverage = {"cells": examined}
    return rep


def audit_change_bound(log: StageTrace | None, traces: dict[str, ApproxTrace]) -> AuditReport:
    """Per-cell change counts within 2^{e_R(u)} for the omega-c.e. pair."""
    from ershov.constructions.omega import cell_exponent
    rep = AuditReport("change-bound")
    cells = 0
    for name, tr in sorted(traces.items()):
        worst = None
        for z in tr.touched():
            cells += 1
            k = mind_changes(tr, z)
            e = cell_exponent(z)
            if k > 2 ** e:
                worst = (z, k, e)
                break
        if worst is None:
            rep.add(f"{name}:change-bound", True)
        else:
            z, k, e = worst
            rep.add(f"{name}:change-bound", False, z=z, pair=list(unpair(z)), changes=k,
                    exponent=e, bound=2 ** e)
    rep.coverage = {"cells": cells}
    return rep


def audit_no_sup(log: StageTrace, R: Partition, S: Partition, U: Partition,
                 snapshots: Sequence[Partition] | None = None) -> AuditReport:
    rep = AuditReport("no-sup")
    base = direct_sum(R, S)
    ev = {x: 2 * x for x in range(R.support)}
    od = {x: 2 * x + 1 for x in range(S.support)}
    for k, snap in enumerate(list(snapshots or []) + [U]):
        label = "final" if k == len(snapshots or []) else k
        okR = verify_reduction(ev, R, snap)
        okS = verify_reduction(od, S, snap)
        if not (okR and okS):
            rep.add("parity-reductions", False, stage=label, even_side=okR, odd_side=okS)
            break
    else:
        rep.add("parity-reductions", True, stages=len(snapshots or []) + 1)
    seen: set[int] = set()
    dup = None
    for e in log.events:
        if e.action != "collapsed":
            continue
        for x in (e.data["x"], e.data["y"]):
            r = base.rep(x)
            if r in seen:
                dup = (e.stage, r)
            seen.add(r)
        if dup:
            break
    rep.add("z-injective", dup is None and len(set(log.final.get("Z", []))) ==
            len(log.final.get("Z", [])),
            **({"stage": dup[0], "representative": dup[1]} if dup else {}))
    bad = None
    for b in U.blocks:
        reps = {base.rep(x) for x in b}
        if len(reps) == 1:
            continue
        parities = sorted(r % 2 for r in reps)
        if parities != [0, 1]:
            bad = (sorted(b), sorted(reps))
            break
    rep.add("merge-shape", bad is None,
            **({"block": bad[0], "base_classes": bad[1]} if bad else {}))
    rep.coverage = {"classes": U.class_count, "support": U.support}
    return rep
