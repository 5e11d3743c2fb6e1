"""Upper bound U of R and S that is not a supremum, built by parity-crossing merges.

``U[0] = R + S``.  Odd steps merge the least even and least odd number whose
classes are still unused; even steps search for a pair that refutes
``phi_e`` as a reduction of T to U.  ``Z`` holds the least element (in
``R + S``) of every class that has been merged so far.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ershov.approximation import SIGMA, ApproxTrace, ClockedMachine, pair_code, unpair
from ershov.constructions.common import (
    SURROGATE_NOTE, ScenarioResult, StageTrace, final_partition, trace_from_history,
)
from ershov.eqrel import Partition, collapse, direct_sum


@dataclass
class NoSupConfig:
    R: ApproxTrace
    S: ApproxTrace
    T: ApproxTrace
    machines: list[ClockedMachine] = field(default_factory=list)
    stages: int = 100
    pair_scan_budget: int = 64

    def to_json(self) -> dict:
        return {"R": self.R.to_json(), "S": self.S.to_json(), "T": self.T.to_json(),
                "machines": [m.to_json() for m in self.machines],
                "stages": self.stages, "pair_scan_budget": self.pair_scan_budget}


def distinct_pairs(n: int) -> list[tuple[int, int]]:
    """Ordered pairs of distinct numbers below n, listed by Cantor code."""
    out = []
    top = pair_code(n - 1, n - 1) if n else -1
    for p in range(top + 1):
        u, v = unpair(p)
        if u != v and u < n and v < n:
            out.append((u, v))
    return out


def run_no_sup(cfg: NoSupConfig) -> ScenarioResult:
    Rf, Sf, Tf = final_partition(cfg.R), final_partition(cfg.S), final_partition(cfg.T)
    base = direct_sum(Rf, Sf)
    n = base.support
    log = StageTrace("no-sup", cfg.to_json(), header={
        "surrogate": SURROGATE_NOTE,
        "flags": ["divergence means no convergence by the stage budget"],
    })
    cur = base
    Z: set[int] = set()
    snaps = [cur]
    log.log(0, None, "initialized", support=n)
    pairs = distinct_pairs(Tf.support)
    e, cursor = 0, 0
    merges = 0

    def in_z(x: int) -> bool:
        return base.rep(x) in Z

    for step in range(cfg.stages):
        stage = step + 1
        if step % 2 == 0:
            if e >= len(cfg.machines):
                log.log(stage, None, "idle", reason="no machine left")
                snaps.append(cur)
                continue
            phi = cfg.machines[e]
            outcome, scanned = None, 0
            while cursor < len(pairs) and scanned < cfg.pair_scan_budget:
                u, v = pairs[cursor]
                cursor += 1
                scanned += 1
                xe, ye = phi.value(u, cfg.stages), phi.value(v, cfg.stages)
                if xe is None or ye is None:
                    outcome = ("2", u, v, xe, ye)
                    break
                if xe >= n or ye >= n:
                    continue
                if Tf.related(u, v) != cur.related(xe, ye):
                    outcome = ("1a", u, v, xe, ye)
                    break
                if (xe - ye) % 2 and not in_z(xe) and not in_z(ye):
                    outcome = ("1b", u, v, xe, ye)
                    break
            if outcome is None and cursor < len(pairs):
                log.log(stage, None, "scanned", machine=e, cursor=cursor)
                snaps.append(cur)
                continue
            if outcome is None:
                log.log(stage, None, "scanned", machine=e, cursor=cursor, exhausted=True)
            else:
                kind, u, v, xe, ye = outcome
                if kind == "1b":
                    Z.update({base.rep(xe), base.rep(ye)})
                    cur = collapse(cur, xe, ye)
                    log.log(stage, None, "collapsed", machine=e, outcome=kind, u=u, v=v,
                            x=xe, y=ye)
                else:
                    log.log(stage, None, "idle", machine=e, outcome=kind, u=u, v=v,
                            x=xe, y=ye)
            e, cursor = e + 1, 0
        else:
            ev = next((x for x in range(0, n, 2) if not in_z(x)), None)
            od = next((x for x in range(1, n, 2) if not in_z(x)), None)
            if ev is None or od is None:
                log.log(stage, None, "stalled", reason="support exhausted")
            else:
                Z.update({base.rep(ev), base.rep(od)})
                cur = collapse(cur, ev, od)
                merges += 1
                log.log(stage, None, "collapsed", x=ev, y=od, outcome="merge")
        snaps.append(cur)
    trace = trace_from_history(snaps, SIGMA)
    log.final = {"relations": {"U": cur.to_json()}, "Z": sorted(Z)}
    return ScenarioResult(snaps, trace, log, {"Z": sorted(Z), "R": Rf, "S": Sf, "T": Tf,
                                              "base": base})
