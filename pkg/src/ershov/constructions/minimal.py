"""Scenarios built directly from a base relation by collapses.

* :func:`run_finitely_minimal` extends a base relation so that it differs
  from each opponent at a pair of base representatives;
* :func:`build_inversion_counterexample` is the two-change relation whose
  reduction from Id hits every class without an inverse reduction;
* :func:`run_onto_extension` joins a relation with a dark stand-in so that
  ``x -> 2x`` hits every class of the result.
"""

from __future__ import annotations

from typing import Sequence

from ershov.approximation import SET, SIGMA, ApproxTrace, ClockedMachine, cell
from ershov.constructions.common import (
    SURROGATE_NOTE, PreconditionError, ScenarioResult, StageTrace, final_partition,
    trace_from_history,
)
from ershov.eqrel import Partition, collapse, direct_sum
from ershov.notation import fin


def class_representatives(base: Partition) -> list[int]:
    return [min(b) for b in base.blocks]


def _check_reps(base: Partition, reps: Sequence[int]) -> None:
    for i, x in enumerate(reps):
        if x >= base.support:
            raise PreconditionError(f"representative {x} outside support {base.support}")
        for y in reps[:i]:
            if base.related(x, y):
                raise PreconditionError(f"representatives {y} and {x} are equivalent")


def run_finitely_minimal(base: Partition, opponents: Sequence[ApproxTrace], stages: int,
                         reps: Sequence[int] | None = None) -> ScenarioResult:
    reps = list(class_representatives(base) if reps is None else reps)
    _check_reps(base, reps)
    log = StageTrace("finitely-minimal",
                     {"base": base.to_json(), "reps": reps, "stages": stages,
                      "opponents": [o.to_json() for o in opponents]},
                     header={"surrogate": SURROGATE_NOTE})
    cur = base
    snaps = [cur]
    log.log(0, None, "initialized", base=base.to_json())
    for k in range(min(stages, len(opponents))):
        if 2 * k + 1 >= len(reps):
            raise PreconditionError(f"representative stream exhausted at stage {k}")
        x, y = reps[2 * k], reps[2 * k + 1]
        opp = opponents[k]
        lim = opp.value(cell(x, y), opp.budget)
        if lim == 0:
            cur = collapse(cur, x, y)
            log.log(k + 1, None, "collapsed", x=x, y=y, opponent_limit=lim)
        else:
            log.log(k + 1, None, "idle", x=x, y=y, opponent_limit=lim)
        snaps.append(cur)
    trace = trace_from_history(snaps, SIGMA)
    log.final = {"relations": {"R": cur.to_json()}}
    return ScenarioResult(snaps, trace, log)


def build_inversion_counterexample(X: ApproxTrace, n: int) -> tuple[ApproxTrace, dict[int, int]]:
    """Classes {4i,4i+2},{4i+1,4i+3} while i is out of X, {4i,4i+3},{4i+1,4i+2} after."""
    if X.kind != SIGMA or X.domain != SET:
        raise PreconditionError("X must be a Sigma set trace")
    if n % 4:
        raise PreconditionError("support must be a multiple of 4")
    for z in X.touched():
        f = 0
        for t in X._history[z][0]:
            v = X.value(z, t)
            if f == 1 and v == 0:
                raise PreconditionError(f"X removes {z} at tick {t}; it must be c.e.")
            f = v
    m = n // 4
    snaps = []
    for t in range(X.budget + 1):
        blocks = []
        for i in range(m):
            a, b, c, d = 4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3
            if i < X.support and X.value(i, t) == 1:
                blocks += [frozenset({a, d}), frozenset({b, c})]
            else:
                blocks += [frozenset({a, c}), frozenset({b, d})]
        snaps.append(Partition(n, tuple(blocks)))
    trace = trace_from_history(snaps, SIGMA, fin(2))
    f = {}
    for i in range(m):
        f[2 * i], f[2 * i + 1] = 4 * i, 4 * i + 1
    return trace, f


def run_onto_extension(R: ApproxTrace, Q: Partition, machines: Sequence[ClockedMachine],
                       stages: int, r_reps: Sequence[int] | None = None,
                       q_reps: Sequence[int] | None = None) -> ScenarioResult:
    Rf = final_partition(R)
    r_reps = list(class_representatives(Rf) if r_reps is None else r_reps)
    q_reps = list(class_representatives(Q) if q_reps is None else q_reps)
    _check_reps(Rf, r_reps)
    _check_reps(Q, q_reps)
    log = StageTrace("onto-extension",
                     {"R": R.to_json(), "Q": Q.to_json(), "stages": stages,
                      "machines": [m.to_json() for m in machines],
                      "r_reps": r_reps, "q_reps": q_reps},
                     header={"surrogate": SURROGATE_NOTE,
                             "flags": ["convergence is read at the stage budget"]})
    cur = direct_sum(Rf, Q)
    snaps = [cur]
    log.log(0, None, "initialized", support=cur.support)
    processed = []
    for e in range(stages):
        if e >= len(r_reps) or e >= len(q_reps):
            raise PreconditionError(f"representative stream exhausted at stage {e + 1}")
        r, q = r_reps[e], q_reps[e]
        phi = machines[e] if e < len(machines) else None
        a = phi.value(2 * r, stages) if phi else None
        b = phi.value(2 * q + 1, stages) if phi else None
        if a is not None and b is not None and not Rf.related(a, b):
            x, y, branch = 2 * r, 2 * q + 1, "diagonal"
        else:
            x, y, branch = 0, 2 * q + 1, "otherwise"
        if cur.related(x, y):
            log.log(e + 1, None, "idle", x=x, y=y, branch=branch)
        else:
            cur = collapse(cur, x, y)
            log.log(e + 1, None, "collapsed", x=x, y=y, branch=branch, phi=[a, b])
        processed.append(q)
        snaps.append(cur)
    trace = trace_from_history(snaps, SIGMA)
    f = {x: 2 * x for x in range(Rf.support)}
    log.final = {"relations": {"S": cur.to_json()}, "processed_q": processed}
    return ScenarioResult(snaps, trace, log, {"f": f, "R": Rf, "Q": Q, "processed_q": processed})


def hits_classes(f: dict[int, int], S: Partition, among: Sequence[int] | None = None) -> bool:
    """Whether the range of f meets the class of every element of ``among`` (default: all)."""
    image = {S.rep(v) for v in f.values()}
    targets = range(S.support) if among is None else among
    return all(S.rep(x) in image for x in targets)
