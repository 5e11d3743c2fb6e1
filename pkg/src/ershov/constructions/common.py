"""Shared plumbing for the priority constructions: requirements, event logs, traces."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

from ershov.approximation import RELATION, SIGMA, ApproxTrace, TraceBuilder, cell
from ershov.eqrel import Partition
from ershov.notation import Notation, fin

SURROGATE_NOTE = (
    "limit-oracle surrogate: opponent and input traces are read at their own "
    "budget; the true limit may differ beyond it"
)


class PreconditionError(ValueError):
    """A scenario precondition fails (maps to CLI exit code 3)."""


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


@dataclass(frozen=True)
class Requirement:
    kind: str
    index: int
    side: str
    position: int

    @property
    def name(self) -> str:
        side = "" if self.side == "single" else f"^{self.side}"
        return f"{self.kind}{side}_{self.index}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "index": self.index, "side": self.side,
                "position": self.position}

    @classmethod
    def from_json(cls, d: dict) -> Requirement:
        return cls(d["kind"], int(d["index"]), d["side"], int(d["position"]))


@dataclass(frozen=True)
class Event:
    stage: int
    requirement: Requirement | None
    action: str
    data: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"stage": self.stage,
                "requirement": self.requirement.to_json() if self.requirement else None,
                "action": self.action, "data": self.data}

    @classmethod
    def from_json(cls, d: dict) -> Event:
        req = d.get("requirement")
        return cls(int(d["stage"]), Requirement.from_json(req) if req else None,
                   d["action"], d.get("data", {}))


@dataclass
class ScenarioResult:
    """Snapshots (one partition per stage), their relation trace and the event log."""

    snapshots: list[Partition]
    trace: ApproxTrace
    log: "StageTrace"
    extra: dict = field(default_factory=dict)


@dataclass
class StageTrace:
    scenario: str
    config: dict
    header: dict = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)
    final: dict = field(default_factory=dict)

    @property
    def config_digest(self) -> str:
        return digest(self.config)

    def log(self, stage: int, req: Requirement | None, action: str, **data: Any) -> None:
        self.events.append(Event(stage, req, action, data))

    def actions_of(self, req: Requirement) -> list[Event]:
        return [e for e in self.events if e.requirement == req]

    def to_json(self) -> dict:
        return {"scenario": self.scenario, "config_digest": self.config_digest,
                "header": self.header, "config": self.config,
                "events": [e.to_json() for e in self.events], "final": self.final}

    @classmethod
    def from_json(cls, d: dict) -> StageTrace:
        log = cls(d["scenario"], d.get("config", {}), d.get("header", {}),
                  [Event.from_json(e) for e in d.get("events", [])], d.get("final", {}))
        if "config_digest" in d and d["config_digest"] != log.config_digest:
            raise ValueError("config_digest does not match the embedded config")
        return log


def builder_partition(b: TraceBuilder) -> Partition:
    """Current f-slice of a Sigma relation builder as a partition (transitive closure)."""
    from ershov.approximation import unpair
    return Partition.from_pairs(b.support, (unpair(z) for z in b.ones()))


def apply_partition(b: TraceBuilder, target: Partition, gamma_of) -> list[int]:
    """Move a relation builder to ``target`` one cell per tick.

    ``gamma_of(z, new_f)`` supplies the counter for each changed cell.
    Returns the changed cells.
    """
    changed = []
    for y in range(b.support):
        for x in range(y):
            z = cell(x, y)
            want = int(target.related(x, y))
            if b.f(z) != want:
                b.set(z, want, gamma_of(z, want))
                changed.append(z)
    return changed


def trace_from_history(snapshots: Sequence[Partition], kind: str = SIGMA,
                       level: Notation | None = None) -> ApproxTrace:
    """Relation trace whose checkpoint k carries snapshot k.

    Each cell's counter after its j-th change is fin(total - j), where total
    is the number of changes of that cell over the whole history, so the
    counter is exactly the number of changes still to come.
    """
    if not snapshots:
        raise ValueError("empty history")
    support = max(p.support for p in snapshots)
    init = 0 if kind == SIGMA else 1
    # first pass: count changes per cell
    totals: dict[int, int] = {}
    cur: dict[int, int] = {}
    plans: list[list[tuple[int, int]]] = []
    for p in snapshots:
        p = p.extend(support)
        step = []
        for y in range(support):
            for x in range(y):
                z = cell(x, y)
                want = int(p.related(x, y))
                if cur.get(z, init) != want:
                    cur[z] = want
                    totals[z] = totals.get(z, 0) + 1
                    step.append((z, want))
        # separations before merges keeps each intermediate slice transitive
        # when a stage swaps partners
        step.sort(key=lambda zw: zw[1])
        plans.append(step)
    need = max(totals.values(), default=0)
    if level is None:
        level = fin(max(need, 1))
    elif level.is_finite and level.finite_value < need:
        raise ValueError(f"history needs {need} changes, level {level} allows fewer")
    b = TraceBuilder(kind, level, RELATION, support)
    done: dict[int, int] = {}
    for step in plans:
        for z, want in step:
            done[z] = done.get(z, 0) + 1
            b.set(z, want, fin(totals[z] - done[z]))
        b.end_stage()
    return b.build()


def trace_partition(trace: ApproxTrace, t: int) -> Partition:
    return Partition.from_pairs(trace.support, trace.slice_at(t))


def final_partition(trace: ApproxTrace) -> Partition:
    return trace_partition(trace, trace.budget)
