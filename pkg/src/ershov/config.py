"""Run configurations: parsing, seeded generation of inputs, and dispatch.

A config is a JSON object with a ``scenario`` key.  Opponents, machines and
input relations may be given inline, as a path to a JSON file (relative to
the config file), or as a generator spec such as ``{"random": {...}}`` that
is expanded with the config's ``seed``.  The resolved config is fully
inline, so a run depends only on it.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ershov.approximation import (
    PI, SET, SIGMA, ApproxTrace, ClockedMachine, OracleEntry, OracleMachine, TraceBuilder,
    opponent_family, pair_code,
)
from ershov.constructions import (
    DarkConfig, MutualConfig, NoSupConfig, OmegaConfig, PreconditionError,
    build_inversion_counterexample, run_dark, run_finitely_minimal, run_mutually_dark,
    run_no_sup, run_omega_pair, run_onto_extension, trace_from_history,
)
from ershov.constructions.common import StageTrace
from ershov.eqrel import Partition, collapse, id_rel
from ershov.notation import Notation, fin, omega

SCENARIOS = ("dark", "mutually-dark", "finitely-minimal", "inversion-fail",
             "onto-extension", "no-sup", "omega-pair")


class ConfigError(ValueError):
    """Malformed or incomplete configuration (CLI exit code 2)."""


def parse_level(v: Any) -> Notation:
    if isinstance(v, int):
        return fin(v)
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("omega", "ω"):
            return omega()
        if s.isdigit():
            return fin(int(s))
        raise ConfigError(f"cannot parse level {v!r}")
    try:
        return Notation.from_json(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad level {v!r}: {exc}") from exc


def random_machines(rng: random.Random, n: int, stages: int, count: int,
                    max_elements: int = 8) -> list[ClockedMachine]:
    last = max(1, stages // 2)
    return [ClockedMachine.enumeration(
        {rng.randrange(n): rng.randint(1, last) for _ in range(rng.randint(0, max_elements))})
        for _ in range(count)]


def random_reductions(rng: random.Random, n: int, stages: int, count: int,
                      density: float = 0.8) -> list[ClockedMachine]:
    last = max(1, stages // 2)
    return [ClockedMachine({x: (rng.randrange(n), rng.randint(1, last))
                            for x in range(n) if rng.random() < density})
            for _ in range(count)]


def random_oracles(rng: random.Random, n: int, stages: int, count: int,
                   max_elements: int = 8, max_query: int = 2) -> list[OracleMachine]:
    last = max(1, stages // 2)
    out = []
    for _ in range(count):
        ents = []
        for _ in range(rng.randint(0, max_elements)):
            query = tuple((rng.randrange(3 * n), rng.randint(0, 1))
                          for _ in range(rng.randint(0, max_query)))
            ents.append(OracleEntry(query, rng.randrange(n), rng.randint(1, last)))
        out.append(OracleMachine(tuple(ents)))
    return out


def random_partition(rng: random.Random, n: int, merges: int) -> Partition:
    part = id_rel(n)
    for _ in range(merges):
        x, y = rng.randrange(n), rng.randrange(n)
        if not part.related(x, y):
            part = collapse(part, x, y)
    return part


def random_ceer_trace(rng: random.Random, n: int, steps: int, merges: int) -> ApproxTrace:
    """A c.e.-style relation trace: collapses only, spread over ``steps`` stages."""
    part = id_rel(n)
    snaps = [part]
    for _ in range(steps):
        for _ in range(rng.randint(0, merges)):
            x, y = rng.randrange(n), rng.randrange(n)
            if not part.related(x, y):
                part = collapse(part, x, y)
        snaps.append(part)
    return trace_from_history(snaps, SIGMA, fin(1))


def random_set_trace(rng: random.Random, n: int, budget: int, k: int) -> ApproxTrace:
    b = TraceBuilder(SIGMA, fin(1), SET, n)
    for z in sorted(rng.sample(range(n), min(k, n))):
        b.tick = max(b.tick, rng.randint(b.tick, max(b.tick, budget - 1)))
        b.set(z, 1, fin(0))
    return ApproxTrace(SIGMA, fin(1), SET, n, max(budget, b.tick), tuple(b.changes))


@dataclass
class Loaded:
    cfg: dict
    base_dir: Path


def _load_ref(v: Any, base: Path) -> Any:
    if isinstance(v, str):
        try:
            return json.loads((base / v).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {v}: {exc}") from exc
    return v


def _need(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"scenario {cfg.get('scenario')!r} needs {missing}")


def _nat(cfg: dict, key: str) -> int:
    v = cfg[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise ConfigError(f"{key} must be a natural number, got {v!r}")
    return v


def resolve(raw: dict, base_dir: Path | str = ".",
            stages: int | None = None, seed: int | None = None) -> dict:
    """Expand references and generators into a fully inline config."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = dict(raw)
    base = Path(base_dir)
    if stages is not None:
        cfg["stages"] = stages
    if seed is not None:
        cfg["seed"] = seed
    sc = cfg.get("scenario")
    if sc not in SCENARIOS:
        raise ConfigError(f"unknown scenario {sc!r}; expected one of {list(SCENARIOS)}")
    cfg.setdefault("seed", 0)
    _nat(cfg, "seed")
    rng = random.Random(cfg["seed"])

    def machines(key: str, maker) -> list[dict]:
        v = _load_ref(cfg.get(key, []), base)
        if isinstance(v, dict) and "random" in v:
            spec = dict(v["random"])
            count = spec.pop("count", 1)
            return [m.to_json() for m in maker(rng, cfg["support"], cfg["stages"], count,
                                               **spec)]
        if not isinstance(v, list):
            raise ConfigError(f"{key} must be a list, a file or a generator")
        return v

    if sc in ("dark", "mutually-dark"):
        _need(cfg, "level", "variant", "support", "stages")
        _nat(cfg, "support"), _nat(cfg, "stages")
        level = parse_level(cfg["level"])
        cfg["level"] = level.to_json()
        if cfg["variant"] not in (SIGMA, PI):
            raise ConfigError(f"variant must be Sigma or Pi, got {cfg['variant']!r}")
        opp = _load_ref(cfg.get("opponents", []), base)
        if isinstance(opp, dict) and "family" in opp:
            spec = opp["family"]
            n = cfg["support"]
            focus = [pair_code(2 * i, 2 * i + 1) for i in range(n // 2)]
            kind = PI if cfg["variant"] == SIGMA else SIGMA
            opp = [t.to_json() for t in opponent_family(
                spec.get("seed", cfg["seed"]), spec.get("count", 8), kind, level, n,
                spec.get("budget", max(1, cfg["stages"] // 2)), focus=focus)]
        cfg["opponents"] = opp
        if sc == "dark":
            cfg["machines"] = machines("machines", random_machines)
        else:
            cfg["oracle_machines_U"] = machines("oracle_machines_U", random_oracles)
            cfg["oracle_machines_V"] = machines("oracle_machines_V", random_oracles)
    elif sc == "omega-pair":
        _need(cfg, "support", "stages")
        cfg["oracle_machines_U"] = machines("oracle_machines_U", random_oracles)
        cfg["oracle_machines_V"] = machines("oracle_machines_V", random_oracles)
        cfg["reduction_machines"] = machines("reduction_machines", random_reductions)
        cfg.setdefault("requirements", 0)
    elif sc == "finitely-minimal":
        _need(cfg, "stages")
        b = _load_ref(cfg.get("base", {"support": cfg.get("support", 16)}), base)
        if "blocks" not in b:
            b = id_rel(b["support"]).to_json()
        cfg["base"] = b
        opp = _load_ref(cfg.get("opponents", []), base)
        if isinstance(opp, dict) and "family" in opp:
            spec = opp["family"]
            n = b["support"]
            opp = [t.to_json() for t in opponent_family(
                spec.get("seed", cfg["seed"]), spec.get("count", 8), SIGMA,
                parse_level(spec.get("level", 2)), n, spec.get("budget", cfg["stages"]))]
        cfg["opponents"] = opp
    elif sc == "inversion-fail":
        _need(cfg, "support")
        X = _load_ref(cfg.get("X", {"random": {"elements": 3}}), base)
        if isinstance(X, dict) and "random" in X:
            spec = X["random"]
            X = random_set_trace(rng, cfg["support"] // 4, spec.get("budget", 20),
                                 spec.get("elements", 3)).to_json()
        cfg["X"] = X
    elif sc == "onto-extension":
        _need(cfg, "support", "stages")
        n = cfg["support"]
        R = _load_ref(cfg.get("R", {"random": {}}), base)
        if isinstance(R, dict) and "random" in R:
            R = random_ceer_trace(rng, n, 4, R["random"].get("merges", 1)).to_json()
        Q = _load_ref(cfg.get("Q", {"random": {}}), base)
        if isinstance(Q, dict) and "random" in Q:
            Q = random_partition(rng, n, Q["random"].get("merges", 2)).to_json()
        cfg["R"], cfg["Q"] = R, Q
        cfg["machines"] = machines("machines", random_reductions)
    elif sc == "no-sup":
        _need(cfg, "support", "stages")
        n = cfg["support"]
        for key in ("R", "S", "T"):
            v = _load_ref(cfg.get(key, {"random": {}}), base)
            if isinstance(v, dict) and "random" in v:
                v = random_ceer_trace(rng, n, 4, v["random"].get("merges", 3)).to_json()
            cfg[key] = v
        cfg["machines"] = machines("machines", random_reductions)
        cfg.setdefault("pair_scan_budget", 64)
    return cfg


def _traces(key: str, data: list) -> list[ApproxTrace]:
    try:
        return [ApproxTrace.from_json(t) for t in data]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad trace in {key}: {exc}") from exc


def run_resolved(cfg: dict) -> tuple[StageTrace, dict[str, ApproxTrace]]:
    """Run a resolved config; returns the log and the named traces."""
    sc = cfg["scenario"]
    try:
        if sc == "dark":
            dc = DarkConfig(Notation.from_json(cfg["level"]), cfg["variant"], cfg["support"],
                            cfg["stages"], _traces("opponents", cfg["opponents"]),
                            [ClockedMachine.from_json(m) for m in cfg["machines"]])
            tr, log = run_dark(dc)
            traces = {"R": tr}
        elif sc == "mutually-dark":
            mc = MutualConfig(Notation.from_json(cfg["level"]), cfg["variant"],
                              cfg["support"], cfg["stages"],
                              _traces("opponents", cfg["opponents"]),
                              [OracleMachine.from_json(m) for m in cfg["oracle_machines_U"]],
                              [OracleMachine.from_json(m) for m in cfg["oracle_machines_V"]])
            tu, tv, log = run_mutually_dark(mc)
            traces = {"U": tu, "V": tv}
        elif sc == "omega-pair":
            oc = OmegaConfig(cfg["support"], cfg["stages"],
                             [OracleMachine.from_json(m) for m in cfg["oracle_machines_U"]],
                             [OracleMachine.from_json(m) for m in cfg["oracle_machines_V"]],
                             [ClockedMachine.from_json(m) for m in cfg["reduction_machines"]],
                             cfg.get("requirements", 0))
            tu, tv, log = run_omega_pair(oc)
            traces = {"U": tu, "V": tv}
        elif sc == "finitely-minimal":
            res = run_finitely_minimal(Partition.from_json(cfg["base"]),
                                       _traces("opponents", cfg["opponents"]), cfg["stages"],
                                       cfg.get("reps"))
            log, traces = res.log, {"R": res.trace}
        elif sc == "inversion-fail":
            X = ApproxTrace.from_json(cfg["X"])
            tr, f = build_inversion_counterexample(X, cfg["support"])
            log = StageTrace("inversion-fail", {"X": X.to_json(), "support": cfg["support"]})
            log.final = {"f": {str(k): v for k, v in sorted(f.items())}}
            traces = {"R": tr, "X": X}
        elif sc == "onto-extension":
            res = run_onto_extension(ApproxTrace.from_json(cfg["R"]),
                                     Partition.from_json(cfg["Q"]),
                                     [ClockedMachine.from_json(m) for m in cfg["machines"]],
                                     cfg["stages"], cfg.get("r_reps"), cfg.get("q_reps"))
            log, traces = res.log, {"S": res.trace}
        else:
            nc = NoSupConfig(ApproxTrace.from_json(cfg["R"]), ApproxTrace.from_json(cfg["S"]),
                             ApproxTrace.from_json(cfg["T"]),
                             [ClockedMachine.from_json(m) for m in cfg["machines"]],
                             cfg["stages"], cfg["pair_scan_budget"])
            res = run_no_sup(nc)
            log, traces = res.log, {"U": res.trace}
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config: {exc!r}") from exc
    log.header = dict(log.header, seed=cfg.get("seed", 0))
    return log, traces


__all__ = ["ConfigError", "PreconditionError", "SCENARIOS", "parse_level", "resolve",
           "run_resolved"]
