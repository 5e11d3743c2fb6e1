"""Command-line front end.

Exit codes: 0 pass, 1 semantic negative (failed audit, no reduction),
2 input error, 3 scenario precondition failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from ershov.approximation import ApproxTrace, validate
from ershov.config import ConfigError, resolve, run_resolved
from ershov.constructions import PreconditionError
from ershov.constructions.common import StageTrace, trace_partition
from ershov.eqrel import Partition, poset, reduce_exists
from ershov.verification import (
    AuditReport, audit_change_bound, audit_no_sup, audit_parity, audit_requirements, audit_trace,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2, 3


class InputError(Exception):
    pass


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def _read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _partition(data: Any, path: str) -> Partition:
    try:
        if isinstance(data, list):
            return Partition.from_labels(data)
        return Partition.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path} is not a partition: {exc}") from exc


def _load_traces(path: str) -> dict[str, ApproxTrace]:
    data = _read_json(path)
    if isinstance(data, dict) and "changes" in data:
        data = {"trace": data}
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a trace or a name -> trace object")
    try:
        return {k: ApproxTrace.from_json(v) for k, v in sorted(data.items())}
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad trace: {exc}") from exc


def cmd_construct(config_path: str, out_path: str, stages: int | None = None,
                  seed: int | None = None) -> int:
    raw = _read_json(config_path)
    cfg = resolve(raw, Path(config_path).parent, stages=stages, seed=seed)
    log, traces = run_resolved(cfg)
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    (out / "log.json").write_text(dumps(log.to_json()))
    (out / "traces.json").write_text(dumps({k: t.to_json() for k, t in traces.items()}))
    print(dumps({"scenario": log.scenario, "config_digest": log.config_digest,
                 "out": str(out), "traces": sorted(traces)}), end="")
    return EXIT_OK


def audit_all(log: StageTrace, traces: dict[str, ApproxTrace]) -> list[AuditReport]:
    """Every audit suite that applies to the log's scenario."""
    reports = [audit_trace(t, name) for name, t in sorted(traces.items())]
    sc = log.scenario
    if sc in ("dark", "mutually-dark"):
        reports.append(audit_requirements(log, traces=traces))
        reports.append(audit_parity(log, traces))
    elif sc == "omega-pair":
        reports.append(audit_change_bound(log, traces))
    elif sc == "no-sup" and "U" in traces:
        U = traces["U"]
        R = trace_partition(ApproxTrace.from_json(log.config["R"]),
                            log.config["R"]["budget"])
        S = trace_partition(ApproxTrace.from_json(log.config["S"]),
                            log.config["S"]["budget"])
        snaps = [trace_partition(U, t) for t in U.stage_ticks()]
        reports.append(audit_no_sup(log, R, S, snaps[-1], snaps[:-1]))
    return reports


def cmd_audit(trace_path: str, log_path: str) -> int:
    traces = _load_traces(trace_path)
    data = _read_json(log_path)
    try:
        log = StageTrace.from_json(data)
        reports = audit_all(log, traces)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot audit: {exc}") from exc
    ok = all(r.ok for r in reports)
    print(dumps({"pass": ok, "suites": [r.to_json() for r in reports]}), end="")
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_validate_trace(trace_path: str) -> int:
    traces = _load_traces(trace_path)
    out, ok = {}, True
    for name, t in traces.items():
        rep = validate(t)
        ok &= rep.ok
        out[name] = rep.to_json()
    print(dumps({"pass": ok, "reports": out}), end="")
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_reduce(r_path: str, s_path: str, range_bound: int) -> int:
    R = _partition(_read_json(r_path), r_path)
    S = _partition(_read_json(s_path), s_path)
    f = reduce_exists(R, S, range_bound)
    if f is None:
        print("none")
        return EXIT_NEGATIVE
    print(dumps({str(x): f[x] for x in sorted(f)}), end="")
    return EXIT_OK


def cmd_poset(catalog_path: str, range_bound: int | None = None,
              dot_path: str | None = None) -> int:
    data = _read_json(catalog_path)
    if not isinstance(data, list):
        raise InputError(f"{catalog_path}: catalog must be a list of partitions")
    catalog = [_partition(p, catalog_path) for p in data]
    if range_bound is None:
        range_bound = max((p.support for p in catalog), default=0)
    ps = poset(catalog, range_bound)
    dot = ps.to_dot()
    if dot_path:
        Path(dot_path).write_text(dot)
    print(dumps(dict(ps.to_json(), dot=dot)), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ershov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="run a scenario from a config")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True, help="directory for log.json and traces.json")
    c.add_argument("--stages", type=int)
    c.add_argument("--seed", type=int)

    a = sub.add_parser("audit", help="audit traces against a log")
    a.add_argument("traces")
    a.add_argument("log")

    v = sub.add_parser("validate-trace", help="validate approximating pairs")
    v.add_argument("traces")

    r = sub.add_parser("reduce", help="search for a reduction R -> S")
    r.add_argument("R")
    r.add_argument("S")
    r.add_argument("range_bound", type=int)

    q = sub.add_parser("poset", help="reducibility poset of a catalog")
    q.add_argument("catalog")
    q.add_argument("--range-bound", type=int)
    q.add_argument("--dot", help="also write the Hasse diagram here")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.command == "construct":
            return cmd_construct(args.config, args.out, args.stages, args.seed)
        if args.command == "audit":
            return cmd_audit(args.traces, args.log)
        if args.command == "validate-trace":
            return cmd_validate_trace(args.traces)
        if args.command == "reduce":
            return cmd_reduce(args.R, args.S, args.range_bound)
        return cmd_poset(args.catalog, args.range_bound, args.dot)
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InputError, ConfigError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
