"""Operator entry point.

Drives the three-phase pipeline (discover, plan, run) and hosts the wire
servers. Exit codes: 0 success, 1 usage or invalid configuration,
2 discovery or bind failure, 3 planning failure, 4 execution aborted.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
import threading
from dataclasses import dataclass
from pathlib import Path

from .capabilities import is_identifier
from .directory import empty_snapshot, load_snapshot, save_snapshot
from .discovery import build_invoker, context_fingerprint, discover
from .errors import (
    BindFailure,
    ConfigInvalid,
    DaliaError,
    DiscoveryError,
    MalformedDocument,
    PlanningError,
)
from .executor import OUTCOME_COMPLETED, canonical_serialize_trace, execute
from .planner import Goal, canonical_serialize_graph, export_dot, plan, validate_graph
from .wire import (
    DirectoryService,
    TcpServerHandle,
    WireServer,
    parse_server_config,
    serve_stdio,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DISCOVERY = 2
EXIT_PLANNING = 3
EXIT_EXECUTION = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); usage errors are exit 1
        raise UsageError(message)


@dataclass(frozen=True)
class OrchestratorConfig:
    servers: tuple[str, ...]
    directory: str
    output_format: str = "json"


def load_orchestrator_config(path: str) -> OrchestratorConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config root must be an object")
    servers = data.get("servers")
    directory = data.get("directory")
    output_format = data.get("output_format", "json")
    if not isinstance(servers, list) or not servers or not all(
        isinstance(s, str) for s in servers
    ):
        raise UsageError("config must list at least one server endpoint")
    if not isinstance(directory, str) or not directory:
        raise UsageError("config must name exactly one directory endpoint")
    if output_format not in ("json", "dot", "text"):
        raise UsageError(f"unknown output_format: {output_format!r}")
    base = Path(path).resolve().parent
    return OrchestratorConfig(
        tuple(_resolve_endpoint(s, base) for s in servers),
        _resolve_endpoint(directory, base),
        output_format,
    )


def _resolve_endpoint(endpoint: str, base: Path) -> str:
    """local: endpoints with relative paths are relative to the config file."""
    if endpoint.startswith("local:"):
        target = Path(endpoint[len("local:"):])
        if not target.is_absolute():
            return "local:" + str(base / target)
    return endpoint


def parse_inputs(pairs: list[str]) -> dict[str, str]:
    bindings: dict[str, str] = {}
    for pair in pairs:
        slot, sep, value = pair.partition("=")
        if not sep:
            raise UsageError(f"inputs must be slot=value pairs, got {pair!r}")
        if not is_identifier(slot):
            raise UsageError(f"not a valid slot name: {slot!r}")
        if slot in bindings:
            raise UsageError(f"duplicate input slot {slot!r}")
        bindings[slot] = value
    return bindings


def build_parser() -> _Parser:
    parser = _Parser(prog="dalia", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    p_discover = commands.add_parser("discover", help="query endpoints and print the sealed context")
    p_discover.add_argument("--config", required=True)
    p_discover.add_argument("--inputs", nargs="*", default=[], metavar="slot=value")

    p_plan = commands.add_parser("plan", help="synthesize and print the task graph")
    p_plan.add_argument("--config", required=True)
    p_plan.add_argument("--intent", required=True)
    p_plan.add_argument("--inputs", nargs="*", default=[], metavar="slot=value")
    p_plan.add_argument("--dot", action="store_true", help="emit DOT instead of JSON")

    p_run = commands.add_parser("run", help="plan and execute, printing the trace")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--intent", required=True)
    p_run.add_argument("--inputs", nargs="*", default=[], metavar="slot=value")
    p_run.add_argument("--trace", help="write the trace to this file instead of stdout")

    p_server = commands.add_parser("server", help="capability server commands")
    server_commands = p_server.add_subparsers(dest="server_command", required=True)
    p_server_serve = server_commands.add_parser("serve")
    p_server_serve.add_argument("--config", required=True)
    p_server_serve.add_argument("--tcp", metavar="host:port")

    p_dir = commands.add_parser("directory", help="directory service commands")
    dir_commands = p_dir.add_subparsers(dest="directory_command", required=True)
    p_dir_serve = dir_commands.add_parser("serve")
    p_dir_serve.add_argument("--snapshot", help="load/save the directory snapshot here")
    p_dir_serve.add_argument("--tcp", metavar="host:port")

    return parser


def _goal(args) -> Goal:
    intent = args.intent
    if not is_identifier(intent):
        raise UsageError(f"not a valid intent token: {intent!r}")
    return Goal(intent=intent, bindings=parse_inputs(args.inputs))


def cmd_discover(args, out) -> int:
    config = load_orchestrator_config(args.config)
    bindings = parse_inputs(args.inputs)
    ctx = discover(config.servers, config.directory, set(bindings))
    capability_ids = sorted(cid.render() for cid in ctx.capabilities)
    task_ids = sorted(tid.render() for tid in ctx.tasks)
    agent_ids = sorted(ctx.directory.agents)
    feasible = sorted(
        tid.render() for tid, report in ctx.feasibility.items() if report.feasible
    )
    out.write(f"capabilities ({len(capability_ids)}): {', '.join(capability_ids)}\n")
    out.write(f"tasks ({len(task_ids)}): {', '.join(task_ids)}\n")
    out.write(f"agents ({len(agent_ids)}): {', '.join(agent_ids)}\n")
    out.write(f"feasible tasks ({len(feasible)}): {', '.join(feasible)}\n")
    out.write(f"fingerprint: {context_fingerprint(ctx)}\n")
    return EXIT_OK


def cmd_plan(args, out) -> int:
    config = load_orchestrator_config(args.config)
    goal = _goal(args)
    ctx = discover(config.servers, config.directory, set(goal.bindings))
    graph = plan(goal, ctx)
    report = validate_graph(graph, goal, ctx)
    if not report.ok:
        raise PlanningError("; ".join(report.violations))
    if args.dot or config.output_format == "dot":
        out.write(export_dot(graph))
    else:
        out.write(canonical_serialize_graph(graph).decode("utf-8") + "\n")
    return EXIT_OK


def cmd_run(args, out) -> int:
    config = load_orchestrator_config(args.config)
    goal = _goal(args)
    ctx = discover(config.servers, config.directory, set(goal.bindings))
    graph = plan(goal, ctx)
    report = validate_graph(graph, goal, ctx)
    if not report.ok:
        raise PlanningError("; ".join(report.violations))
    trace = execute(graph, goal, ctx, build_invoker(ctx))
    payload = canonical_serialize_trace(trace)
    if args.trace:
        Path(args.trace).write_bytes(payload + b"\n")
    else:
        out.write(payload.decode("utf-8") + "\n")
    return EXIT_OK if trace.outcome == OUTCOME_COMPLETED else EXIT_EXECUTION


def cmd_server_serve(args, out) -> int:
    try:
        config = parse_server_config(Path(args.config).read_bytes())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {args.config}: {exc}") from exc
    server = WireServer(config)
    if args.tcp:
        handle = TcpServerHandle(server, args.tcp)
        print(f"serving {config.server_id} on {handle.address}", file=sys.stderr)
        _block_until_interrupt(handle)
    else:
        with contextlib.suppress(KeyboardInterrupt):
            serve_stdio(server)
    return EXIT_OK


def cmd_directory_serve(args, out) -> int:
    snapshot = empty_snapshot()
    if args.snapshot and Path(args.snapshot).exists():
        try:
            snapshot = load_snapshot(Path(args.snapshot).read_bytes())
        except (OSError, MalformedDocument) as exc:
            raise ConfigInvalid(f"cannot load snapshot {args.snapshot}: {exc}") from exc
    service = DirectoryService(snapshot)
    try:
        if args.tcp:
            handle = TcpServerHandle(service, args.tcp)
            print(f"serving directory on {handle.address}", file=sys.stderr)
            _block_until_interrupt(handle)
        else:
            with contextlib.suppress(KeyboardInterrupt):
                serve_stdio(service)
    finally:
        if args.snapshot:
            Path(args.snapshot).write_bytes(save_snapshot(service.snapshot) + b"\n")
    return EXIT_OK


def _block_until_interrupt(handle: TcpServerHandle) -> None:
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        handle.shutdown()


def main(argv: list[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "discover":
            return cmd_discover(args, out)
        if args.command == "plan":
            return cmd_plan(args, out)
        if args.command == "run":
            return cmd_run(args, out)
        if args.command == "server":
            return cmd_server_serve(args, out)
        if args.command == "directory":
            return cmd_directory_serve(args, out)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigInvalid as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BindFailure as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DISCOVERY
    except DiscoveryError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DISCOVERY
    except PlanningError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except DaliaError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EXECUTION


if __name__ == "__main__":
    sys.exit(main())
