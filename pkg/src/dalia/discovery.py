"""Pre-planning discovery.

Queries every configured capability server and the directory, then seals the
results into an immutable ExecutionContext. Planning and execution operate
on the sealed context only; any later server change is invisible until a new
discovery round. Discovery is atomic: any unreachable endpoint or protocol
defect raises and no context is produced.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable

from .atdp import FeasibilityReport, TaskDeclaration, check_feasibility, parse_task
from .canonical import canonical_bytes, sha256_hex
from .capabilities import Capability, CapabilityId, parse_capability
from .directory import DirectorySnapshot, load_snapshot, snapshot_to_json
from .errors import (
    DuplicateCapabilityId,
    ProtocolError,
    ValidationError,
    WireError,
)
from .wire import Invoker, connect_directory, connect_server

_seal_counter = itertools.count(1)
_seal_lock = threading.Lock()


@dataclass(frozen=True)
class ExecutionContext:
    """Sealed, closed-world view produced by one discovery round."""

    capabilities: dict[CapabilityId, tuple[Capability, str]]
    tasks: dict[CapabilityId, TaskDeclaration]
    directory: DirectorySnapshot
    feasibility: dict[CapabilityId, FeasibilityReport]
    provided_inputs: frozenset[str]
    server_routes: dict[str, Any] = field(default_factory=dict)
    sealed_at: int = 0

    def capability(self, capability_id: CapabilityId) -> Capability:
        return self.capabilities[capability_id][0]

    def provider(self, capability_id: CapabilityId) -> str:
        return self.capabilities[capability_id][1]


def discover(
    server_endpoints: Iterable[Any],
    directory_endpoint: Any,
    provided_inputs: Iterable[str],
) -> ExecutionContext:
    """Query all endpoints and seal an ExecutionContext.

    Endpoints may be strings (``tcp:host:port`` / ``local:<file>``) or
    already-connected client objects. Deterministic given identical server
    responses.
    """
    provided = frozenset(provided_inputs)
    endpoints = list(server_endpoints)

    server_clients = [connect_server(endpoint) for endpoint in endpoints]
    directory_client = connect_directory(directory_endpoint)

    capabilities: dict[CapabilityId, tuple[Capability, str]] = {}
    tasks: dict[CapabilityId, TaskDeclaration] = {}
    task_providers: dict[CapabilityId, str] = {}
    server_routes: dict[str, Any] = {}

    for endpoint, client in zip(endpoints, server_clients):
        try:
            info = client.call("dalia/server_info")
            capability_docs = client.call("dalia/list_capabilities")
            task_docs = client.call("atdp/list_tasks")
        except WireError as exc:
            raise ProtocolError(f"{_endpoint_name(client)}: {exc}") from exc

        if not isinstance(info, dict) or not isinstance(info.get("server_id"), str):
            raise ProtocolError(f"{_endpoint_name(client)}: bad server_info response")
        server_id = info["server_id"]
        if server_id in server_routes:
            raise ProtocolError(f"two endpoints report the same server id {server_id!r}")
        server_routes[server_id] = endpoint

        if not isinstance(capability_docs, list) or not isinstance(task_docs, list):
            raise ProtocolError(f"{server_id}: list responses must be arrays")

        for doc in capability_docs:
            try:
                cap = parse_capability(doc)
            except ValidationError as exc:
                raise ProtocolError(f"{server_id}: bad capability document: {exc}") from exc
            if cap.capability_id in capabilities:
                raise DuplicateCapabilityId(
                    cap.capability_id.render(),
                    capabilities[cap.capability_id][1],
                    server_id,
                )
            capabilities[cap.capability_id] = (cap, server_id)

        for doc in task_docs:
            try:
                task = parse_task(doc)
            except ValidationError as exc:
                raise ProtocolError(f"{server_id}: bad task document: {exc}") from exc
            if task.task_id in tasks:
                raise ProtocolError(
                    f"task {task.task_id} declared by two servers: "
                    f"{task_providers[task.task_id]} and {server_id}"
                )
            tasks[task.task_id] = task
            task_providers[task.task_id] = server_id

    try:
        snapshot_doc = directory_client.call("directory/snapshot")
    except WireError as exc:
        raise ProtocolError(f"directory: {exc}") from exc
    try:
        snapshot = load_snapshot(snapshot_doc)
    except ValidationError as exc:
        raise ProtocolError(f"directory returned a bad snapshot: {exc}") from exc

    catalog = [cap for cap, _ in capabilities.values()]
    feasibility = {
        task_id: check_feasibility(task, catalog, provided)
        for task_id, task in tasks.items()
    }

    with _seal_lock:
        sealed_at = next(_seal_counter)
    return ExecutionContext(
        capabilities=capabilities,
        tasks=tasks,
        directory=snapshot,
        feasibility=feasibility,
        provided_inputs=provided,
        server_routes=server_routes,
        sealed_at=sealed_at,
    )


def _endpoint_name(client: Any) -> str:
    return getattr(client, "endpoint", "endpoint")


def context_fingerprint(ctx: ExecutionContext) -> str:
    """Digest over the sealed content (capabilities, tasks, directory).

    Excludes sealed_at and routing; equal contexts have equal fingerprints.
    """
    doc = {
        "capabilities": [
            [cid.render(), ctx.capabilities[cid][1], ctx.capabilities[cid][0].to_json()]
            for cid in sorted(ctx.capabilities)
        ],
        "tasks": [ctx.tasks[tid].to_json() for tid in sorted(ctx.tasks)],
        "directory": snapshot_to_json(ctx.directory),
    }
    return sha256_hex(canonical_bytes(doc))


def build_invoker(ctx: ExecutionContext) -> Invoker:
    """Invocation router for a sealed context.

    String routes are reconnected; client objects recorded during discovery
    are reused as-is.
    """
    clients = {
        server_id: connect_server(route)
        for server_id, route in ctx.server_routes.items()
    }
    return Invoker(clients)
