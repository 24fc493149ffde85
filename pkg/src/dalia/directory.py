"""Federated agent directory.

The directory is a structured index: it links agents to the servers they can
access and servers to the capability ids they declare. It never stores
capability bodies. What an agent can execute is always a derived view
(the union of its servers' bound capability ids), never persisted state.

Snapshots are immutable values; every mutation returns a new snapshot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable

from .canonical import canonical_bytes
from .capabilities import CapabilityId, capability_id_problems, is_identifier
from .errors import (
    DirectoryError,
    InvalidCapabilityId,
    InvalidRecord,
    InvalidServerId,
    MalformedDocument,
    UnknownAgent,
)

AGENT_RECORD_FIELDS = ("agent_id", "role", "domains", "accessible_servers")


@dataclass(frozen=True)
class AgentRecord:
    """One directory entry: an execution entity and the servers it may use."""

    agent_id: str
    role: str
    domains: tuple[str, ...]
    accessible_servers: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "role": self.role,
            "domains": list(self.domains),
            "accessible_servers": list(self.accessible_servers),
        }


@dataclass(frozen=True)
class DirectorySnapshot:
    """Immutable directory state: agents, server bindings, and an origin id."""

    agents: dict[str, AgentRecord]
    server_capabilities: dict[str, tuple[CapabilityId, ...]]
    origin: str


def empty_snapshot(origin: str = "directory") -> DirectorySnapshot:
    return DirectorySnapshot(agents={}, server_capabilities={}, origin=origin)


def record_problems(record: AgentRecord) -> list[str]:
    problems = []
    if not isinstance(record.agent_id, str) or not record.agent_id:
        problems.append("agent_id must be a non-empty string")
    if not isinstance(record.role, str):
        problems.append("role must be a string")
    for domain in record.domains:
        if not isinstance(domain, str):
            problems.append(f"domain tag must be a string, got {domain!r}")
    seen: set[str] = set()
    for server_id in record.accessible_servers:
        if not is_identifier(server_id):
            problems.append(f"not a valid server id: {server_id!r}")
        if server_id in seen:
            problems.append(f"duplicate accessible server {server_id!r}")
        seen.add(server_id)
    return problems


def parse_agent_record(document: Any) -> AgentRecord:
    """Build an AgentRecord from its JSON form; raises InvalidRecord."""
    if not isinstance(document, dict):
        raise InvalidRecord(["agent record must be an object"])
    problems = [f"missing field {name!r}" for name in AGENT_RECORD_FIELDS if name not in document]
    problems += [
        f"unexpected field {name!r}" for name in sorted(set(document) - set(AGENT_RECORD_FIELDS))
    ]
    for name in ("domains", "accessible_servers"):
        value = document.get(name)
        if name in document and (
            not isinstance(value, list) or any(not isinstance(v, str) for v in value)
        ):
            problems.append(f"{name} must be a list of strings")
    if problems:
        raise InvalidRecord(problems)
    record = AgentRecord(
        agent_id=document["agent_id"],
        role=document["role"],
        domains=tuple(document["domains"]),
        accessible_servers=tuple(document["accessible_servers"]),
    )
    problems = record_problems(record)
    if problems:
        raise InvalidRecord(problems)
    return record


def register_agent(snapshot: DirectorySnapshot, record: AgentRecord) -> DirectorySnapshot:
    """Add or wholesale-replace an agent record.

    Servers the record references but the snapshot does not know yet are
    added with empty capability bindings.
    """
    problems = record_problems(record)
    if problems:
        raise InvalidRecord(problems)
    agents = dict(snapshot.agents)
    agents[record.agent_id] = record
    server_capabilities = dict(snapshot.server_capabilities)
    for server_id in record.accessible_servers:
        server_capabilities.setdefault(server_id, ())
    return DirectorySnapshot(agents, server_capabilities, snapshot.origin)


def remove_agent(snapshot: DirectorySnapshot, agent_id: str) -> DirectorySnapshot:
    """Drop an agent; absent ids are a no-op. Server bindings are retained."""
    if agent_id not in snapshot.agents:
        return snapshot
    agents = {aid: rec for aid, rec in snapshot.agents.items() if aid != agent_id}
    return DirectorySnapshot(agents, dict(snapshot.server_capabilities), snapshot.origin)


def bind_server_capabilities(
    snapshot: DirectorySnapshot,
    server_id: str,
    capability_ids: Iterable[CapabilityId | str],
) -> DirectorySnapshot:
    """Replace the capability ids declared by ``server_id``."""
    if not is_identifier(server_id):
        raise InvalidServerId(server_id)
    parsed: list[CapabilityId] = []
    for cid in capability_ids:
        if isinstance(cid, CapabilityId):
            parsed.append(cid)
            continue
        problems = capability_id_problems(cid)
        if problems:
            raise InvalidCapabilityId("; ".join(problems))
        parsed.append(CapabilityId.parse(cid))
    if len(set(parsed)) != len(parsed):
        raise InvalidCapabilityId(f"duplicate capability ids in binding for {server_id!r}")
    server_capabilities = dict(snapshot.server_capabilities)
    server_capabilities[server_id] = tuple(parsed)
    return DirectorySnapshot(dict(snapshot.agents), server_capabilities, snapshot.origin)


def executable_capabilities(snapshot: DirectorySnapshot, agent_id: str) -> list[CapabilityId]:
    """Derived view: what ``agent_id`` can execute, sorted, deduplicated."""
    record = snapshot.agents.get(agent_id)
    if record is None:
        raise UnknownAgent(agent_id)
    union: set[CapabilityId] = set()
    for server_id in record.accessible_servers:
        union.update(snapshot.server_capabilities.get(server_id, ()))
    return sorted(union)


def resolve_capability(snapshot: DirectorySnapshot, capability_id: CapabilityId) -> list[str]:
    """All agents eligible to execute ``capability_id``, sorted by agent id."""
    eligible = []
    for agent_id, record in snapshot.agents.items():
        for server_id in record.accessible_servers:
            if capability_id in snapshot.server_capabilities.get(server_id, ()):
                eligible.append(agent_id)
                break
    return sorted(eligible)


def merge(snapshots: list[DirectorySnapshot]) -> DirectorySnapshot:
    """Federate snapshots under an explicit precedence order.

    On agent collision the record from the earliest snapshot wins; server
    bindings are unioned (sorted). The result carries a synthesized
    federation origin.
    """
    if not snapshots:
        raise DirectoryError("merge requires at least one snapshot")
    agents: dict[str, AgentRecord] = {}
    server_capabilities: dict[str, tuple[CapabilityId, ...]] = {}
    for snapshot in snapshots:
        for agent_id, record in snapshot.agents.items():
            agents.setdefault(agent_id, record)
        for server_id, cids in snapshot.server_capabilities.items():
            if server_id in server_capabilities:
                # collision: sorted set-union
                union = set(server_capabilities[server_id]) | set(cids)
                server_capabilities[server_id] = tuple(sorted(union))
            else:
                server_capabilities[server_id] = cids
    origin = "federation(" + ",".join(s.origin for s in snapshots) + ")"
    return DirectorySnapshot(
        agents=agents,
        server_capabilities=server_capabilities,
        origin=origin,
    )


def snapshot_to_json(snapshot: DirectorySnapshot) -> dict:
    """Canonical persisted form: maps sorted by key, plus the derived view.

    ``derived_executable_capabilities`` is recomputable and ignored on load;
    it is emitted for human inspection only.
    """
    return {
        "origin": snapshot.origin,
        "agents": {
            agent_id: snapshot.agents[agent_id].to_json()
            for agent_id in sorted(snapshot.agents)
        },
        "server_capabilities": {
            server_id: [cid.render() for cid in snapshot.server_capabilities[server_id]]
            for server_id in sorted(snapshot.server_capabilities)
        },
        "derived_executable_capabilities": {
            agent_id: [cid.render() for cid in executable_capabilities(snapshot, agent_id)]
            for agent_id in sorted(snapshot.agents)
        },
    }


def save_snapshot(snapshot: DirectorySnapshot) -> bytes:
    return canonical_bytes(snapshot_to_json(snapshot))


def load_snapshot(data: Any) -> DirectorySnapshot:
    """Inverse of save_snapshot; every load problem raises MalformedDocument."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument([f"snapshot is not UTF-8: {exc}"]) from exc
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedDocument([f"snapshot is not valid JSON: {exc}"]) from exc
    if not isinstance(data, dict):
        raise MalformedDocument(["snapshot root must be an object"])

    problems = [
        f"missing field {name!r}"
        for name in ("origin", "agents", "server_capabilities")
        if name not in data
    ]
    if problems:
        raise MalformedDocument(problems)
    if not isinstance(data["origin"], str):
        raise MalformedDocument(["origin must be a string"])
    if not isinstance(data["agents"], dict) or not isinstance(data["server_capabilities"], dict):
        raise MalformedDocument(["agents and server_capabilities must be objects"])

    agents: dict[str, AgentRecord] = {}
    for agent_id, doc in data["agents"].items():
        try:
            record = parse_agent_record(doc)
        except InvalidRecord as exc:
            raise MalformedDocument(
                [f"agent {agent_id!r}: {v}" for v in exc.violations]
            ) from exc
        if record.agent_id != agent_id:
            raise MalformedDocument(
                [f"agent key {agent_id!r} does not match record id {record.agent_id!r}"]
            )
        agents[agent_id] = record

    server_capabilities: dict[str, tuple[CapabilityId, ...]] = {}
    for server_id, cids in data["server_capabilities"].items():
        if not is_identifier(server_id):
            raise MalformedDocument([f"not a valid server id: {server_id!r}"])
        if not isinstance(cids, list):
            raise MalformedDocument([f"binding for {server_id!r} must be a list"])
        parsed = []
        for cid in cids:
            id_problems = capability_id_problems(cid)
            if id_problems:
                raise MalformedDocument([f"server {server_id!r}: {v}" for v in id_problems])
            parsed.append(CapabilityId.parse(cid))
        if len(set(parsed)) != len(parsed):
            raise MalformedDocument([f"duplicate capability ids bound to {server_id!r}"])
        server_capabilities[server_id] = tuple(parsed)

    for agent_id, record in agents.items():
        for server_id in record.accessible_servers:
            if server_id not in server_capabilities:
                raise MalformedDocument(
                    [f"agent {agent_id!r} references unknown server {server_id!r}"]
                )

    return DirectorySnapshot(agents, server_capabilities, data["origin"])
