"""Deterministic plan synthesis.

Resolves a structured goal to a declared task, builds a capability-grounded
task graph by backward chaining over the task's own capability pool, assigns
agents from the directory, and validates the result.

Everything here is a total order away from ambiguity: needed slots are
processed lexicographically, producer selection takes the lexicographically
smallest capability id, agent assignment takes the lexicographically
smallest eligible agent. For a fixed (goal, context) the emitted graph is
byte-identical across runs.

All operations are pure functions over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Sequence

from .atdp import TaskDeclaration
from .canonical import canonical_bytes
from .capabilities import Capability, CapabilityId, capability_id_problems, load_document
from .directory import resolve_capability
from .discovery import ExecutionContext
from .errors import (
    AmbiguousIntent,
    CycleDetected,
    MalformedDocument,
    NoEligibleAgent,
    NoSuchTask,
    PreconditionUnschedulable,
    SchemaViolation,
    UnproducibleSlot,
    ValidationReport,
)


def slot_known_fact(slot: str) -> str:
    """Fact asserted once a slot carries a value (goal binding or node output)."""
    return f"{slot}_known"


@dataclass(frozen=True)
class Goal:
    """Structured request: an intent, slot bindings, and initial facts."""

    intent: str
    bindings: dict[str, Any]
    initial_facts: frozenset[str] = frozenset()

    def initial_fact_set(self) -> set[str]:
        return set(self.initial_facts) | {slot_known_fact(s) for s in self.bindings}


@dataclass(frozen=True)
class Node:
    node_id: int
    capability_id: CapabilityId
    agent_id: str
    server_id: str

    def to_json(self) -> dict:
        return {
            "node_id": self.node_id,
            "capability_id": self.capability_id.render(),
            "agent_id": self.agent_id,
            "server_id": self.server_id,
        }


@dataclass(frozen=True)
class Edge:
    from_node: int
    to_node: int
    slot: str

    def to_json(self) -> dict:
        return {"from_node": self.from_node, "to_node": self.to_node, "slot": self.slot}


@dataclass(frozen=True)
class TaskGraph:
    """Directed acyclic plan: capability executions linked by named data slots."""

    task_id: CapabilityId
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    source_bindings: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id.render(),
            "nodes": [node.to_json() for node in self.nodes],
            "edges": [edge.to_json() for edge in self.edges],
            "source_bindings": list(self.source_bindings),
        }

    def node(self, node_id: int) -> Node:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        raise KeyError(node_id)


def resolve_goal(goal: Goal, ctx: ExecutionContext) -> TaskDeclaration:
    """The unique declared task whose intent matches the goal's exactly."""
    matches = sorted(
        (task_id for task_id, task in ctx.tasks.items() if task.intent == goal.intent)
    )
    if not matches:
        raise NoSuchTask(goal.intent)
    if len(matches) > 1:
        raise AmbiguousIntent(goal.intent, [tid.render() for tid in matches])
    return ctx.tasks[matches[0]]


def synthesize_graph(task: TaskDeclaration, goal: Goal, ctx: ExecutionContext) -> TaskGraph:
    """Backward-chain over the task's capability pool only.

    Needed slots start at the task's outputs and are processed smallest
    first; each slot not bound by the goal is resolved to the pool producer
    with the smallest capability id, instantiated at most once per graph.
    Agent and server assignment happen later (assign_agents).
    """
    pool = [
        ctx.capability(cid) for cid in task.capabilities if cid in ctx.capabilities
    ]
    producers_by_slot: dict[str, list[Capability]] = {}
    for cap in sorted(pool, key=lambda c: c.capability_id):
        for slot in cap.outputs:
            producers_by_slot.setdefault(slot, []).append(cap)

    source_bindings = tuple(sorted(goal.bindings))
    source = set(source_bindings)

    nodes: list[Node] = []
    node_of: dict[CapabilityId, int] = {}
    pending = set(task.outputs)
    processed: set[str] = set()

    while pending:
        slot = min(pending)
        pending.remove(slot)
        processed.add(slot)
        if slot in source:
            continue
        producers = producers_by_slot.get(slot)
        if not producers:
            raise UnproducibleSlot(slot)
        chosen = producers[0]
        if chosen.capability_id not in node_of:
            node_of[chosen.capability_id] = len(nodes)
            nodes.append(
                Node(
                    node_id=len(nodes),
                    capability_id=chosen.capability_id,
                    agent_id="",
                    server_id="",
                )
            )
            for needed in chosen.inputs:
                if needed not in processed:
                    pending.add(needed)

    edges: list[Edge] = []
    for node in nodes:
        cap = ctx.capability(node.capability_id)
        for slot in cap.inputs:
            if slot in source:
                continue
            producer = producers_by_slot[slot][0]
            edges.append(
                Edge(
                    from_node=node_of[producer.capability_id],
                    to_node=node.node_id,
                    slot=slot,
                )
            )

    graph = TaskGraph(
        task_id=task.task_id,
        nodes=tuple(nodes),
        edges=tuple(edges),
        source_bindings=source_bindings,
    )

    order, leftover = _try_canonical_order(graph.nodes, graph.edges)
    if leftover:
        raise CycleDetected(sorted(cid.render() for cid in leftover))

    defect = _first_precondition_defect(graph, order, goal, ctx)
    if defect is not None:
        fact, capability_id = defect
        raise PreconditionUnschedulable(fact, capability_id.render())
    return graph


def _try_canonical_order(
    nodes: Sequence[Node], edges: Sequence[Edge]
) -> tuple[list[int], list[CapabilityId]]:
    """Sorted-ready-set topological sort.

    Returns (order, leftover-capability-ids); a non-empty leftover means the
    edges contain a cycle through those capabilities.
    """
    indegree = {node.node_id: 0 for node in nodes}
    successors: dict[int, list[int]] = {node.node_id: [] for node in nodes}
    for edge in edges:
        # Edges with dangling endpoints are reported by structural checks.
        if edge.from_node in indegree and edge.to_node in indegree:
            indegree[edge.to_node] += 1
            successors[edge.from_node].append(edge.to_node)

    by_id = {node.node_id: node for node in nodes}

    def sort_key(nid: int) -> tuple[str, int]:
        return by_id[nid].capability_id.render(), nid

    ready = sorted((nid for nid, deg in indegree.items() if deg == 0), key=sort_key)

    order: list[int] = []
    while ready:
        nid = ready.pop(0)
        order.append(nid)
        released = []
        for succ in successors[nid]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                released.append(succ)
        ready = sorted(ready + released, key=sort_key)

    ordered = set(order)
    leftover = [by_id[nid].capability_id for nid in indegree if nid not in ordered]
    return order, leftover


def _first_precondition_defect(
    graph: TaskGraph, order: Sequence[int], goal: Goal, ctx: ExecutionContext
) -> tuple[str, CapabilityId] | None:
    """Simulate the canonical order; first precondition that never holds."""
    facts = goal.initial_fact_set()
    for node_id in order:
        cap = ctx.capability(graph.node(node_id).capability_id)
        for fact in cap.preconditions:
            if fact not in facts:
                return fact, cap.capability_id
        facts.update(cap.postconditions)
        facts.update(slot_known_fact(slot) for slot in cap.outputs)
    return None


def assign_agents(graph: TaskGraph, ctx: ExecutionContext) -> TaskGraph:
    """Assign each node the smallest eligible agent and its provider server."""
    nodes = []
    for node in graph.nodes:
        eligible = resolve_capability(ctx.directory, node.capability_id)
        if not eligible:
            raise NoEligibleAgent(node.capability_id.render())
        nodes.append(
            replace(
                node,
                agent_id=eligible[0],
                server_id=ctx.provider(node.capability_id),
            )
        )
    return replace(graph, nodes=tuple(nodes))


def validate_graph(graph: TaskGraph, goal: Goal, ctx: ExecutionContext) -> ValidationReport:
    """Check acyclicity, groundedness, input coverage, and schedulability."""
    report = ValidationReport()
    report.violations += structural_violations(graph, ctx)

    order, leftover = _try_canonical_order(graph.nodes, graph.edges)
    if not leftover:
        defect = _first_precondition_defect_safe(graph, order, goal, ctx)
        if defect is not None:
            fact, capability_id = defect
            report.add(
                f"precondition {fact!r} of {capability_id} is never asserted "
                "before its node runs"
            )
    return report


def structural_violations(graph: TaskGraph, ctx: ExecutionContext) -> list[str]:
    """Goal-independent graph defects: cycles, grounding, edge shape, coverage."""
    violations: list[str] = []

    node_ids = {node.node_id for node in graph.nodes}
    if len(node_ids) != len(graph.nodes):
        violations.append("duplicate node ids")
    seen_caps: set[CapabilityId] = set()
    for node in graph.nodes:
        if node.capability_id in seen_caps:
            violations.append(
                f"capability {node.capability_id} instantiated more than once"
            )
        seen_caps.add(node.capability_id)

    _, leftover = _try_canonical_order(graph.nodes, graph.edges)
    if leftover:
        violations.append(
            "cycle through " + ", ".join(sorted(cid.render() for cid in leftover))
        )

    for node in graph.nodes:
        if node.capability_id not in ctx.capabilities:
            violations.append(
                f"node {node.node_id} references undeclared capability {node.capability_id}"
            )
            continue
        if node.agent_id:
            eligible = resolve_capability(ctx.directory, node.capability_id)
            if node.agent_id not in eligible:
                violations.append(
                    f"node {node.node_id} agent {node.agent_id!r} is not eligible "
                    f"for {node.capability_id}"
                )
        if node.server_id and node.server_id != ctx.provider(node.capability_id):
            violations.append(
                f"node {node.node_id} server {node.server_id!r} is not the "
                f"provider of {node.capability_id}"
            )

    for edge in graph.edges:
        if edge.from_node not in node_ids or edge.to_node not in node_ids:
            violations.append(f"edge references a missing node: {edge.to_json()}")
            continue
        producer = graph.node(edge.from_node).capability_id
        consumer = graph.node(edge.to_node).capability_id
        if producer in ctx.capabilities and edge.slot not in ctx.capability(producer).outputs:
            violations.append(f"edge slot {edge.slot!r} is not an output of {producer}")
        if consumer in ctx.capabilities and edge.slot not in ctx.capability(consumer).inputs:
            violations.append(f"edge slot {edge.slot!r} is not an input of {consumer}")

    source = set(graph.source_bindings)
    for node in graph.nodes:
        if node.capability_id not in ctx.capabilities:
            continue
        for slot in ctx.capability(node.capability_id).inputs:
            incoming = [
                e for e in graph.edges if e.to_node == node.node_id and e.slot == slot
            ]
            if slot in source:
                if incoming:
                    violations.append(
                        f"slot {slot!r} of node {node.node_id} is both source-bound "
                        "and edge-produced"
                    )
            elif len(incoming) != 1:
                violations.append(
                    f"slot {slot!r} of node {node.node_id} has {len(incoming)} "
                    "producers (expected exactly one or a source binding)"
                )
    return violations


def _first_precondition_defect_safe(
    graph: TaskGraph, order: Sequence[int], goal: Goal, ctx: ExecutionContext
) -> tuple[str, CapabilityId] | None:
    facts = goal.initial_fact_set()
    for node_id in order:
        cid = graph.node(node_id).capability_id
        if cid not in ctx.capabilities:
            continue
        cap = ctx.capability(cid)
        for fact in cap.preconditions:
            if fact not in facts:
                return fact, cid
        facts.update(cap.postconditions)
        facts.update(slot_known_fact(slot) for slot in cap.outputs)
    return None


def plan(goal: Goal, ctx: ExecutionContext) -> TaskGraph:
    """Full planning pipeline: resolve, synthesize, assign."""
    task = resolve_goal(goal, ctx)
    graph = synthesize_graph(task, goal, ctx)
    return assign_agents(graph, ctx)


# -- serialization ------------------------------------------------------------


def canonical_serialize_graph(graph: TaskGraph) -> bytes:
    """Byte-deterministic canonical JSON (nodes then edges, stored order)."""
    return canonical_bytes(graph.to_json())


def parse_graph(document: Any) -> TaskGraph:
    """Inverse of canonical_serialize_graph."""
    data = load_document(document, "graph")
    problems = []
    for name in ("task_id", "nodes", "edges", "source_bindings"):
        if name not in data:
            problems.append(f"missing field {name!r}")
    if problems:
        raise SchemaViolation(problems)
    id_problems = capability_id_problems(data["task_id"], label="task_id")
    if id_problems:
        raise SchemaViolation(id_problems)
    if not all(isinstance(data[k], list) for k in ("nodes", "edges", "source_bindings")):
        raise SchemaViolation(["nodes, edges, and source_bindings must be lists"])

    nodes = []
    for doc in data["nodes"]:
        try:
            nodes.append(
                Node(
                    node_id=doc["node_id"],
                    capability_id=CapabilityId.parse(doc["capability_id"]),
                    agent_id=doc["agent_id"],
                    server_id=doc["server_id"],
                )
            )
        except (TypeError, KeyError) as exc:
            raise MalformedDocument([f"bad node document: {doc!r}"]) from exc
    edges = []
    for doc in data["edges"]:
        try:
            edges.append(
                Edge(from_node=doc["from_node"], to_node=doc["to_node"], slot=doc["slot"])
            )
        except (TypeError, KeyError) as exc:
            raise MalformedDocument([f"bad edge document: {doc!r}"]) from exc
    return TaskGraph(
        task_id=CapabilityId.parse(data["task_id"]),
        nodes=tuple(nodes),
        edges=tuple(edges),
        source_bindings=tuple(data["source_bindings"]),
    )


def export_dot(graph: TaskGraph) -> str:
    """DOT rendering: nodes labeled capability@agent, edges labeled by slot."""
    name = "task_" + graph.task_id.render().replace(".", "_")
    lines = [f"digraph {name} {{"]
    for node in graph.nodes:
        label = f"{node.capability_id.render()}@{node.agent_id}"
        lines.append(f'  n{node.node_id} [label="{label}"];')
    for edge in graph.edges:
        lines.append(f'  n{edge.from_node} -> n{edge.to_node} [label="{edge.slot}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
