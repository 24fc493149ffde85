"""Controlled execution of validated task graphs.

Nodes run sequentially in the canonical topological order; intermediate
results propagate through a write-once binding environment; preconditions
are checked against a monotonically growing fact set. Failure policy is
fail-fast: the failing step is recorded, every not-yet-run step is skipped,
and the trace outcome is ``aborted``. No retries, no runtime discovery.

One execution owns its binding environment and fact set exclusively;
independent executions may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .canonical import canonical_bytes, sha256_hex, sorted_map
from .capabilities import CapabilityId
from .discovery import ExecutionContext
from .errors import (
    CycleDetected,
    DaliaError,
    InvalidGraph,
    ValidationReport,
)
from .planner import (
    Goal,
    TaskGraph,
    _try_canonical_order,
    canonical_serialize_graph,
    slot_known_fact,
    structural_violations,
)

STATUS_SUCCEEDED = "succeeded"
STATUS_FAILED = "failed"
STATUS_SKIPPED = "skipped"

OUTCOME_COMPLETED = "completed"
OUTCOME_ABORTED = "aborted"


class SlotRebound(DaliaError):
    def __init__(self, slot: str):
        self.slot = slot
        super().__init__(f"slot {slot!r} is already bound")


class BindingEnv:
    """Write-once map from slot names to opaque value payloads."""

    def __init__(self, initial: dict[str, Any] | None = None):
        self._values: dict[str, Any] = dict(initial or {})

    def bind(self, slot: str, value: Any) -> None:
        if slot in self._values:
            raise SlotRebound(slot)
        self._values[slot] = value

    def __contains__(self, slot: str) -> bool:
        return slot in self._values

    def get(self, slot: str) -> Any:
        return self._values[slot]

    def as_dict(self) -> dict[str, Any]:
        return sorted_map(self._values)


class FactSet:
    """Grow-only set of fact tokens."""

    def __init__(self, initial: set[str] | None = None):
        self._facts: set[str] = set(initial or ())

    def add_all(self, facts) -> None:
        self._facts.update(facts)

    def missing(self, required) -> list[str]:
        return [fact for fact in required if fact not in self._facts]

    def as_set(self) -> set[str]:
        return set(self._facts)


@dataclass(frozen=True)
class StepRecord:
    node_id: int
    capability_id: CapabilityId
    agent_id: str
    status: str
    inputs_used: dict[str, Any]
    outputs_received: dict[str, Any]
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "node_id": self.node_id,
            "capability_id": self.capability_id.render(),
            "agent_id": self.agent_id,
            "status": self.status,
            "inputs_used": sorted_map(self.inputs_used),
            "outputs_received": sorted_map(self.outputs_received),
            "error": self.error,
        }


@dataclass(frozen=True)
class ExecutionTrace:
    graph_fingerprint: str
    steps: tuple[StepRecord, ...]
    outcome: str
    final_bindings: dict[str, Any]

    def to_json(self) -> dict:
        return {
            "graph_fingerprint": self.graph_fingerprint,
            "outcome": self.outcome,
            "steps": [step.to_json() for step in self.steps],
            "final_bindings": sorted_map(self.final_bindings),
        }


def canonical_serialize_trace(trace: ExecutionTrace) -> bytes:
    return canonical_bytes(trace.to_json())


def graph_fingerprint(graph: TaskGraph) -> str:
    return sha256_hex(canonical_serialize_graph(graph))


def canonical_order(graph: TaskGraph) -> list[int]:
    """The unique topological order with the ready set sorted by
    (capability id, node id)."""
    order, leftover = _try_canonical_order(graph.nodes, graph.edges)
    if leftover:
        raise CycleDetected(sorted(cid.render() for cid in leftover))
    return order


def execute(graph: TaskGraph, goal: Goal, ctx: ExecutionContext, invoker) -> ExecutionTrace:
    """Run the graph; all failure is trace content, never an exception.

    ``invoker`` routes (server_id, capability_id, inputs) to a capability
    invocation and returns the output slot map. Only invocations happen
    here: discovery is complete before planning and is never re-entered.

    A structurally malformed graph is a usage error and is rejected up
    front; runtime conditions (faults, output contract breaches, missing
    preconditions) become failed steps with the abort-prefix shape.
    """
    defects = structural_violations(graph, ctx)
    if defects:
        raise InvalidGraph(defects)
    order = canonical_order(graph)

    env = BindingEnv(goal.bindings)
    facts = FactSet(goal.initial_fact_set())
    steps: list[StepRecord] = []
    aborted = False

    for node_id in order:
        node = graph.node(node_id)
        cap = ctx.capability(node.capability_id)
        if aborted:
            steps.append(
                StepRecord(
                    node_id=node.node_id,
                    capability_id=node.capability_id,
                    agent_id=node.agent_id,
                    status=STATUS_SKIPPED,
                    inputs_used={},
                    outputs_received={},
                )
            )
            continue

        inputs: dict[str, Any] = {}
        failure = None
        for slot in cap.inputs:
            if slot not in env:
                failure = f"input slot {slot!r} is not bound"
                break
            inputs[slot] = env.get(slot)

        if failure is None:
            unmet = facts.missing(cap.preconditions)
            if unmet:
                failure = f"precondition not satisfied: {unmet[0]!r}"

        outputs: dict[str, Any] = {}
        if failure is None:
            try:
                response = invoker.invoke(node.server_id, node.capability_id, inputs)
            except DaliaError as exc:
                failure = f"invocation failed: {exc}"
            else:
                failure, outputs = _check_output_contract(cap.outputs, response)

        if failure is None:
            try:
                for slot in cap.outputs:
                    env.bind(slot, outputs[slot])
            except SlotRebound as exc:
                failure = str(exc)

        if failure is None:
            facts.add_all(cap.postconditions)
            facts.add_all(slot_known_fact(slot) for slot in cap.outputs)
            steps.append(
                StepRecord(
                    node_id=node.node_id,
                    capability_id=node.capability_id,
                    agent_id=node.agent_id,
                    status=STATUS_SUCCEEDED,
                    inputs_used=inputs,
                    outputs_received=outputs,
                )
            )
        else:
            aborted = True
            steps.append(
                StepRecord(
                    node_id=node.node_id,
                    capability_id=node.capability_id,
                    agent_id=node.agent_id,
                    status=STATUS_FAILED,
                    inputs_used=inputs,
                    outputs_received={},
                    error=failure,
                )
            )

    return ExecutionTrace(
        graph_fingerprint=graph_fingerprint(graph),
        steps=tuple(steps),
        outcome=OUTCOME_ABORTED if aborted else OUTCOME_COMPLETED,
        final_bindings=env.as_dict(),
    )


def _check_output_contract(
    declared: tuple[str, ...], response: dict
) -> tuple[str | None, dict[str, Any]]:
    """A response must contain exactly the declared output slots."""
    missing = [slot for slot in declared if slot not in response]
    if missing:
        return f"missing declared output slot(s): {', '.join(missing)}", {}
    extra = sorted(set(response) - set(declared))
    if extra:
        return f"undeclared output slot(s): {', '.join(extra)}", {}
    return None, dict(response)


def replay_check(trace: ExecutionTrace, graph: TaskGraph) -> ValidationReport:
    """Verify a trace against its graph: order, fingerprint, data flow."""
    report = ValidationReport()

    if trace.graph_fingerprint != graph_fingerprint(graph):
        report.add("trace fingerprint does not match the graph")

    order, leftover = _try_canonical_order(graph.nodes, graph.edges)
    if leftover:
        report.add("graph is cyclic")
        return report
    if [step.node_id for step in trace.steps] != order:
        report.add("step order does not equal the canonical topological order")

    _check_status_shape(trace, report)
    _check_write_once(trace, report)
    _check_data_flow(trace, graph, report)
    return report


def _check_status_shape(trace: ExecutionTrace, report: ValidationReport) -> None:
    statuses = [step.status for step in trace.steps]
    if trace.outcome == OUTCOME_COMPLETED:
        if any(status != STATUS_SUCCEEDED for status in statuses):
            report.add("completed trace contains non-succeeded steps")
        return
    failed_positions = [i for i, status in enumerate(statuses) if status == STATUS_FAILED]
    if len(failed_positions) != 1:
        report.add(f"aborted trace must contain exactly one failed step, found {len(failed_positions)}")
        return
    pivot = failed_positions[0]
    if any(status != STATUS_SUCCEEDED for status in statuses[:pivot]):
        report.add("steps before the failed step must all be succeeded")
    if any(status != STATUS_SKIPPED for status in statuses[pivot + 1 :]):
        report.add("steps after the failed step must all be skipped")
    if trace.steps[pivot].error is None:
        report.add("failed step carries no error")
    for step in trace.steps:
        if step.status == STATUS_SKIPPED and (step.inputs_used or step.outputs_received):
            report.add(f"skipped step {step.node_id} carries inputs or outputs")


def _check_write_once(trace: ExecutionTrace, report: ValidationReport) -> None:
    producers: dict[str, int] = {}
    for step in trace.steps:
        for slot in step.outputs_received:
            if slot in producers:
                report.add(
                    f"slot {slot!r} bound by two steps "
                    f"({producers[slot]} and {step.node_id}): write-once violated"
                )
            producers[slot] = step.node_id
        if step.status == STATUS_SUCCEEDED:
            for slot, value in step.outputs_received.items():
                if slot not in trace.final_bindings:
                    report.add(f"output slot {slot!r} missing from final bindings")
                elif trace.final_bindings[slot] != value:
                    report.add(f"final binding of {slot!r} differs from the step output")


def _check_data_flow(
    trace: ExecutionTrace, graph: TaskGraph, report: ValidationReport
) -> None:
    """Every input of a succeeded step came from its unique producer edge or
    from a source binding."""
    outputs_by_node = {step.node_id: step.outputs_received for step in trace.steps}
    edges_in: dict[tuple[int, str], list[int]] = {}
    for edge in graph.edges:
        edges_in.setdefault((edge.to_node, edge.slot), []).append(edge.from_node)
    source = set(graph.source_bindings)

    for step in trace.steps:
        if step.status != STATUS_SUCCEEDED:
            continue
        for slot, value in step.inputs_used.items():
            producers = edges_in.get((step.node_id, slot), [])
            if producers:
                producer_outputs = outputs_by_node.get(producers[0], {})
                if producer_outputs.get(slot) != value:
                    report.add(
                        f"input {slot!r} of step {step.node_id} does not equal "
                        f"its producer's output"
                    )
            elif slot in source:
                if slot in trace.final_bindings and trace.final_bindings[slot] != value:
                    report.add(
                        f"input {slot!r} of step {step.node_id} does not equal "
                        f"the goal binding"
                    )
            else:
                report.add(
                    f"input {slot!r} of step {step.node_id} has neither a producer "
                    "edge nor a source binding"
                )
