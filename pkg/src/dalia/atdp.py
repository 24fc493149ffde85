"""Task discovery: task declarations and feasibility against a capability catalog.

A task declaration names a higher-level objective, the slots it consumes and
delivers, and the exact pool of capability ids that may be composed to achieve
it. Documents travel as JSON with a fixed field order:

    {"task_id": "restaurant.booking",
     "intent": "book_restaurant",
     "inputs": ["location", "date", "party_size"],
     "outputs": ["booking_confirmation"],
     "capabilities": ["restaurant.search", "restaurant.reserve"]}
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from .canonical import canonical_bytes
from .capabilities import (
    Capability,
    CapabilityId,
    capability_id_problems,
    check_fields,
    check_token_list,
    is_identifier,
    load_document,
)
from .errors import InvariantViolation, SchemaViolation

TASK_FIELDS = ("task_id", "intent", "inputs", "outputs", "capabilities")


@dataclass(frozen=True)
class TaskDeclaration:
    """A declared objective and the capability pool that can realize it."""

    task_id: CapabilityId
    intent: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    capabilities: tuple[CapabilityId, ...]

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id.render(),
            "intent": self.intent,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "capabilities": [cid.render() for cid in self.capabilities],
        }


@dataclass(frozen=True)
class FeasibilityReport:
    """Whether a task can be grounded, and every defect found if not."""

    feasible: bool
    missing_capabilities: tuple[CapabilityId, ...]
    uncovered_outputs: tuple[str, ...]
    unreachable_inputs: tuple[str, ...]
    diagnostics: tuple[str, ...]


def parse_task(document: Any) -> TaskDeclaration:
    """Parse and validate one task declaration; errors aggregate every rule broken."""
    data = load_document(document, "task")
    schema: list[str] = []
    invariant: list[str] = []

    schema += check_fields(data, TASK_FIELDS, "task")

    task_id = None
    if "task_id" in data:
        id_problems = capability_id_problems(data["task_id"], label="task_id")
        if id_problems:
            invariant += id_problems
        else:
            task_id = CapabilityId.parse(data["task_id"])

    if "intent" in data:
        if not isinstance(data["intent"], str):
            schema.append(f"intent must be a string, got {type(data['intent']).__name__}")
        elif not is_identifier(data["intent"]):
            invariant.append(f"intent is not a lowercase identifier: {data['intent']!r}")

    lists: dict[str, list[str]] = {}
    for name in ("inputs", "outputs"):
        if name in data:
            lists[name] = check_token_list(data[name], name, schema, invariant)
    if "outputs" in lists and not lists["outputs"]:
        invariant.append("outputs must be non-empty")

    capability_ids: list[CapabilityId] = []
    if "capabilities" in data:
        raw = data["capabilities"]
        if not isinstance(raw, list):
            schema.append(f"capabilities must be a list, got {type(raw).__name__}")
        else:
            for index, item in enumerate(raw):
                id_problems = capability_id_problems(item, label=f"capabilities[{index}]")
                if id_problems:
                    invariant += id_problems
                else:
                    capability_ids.append(CapabilityId.parse(item))
            if not raw:
                invariant.append("empty capability set: a task must name at least one capability")
            seen: set[CapabilityId] = set()
            for cid in capability_ids:
                if cid in seen:
                    invariant.append(f"duplicate capability {cid} in capabilities")
                seen.add(cid)

    if schema:
        raise SchemaViolation(schema + invariant)
    if invariant:
        raise InvariantViolation(invariant)
    assert task_id is not None
    return TaskDeclaration(
        task_id=task_id,
        intent=data["intent"],
        inputs=tuple(lists["inputs"]),
        outputs=tuple(lists["outputs"]),
        capabilities=tuple(capability_ids),
    )


def canonical_serialize_task(task: TaskDeclaration) -> bytes:
    """Byte-exact canonical form; parse_task inverts it."""
    return canonical_bytes(task.to_json())


def check_feasibility(
    task: TaskDeclaration,
    catalog: Iterable[Capability],
    provided_inputs: Iterable[str],
) -> FeasibilityReport:
    """Decide whether ``task`` can be grounded in ``catalog``.

    Three independent defect classes are computed:

    * missing_capabilities: pool members absent from the catalog;
    * uncovered_outputs: task outputs no present pool member produces;
    * unreachable_inputs: inputs of present pool members that the slot
      closure (fire a capability once all its inputs are reachable, starting
      from ``provided_inputs``, to fixpoint) never reaches.

    The task is feasible iff all three lists are empty. Pure function; safe
    to call concurrently.
    """
    by_id = {cap.capability_id: cap for cap in catalog}
    provided = set(provided_inputs)

    missing = sorted(cid for cid in task.capabilities if cid not in by_id)
    present = [by_id[cid] for cid in task.capabilities if cid in by_id]

    produced = {slot for cap in present for slot in cap.outputs}
    uncovered = sorted(slot for slot in task.outputs if slot not in produced)

    reachable = set(provided)
    fired: set[CapabilityId] = set()
    changed = True
    while changed:
        changed = False
        for cap in present:
            if cap.capability_id in fired:
                continue
            if all(slot in reachable for slot in cap.inputs):
                fired.add(cap.capability_id)
                reachable.update(cap.outputs)
                changed = True
    unreachable = sorted(
        {slot for cap in present for slot in cap.inputs if slot not in reachable}
    )

    diagnostics = (
        [f"capability {cid} not in catalog" for cid in missing]
        + [f"task output {slot!r} produced by no pool capability" for slot in uncovered]
        + [f"input slot {slot!r} never becomes reachable" for slot in unreachable]
    )
    return FeasibilityReport(
        feasible=not (missing or uncovered or unreachable),
        missing_capabilities=tuple(missing),
        uncovered_outputs=tuple(uncovered),
        unreachable_inputs=tuple(unreachable),
        diagnostics=tuple(diagnostics),
    )
