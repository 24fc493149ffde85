"""Capability declarations: parsing, validation, canonical serialization.

A capability is a declared executable operation: a two-segment id, role and
domain tags, named input/output slots, and precondition/postcondition fact
tokens. Declarations travel as JSON objects with a fixed field order:

    {"capability_id": "restaurant.search",
     "role": "information_retrieval",
     "domain": "food",
     "inputs": ["location", "date", "party_size"],
     "outputs": ["restaurant_list"],
     "preconditions": ["location_known"],
     "postconditions": ["results_available"]}

All values in this module are immutable after construction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any

from .canonical import canonical_bytes
from .errors import (
    InvariantViolation,
    MalformedDocument,
    SchemaViolation,
    ValidationError,
    ValidationReport,
)

# Identifier grammar shared by slot names, fact tokens, intents, server ids
# and both segments of a capability id.
IDENTIFIER_RE = re.compile(r"[a-z][a-z0-9_]*\Z")

CAPABILITY_FIELDS = (
    "capability_id",
    "role",
    "domain",
    "inputs",
    "outputs",
    "preconditions",
    "postconditions",
)


def is_identifier(value: Any) -> bool:
    return isinstance(value, str) and IDENTIFIER_RE.match(value) is not None


@dataclass(frozen=True, order=True)
class CapabilityId:
    """Two-segment capability name, rendered as ``namespace.name``.

    Ordering is lexicographic on the rendered form (the field tuple order
    coincides with it because ``.`` sorts below every identifier character).
    """

    namespace: str
    name: str

    @classmethod
    def parse(cls, text: Any) -> CapabilityId:
        problems = capability_id_problems(text)
        if problems:
            raise InvariantViolation(problems)
        namespace, name = text.split(".")
        return cls(namespace, name)

    def render(self) -> str:
        return f"{self.namespace}.{self.name}"

    def __str__(self) -> str:
        return self.render()


def capability_id_problems(text: Any, label: str = "capability_id") -> list[str]:
    """Every rule the given capability-id text violates (empty if valid)."""
    if not isinstance(text, str):
        return [f"{label} must be a string, got {type(text).__name__}"]
    segments = text.split(".")
    if len(segments) != 2:
        return [f"{label} must have exactly two dot-separated segments: {text!r}"]
    problems = []
    for part, segment in zip(("namespace", "name"), segments):
        if not is_identifier(segment):
            problems.append(
                f"{label} {part} is not a lowercase identifier: {segment!r}"
            )
    return problems


@dataclass(frozen=True)
class Capability:
    """A declared executable operation."""

    capability_id: CapabilityId
    role: str
    domain: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    preconditions: tuple[str, ...] = ()
    postconditions: tuple[str, ...] = ()

    def to_json(self) -> dict:
        """JSON document in the canonical field order."""
        return {
            "capability_id": self.capability_id.render(),
            "role": self.role,
            "domain": self.domain,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "preconditions": list(self.preconditions),
            "postconditions": list(self.postconditions),
        }


def load_document(document: Any, kind: str) -> dict:
    """Decode ``document`` (text, bytes, or an already-parsed dict) to a dict.

    Raises MalformedDocument when the text does not parse or the root is not
    an object.
    """
    if isinstance(document, (bytes, bytearray)):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument([f"{kind} document is not UTF-8: {exc}"]) from exc
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedDocument([f"{kind} document is not valid JSON: {exc}"]) from exc
    if not isinstance(document, dict):
        raise MalformedDocument(
            [f"{kind} document root must be an object, got {type(document).__name__}"]
        )
    return document


def check_fields(data: dict, required: tuple[str, ...], kind: str) -> list[str]:
    """Schema problems for missing or unexpected top-level fields."""
    problems = [f"missing required field {name!r}" for name in required if name not in data]
    problems += [
        f"unexpected field {name!r} in {kind} document"
        for name in sorted(set(data) - set(required))
    ]
    return problems


def check_token_list(
    value: Any, label: str, schema_problems: list[str], invariant_problems: list[str]
) -> list[str]:
    """Validate a JSON list of identifier tokens; returns the usable tokens.

    Shape problems go to ``schema_problems``; identifier and duplicate
    problems to ``invariant_problems``.
    """
    if not isinstance(value, list):
        schema_problems.append(f"{label} must be a list, got {type(value).__name__}")
        return []
    tokens = []
    for index, item in enumerate(value):
        if not isinstance(item, str):
            schema_problems.append(f"{label}[{index}] must be a string")
        elif not is_identifier(item):
            invariant_problems.append(
                f"{label}[{index}] is not a lowercase identifier: {item!r}"
            )
        else:
            tokens.append(item)
    seen: set[str] = set()
    for token in tokens:
        if token in seen:
            invariant_problems.append(f"duplicate entry {token!r} in {label}")
        seen.add(token)
    return tokens


def _raise_aggregated(schema_problems: list[str], invariant_problems: list[str]) -> None:
    if schema_problems:
        raise SchemaViolation(schema_problems + invariant_problems)
    if invariant_problems:
        raise InvariantViolation(invariant_problems)


def parse_capability(document: Any) -> Capability:
    """Parse and validate one capability document.

    Raises MalformedDocument, SchemaViolation, or InvariantViolation; the
    error lists every violated rule, not just the first.
    """
    data = load_document(document, "capability")
    schema: list[str] = []
    invariant: list[str] = []

    schema += check_fields(data, CAPABILITY_FIELDS, "capability")

    capability_id = None
    if "capability_id" in data:
        id_problems = capability_id_problems(data["capability_id"])
        if id_problems:
            invariant += id_problems
        else:
            capability_id = CapabilityId.parse(data["capability_id"])

    for tag in ("role", "domain"):
        if tag in data and not isinstance(data[tag], str):
            schema.append(f"{tag} must be a string, got {type(data[tag]).__name__}")

    lists: dict[str, list[str]] = {}
    for name in ("inputs", "outputs", "preconditions", "postconditions"):
        if name in data:
            lists[name] = check_token_list(data[name], name, schema, invariant)

    if all(name in lists for name in ("inputs", "outputs", "postconditions")):
        invariant += _capability_invariants(
            lists["inputs"], lists["outputs"], lists["postconditions"]
        )

    _raise_aggregated(schema, invariant)
    assert capability_id is not None
    return Capability(
        capability_id=capability_id,
        role=data["role"],
        domain=data["domain"],
        inputs=tuple(lists["inputs"]),
        outputs=tuple(lists["outputs"]),
        preconditions=tuple(lists["preconditions"]),
        postconditions=tuple(lists["postconditions"]),
    )


def _capability_invariants(
    inputs: list[str], outputs: list[str], postconditions: list[str]
) -> list[str]:
    problems = []
    overlap = sorted(set(inputs) & set(outputs))
    for slot in overlap:
        problems.append(f"slot {slot!r} appears in both inputs and outputs")
    if not outputs and not postconditions:
        problems.append("no observable effect: outputs and postconditions both empty")
    return problems


def validate_capability(cap: Capability) -> ValidationReport:
    """Re-check all invariants on a programmatically built Capability."""
    report = ValidationReport()
    report.violations += capability_id_problems(cap.capability_id.render())
    for name, tokens in (
        ("inputs", cap.inputs),
        ("outputs", cap.outputs),
        ("preconditions", cap.preconditions),
        ("postconditions", cap.postconditions),
    ):
        seen: set[str] = set()
        for token in tokens:
            if not is_identifier(token):
                report.add(f"{name} entry is not a lowercase identifier: {token!r}")
            if token in seen:
                report.add(f"duplicate entry {token!r} in {name}")
            seen.add(token)
    report.violations += _capability_invariants(
        list(cap.inputs), list(cap.outputs), list(cap.postconditions)
    )
    return report


def canonical_serialize(cap: Capability) -> bytes:
    """Byte-exact canonical form; parse_capability inverts it."""
    return canonical_bytes(cap.to_json())
