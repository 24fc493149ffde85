"""Canonical JSON encoding and content digests.

Canonical form here means: UTF-8, no insignificant whitespace, single line,
and keys emitted in the order the caller built them (field order is part of
each document's contract, so callers construct dicts in the fixed order and
this module must not re-sort them).
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sorted_map(mapping: dict) -> dict:
    """Copy of ``mapping`` with keys in sorted order (for canonical output)."""
    return {key: mapping[key] for key in sorted(mapping)}
