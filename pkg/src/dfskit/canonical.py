"""Deterministic JSON encoding.

Rules: object members sorted by code point of the key, no insignificant
whitespace, UTF-8 output, minimal string escaping, no NaN/Infinity.
Every checksum in a metafile is computed over these bytes.
"""

from __future__ import annotations

import json
from typing import Any


def to_plain(value: Any) -> Any:
    """Convert model objects (anything with ``to_json``) into plain JSON values."""
    if hasattr(value, "to_json"):
        return to_plain(value.to_json())
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    return value


def canonical_dumps(value: Any) -> str:
    return json.dumps(
        to_plain(value),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def serialize_canonical(value: Any) -> bytes:
    """Return the canonical UTF-8 bytes of a metafile, any part of one, or plain JSON."""
    return canonical_dumps(value).encode("utf-8")
