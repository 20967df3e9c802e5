"""Structural differences between two JSON documents, addressed by path."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class Change:
    op: str  # "added" | "removed" | "changed"
    path: str
    old: Any = None
    new: Any = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"op": self.op, "path": self.path}
        if self.op != "added":
            out["old"] = self.old
        if self.op != "removed":
            out["new"] = self.new
        return out


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def json_diff(old: Any, new: Any, path: str = "") -> list[Change]:
    """Ordered list of changes turning ``old`` into ``new``.

    Objects are compared key by key (sorted), arrays index by index; a type
    change replaces the node as a whole.
    """
    if isinstance(old, dict) and isinstance(new, dict):
        changes: list[Change] = []
        for key in sorted(old.keys() | new.keys()):
            sub = _join(path, key)
            if key not in new:
                changes.append(Change("removed", sub, old=old[key]))
            elif key not in old:
                changes.append(Change("added", sub, new=new[key]))
            else:
                changes.extend(json_diff(old[key], new[key], sub))
        return changes
    if isinstance(old, list) and isinstance(new, list):
        changes = []
        for i in range(max(len(old), len(new))):
            sub = f"{path}[{i}]"
            if i >= len(new):
                changes.append(Change("removed", sub, old=old[i]))
            elif i >= len(old):
                changes.append(Change("added", sub, new=new[i]))
            else:
                changes.extend(json_diff(old[i], new[i], sub))
        return changes
    same_kind = type(old) is type(new) or (
        isinstance(old, (int, float)) and isinstance(new, (int, float))
        and not isinstance(old, bool) and not isinstance(new, bool)
    )
    if not same_kind or old != new:
        return [Change("changed", path or "<root>", old=old, new=new)]
    return []
