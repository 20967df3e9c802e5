"""Checksum chain, version bumps and citation identifiers."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path

from dfskit.canonical import serialize_canonical
from dfskit.errors import ClockError, UnknownFileError
from dfskit.model import Metafile, utc_now

CHECKSUM_PREFIX = "sha256:"
_CHUNK = 1 << 20


def compute_file_checksum(data: bytes) -> str:
    return CHECKSUM_PREFIX + hashlib.sha256(data).hexdigest()


def checksum_path(path: str | Path) -> str:
    """Checksum of a file on disk, read in chunks."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(_CHUNK), b""):
            digest.update(chunk)
    return CHECKSUM_PREFIX + digest.hexdigest()


def compute_meta_checksum(m: Metafile) -> str:
    """Hash of the canonical bytes of ``m.meta``; ``m.checksum`` itself is not an input."""
    return compute_file_checksum(serialize_canonical(m.meta))


def seal(m: Metafile) -> Metafile:
    """Return ``m`` with its top-level checksum recomputed."""
    return replace(m, checksum=compute_meta_checksum(m))


@dataclass(frozen=True)
class VersionBump:
    kind: str  # "meta_only" | "file_change"
    changed_file_local_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("meta_only", "file_change"):
            raise ValueError(f"unknown bump kind {self.kind!r}")
        if self.kind == "file_change" and not self.changed_file_local_ids:
            raise ValueError("a file_change bump must name at least one file")
        if self.kind == "meta_only" and self.changed_file_local_ids:
            raise ValueError("a meta_only bump cannot name files")

    @classmethod
    def meta_only(cls) -> VersionBump:
        return cls("meta_only")

    @classmethod
    def file_change(cls, *local_ids: str) -> VersionBump:
        return cls("file_change", tuple(local_ids))


def bump(m: Metafile, change: VersionBump, now: datetime | None = None) -> Metafile:
    """Return a new version of ``m``.

    The caller is responsible for having updated the stored checksum of every
    changed file first; this only moves version counters and the timeline.
    """
    now = utc_now() if now is None else now
    if now < m.modified:
        raise ClockError(f"bump time {now.isoformat()} is earlier than modified {m.modified.isoformat()}")
    files = m.meta.files
    if change.kind == "file_change":
        known = {f.local_id for f in files}
        missing = [fid for fid in change.changed_file_local_ids if fid not in known]
        if missing:
            raise UnknownFileError(f"no file with $id {missing[0]!r}")
        changed = set(change.changed_file_local_ids)
        files = tuple(
            replace(f, version=f.version + 1) if f.local_id in changed else f for f in files
        )
    bumped = replace(
        m,
        meta_version=m.meta_version + 1,
        modified=now,
        meta=replace(m.meta, files=files),
    )
    return seal(bumped)


def cite(m: Metafile) -> str:
    return f"{m.id}@v{m.meta_version}"
