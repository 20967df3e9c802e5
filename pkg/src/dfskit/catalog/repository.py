"""Filesystem dataset repository with write-once version slots.

Layout::

    <root>/datasets/<id>/v<meta_version>/metafile.json
    <root>/datasets/<id>/v<meta_version>/<data files at their relative paths>

A slot is staged in a sibling temporary directory and renamed into place,
so readers never observe a half-written version.
"""

from __future__ import annotations

import logging
import os
import re
import shutil
import uuid
from pathlib import Path, PurePosixPath

from dfskit.canonical import serialize_canonical
from dfskit.errors import (
    ImmutabilityError,
    IntegrityError,
    MetafileSyntaxError,
    NotFoundError,
    SchemaError,
    ValidationError,
)
from dfskit.integrity import checksum_path, compute_meta_checksum
from dfskit.model import METAFILE_NAME, DatasetRef, Metafile, is_canonical_uuid, parse_metafile
from dfskit.validation import validate

log = logging.getLogger(__name__)

_VERSION_DIR = re.compile(r"^v([1-9][0-9]*)$")


class Repository:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def datasets_dir(self) -> Path:
        return self.root / "datasets"

    def slot(self, ref: DatasetRef) -> Path:
        if not is_canonical_uuid(ref.id) or ref.meta_version < 1:
            raise ValueError(f"invalid dataset reference {ref}")
        return self.datasets_dir / ref.id / f"v{ref.meta_version}"

    def put(self, m: Metafile, data_root: str | Path | None = None) -> DatasetRef:
        """Store one version of a dataset; re-putting identical bytes is a no-op."""
        ref = m.ref
        slot = self.slot(ref)
        payload = serialize_canonical(m)
        if slot.exists():
            self._check_same(slot, payload, ref)
            return ref

        report = validate(m, data_root)
        if not report.ok:
            raise ValidationError(f"refusing to store invalid metafile {ref}", report.errors)
        for entry in m.meta.files:
            if entry.path == METAFILE_NAME:
                raise ValidationError(f"data file path {METAFILE_NAME!r} would shadow the metafile")

        slot.parent.mkdir(parents=True, exist_ok=True)
        staging = slot.parent / f".staging-{uuid.uuid4().hex}"
        staging.mkdir()
        try:
            if data_root is not None:
                for entry in m.meta.files:
                    parts = PurePosixPath(entry.path).parts
                    target = staging.joinpath(*parts)
                    target.parent.mkdir(parents=True, exist_ok=True)
                    shutil.copyfile(Path(data_root).joinpath(*parts), target)
            (staging / METAFILE_NAME).write_bytes(payload)
            try:
                os.rename(staging, slot)
            except OSError:
                # Another writer won the race for this slot.
                if not slot.exists():
                    raise
                self._check_same(slot, payload, ref)
        finally:
            if staging.exists():
                shutil.rmtree(staging)
        log.info("stored %s", ref)
        return ref

    @staticmethod
    def _check_same(slot: Path, payload: bytes, ref: DatasetRef) -> None:
        if (slot / METAFILE_NAME).read_bytes() != payload:
            raise ImmutabilityError(f"{ref} already exists with different content")

    def get(self, ref: DatasetRef) -> Metafile:
        """Load a stored version, verifying its meta checksum and any stored data files."""
        path = self.slot(ref) / METAFILE_NAME
        if not path.is_file():
            raise NotFoundError(f"no dataset {ref} in {self.root}")
        try:
            m = parse_metafile(path.read_bytes())
        except (MetafileSyntaxError, SchemaError) as exc:
            raise IntegrityError(f"stored metafile for {ref} is corrupt: {exc}") from None
        if m.ref != ref:
            raise IntegrityError(f"{path} describes {m.ref}, expected {ref}")
        if compute_meta_checksum(m) != m.checksum:
            raise IntegrityError(f"{ref}: meta checksum mismatch in {path}")
        for entry in m.meta.files:
            data = path.parent.joinpath(*PurePosixPath(entry.path).parts)
            if data.is_file() and checksum_path(data) != entry.checksum:
                raise IntegrityError(f"{ref}: data file {entry.path} fails its checksum")
        return m

    def export(self, ref: DatasetRef, out_dir: str | Path) -> Metafile:
        """Verify a stored version and copy its slot (metafile and data) to ``out_dir``."""
        m = self.get(ref)
        shutil.copytree(self.slot(ref), out_dir, dirs_exist_ok=True)
        return m

    def dataset_ids(self) -> list[str]:
        if not self.datasets_dir.is_dir():
            return []
        return sorted(p.name for p in self.datasets_dir.iterdir() if p.is_dir() and is_canonical_uuid(p.name))

    def versions(self, dataset_id: str) -> list[int]:
        base = self.datasets_dir / dataset_id
        if not base.is_dir():
            return []
        found = []
        for p in base.iterdir():
            match = _VERSION_DIR.match(p.name)
            if match and (p / METAFILE_NAME).is_file():
                found.append(int(match.group(1)))
        return sorted(found)

    def latest(self, dataset_id: str) -> DatasetRef | None:
        versions = self.versions(dataset_id)
        return DatasetRef(dataset_id, versions[-1]) if versions else None

    def refs(self) -> list[DatasetRef]:
        return [DatasetRef(i, v) for i in self.dataset_ids() for v in self.versions(i)]
