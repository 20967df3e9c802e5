"""Whole-document validation (structure + checksum chain) and skeleton generation."""

from __future__ import annotations

import os
import uuid
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path, PurePosixPath
from typing import Callable

from dfskit.errors import EmptyDatasetError
from dfskit.integrity import checksum_path, compute_meta_checksum, seal
from dfskit.model import (
    DEFAULT_SCHEMA_URI,
    METAFILE_NAME,
    DataFileEntry,
    Finding,
    MetaBlock,
    Metafile,
    structural_findings,
    utc_now,
)

KNOWN_ENCODINGS = frozenset(
    {
        "csv", "tsv", "json", "jsonl", "ndjson", "xml", "txt", "md", "xlsx", "xls",
        "parquet", "feather", "h5", "hdf5", "nc", "cdf", "grib", "rdf", "ttl",
        "png", "jpg", "jpeg", "gif", "tif", "tiff", "bmp", "svg",
        "mp3", "wav", "flac", "mp4", "avi", "mov",
        "pdf", "docx", "html", "zip", "gz", "tar",
    }
)


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json(self) -> dict:
        return {"ok": self.ok, "findings": [f.to_json() for f in self.findings]}


def validate(m: Metafile, data_root: str | Path | None = None) -> ValidationReport:
    """Check structure, the meta checksum and, given ``data_root``, every data file.

    Raises OSError only when ``data_root`` is given but cannot be read.
    """
    findings = structural_findings(m)
    expected = compute_meta_checksum(m)
    if expected != m.checksum:
        findings.append(
            Finding(
                "error",
                "meta-checksum",
                "checksum",
                f"meta checksum mismatch: stored {m.checksum}, computed {expected}",
            )
        )
    if data_root is not None:
        findings.extend(_file_findings(m, Path(data_root)))
    return ValidationReport(tuple(findings))


def _file_findings(m: Metafile, root: Path) -> list[Finding]:
    if not root.is_dir():
        raise NotADirectoryError(f"data root is not a readable directory: {root}")
    os.listdir(root)  # surfaces permission errors as OSError
    out = []
    for i, entry in enumerate(m.meta.files):
        p = f"meta.files[{i}]"
        target = root.joinpath(*PurePosixPath(entry.path).parts)
        if not target.is_file():
            out.append(Finding("error", "missing-file", f"{p}.path", f"missing file {entry.path}"))
            continue
        actual = checksum_path(target)
        if actual != entry.checksum:
            out.append(
                Finding(
                    "error",
                    "file-checksum",
                    f"{p}.checksum",
                    f"file checksum mismatch for {entry.path}: stored {entry.checksum}, computed {actual}",
                )
            )
    return out


def infer_encoding(path: str) -> str:
    ext = PurePosixPath(path).suffix.lower().lstrip(".")
    return ext if ext in KNOWN_ENCODINGS else "binary"


def scan_data_files(data_root: str | Path) -> list[str]:
    """Relative POSIX paths of every regular file under ``data_root``, sorted.

    A ``metafile.json`` directly under the root is the dataset's own entry
    point and is not listed.
    """
    root = Path(data_root)
    if not root.is_dir():
        raise NotADirectoryError(f"not a directory: {root}")
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in filenames:
            full = Path(dirpath, name)
            if not full.is_file():
                continue
            rel = full.relative_to(root).as_posix()
            if rel == METAFILE_NAME:
                continue
            found.append(rel)
    return sorted(found)


def generate_skeleton(
    data_root: str | Path,
    name: str,
    *,
    now: datetime | None = None,
    new_id: Callable[[], uuid.UUID] = uuid.uuid4,
) -> Metafile:
    """Describe every file under ``data_root`` in a fresh version-1 metafile."""
    if not name:
        raise ValueError("dataset name must not be empty")
    root = Path(data_root)
    paths = scan_data_files(root)
    if not paths:
        raise EmptyDatasetError(f"no data files found under {root}")
    now = utc_now() if now is None else now
    files = tuple(
        DataFileEntry(
            local_id=f"f{i}",
            path=rel,
            encoding=infer_encoding(rel),
            version=1,
            checksum=checksum_path(root.joinpath(*PurePosixPath(rel).parts)),
        )
        for i, rel in enumerate(paths, start=1)
    )
    skeleton = Metafile(
        schema_uri=DEFAULT_SCHEMA_URI,
        id=str(new_id()),
        meta_version=1,
        created=now,
        modified=now,
        checksum="",
        meta=MetaBlock(name=name, files=files),
    )
    return seal(skeleton)
