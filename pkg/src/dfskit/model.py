"""Metafile data model, decoding from JSON, and structural checks.

All model types are frozen dataclasses. Keys a reader does not recognise
are kept in each object's ``extra`` mapping and written back unchanged, so
a parse/serialize cycle never drops extension data. Treat ``extra`` as
read-only.
"""

from __future__ import annotations

import json
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Iterable, Mapping

from dfskit.errors import MetafileSyntaxError, SchemaError

FIELD_TYPES = frozenset(
    {"string", "integer", "number", "boolean", "datetime", "categorical", "binary"}
)

METAFILE_NAME = "metafile.json"
DEFAULT_SCHEMA_URI = "urn:dfs:schema:metafile:v1"

CHECKSUM_RE = re.compile(r"^sha256:[0-9a-f]{64}$")
TIMESTAMP_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")
URI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:\S+$")
EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+$")
CITATION_RE = re.compile(r"^([0-9a-f\-]{36})@v([1-9][0-9]*)$")
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    if not TIMESTAMP_RE.match(text):
        raise ValueError(f"expected YYYY-MM-DDTHH:MM:SSZ, got {text!r}")
    return datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)


def utc_now() -> datetime:
    """Current UTC time truncated to whole seconds."""
    return datetime.now(timezone.utc).replace(microsecond=0)


def is_canonical_uuid(text: str) -> bool:
    try:
        return str(uuid.UUID(text)) == text
    except (ValueError, AttributeError, TypeError):
        return False


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class DatasetRef:
    id: str
    meta_version: int
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def __str__(self) -> str:
        return f"{self.id}@v{self.meta_version}"

    @classmethod
    def parse(cls, text: str) -> DatasetRef:
        """Parse the ``<uuid>@v<N>`` citation form."""
        match = CITATION_RE.match(text.strip())
        if not match or not is_canonical_uuid(match.group(1)):
            raise ValueError(f"not a dataset citation (expected <uuid>@v<N>): {text!r}")
        return cls(match.group(1), int(match.group(2)))

    def to_json(self) -> dict[str, Any]:
        return {**self.extra, "id": self.id, "meta-version": self.meta_version}


@dataclass(frozen=True)
class FieldRef:
    file_local_id: str
    field_name: str
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def __str__(self) -> str:
        return f"{self.file_local_id}/{self.field_name}"

    def to_json(self) -> dict[str, Any]:
        return {**self.extra, "file": self.file_local_id, "field": self.field_name}


@dataclass(frozen=True)
class FieldDef:
    name: str
    type: str
    description: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def to_json(self) -> dict[str, Any]:
        return {
            **self.extra,
            "name": self.name,
            "type": self.type,
            "description": self.description,
        }


@dataclass(frozen=True)
class Measurement:
    kind: str
    device: str = ""
    unit: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def to_json(self) -> dict[str, Any]:
        return {**self.extra, "type": self.kind, "device": self.device, "unit": self.unit}


@dataclass(frozen=True)
class DataFileEntry:
    local_id: str
    path: str
    encoding: str
    version: int
    checksum: str
    description: str = ""
    measurement: Measurement | None = None
    fields: tuple[FieldDef, ...] = ()
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def field_named(self, name: str) -> FieldDef | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            **self.extra,
            "$id": self.local_id,
            "path": self.path,
            "encoding": self.encoding,
            "version": self.version,
            "checksum": self.checksum,
            "description": self.description,
            "fields": [f.to_json() for f in self.fields],
        }
        if self.measurement is not None:
            out["measurement"] = self.measurement.to_json()
        return out


@dataclass(frozen=True)
class Link:
    type: str
    fields: tuple[FieldRef, ...]
    description: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def to_json(self) -> dict[str, Any]:
        return {
            **self.extra,
            "type": self.type,
            "description": self.description,
            "fields": [r.to_json() for r in self.fields],
        }


@dataclass(frozen=True)
class Author:
    local_id: str
    name: str
    affiliation: str = ""
    email: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def to_json(self) -> dict[str, Any]:
        return {
            **self.extra,
            "$id": self.local_id,
            "name": self.name,
            "affiliation": self.affiliation,
            "email": self.email,
        }


@dataclass(frozen=True)
class MetaBlock:
    name: str
    files: tuple[DataFileEntry, ...]
    description: str = ""
    copyright: str = ""
    keywords: tuple[str, ...] = ()
    authors: tuple[Author, ...] = ()
    links: tuple[Link, ...] = ()
    derived_from: tuple[DatasetRef, ...] | None = None
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def file(self, local_id: str) -> DataFileEntry | None:
        for f in self.files:
            if f.local_id == local_id:
                return f
        return None

    def resolve(self, ref: FieldRef) -> FieldDef | None:
        entry = self.file(ref.file_local_id)
        return entry.field_named(ref.field_name) if entry else None

    def field_refs(self) -> list[FieldRef]:
        """Every field, in file order then field order."""
        return [FieldRef(f.local_id, d.name) for f in self.files for d in f.fields]

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            **self.extra,
            "name": self.name,
            "description": self.description,
            "copyright": self.copyright,
            "keywords": list(self.keywords),
            "author": [a.to_json() for a in self.authors],
            "files": [f.to_json() for f in self.files],
            "links": [link.to_json() for link in self.links],
        }
        if self.derived_from is not None:
            out["derived-from"] = [r.to_json() for r in self.derived_from]
        return out


@dataclass(frozen=True)
class Metafile:
    schema_uri: str
    id: str
    meta_version: int
    created: datetime
    modified: datetime
    checksum: str
    meta: MetaBlock
    extra: Mapping[str, Any] = field(default_factory=dict, hash=False)

    @property
    def ref(self) -> DatasetRef:
        return DatasetRef(self.id, self.meta_version)

    def to_json(self) -> dict[str, Any]:
        return {
            **self.extra,
            "$schema": self.schema_uri,
            "id": self.id,
            "meta-version": self.meta_version,
            "created": format_timestamp(self.created),
            "modified": format_timestamp(self.modified),
            "checksum": self.checksum,
            "meta": self.meta.to_json(),
        }


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.path}: {self.message}"

    def to_json(self) -> dict[str, str]:
        return {
            "severity": self.severity,
            "code": self.code,
            "path": self.path,
            "message": self.message,
        }


# --------------------------------------------------------------------------
# decoding

_MISSING: Any = object()


def _kind_name(kind: type) -> str:
    return {str: "string", int: "integer", list: "array", dict: "object"}[kind]


def _take(obj: dict, key: str, path: str, kind: type, default: Any = _MISSING) -> Any:
    sub = f"{path}.{key}" if path else key
    if key not in obj:
        if default is _MISSING:
            raise SchemaError(sub, "required key is missing")
        return default
    value = obj[key]
    ok = isinstance(value, kind) and not (kind is int and isinstance(value, bool))
    if not ok:
        raise SchemaError(sub, f"expected {_kind_name(kind)}, got {type(value).__name__}")
    return value


def _extras(obj: dict, known: Iterable[str]) -> dict[str, Any]:
    known = set(known)
    return {k: v for k, v in obj.items() if k not in known}


def _items(obj: dict, key: str, path: str, decode: Callable[[Any, str], Any]) -> tuple:
    values = _take(obj, key, path, list, [])
    sub = f"{path}.{key}" if path else key
    return tuple(decode(v, f"{sub}[{i}]") for i, v in enumerate(values))


def _obj(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected object, got {type(value).__name__}")
    return value


def _decode_ref(value: Any, path: str) -> FieldRef:
    obj = _obj(value, path)
    return FieldRef(
        _take(obj, "file", path, str),
        _take(obj, "field", path, str),
        _extras(obj, ("file", "field")),
    )


def _decode_field(value: Any, path: str) -> FieldDef:
    obj = _obj(value, path)
    return FieldDef(
        name=_take(obj, "name", path, str),
        type=_take(obj, "type", path, str),
        description=_take(obj, "description", path, str, ""),
        extra=_extras(obj, ("name", "type", "description")),
    )


def _decode_measurement(value: Any, path: str) -> Measurement:
    obj = _obj(value, path)
    return Measurement(
        kind=_take(obj, "type", path, str),
        device=_take(obj, "device", path, str, ""),
        unit=_take(obj, "unit", path, str, ""),
        extra=_extras(obj, ("type", "device", "unit")),
    )


_FILE_KEYS = (
    "$id", "path", "encoding", "version", "checksum", "description", "measurement", "fields",
)


def _decode_file(value: Any, path: str) -> DataFileEntry:
    obj = _obj(value, path)
    measurement = None
    if "measurement" in obj:
        measurement = _decode_measurement(obj["measurement"], f"{path}.measurement")
    return DataFileEntry(
        local_id=_take(obj, "$id", path, str),
        path=_take(obj, "path", path, str),
        encoding=_take(obj, "encoding", path, str),
        version=_take(obj, "version", path, int),
        checksum=_take(obj, "checksum", path, str),
        description=_take(obj, "description", path, str, ""),
        measurement=measurement,
        fields=_items(obj, "fields", path, _decode_field),
        extra=_extras(obj, _FILE_KEYS),
    )


def _decode_link(value: Any, path: str) -> Link:
    obj = _obj(value, path)
    if "fields" not in obj:
        raise SchemaError(f"{path}.fields", "required key is missing")
    return Link(
        type=_take(obj, "type", path, str),
        fields=_items(obj, "fields", path, _decode_ref),
        description=_take(obj, "description", path, str, ""),
        extra=_extras(obj, ("type", "description", "fields")),
    )


def _decode_author(value: Any, path: str) -> Author:
    obj = _obj(value, path)
    return Author(
        local_id=_take(obj, "$id", path, str),
        name=_take(obj, "name", path, str),
        affiliation=_take(obj, "affiliation", path, str, ""),
        email=_take(obj, "email", path, str, ""),
        extra=_extras(obj, ("$id", "name", "affiliation", "email")),
    )


def _decode_dataset_ref(value: Any, path: str) -> DatasetRef:
    obj = _obj(value, path)
    return DatasetRef(
        _take(obj, "id", path, str),
        _take(obj, "meta-version", path, int),
        _extras(obj, ("id", "meta-version")),
    )


_META_KEYS = (
    "name", "description", "copyright", "keywords", "author", "files", "links", "derived-from",
)


def _decode_meta(value: Any, path: str) -> MetaBlock:
    obj = _obj(value, path)
    keywords = _take(obj, "keywords", path, list, [])
    for i, kw in enumerate(keywords):
        if not isinstance(kw, str):
            raise SchemaError(f"{path}.keywords[{i}]", "expected string")
    if "files" not in obj:
        raise SchemaError(f"{path}.files", "required key is missing")
    derived = None
    if "derived-from" in obj:
        derived = _items(obj, "derived-from", path, _decode_dataset_ref)
    return MetaBlock(
        name=_take(obj, "name", path, str),
        description=_take(obj, "description", path, str, ""),
        copyright=_take(obj, "copyright", path, str, ""),
        keywords=tuple(keywords),
        authors=_items(obj, "author", path, _decode_author),
        files=_items(obj, "files", path, _decode_file),
        links=_items(obj, "links", path, _decode_link),
        derived_from=derived,
        extra=_extras(obj, _META_KEYS),
    )


_TOP_KEYS = ("$schema", "id", "meta-version", "created", "modified", "checksum", "meta")


def _timestamp(obj: dict, key: str) -> datetime:
    text = _take(obj, key, "", str)
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise SchemaError(key, str(exc)) from None


def decode_metafile(document: Any) -> Metafile:
    """Build a Metafile from already-loaded JSON without structural checks."""
    obj = _obj(document, "<root>")
    if "meta" not in obj:
        raise SchemaError("meta", "required key is missing")
    return Metafile(
        schema_uri=_take(obj, "$schema", "", str),
        id=_take(obj, "id", "", str),
        meta_version=_take(obj, "meta-version", "", int),
        created=_timestamp(obj, "created"),
        modified=_timestamp(obj, "modified"),
        checksum=_take(obj, "checksum", "", str),
        meta=_decode_meta(obj["meta"], "meta"),
        extra=_extras(obj, _TOP_KEYS),
    )


def _no_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            raise MetafileSyntaxError(f"duplicate object key {key!r}")
        out[key] = value
    return out


def _reject_constant(name: str) -> Any:
    raise MetafileSyntaxError(f"non-finite number {name} is not allowed")


def load_json(data: bytes | str) -> Any:
    """Strict JSON load: UTF-8 only, no duplicate keys, no NaN/Infinity."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MetafileSyntaxError(f"document is not valid UTF-8: {exc}") from None
    try:
        return json.loads(
            data,
            object_pairs_hook=_no_duplicate_keys,
            parse_constant=_reject_constant,
        )
    except json.JSONDecodeError as exc:
        raise MetafileSyntaxError(
            f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    except RecursionError:
        raise MetafileSyntaxError("document nesting is too deep") from None


def parse_metafile(data: bytes | str) -> Metafile:
    """Parse a metafile document and check its structural invariants.

    Checksums are *not* compared here; use :func:`dfskit.validation.validate`.
    Raises MetafileSyntaxError for malformed input and SchemaError, carrying
    the path of the first problem and the full list of findings, otherwise.
    """
    m = decode_metafile(load_json(data))
    errors = [f for f in structural_findings(m) if f.severity == "error"]
    if errors:
        raise SchemaError(errors[0].path, errors[0].message, errors)
    return m


# --------------------------------------------------------------------------
# structural invariants


def path_problem(path: str) -> str | None:
    """Why ``path`` is not a normalized relative POSIX path, or None if it is."""
    if not path:
        return "path is empty"
    if "\\" in path:
        return "path must use '/' separators"
    if path.startswith("/"):
        return "path must be relative"
    for segment in path.split("/"):
        if segment in ("", ".", ".."):
            return f"path segment {segment!r} is not allowed"
    return None


def has_name_tokens(name: str) -> bool:
    return any(ch.isalnum() for ch in name)


def structural_findings(m: Metafile) -> list[Finding]:
    """Check every type invariant of ``m`` and return the violations found."""
    out: list[Finding] = []

    def err(code: str, path: str, message: str) -> None:
        out.append(Finding("error", code, path, message))

    def warn(code: str, path: str, message: str) -> None:
        out.append(Finding("warning", code, path, message))

    if not m.schema_uri or not URI_RE.match(m.schema_uri):
        err("schema-uri", "$schema", f"not an absolute URI: {m.schema_uri!r}")
    if not is_canonical_uuid(m.id):
        err("id", "id", f"not a lowercase RFC 4122 UUID: {m.id!r}")
    if m.meta_version < 1:
        err("meta-version", "meta-version", f"must be >= 1, got {m.meta_version}")
    for key, ts in (("created", m.created), ("modified", m.modified)):
        if ts.tzinfo is None or ts.utcoffset() != timezone.utc.utcoffset(None):
            err("timestamp", key, "timestamp must be in UTC")
        elif ts.microsecond:
            err("timestamp", key, "timestamp must have whole-second precision")
    if m.created.tzinfo is not None and m.modified.tzinfo is not None and m.modified < m.created:
        err("timeline", "modified", "modified is earlier than created")
    if not CHECKSUM_RE.match(m.checksum):
        err("checksum-format", "checksum", f"malformed checksum {m.checksum!r}")

    meta = m.meta
    if not meta.name:
        err("empty", "meta.name", "dataset name is empty")
    if not meta.description:
        warn("empty", "meta.description", "dataset has no description")

    seen_keywords: set[str] = set()
    for i, kw in enumerate(meta.keywords):
        p = f"meta.keywords[{i}]"
        if not kw.strip():
            err("keyword", p, "keyword is empty")
        elif kw != kw.lower() or kw != kw.strip():
            err("keyword", p, f"keyword must be a lowercase token: {kw!r}")
        if kw in seen_keywords:
            err("duplicate", p, f"duplicate keyword {kw!r}")
        seen_keywords.add(kw)

    author_ids: set[str] = set()
    for i, a in enumerate(meta.authors):
        p = f"meta.author[{i}]"
        if not a.local_id:
            err("empty", f"{p}.$id", "author $id is empty")
        elif a.local_id in author_ids:
            err("duplicate", f"{p}.$id", f"duplicate author $id {a.local_id!r}")
        author_ids.add(a.local_id)
        if not a.name:
            err("empty", f"{p}.name", "author name is empty")
        if a.email and not EMAIL_RE.match(a.email):
            err("email", f"{p}.email", f"malformed email {a.email!r}")

    if not meta.files:
        err("empty", "meta.files", "a dataset needs at least one file")
    file_ids: set[str] = set()
    paths: set[str] = set()
    for i, f in enumerate(meta.files):
        p = f"meta.files[{i}]"
        if not f.local_id:
            err("empty", f"{p}.$id", "file $id is empty")
        elif f.local_id in file_ids:
            err("duplicate", f"{p}.$id", f"duplicate file $id {f.local_id!r}")
        file_ids.add(f.local_id)
        problem = path_problem(f.path)
        if problem:
            err("path", f"{p}.path", f"{problem}: {f.path!r}")
        elif f.path in paths:
            err("duplicate", f"{p}.path", f"duplicate file path {f.path!r}")
        paths.add(f.path)
        if not f.encoding:
            err("empty", f"{p}.encoding", "encoding is empty")
        if f.version < 1:
            err("version", f"{p}.version", f"must be >= 1, got {f.version}")
        if not CHECKSUM_RE.match(f.checksum):
            err("checksum-format", f"{p}.checksum", f"malformed checksum {f.checksum!r}")
        if f.measurement is not None and not f.measurement.kind:
            err("empty", f"{p}.measurement.type", "measurement type is empty")
        names: set[str] = set()
        for j, d in enumerate(f.fields):
            q = f"{p}.fields[{j}]"
            if not has_name_tokens(d.name):
                err("field-name", f"{q}.name", f"field name needs a letter or digit: {d.name!r}")
            if d.name in names:
                err("duplicate", f"{q}.name", f"duplicate field name {d.name!r}")
            names.add(d.name)
            if d.type not in FIELD_TYPES:
                err("field-type", f"{q}.type", f"unknown field type {d.type!r}")

    for i, link in enumerate(meta.links):
        p = f"meta.links[{i}]"
        if not link.type:
            err("empty", f"{p}.type", "link type is empty")
        if len(link.fields) < 2:
            err("link-arity", f"{p}.fields", "a link needs at least two field references")
        refs: set[tuple[str, str]] = set()
        for j, ref in enumerate(link.fields):
            q = f"{p}.fields[{j}]"
            key = (ref.file_local_id, ref.field_name)
            if key in refs:
                err("duplicate", q, f"duplicate reference {ref}")
            refs.add(key)
            if meta.file(ref.file_local_id) is None:
                err("dangling", q, f"no file with $id {ref.file_local_id!r}")
            elif meta.resolve(ref) is None:
                err("dangling", q, f"file {ref.file_local_id!r} has no field {ref.field_name!r}")

    for i, ref in enumerate(meta.derived_from or ()):
        p = f"meta.derived-from[{i}]"
        if not is_canonical_uuid(ref.id):
            err("id", f"{p}.id", f"not a lowercase RFC 4122 UUID: {ref.id!r}")
        if ref.meta_version < 1:
            err("meta-version", f"{p}.meta-version", f"must be >= 1, got {ref.meta_version}")
    return out
