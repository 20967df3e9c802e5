"""Pairwise dataset aggregation driven by metafile field graphs.

``aggregate`` gates on graph similarity, scans every field pair for schema
overlap, and folds each matching pair into a new metafile via ``metajoin``.
The inputs are never modified: the result is a brand-new dataset
(fresh id, version 1) whose ``derived-from`` names both sources.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import PurePosixPath
from typing import Any, Callable

from dfskit.errors import CollisionError, IncompatibleDatasetsError, NoMatchError
from dfskit.graph import build_field_graph, field_overlap, graph_similarity
from dfskit.integrity import seal
from dfskit.model import (
    Author,
    DataFileEntry,
    DatasetRef,
    FieldDef,
    FieldRef,
    Link,
    MetaBlock,
    Metafile,
    utc_now,
)

AGGREGATION_LINK = "aggregation"
_MAX_REMAP = 10_000


@dataclass(frozen=True)
class AggregationConfig:
    epsilon: float = 0.1
    sigma: float = 0.6

    def __post_init__(self) -> None:
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not 0 < self.sigma <= 1:
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")


@dataclass(frozen=True)
class MatchedPair:
    alpha: FieldRef
    beta: FieldRef
    overlap: float

    def to_json(self) -> dict[str, Any]:
        return {"alpha": self.alpha.to_json(), "beta": self.beta.to_json(), "overlap": self.overlap}


@dataclass(frozen=True)
class AggregationReport:
    similarity_score: float
    matched_pairs: tuple[MatchedPair, ...]
    files_added: tuple[str, ...]
    result_ref: DatasetRef

    def to_json(self) -> dict[str, Any]:
        return {
            "similarity": self.similarity_score,
            "matched-pairs": [p.to_json() for p in self.matched_pairs],
            "files-added": list(self.files_added),
            "result": self.result_ref.to_json(),
        }


def _next_free(candidate: str, taken: set[str], variant: Callable[[int], str]) -> str:
    if candidate not in taken:
        return candidate
    for n in range(2, _MAX_REMAP):
        option = variant(n)
        if option not in taken:
            return option
    raise CollisionError(f"cannot find a free name for {candidate!r}")


def _suffixed_path(path: str, n: int) -> str:
    p = PurePosixPath(path)
    return str(p.with_name(f"{p.stem}-{n}{p.suffix}"))


def _import_file(meta: MetaBlock, entry: DataFileEntry, needed: FieldDef) -> tuple[MetaBlock, str]:
    """Make sure ``entry`` is part of ``meta``; return the updated block and the entry's local id there.

    Files are identified by content checksum. A reused entry that does not
    yet describe ``needed`` gains that field definition.
    """
    for i, existing in enumerate(meta.files):
        if existing.checksum != entry.checksum:
            continue
        if existing.field_named(needed.name) is None:
            grown = replace(existing, fields=existing.fields + (needed,))
            meta = replace(meta, files=meta.files[:i] + (grown,) + meta.files[i + 1 :])
        return meta, existing.local_id

    paths = {f.path for f in meta.files}
    ids = {f.local_id for f in meta.files}
    path = _next_free(entry.path, paths, lambda n: _suffixed_path(entry.path, n))
    local_id = _next_free(entry.local_id, ids, lambda n: f"{entry.local_id}-{n}")
    imported = replace(entry, local_id=local_id, path=path)
    return replace(meta, files=meta.files + (imported,)), local_id


def _has_link(meta: MetaBlock, link_type: str, refs: set[FieldRef]) -> bool:
    return any(link.type == link_type and set(link.fields) == refs for link in meta.links)


def metajoin(acc: Metafile, beta: Metafile, gamma: FieldRef, delta: FieldRef) -> Metafile:
    """Join field ``delta`` of ``beta`` onto field ``gamma`` of the accumulator.

    Imports delta's file if its content is not already present (remapping
    path and local id on collision) and records an ``aggregation`` link.
    Repeating the same join changes nothing. The accumulator's checksum is
    left stale; ``aggregate`` seals the final result.
    """
    gamma_def = acc.meta.resolve(gamma)
    if gamma_def is None:
        raise KeyError(f"{gamma} does not resolve in the accumulator")
    source = beta.meta.file(delta.file_local_id)
    delta_def = beta.meta.resolve(delta)
    if source is None or delta_def is None:
        raise KeyError(f"{delta} does not resolve in {beta.id}")

    meta, local_id = _import_file(acc.meta, source, delta_def)
    mapped = FieldRef(local_id, delta.field_name)
    if mapped != gamma and not _has_link(meta, AGGREGATION_LINK, {gamma, mapped}):
        score = field_overlap(gamma_def, delta_def)
        link = Link(
            type=AGGREGATION_LINK,
            fields=(gamma, mapped),
            description=f"matched {gamma} ↔ {mapped} (overlap={score:.4f})",
        )
        meta = replace(meta, links=meta.links + (link,))
    return replace(acc, meta=meta)


def _carry_links(meta: MetaBlock, beta: Metafile) -> MetaBlock:
    """Copy beta's links whose fields all exist in ``meta`` (matched by file checksum)."""
    by_checksum: dict[str, str] = {}
    for f in meta.files:
        by_checksum.setdefault(f.checksum, f.local_id)
    links = list(meta.links)
    for link in beta.meta.links:
        mapped: list[FieldRef] = []
        for ref in link.fields:
            source = beta.meta.file(ref.file_local_id)
            target = by_checksum.get(source.checksum) if source else None
            new_ref = FieldRef(target, ref.field_name, ref.extra) if target else None
            if new_ref is None or meta.resolve(new_ref) is None:
                break
            if new_ref not in mapped:
                mapped.append(new_ref)
        else:
            if len(mapped) >= 2 and not any(
                existing.type == link.type and set(existing.fields) == set(mapped)
                for existing in links
            ):
                links.append(replace(link, fields=tuple(mapped)))
    return replace(meta, links=tuple(links))


def _author_key(a: Author) -> str:
    return f"email:{a.email.lower()}" if a.email else f"$id:{a.local_id}"


def _merge_authors(first: tuple[Author, ...], second: tuple[Author, ...]) -> tuple[Author, ...]:
    merged = list(first)
    keys = {_author_key(a) for a in first}
    ids = {a.local_id for a in first}
    for a in second:
        if _author_key(a) in keys:
            continue
        keys.add(_author_key(a))
        local_id = _next_free(a.local_id, ids, lambda n: f"{a.local_id}-{n}")
        ids.add(local_id)
        merged.append(replace(a, local_id=local_id))
    return tuple(merged)


def _join_text(a: str, b: str, sep: str) -> str:
    parts = [p for p in (a, b) if p]
    if len(parts) == 2 and parts[0] == parts[1]:
        return parts[0]
    return sep.join(parts)


def aggregate(
    alpha: Metafile,
    beta: Metafile,
    cfg: AggregationConfig | None = None,
    now: datetime | None = None,
    *,
    new_id: Callable[[], uuid.UUID] = uuid.uuid4,
) -> tuple[Metafile, AggregationReport]:
    """Merge two datasets' metadata into a new metafile.

    Raises IncompatibleDatasetsError when the field graphs' similarity is
    at or below ``cfg.epsilon`` and NoMatchError when no field pair reaches
    ``cfg.sigma``.
    """
    cfg = cfg or AggregationConfig()
    if alpha.id == beta.id and alpha.meta_version == beta.meta_version:
        raise ValueError(f"cannot aggregate {alpha.ref} with itself")
    now = utc_now() if now is None else now

    score = graph_similarity(build_field_graph(alpha), build_field_graph(beta))
    if score <= cfg.epsilon:
        raise IncompatibleDatasetsError(score, cfg.epsilon)

    acc = alpha
    matched: list[MatchedPair] = []
    for gamma in alpha.meta.field_refs():
        gamma_def = alpha.meta.resolve(gamma)
        for delta in beta.meta.field_refs():
            overlap = field_overlap(gamma_def, beta.meta.resolve(delta))
            if overlap >= cfg.sigma:
                acc = metajoin(acc, beta, gamma, delta)
                matched.append(MatchedPair(gamma, delta, overlap))
    if not matched:
        raise NoMatchError(score, cfg.sigma)

    joined = _carry_links(acc.meta, beta)
    meta = replace(
        joined,
        name=f"{alpha.meta.name} + {beta.meta.name}",
        description=_join_text(alpha.meta.description, beta.meta.description, "\n---\n"),
        copyright=_join_text(alpha.meta.copyright, beta.meta.copyright, "; "),
        keywords=tuple(sorted(set(alpha.meta.keywords) | set(beta.meta.keywords))),
        authors=_merge_authors(alpha.meta.authors, beta.meta.authors),
        derived_from=(alpha.ref, beta.ref),
    )
    result = seal(
        Metafile(
            schema_uri=alpha.schema_uri,
            id=str(new_id()),
            meta_version=1,
            created=now,
            modified=now,
            checksum="",
            meta=meta,
        )
    )
    alpha_ids = {f.local_id for f in alpha.meta.files}
    report = AggregationReport(
        similarity_score=score,
        matched_pairs=tuple(matched),
        files_added=tuple(f.local_id for f in meta.files if f.local_id not in alpha_ids),
        result_ref=result.ref,
    )
    return result, report
