"""TF-IDF document vectors over metafile text, and ranked keyword search."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from dfskit.canonical import serialize_canonical
from dfskit.errors import DFSError
from dfskit.graph import normalize_name
from dfskit.model import DatasetRef, Metafile, load_json
from dfskit.validation import validate

log = logging.getLogger(__name__)

INDEX_FILE = "index.json"

Vector = Mapping[str, float]


def document_terms(m: Metafile) -> Counter:
    """Term counts for a dataset: name, description, keywords (twice), fields, measurements."""
    meta = m.meta
    terms: Counter = Counter()
    terms.update(normalize_name(meta.name))
    terms.update(normalize_name(meta.description))
    for keyword in meta.keywords:
        tokens = normalize_name(keyword)
        terms.update(tokens)
        terms.update(tokens)
    for entry in meta.files:
        for f in entry.fields:
            terms.update(normalize_name(f.name))
            terms.update(normalize_name(f.description))
        if entry.measurement is not None:
            terms.update(normalize_name(entry.measurement.kind))
    return terms


def tf_weights(counts: Mapping[str, int]) -> dict[str, float]:
    return {term: 1.0 + math.log(c) for term, c in counts.items() if c > 0}


def l2_normalize(vec: Mapping[str, float]) -> dict[str, float]:
    kept = {t: w for t, w in vec.items() if w != 0.0}
    norm = math.sqrt(math.fsum(w * w for w in kept.values()))
    if norm == 0.0:
        return {}
    return {t: w / norm for t, w in kept.items()}


def cosine(a: Vector, b: Vector) -> float:
    """Dot product of two unit vectors, clamped into [0, 1]."""
    if len(a) > len(b):
        a, b = b, a
    dot = math.fsum(w * b[t] for t, w in a.items() if t in b)
    return min(1.0, max(0.0, dot))


def _ranked(scores: Iterable[tuple[DatasetRef, float]], k: int) -> list[tuple[DatasetRef, float]]:
    positive = [(ref, s) for ref, s in scores if s > 0.0]
    positive.sort(key=lambda item: (-item[1], str(item[0])))
    return positive[:k]


@dataclass(frozen=True)
class TfIdfIndex:
    doc_count: int = 0
    df: Mapping[str, int] = field(default_factory=dict)
    vectors: Mapping[DatasetRef, Vector] = field(default_factory=dict)
    inverted: Mapping[str, frozenset[DatasetRef]] = field(default_factory=dict)
    skipped: tuple[str, ...] = ()

    def idf(self, term: str) -> float:
        return math.log((1 + self.doc_count) / (1 + self.df.get(term, 0))) + 1.0

    @classmethod
    def from_documents(cls, docs: Iterable[Metafile], skipped: Iterable[str] = ()) -> TfIdfIndex:
        """Index the given metafiles (one per dataset)."""
        docs = list(docs)
        counts = {m.ref: document_terms(m) for m in docs}
        df: Counter = Counter()
        for terms in counts.values():
            df.update(terms.keys())
        ix = cls(doc_count=len(counts), df=dict(df), skipped=tuple(skipped))
        vectors = {
            ref: l2_normalize({t: w * ix.idf(t) for t, w in tf_weights(terms).items()})
            for ref, terms in counts.items()
        }
        inverted: dict[str, set[DatasetRef]] = {}
        for ref, vec in vectors.items():
            for term in vec:
                inverted.setdefault(term, set()).add(ref)
        return cls(
            doc_count=ix.doc_count,
            df=ix.df,
            vectors=vectors,
            inverted={t: frozenset(refs) for t, refs in inverted.items()},
            skipped=ix.skipped,
        )

    def vector_for(self, m: Metafile) -> dict[str, float]:
        return l2_normalize({t: w * self.idf(t) for t, w in tf_weights(document_terms(m)).items()})

    def to_json(self) -> dict:
        return {
            "doc-count": self.doc_count,
            "df": dict(self.df),
            "vectors": {str(ref): dict(vec) for ref, vec in self.vectors.items()},
            "inverted": {t: sorted(str(r) for r in refs) for t, refs in self.inverted.items()},
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> TfIdfIndex:
        return cls(
            doc_count=doc["doc-count"],
            df=dict(doc["df"]),
            vectors={DatasetRef.parse(k): dict(v) for k, v in doc["vectors"].items()},
            inverted={
                t: frozenset(DatasetRef.parse(r) for r in refs) for t, refs in doc["inverted"].items()
            },
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(serialize_canonical(self))
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> TfIdfIndex:
        return cls.from_json(load_json(Path(path).read_bytes()))


def doc_vector(m: Metafile, index: TfIdfIndex | None = None) -> dict[str, float]:
    """Unit-length term vector for ``m``.

    Without an index this is the normalized tf vector (``1 + ln count``);
    with one, each weight is also scaled by the index's idf.
    """
    if index is None:
        return l2_normalize(tf_weights(document_terms(m)))
    return index.vector_for(m)


def index_build(repo) -> TfIdfIndex:
    """Index the latest version of every dataset in ``repo``, skipping unreadable ones."""
    docs, skipped = [], []
    for dataset_id in repo.dataset_ids():
        ref = repo.latest(dataset_id)
        if ref is None:
            continue
        try:
            m = repo.get(ref)
        except DFSError as exc:
            log.warning("skipping %s: %s", ref, exc)
            skipped.append(f"{ref}: {exc}")
            continue
        report = validate(m)
        if not report.ok:
            log.warning("skipping %s: %s", ref, report.errors[0])
            skipped.append(f"{ref}: {report.errors[0]}")
            continue
        docs.append(m)
    return TfIdfIndex.from_documents(docs, skipped)


def search(ix: TfIdfIndex, query: str, k: int = 10) -> list[tuple[DatasetRef, float]]:
    """Top ``k`` datasets by cosine similarity to ``query``; ties go to the smaller citation."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(t for t in normalize_name(query) if t in ix.df)
    qvec = l2_normalize({t: w * ix.idf(t) for t, w in tf_weights(counts).items()})
    if not qvec:
        return []
    candidates: set[DatasetRef] = set()
    for term in qvec:
        candidates |= ix.inverted.get(term, frozenset())
    return _ranked(((ref, cosine(qvec, ix.vectors[ref])) for ref in candidates), k)
