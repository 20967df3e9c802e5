"""Seeded generators of valid metafile documents for property and acceptance tests."""

from __future__ import annotations

import copy
import hashlib
import json
import random
import uuid
from datetime import datetime, timedelta, timezone

from dfskit.integrity import seal
from dfskit.model import Metafile, decode_metafile

WORDS = [
    "patient", "heart", "rate", "blood", "pressure", "sensor", "gaze", "fixation",
    "pupil", "velocity", "subject", "session", "trial", "stimulus", "latency", "weight",
    "height", "age", "glucose", "signal", "channel", "sample", "region", "county",
    "income", "score", "label", "image", "pixel", "depth", "temperature", "humidity",
]
FIELD_TYPES = ["string", "integer", "number", "boolean", "datetime", "categorical", "binary"]
TEXT_EXTRAS = ["é", "ü", "ß", "数据", "🙂", "\t", "\"quoted\"", "back\\slash", "Ω"]


def fake_checksum(rng: random.Random) -> str:
    return "sha256:" + hashlib.sha256(rng.randbytes(16)).hexdigest()


def _sentence(rng: random.Random, n_min: int = 3, n_max: int = 8) -> str:
    words = [rng.choice(WORDS) for _ in range(rng.randint(n_min, n_max))]
    if rng.random() < 0.3:
        words.append(rng.choice(TEXT_EXTRAS))
    words.append(f"n{rng.getrandbits(32):08x}")
    return " ".join(words)


def _field_name(rng: random.Random, used: set[str]) -> str:
    while True:
        parts = rng.sample(WORDS, rng.randint(1, 3))
        style = rng.randrange(3)
        if style == 0:
            name = "_".join(parts)
        elif style == 1:
            name = parts[0] + "".join(p.capitalize() for p in parts[1:])
        else:
            name = "-".join(parts)
        if rng.random() < 0.2:
            name += str(rng.randint(1, 9))
        if name not in used:
            used.add(name)
            return name


def _timestamp(rng: random.Random) -> datetime:
    base = datetime(2015, 1, 1, tzinfo=timezone.utc)
    return base + timedelta(seconds=rng.randint(0, 300_000_000))


def random_document(rng: random.Random, max_fields: int = 5, max_files: int = 4) -> dict:
    """One valid metafile as a plain JSON object (checksum already correct)."""
    files = []
    paths: set[str] = set()
    for i in range(rng.randint(1, max_files)):
        used: set[str] = set()
        while True:
            path = "/".join(rng.sample(WORDS, rng.randint(1, 2))) + rng.choice([".csv", ".json", ".png", ""])
            if path not in paths:
                paths.add(path)
                break
        entry = {
            "$id": f"f{i + 1}",
            "path": path,
            "encoding": path.rsplit(".", 1)[-1] if "." in path else "binary",
            "version": rng.randint(1, 5),
            "checksum": fake_checksum(rng),
            "description": _sentence(rng),
            "fields": [
                {"name": _field_name(rng, used), "type": rng.choice(FIELD_TYPES),
                 "description": _sentence(rng) if rng.random() < 0.8 else ""}
                for _ in range(rng.randint(0, max_fields))
            ],
        }
        if rng.random() < 0.5:
            entry["measurement"] = {"type": rng.choice(WORDS), "device": _sentence(rng, 1, 2),
                                    "unit": rng.choice(["bpm", "mmHg", "px", "°C", ""])}
        if rng.random() < 0.2:
            entry["x-note"] = {"reviewed": rng.random() < 0.5, "score": rng.randint(0, 100)}
        files.append(entry)

    refs = [{"file": f["$id"], "field": d["name"]} for f in files for d in f["fields"]]
    links = []
    if len(refs) >= 2:
        for _ in range(rng.randint(0, 3)):
            chosen = rng.sample(refs, rng.randint(2, min(4, len(refs))))
            links.append({"type": rng.choice(["id", "aggregation", "derived", "unit"]),
                          "description": _sentence(rng), "fields": [dict(r) for r in chosen]})

    authors = [
        {"$id": f"a{i + 1}", "name": _sentence(rng, 1, 2), "affiliation": _sentence(rng, 1, 3),
         "email": f"user{i}.{rng.getrandbits(16)}@example.org" if rng.random() < 0.8 else ""}
        for i in range(rng.randint(0, 3))
    ]
    keywords = sorted(set(rng.sample(WORDS, rng.randint(0, 4))) | ({"eye-tracking"} if rng.random() < 0.2 else set()))
    rng.shuffle(keywords)
    created = _timestamp(rng)
    meta = {
        "name": _sentence(rng, 1, 3),
        "description": _sentence(rng, 5, 12),
        "copyright": rng.choice(["", "CC-BY-4.0", "© 2020 " + _sentence(rng, 1, 2)]),
        "keywords": keywords,
        "author": authors,
        "files": files,
        "links": links,
    }
    if rng.random() < 0.2:
        meta["derived-from"] = [{"id": str(uuid.UUID(int=rng.getrandbits(128), version=4)),
                                 "meta-version": rng.randint(1, 9)}]
    if rng.random() < 0.2:
        meta["x-extension"] = [1, "two", {"three": None}]
    doc = {
        "$schema": "urn:dfs:schema:metafile:v1",
        "id": str(uuid.UUID(int=rng.getrandbits(128), version=4)),
        "meta-version": rng.randint(1, 20),
        "created": created.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "modified": (created + timedelta(seconds=rng.randint(0, 10**7))).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "checksum": "sha256:" + "0" * 64,
        "meta": meta,
    }
    if rng.random() < 0.2:
        doc["x-top"] = "kept"
    doc["checksum"] = seal(decode_metafile(doc)).checksum
    return doc


def random_metafile(rng: random.Random, **kwargs) -> Metafile:
    return decode_metafile(random_document(rng, **kwargs))


def shuffled(value, rng: random.Random):
    """Same JSON value with every object's key order permuted."""
    if isinstance(value, dict):
        items = list(value.items())
        rng.shuffle(items)
        return {k: shuffled(v, rng) for k, v in items}
    if isinstance(value, list):
        return [shuffled(v, rng) for v in value]
    return value


def loose_dump(doc: dict, rng: random.Random) -> bytes:
    """Serialize with arbitrary key order and whitespace."""
    return json.dumps(shuffled(copy.deepcopy(doc), rng), indent=rng.choice([None, 1, 4]),
                      ensure_ascii=rng.random() < 0.5).encode("utf-8")


FIXED_TIME = datetime(2024, 5, 1, 12, 0, 0, tzinfo=timezone.utc)


def uuid_sequence(start: int = 1):
    """Deterministic UUID source: 00000000-0000-4000-8000-00000000000N, N = start, start+1, ..."""
    counter = iter(range(start, 1 << 48))

    def next_id() -> uuid.UUID:
        return uuid.UUID(f"00000000-0000-4000-8000-{next(counter):012x}")

    return next_id


def build(
    files,
    *,
    name: str = "dataset",
    description: str = "",
    keywords=(),
    links=(),
    authors=(),
    id_: str | None = None,
    version: int = 1,
) -> Metafile:
    """Hand-built metafile.

    ``files`` is a list of ``(local_id, path, fields)`` or
    ``(local_id, path, fields, content)`` where fields are
    ``(name, type)`` or ``(name, type, description)`` tuples and content
    (default: the path) determines the file checksum.
    """
    entries = []
    for item in files:
        local_id, path, fields = item[:3]
        content = item[3] if len(item) > 3 else path.encode()
        entries.append({
            "$id": local_id,
            "path": path,
            "encoding": "csv",
            "version": 1,
            "checksum": "sha256:" + hashlib.sha256(content).hexdigest(),
            "fields": [
                {"name": f[0], "type": f[1], "description": f[2] if len(f) > 2 else ""}
                for f in fields
            ],
        })
    doc = {
        "$schema": "urn:dfs:schema:metafile:v1",
        "id": id_ or "00000000-0000-4000-8000-000000000000",
        "meta-version": version,
        "created": "2024-01-01T00:00:00Z",
        "modified": "2024-01-01T00:00:00Z",
        "checksum": "sha256:" + "0" * 64,
        "meta": {
            "name": name,
            "description": description,
            "keywords": list(keywords),
            "author": [dict(a) for a in authors],
            "files": entries,
            "links": [
                {"type": t, "fields": [{"file": f, "field": n} for f, n in refs]}
                for t, refs in links
            ],
        },
    }
    return seal(decode_metafile(doc))


def small_graph_document(rng: random.Random, max_nodes: int = 8) -> dict:
    """Metafile document with at most ``max_nodes`` fields over a tiny vocabulary,
    so that label and edge overlaps between two samples are common."""
    vocab = ["id", "age", "heartRate", "heart_rate", "weight", "site"]
    types = ["string", "integer", "number"]
    n_files = rng.randint(1, 2)
    budget = rng.randint(0, max_nodes)
    files = []
    for i in range(n_files):
        count = budget if i == n_files - 1 else rng.randint(0, budget)
        budget -= count
        names = rng.sample(vocab, min(count, len(vocab)))
        files.append({
            "$id": f"f{i + 1}", "path": f"part{i + 1}.csv", "encoding": "csv", "version": 1,
            "checksum": fake_checksum(rng),
            "fields": [{"name": n, "type": rng.choice(types)} for n in names],
        })
    refs = [{"file": f["$id"], "field": d["name"]} for f in files for d in f["fields"]]
    links = []
    if len(refs) >= 2:
        for _ in range(rng.randint(0, 3)):
            chosen = rng.sample(refs, rng.randint(2, min(3, len(refs))))
            links.append({"type": "id", "fields": chosen})
    doc = {
        "$schema": "urn:dfs:schema:metafile:v1",
        "id": str(uuid.UUID(int=rng.getrandbits(128), version=4)),
        "meta-version": 1,
        "created": "2024-01-01T00:00:00Z",
        "modified": "2024-01-01T00:00:00Z",
        "checksum": "sha256:" + "0" * 64,
        "meta": {"name": "g", "files": files, "links": links},
    }
    doc["checksum"] = seal(decode_metafile(doc)).checksum
    return doc
