"""Per-user interest profiles and profile-driven recommendation.

A profile is a unit-length term vector nudged toward every dataset the user
interacts with (an exponential moving average with rate ``lam``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from dfskit.canonical import serialize_canonical
from dfskit.catalog.index import TfIdfIndex, _ranked, cosine, doc_vector, l2_normalize
from dfskit.model import DatasetRef, Metafile, load_json

DEFAULT_LAMBDA = 0.3
_USER_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._\-]*$")


@dataclass(frozen=True)
class InterestProfile:
    user_id: str
    weights: Mapping[str, float] = field(default_factory=dict)
    interaction_count: int = 0
    seen: frozenset[DatasetRef] = frozenset()

    def to_json(self) -> dict:
        return {
            "user-id": self.user_id,
            "weights": dict(self.weights),
            "interaction-count": self.interaction_count,
            "seen": sorted(str(r) for r in self.seen),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> InterestProfile:
        return cls(
            user_id=doc["user-id"],
            weights=dict(doc["weights"]),
            interaction_count=doc["interaction-count"],
            seen=frozenset(DatasetRef.parse(r) for r in doc["seen"]),
        )


def profile_update(p: InterestProfile, m: Metafile, lam: float = DEFAULT_LAMBDA) -> InterestProfile:
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    doc = doc_vector(m)
    if not p.weights:
        weights = doc
    else:
        terms = set(p.weights) | set(doc)
        weights = l2_normalize(
            {t: (1 - lam) * p.weights.get(t, 0.0) + lam * doc.get(t, 0.0) for t in terms}
        )
    return replace(
        p,
        weights=weights,
        interaction_count=p.interaction_count + 1,
        seen=p.seen | {m.ref},
    )


def recommend(
    ix: TfIdfIndex, p: InterestProfile, k: int = 10, include_seen: bool = False
) -> list[tuple[DatasetRef, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not p.weights:
        return []
    scores = (
        (ref, cosine(p.weights, vec))
        for ref, vec in ix.vectors.items()
        if include_seen or ref not in p.seen
    )
    return _ranked(scores, k)


def profile_path(repo_root: str | Path, user_id: str) -> Path:
    if not _USER_ID.match(user_id):
        raise ValueError(f"user id may only contain letters, digits, '.', '_' and '-': {user_id!r}")
    return Path(repo_root) / "profiles" / f"{user_id}.json"


def load_profile(repo_root: str | Path, user_id: str) -> InterestProfile:
    path = profile_path(repo_root, user_id)
    if not path.is_file():
        return InterestProfile(user_id)
    return InterestProfile.from_json(load_json(path.read_bytes()))


def save_profile(repo_root: str | Path, p: InterestProfile) -> Path:
    path = profile_path(repo_root, p.user_id)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(serialize_canonical(p))
    tmp.replace(path)
    return path
