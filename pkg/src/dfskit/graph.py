"""Field graphs and the similarity measures used to decide whether datasets can merge.

Each field of a metafile becomes a node labelled by its normalized name
tokens and its type; each link contributes one edge for every unordered
pair of fields it references.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from dfskit.model import FieldDef, Metafile

NODE_WEIGHT = Fraction(7, 10)
EDGE_WEIGHT = Fraction(3, 10)

COMPATIBLE_TYPES = frozenset({frozenset({"integer", "number"})})

_ALNUM_RUN = re.compile(r"[^\W_]+")


def _split_once(raw: str) -> list[str]:
    tokens: list[str] = []
    for run in _ALNUM_RUN.findall(raw):
        start = 0
        for i in range(1, len(run)):
            if run[i - 1].islower() and run[i].isupper():
                tokens.extend(_ALNUM_RUN.findall(run[start:i].lower()))
                start = i
        tokens.extend(_ALNUM_RUN.findall(run[start:].lower()))
    return tokens


def normalize_name(raw: str) -> list[str]:
    """Split an identifier into lowercase alphanumeric tokens.

    Splits on any non-alphanumeric character and on lower-to-upper case
    transitions (``patientID`` -> ``patient``, ``id``).
    """
    tokens = _split_once(raw)
    # Lowercasing a few exotic code points exposes new boundaries; re-split until stable.
    for _ in range(8):
        again = _split_once(" ".join(tokens))
        if again == tokens:
            break
        tokens = again
    return tokens


@dataclass(frozen=True, order=True)
class NormalizedLabel:
    name_tokens: tuple[str, ...]
    type: str

    @classmethod
    def of(cls, field: FieldDef) -> NormalizedLabel:
        return cls(tuple(normalize_name(field.name)), field.type)

    def __str__(self) -> str:
        return f"{'_'.join(self.name_tokens)}:{self.type}"


@dataclass(frozen=True, order=True)
class FieldNode:
    node_id: str
    label: NormalizedLabel


@dataclass(frozen=True, order=True)
class Edge:
    u: str
    v: str
    link_type: str
    link_index: int


@dataclass(frozen=True)
class FieldGraph:
    nodes: frozenset[FieldNode]
    edges: frozenset[Edge]

    @property
    def _labels(self) -> dict[str, NormalizedLabel]:
        return {n.node_id: n.label for n in self.nodes}

    def label_set(self) -> frozenset[NormalizedLabel]:
        return frozenset(n.label for n in self.nodes)

    def edge_label_set(self) -> frozenset[frozenset[NormalizedLabel]]:
        labels = self._labels
        return frozenset(frozenset((labels[e.u], labels[e.v])) for e in self.edges)

    def to_edge_list(self) -> str:
        """Plain-text dump: sorted node ids, then sorted ``u<TAB>v<TAB>type`` lines."""
        lines = sorted(n.node_id for n in self.nodes)
        lines += sorted(f"{e.u}\t{e.v}\t{e.link_type}" for e in self.edges)
        return "".join(line + "\n" for line in lines)


def build_field_graph(m: Metafile) -> FieldGraph:
    nodes = frozenset(
        FieldNode(f"{entry.local_id}/{d.name}", NormalizedLabel.of(d))
        for entry in m.meta.files
        for d in entry.fields
    )
    edges = set()
    for index, link in enumerate(m.meta.links):
        ids = [str(ref) for ref in link.fields]
        for a, b in combinations(ids, 2):
            u, v = sorted((a, b))
            edges.add(Edge(u, v, link.type, index))
    return FieldGraph(nodes, frozenset(edges))


def _jaccard(a: frozenset, b: frozenset) -> Fraction:
    union = len(a | b)
    return Fraction(len(a & b), union) if union else Fraction(0)


def graph_similarity(a: FieldGraph, b: FieldGraph) -> float:
    """Blend of node-label Jaccard (weight 0.7) and edge-label Jaccard (weight 0.3).

    When neither graph has edges the node term stands alone; two graphs with
    no nodes at all are identical (1.0). The blend is computed exactly and
    rounded once.
    """
    labels_a, labels_b = a.label_set(), b.label_set()
    if not labels_a and not labels_b:
        return 1.0
    node_term = _jaccard(labels_a, labels_b)
    edges_a, edges_b = a.edge_label_set(), b.edge_label_set()
    if not edges_a and not edges_b:
        return float(node_term)
    return float(NODE_WEIGHT * node_term + EDGE_WEIGHT * _jaccard(edges_a, edges_b))


def types_compatible(a: str, b: str) -> bool:
    return a == b or frozenset((a, b)) in COMPATIBLE_TYPES


def cosine_counts(a: Counter, b: Counter) -> float:
    """Cosine of two integer count vectors (exactly 1.0 for identical vectors)."""
    if not a or not b:
        return 0.0
    dot = sum(count * b[term] for term, count in a.items() if term in b)
    if not dot:
        return 0.0
    norm_a = sum(c * c for c in a.values())
    norm_b = sum(c * c for c in b.values())
    return min(1.0, dot / math.sqrt(norm_a * norm_b))


def _token_set_jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def field_overlap(g: FieldDef, d: FieldDef) -> float:
    """Schema overlap of two fields in [0, 1]; 0 when their types cannot join."""
    if not types_compatible(g.type, d.type):
        return 0.0
    name_sim = _token_set_jaccard(normalize_name(g.name), normalize_name(d.name))
    desc_g = Counter(normalize_name(g.description))
    desc_d = Counter(normalize_name(d.description))
    if not desc_g and not desc_d:
        return name_sim
    return 0.5 * name_sim + 0.5 * cosine_counts(desc_g, desc_d)
