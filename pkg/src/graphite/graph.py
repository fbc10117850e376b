"""Graph data model, JSON interchange format, and degree statistics.

Documents are UTF-8 JSON of the shape::

    {"directed": bool,
     "nodes": [{"id": "a", "label": "...", "cluster": 0,
                "pos": [x, y, z], "attrs": {...}}, ...],
     "edges": [["a", "b"], ...]}

Node ids are strings in the document and are mapped to dense integer
vertex ids (0..N-1) in document order. Self-loops are dropped and
duplicate edges merged at ingestion; layout, sampling, and clustering
treat all edges as undirected regardless of the ``directed`` flag.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence


class GraphFormatError(ValueError):
    """Raised for documents that are not valid interchange JSON.

    ``offset`` is the byte offset of the problem when known (JSON
    syntax errors), otherwise None.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class GraphValidationError(ValueError):
    """Raised when a structurally valid document violates graph invariants."""


@dataclass(frozen=True)
class VertexMeta:
    """Per-vertex metadata carried through sampling and serialization."""

    label: str | None = None
    attributes: Mapping[str, Any] = field(default_factory=dict)
    cluster: int | None = None
    position: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class IngestReport:
    """What ingestion had to clean up to produce a simple graph."""

    self_loops_dropped: int = 0
    duplicates_merged: int = 0


@dataclass(frozen=True)
class DegreeHistogram:
    """Histogram of undirected vertex degrees; ``n`` is total vertices."""

    counts: Mapping[int, int]
    n: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.n:
            raise GraphValidationError("histogram mass does not equal vertex count")
        if any(d < 0 for d in self.counts):
            raise GraphValidationError("negative degree in histogram")


@dataclass(frozen=True)
class Graph:
    """Immutable simple graph over dense vertex ids 0..N-1.

    ``ids`` holds the original document id strings in vertex order, so
    sampled subgraphs keep an injective mapping back to their source.
    """

    ids: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    directed: bool = False
    meta: tuple[VertexMeta, ...] = ()

    def __post_init__(self):
        n = len(self.ids)
        if len(set(self.ids)) != n:
            raise GraphValidationError("duplicate vertex ids")
        if self.meta and len(self.meta) != n:
            raise GraphValidationError("meta length does not match vertex count")
        if not self.meta:
            object.__setattr__(self, "meta", tuple(VertexMeta() for _ in range(n)))
        for a, b in self.edges:
            if not (0 <= a < n and 0 <= b < n):
                raise GraphValidationError(f"edge ({a}, {b}) endpoint out of range")
            if a == b:
                raise GraphValidationError(f"self-loop on vertex {a}")
        pairs = [(min(a, b), max(a, b)) for a, b in self.edges]
        if len(set(pairs)) != len(pairs):
            raise GraphValidationError("duplicate edge after normalization")

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        neigh: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in self.edges:
            neigh[a].append(b)
            neigh[b].append(a)
        return tuple(tuple(sorted(ns)) for ns in neigh)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(ns) for ns in self.adjacency)


def load_graph(data: bytes | str) -> tuple[Graph, IngestReport]:
    """Parse an interchange document into a validated Graph.

    Self-loops are dropped and duplicate (unordered) edges merged; the
    counts are returned in the IngestReport. Raises GraphFormatError for
    malformed JSON or schema violations, GraphValidationError for edges
    that reference unknown vertices.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise GraphFormatError(f"invalid JSON: {e.msg}", offset) from e

    if not isinstance(doc, dict):
        raise GraphFormatError("document root must be an object")
    nodes = doc.get("nodes")
    edges = doc.get("edges", [])
    if not isinstance(nodes, list):
        raise GraphFormatError('"nodes" must be a list')
    if not isinstance(edges, list):
        raise GraphFormatError('"edges" must be a list')
    directed = bool(doc.get("directed", False))

    ids: list[str] = []
    meta: list[VertexMeta] = []
    index: dict[str, int] = {}
    for i, node in enumerate(nodes):
        if not isinstance(node, dict) or "id" not in node:
            raise GraphFormatError(f"node #{i} must be an object with an 'id'")
        nid = node["id"]
        if not isinstance(nid, str):
            raise GraphFormatError(f"node #{i} id must be a string")
        if nid in index:
            raise GraphFormatError(f"duplicate node id {nid!r}")
        label = node.get("label")
        if label is not None and not isinstance(label, str):
            raise GraphFormatError(f"node {nid!r} label must be a string")
        cluster = node.get("cluster")
        if cluster is not None and (not isinstance(cluster, int) or cluster < 0):
            raise GraphFormatError(f"node {nid!r} cluster must be a non-negative integer")
        pos = node.get("pos")
        if pos is not None:
            if not (isinstance(pos, list) and len(pos) == 3
                    and all(isinstance(c, (int, float)) for c in pos)):
                raise GraphFormatError(f"node {nid!r} pos must be a 3-element number list")
            pos = (float(pos[0]), float(pos[1]), float(pos[2]))
        attrs = node.get("attrs", {})
        if not isinstance(attrs, dict):
            raise GraphFormatError(f"node {nid!r} attrs must be an object")
        index[nid] = i
        ids.append(nid)
        meta.append(VertexMeta(label=label or None, attributes=attrs,
                               cluster=cluster, position=pos))

    self_loops = 0
    duplicates = 0
    seen: set[tuple[int, int]] = set()
    kept: list[tuple[int, int]] = []
    for i, edge in enumerate(edges):
        if not (isinstance(edge, list) and len(edge) == 2):
            raise GraphFormatError(f"edge #{i} must be a two-element list")
        try:
            a, b = index[edge[0]], index[edge[1]]
        except (KeyError, TypeError):
            raise GraphValidationError(
                f"edge {edge!r} references an unknown vertex") from None
        if a == b:
            self_loops += 1
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        kept.append((a, b))

    g = Graph(ids=tuple(ids), edges=tuple(kept), directed=directed, meta=tuple(meta))
    return g, IngestReport(self_loops_dropped=self_loops, duplicates_merged=duplicates)


def degree_distribution(g: Graph) -> DegreeHistogram:
    """Histogram over undirected degrees; empty graph yields an empty histogram."""
    return DegreeHistogram(counts=dict(Counter(g.degrees)), n=g.n)


def serialize_annotated(g: Graph, positions: Sequence[Sequence[float]],
                        clusters: Sequence[int]) -> bytes:
    """Emit an interchange document where every vertex carries pos and cluster.

    Labels and attributes already present on the graph are preserved, so
    load_graph(serialize_annotated(...)) round-trips topology, labels,
    and clusters exactly and positions to full float precision.
    """
    if len(positions) != g.n:
        raise GraphValidationError(
            f"positions length {len(positions)} does not match vertex count {g.n}")
    if len(clusters) != g.n:
        raise GraphValidationError(
            f"cluster assignment length {len(clusters)} does not match vertex count {g.n}")
    for v, c in enumerate(clusters):
        if c is None or c < 0:
            raise GraphValidationError(f"vertex {v} is missing a cluster assignment")

    nodes = []
    for v in range(g.n):
        node: dict[str, Any] = {"id": g.ids[v]}
        mv = g.meta[v]
        if mv.label:
            node["label"] = mv.label
        node["cluster"] = int(clusters[v])
        p = positions[v]
        node["pos"] = [float(p[0]), float(p[1]), float(p[2])]
        if mv.attributes:
            node["attrs"] = dict(mv.attributes)
        nodes.append(node)
    doc = {
        "directed": g.directed,
        "nodes": nodes,
        "edges": [[g.ids[a], g.ids[b]] for a, b in g.edges],
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def graph_to_document(g: Graph) -> bytes:
    """Emit an interchange document carrying whatever metadata is present.

    Unlike serialize_annotated, positions and clusters are optional; this
    is the writer for graphs that have not (or not yet) been laid out,
    e.g. sampler output.
    """
    nodes = []
    for v in range(g.n):
        mv = g.meta[v]
        node: dict[str, Any] = {"id": g.ids[v]}
        if mv.label:
            node["label"] = mv.label
        if mv.cluster is not None:
            node["cluster"] = int(mv.cluster)
        if mv.position is not None:
            node["pos"] = [float(c) for c in mv.position]
        if mv.attributes:
            node["attrs"] = dict(mv.attributes)
        nodes.append(node)
    doc = {
        "directed": g.directed,
        "nodes": nodes,
        "edges": [[g.ids[a], g.ids[b]] for a, b in g.edges],
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def induced_subgraph(g: Graph, keep: Sequence[int]) -> Graph:
    """Subgraph on ``keep`` (original vertex ids), metadata preserved.

    Vertices appear in ascending original-id order; edges keep their
    original relative order.
    """
    keep_sorted = sorted(set(keep))
    remap = {old: new for new, old in enumerate(keep_sorted)}
    edges = tuple((remap[a], remap[b]) for a, b in g.edges
                  if a in remap and b in remap)
    return Graph(ids=tuple(g.ids[v] for v in keep_sorted),
                 edges=edges,
                 directed=g.directed,
                 meta=tuple(g.meta[v] for v in keep_sorted))


def edge_subgraph(g: Graph, edge_indices: Sequence[int]) -> Graph:
    """Subgraph containing exactly the given edges and their endpoints."""
    chosen = [g.edges[i] for i in sorted(set(edge_indices))]
    keep_sorted = sorted({v for e in chosen for v in e})
    remap = {old: new for new, old in enumerate(keep_sorted)}
    return Graph(ids=tuple(g.ids[v] for v in keep_sorted),
                 edges=tuple((remap[a], remap[b]) for a, b in chosen),
                 directed=g.directed,
                 meta=tuple(g.meta[v] for v in keep_sorted))
