import json
import random

import networkx as nx
import pytest

from graphite.graph import Graph


def make_graph(n, edges, directed=False):
    """Graph over string ids '0'..'n-1' with the given integer edge list."""
    return Graph(ids=tuple(str(v) for v in range(n)),
                 edges=tuple((min(a, b), max(a, b)) for a, b in edges),
                 directed=directed)


def make_document(node_ids, edges, directed=False, **node_fields):
    """Interchange-document bytes from id strings and id-pair edges."""
    nodes = [{"id": nid, **node_fields.get(nid, {})} for nid in node_ids]
    return json.dumps({"directed": directed, "nodes": nodes,
                       "edges": [list(e) for e in edges]}).encode()


def from_networkx(G):
    """Convert an undirected networkx graph with integer nodes."""
    order = sorted(G.nodes)
    index = {v: i for i, v in enumerate(order)}
    edges = sorted((min(index[a], index[b]), max(index[a], index[b]))
                   for a, b in G.edges)
    return Graph(ids=tuple(str(v) for v in order), edges=tuple(edges))


@pytest.fixture(scope="session")
def karate():
    return from_networkx(nx.karate_club_graph())


@pytest.fixture(scope="session")
def ba_1000():
    """Barabasi-Albert graph, 1000 nodes, m=3 (the sampling benchmark)."""
    return from_networkx(nx.barabasi_albert_graph(1000, 3, seed=7))


@pytest.fixture(scope="session")
def ba_10k():
    """10k-node graph for document-size and render-budget checks."""
    return from_networkx(nx.barabasi_albert_graph(10_000, 3, seed=11))


def random_connected_graph(n, rng: random.Random) -> Graph:
    """Uniformly messy connected graph on n vertices (for small-graph oracles)."""
    while True:
        p = rng.uniform(0.25, 0.8)
        edges = {(i, j) for i in range(n) for j in range(i + 1, n)
                 if rng.random() < p}
        if not edges:
            continue
        adj = {v: set() for v in range(n)}
        for a, b in edges:
            adj[a].add(b)
            adj[b].add(a)
        seen, stack = {0}, [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) == n:
            return make_graph(n, sorted(edges))
