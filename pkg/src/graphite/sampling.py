"""Graph down-sampling for render budgets: RN, RE, and RW schemes.

RN keeps each vertex independently with probability p and induces the
subgraph. RE keeps each edge with probability p; only endpoints of kept
edges survive, so the output never contains singletons. RW runs a random
walk that restarts (jumps to a uniform random vertex) with probability p
per step and stops once a target fraction of vertices has been visited.

``ks_distance`` quantifies how much a scheme distorted the degree
distribution.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .graph import DegreeHistogram, Graph, edge_subgraph, induced_subgraph

# Walks give up after this many steps per vertex, so unreachable targets
# terminate with a partial sample instead of spinning.
WALK_STEP_CAP_FACTOR = 100

SCHEMES = ("rn", "re", "rw")


@dataclass(frozen=True)
class SampleSpec:
    """Which scheme to run and with what parameters.

    ``p`` is the inclusion probability for RN/RE and the restart
    probability for RW; ``target_fraction`` only applies to RW.
    """

    scheme: str
    p: float
    target_fraction: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        if not 0.0 < self.target_fraction <= 1.0:
            raise ValueError("target_fraction must be in (0, 1]")


@dataclass(frozen=True)
class WalkReport:
    """Outcome of a random-walk sample."""

    reached_target: bool
    steps: int
    visited: int


def sample_rn(g: Graph, p: float, seed: int = 0) -> Graph:
    """Random-node sampling: keep each vertex independently w.p. ``p``."""
    rng = np.random.default_rng(seed)
    keep = np.nonzero(rng.random(g.n) < p)[0]
    return induced_subgraph(g, keep.tolist())


def sample_re(g: Graph, p: float, seed: int = 0) -> Graph:
    """Random-edge sampling: keep each edge w.p. ``p``, no singleton output."""
    rng = np.random.default_rng(seed)
    keep = np.nonzero(rng.random(g.m) < p)[0]
    return edge_subgraph(g, keep.tolist())


def sample_rw(g: Graph, p: float, target_fraction: float,
              seed: int = 0) -> tuple[Graph, WalkReport]:
    """Random-walk sampling with uniform restarts.

    From a seeded start vertex, each step jumps to a uniform random
    vertex with probability ``p`` and otherwise moves to a uniform
    random neighbor; a vertex with no neighbors always jumps. The walk
    stops once ``target_fraction`` of all vertices has been visited or
    the step cap is hit, in which case the report flags a partial
    sample.
    """
    if g.n == 0:
        return g, WalkReport(reached_target=True, steps=0, visited=0)
    if not 0.0 < target_fraction <= 1.0:
        raise ValueError("target_fraction must be in (0, 1]")
    rng = random.Random(seed)
    target = math.ceil(target_fraction * g.n)
    cap = WALK_STEP_CAP_FACTOR * g.n

    current = rng.randrange(g.n)
    visited = {current}
    steps = 0
    while len(visited) < target and steps < cap:
        neighbors = g.adjacency[current]
        if not neighbors or rng.random() < p:
            current = rng.randrange(g.n)
        else:
            current = rng.choice(neighbors)
        visited.add(current)
        steps += 1

    report = WalkReport(reached_target=len(visited) >= target,
                        steps=steps, visited=len(visited))
    return induced_subgraph(g, sorted(visited)), report


def apply_sample(g: Graph, spec: SampleSpec) -> Graph:
    """Dispatch a SampleSpec to its scheme; RW drops the report."""
    if spec.scheme == "rn":
        return sample_rn(g, spec.p, spec.rng_seed)
    if spec.scheme == "re":
        return sample_re(g, spec.p, spec.rng_seed)
    sampled, _ = sample_rw(g, spec.p, spec.target_fraction, spec.rng_seed)
    return sampled


def ks_distance(h1: DegreeHistogram, h2: DegreeHistogram) -> float:
    """Kolmogorov-Smirnov statistic between two normalized degree CDFs."""
    if h1.n == 0 or h2.n == 0:
        raise ValueError("KS distance requires non-empty histograms")
    support = sorted(set(h1.counts) | set(h2.counts))
    c1 = c2 = 0.0
    worst = 0.0
    for d in support:
        c1 += h1.counts.get(d, 0) / h1.n
        c2 += h2.counts.get(d, 0) / h2.n
        worst = max(worst, abs(c1 - c2))
    return worst


def matched_edge_probability(g: Graph, expected_vertices: float) -> float:
    """Edge-keep probability whose expected RE vertex yield matches a target.

    The expected number of surviving vertices under RE at probability q
    is sum_v (1 - (1-q)^deg(v)); solved for q by bisection. Used to
    compare RE against RN at equal expected output size.
    """
    degrees = g.degrees
    reachable = sum(1 for d in degrees if d > 0)
    if not 0 <= expected_vertices <= reachable:
        raise ValueError(f"expected_vertices must be in [0, {reachable}]")

    def expected(q: float) -> float:
        return sum(1.0 - (1.0 - q) ** d for d in degrees if d > 0)

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if expected(mid) < expected_vertices:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2
