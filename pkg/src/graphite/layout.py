"""3D Fruchterman-Reingold annealing layout.

All-pairs repulsion k^2/d, edge attraction d^2/k, per-vertex displacement
clamped to the current temperature. The temperature follows

    t(i) = t0 * (1 - i / max_iterations) ** cooling_exponent

so it decays polynomially and reaches exactly zero on the final
iteration. Exposed both as a one-shot ``run_layout`` and a stepwise
state machine (``init_layout`` / ``layout_step``) so individual
annealing steps can be tested in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graph import Graph

# Below this separation two vertices count as coincident and are pushed
# apart along a seeded random direction instead of dividing by ~0.
COINCIDENCE_EPS = 1e-9


@dataclass(frozen=True)
class LayoutParams:
    """Annealing configuration; defaults follow the standard 3D FR setup."""

    max_iterations: int = 2000
    cooling_exponent: float = 1.5
    volume_side: float = 1.0
    initial_temperature: float | None = None  # default: 0.1 * volume_side
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.cooling_exponent <= 0:
            raise ValueError("cooling_exponent must be > 0")
        if self.volume_side <= 0:
            raise ValueError("volume_side must be > 0")
        if self.initial_temperature is not None and self.initial_temperature <= 0:
            raise ValueError("initial_temperature must be > 0")

    @property
    def t0(self) -> float:
        if self.initial_temperature is not None:
            return self.initial_temperature
        return 0.1 * self.volume_side


@dataclass(frozen=True)
class LayoutState:
    """Positions plus annealing bookkeeping for one layout run."""

    positions: np.ndarray  # (N, 3) float64
    iteration: int
    temperature: float
    k: float  # ideal edge length
    params: LayoutParams


def temperature_at(iteration: int, params: LayoutParams) -> float:
    """Annealing temperature after ``iteration`` completed steps."""
    if not 0 <= iteration <= params.max_iterations:
        raise ValueError(f"iteration {iteration} outside [0, {params.max_iterations}]")
    frac = 1.0 - iteration / params.max_iterations
    return params.t0 * frac ** params.cooling_exponent


def init_layout(g: Graph, params: LayoutParams) -> LayoutState:
    """Seeded uniform placement in a cube of side ``volume_side`` centered at 0.

    The ideal edge length is the 3D volume rule k = (side^3 / N)^(1/3).
    """
    if g.n < 1:
        raise ValueError("cannot lay out an empty graph")
    rng = np.random.default_rng(params.rng_seed)
    side = params.volume_side
    positions = rng.random((g.n, 3)) * side - side / 2.0
    k = (side ** 3 / g.n) ** (1.0 / 3.0)
    return LayoutState(positions=positions, iteration=0,
                       temperature=params.t0, k=k, params=params)


def layout_step(state: LayoutState, g: Graph) -> LayoutState:
    """One annealing step; returns a new state with iteration advanced.

    Net per-vertex displacement is clamped to the current temperature, so
    no coordinate can move more than ``state.temperature``.
    """
    params = state.params
    if state.iteration >= params.max_iterations:
        raise ValueError("layout already ran to max_iterations")

    pos = state.positions
    n = g.n
    k = state.k

    diff = pos[:, None, :] - pos[None, :, :]          # (n, n, 3), row i minus row j
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dist, np.inf)

    close_i, close_j = np.nonzero(dist < COINCIDENCE_EPS)
    if close_i.size:
        jitter_rng = np.random.default_rng([params.rng_seed, state.iteration])
        for i, j in zip(close_i.tolist(), close_j.tolist()):
            if i >= j:
                continue  # mirror below keeps diff antisymmetric
            u = jitter_rng.standard_normal(3)
            u /= np.linalg.norm(u)
            diff[i, j] = u * COINCIDENCE_EPS
            diff[j, i] = -u * COINCIDENCE_EPS
            dist[i, j] = dist[j, i] = COINCIDENCE_EPS

    # Repulsion k^2/d on i from every j, directed along (pos_i - pos_j).
    rep = (k * k) / (dist * dist)
    disp = np.einsum("ij,ijk->ik", rep, diff)

    # Attraction d^2/k along each edge: the pull vector is (d/k) * (pos_b - pos_a),
    # which vanishes smoothly as d -> 0 (no singularity to guard).
    if g.m:
        ea = np.fromiter((e[0] for e in g.edges), dtype=np.intp, count=g.m)
        eb = np.fromiter((e[1] for e in g.edges), dtype=np.intp, count=g.m)
        evec = pos[eb] - pos[ea]
        ed = np.sqrt(np.einsum("ij,ij->i", evec, evec))
        pull = evec * (ed / k)[:, None]
        np.add.at(disp, ea, pull)
        np.add.at(disp, eb, -pull)

    t = state.temperature
    norms = np.sqrt(np.einsum("ij,ij->i", disp, disp))
    scale = np.minimum(1.0, t / np.maximum(norms, 1e-300))
    new_pos = pos + disp * scale[:, None]

    it = state.iteration + 1
    return replace(state, positions=new_pos, iteration=it,
                   temperature=temperature_at(it, params))


def run_layout(g: Graph, params: LayoutParams | None = None) -> np.ndarray:
    """Full annealing run: init followed by max_iterations steps.

    Deterministic for a given (graph, params, seed).
    """
    params = params or LayoutParams()
    state = init_layout(g, params)
    for _ in range(params.max_iterations):
        state = layout_step(state, g)
    return state.positions
