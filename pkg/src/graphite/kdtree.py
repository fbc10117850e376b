"""Static 3D kd-tree for exact nearest-neighbor picking.

Median-split construction on the widest-spread axis gives a balanced
tree (height <= 2*ceil(log2(n+1))) over immutable point sets; layouts
are precomputed, so there is no insert/delete. Queries are exact:
results always match a linear scan, with ties broken by the smaller
vertex id.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

Vec3 = tuple[float, float, float]


class KdTree:
    """Immutable balanced kd-tree over (position, vertex id) pairs."""

    def __init__(self, points: Iterable[tuple[Sequence[float], int]]):
        pairs = list(points)
        self.size = len(pairs)
        self._pts: list[Vec3] = [(float(p[0]), float(p[1]), float(p[2]))
                                 for p, _ in pairs]
        self._ids: list[int] = [int(i) for _, i in pairs]
        if any(not math.isfinite(c) for p in self._pts for c in p):
            raise ValueError("kd-tree requires finite coordinates")
        # One node per point: node i stores point index _point[i], the
        # split axis, and child node indices (-1 = none).
        self._point: list[int] = []
        self._axis: list[int] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._root = -1
        if self.size:
            coords = np.array(self._pts, dtype=np.float64)
            ids = np.array(self._ids, dtype=np.int64)
            self._root = self._build(np.arange(self.size), coords, ids)

    def _build(self, idx: np.ndarray, coords: np.ndarray, ids: np.ndarray) -> int:
        if idx.size == 0:
            return -1
        sub = coords[idx]
        spread = sub.max(axis=0) - sub.min(axis=0)
        axis = int(np.argmax(spread))
        order = idx[np.lexsort((ids[idx], sub[:, axis]))]
        mid = order.size // 2
        node = len(self._point)
        self._point.append(int(order[mid]))
        self._axis.append(axis)
        self._left.append(-1)
        self._right.append(-1)
        self._left[node] = self._build(order[:mid], coords, ids)
        self._right[node] = self._build(order[mid + 1:], coords, ids)
        return node

    def height(self) -> int:
        """Longest root-to-leaf path in nodes; 0 for an empty tree."""
        def depth(node: int) -> int:
            if node < 0:
                return 0
            return 1 + max(depth(self._left[node]), depth(self._right[node]))
        return depth(self._root)

    def _search(self, q: Sequence[float]) -> tuple[int, float, int]:
        """Core query: (best id, best squared distance, nodes visited)."""
        qx, qy, qz = float(q[0]), float(q[1]), float(q[2])
        if not all(math.isfinite(c) for c in (qx, qy, qz)):
            raise ValueError("query point must be finite")
        best_d2 = math.inf
        best_id = -1
        visits = 0
        # Stack entries: (node, squared distance from q to the node's
        # splitting plane along the path that led here). The far child is
        # pruned lazily at pop time against the current best.
        stack: list[tuple[int, float]] = [(self._root, 0.0)]
        pts = self._pts
        ids = self._ids
        while stack:
            node, bound = stack.pop()
            if node < 0 or bound > best_d2:
                continue
            visits += 1
            px, py, pz = pts[self._point[node]]
            dx, dy, dz = px - qx, py - qy, pz - qz
            d2 = dx * dx + dy * dy + dz * dz
            pid = ids[self._point[node]]
            if d2 < best_d2 or (d2 == best_d2 and pid < best_id):
                best_d2, best_id = d2, pid
            axis = self._axis[node]
            delta = (qx, qy, qz)[axis] - (px, py, pz)[axis]
            near, far = ((self._left[node], self._right[node]) if delta < 0
                         else (self._right[node], self._left[node]))
            stack.append((far, delta * delta))
            stack.append((near, 0.0))
        return best_id, best_d2, visits

    def nearest(self, q: Sequence[float]) -> tuple[int, float] | None:
        """Exact nearest stored point; ties go to the smaller vertex id."""
        if self.size == 0:
            return None
        best_id, best_d2, _ = self._search(q)
        return best_id, math.sqrt(best_d2)

    def nearest_within(self, q: Sequence[float], radius: float) -> tuple[int, float] | None:
        """Nearest neighbor if it lies within the closed ball of ``radius``."""
        if radius <= 0:
            raise ValueError("radius must be > 0")
        hit = self.nearest(q)
        if hit is None or hit[1] > radius:
            return None
        return hit

    def nearest_with_visits(self, q: Sequence[float]) -> tuple[tuple[int, float] | None, int]:
        """nearest() plus the number of tree nodes examined (for profiling)."""
        if self.size == 0:
            return None, 0
        best_id, best_d2, visits = self._search(q)
        return (best_id, math.sqrt(best_d2)), visits


def build(points: Iterable[tuple[Sequence[float], int]]) -> KdTree:
    """Construct a KdTree; an empty input yields a valid empty tree."""
    return KdTree(points)
