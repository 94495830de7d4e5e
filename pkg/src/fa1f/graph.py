"""Finite windows of bounded-degree graphs.

All simulation runs on a finite window with free boundary: a missing
neighbor is simply never there to facilitate a flip.  Vertex ids are dense
integers and every arbitrary choice is broken towards the lowest id.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_VERTEX_CAP = 2_000_000

WINDOW_KINDS = ("path", "half_line", "grid2d", "regular_tree")


class GraphError(ValueError):
    """Raised for invalid windows or impossible graph queries."""


@dataclass(frozen=True, eq=False)
class GraphView:
    """Immutable finite graph window.

    Parameters
    ----------
    adjacency : tuple of tuple of int
        Sorted neighbor lists, one per vertex.
    boundary : frozenset of int
        Vertices where the window cuts the underlying infinite graph.
    kind : str
        Name of the graph family the window was cut from.
    """

    adjacency: tuple[tuple[int, ...], ...]
    boundary: frozenset[int] = frozenset()
    kind: str = "custom"
    coords: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.adjacency)
        if n == 0:
            raise GraphError("empty graph")
        for x, nbrs in enumerate(self.adjacency):
            for y in nbrs:
                if not 0 <= y < n:
                    raise GraphError(f"neighbor {y} of {x} out of range")
                if y == x:
                    raise GraphError(f"self-loop at {x}")
                if x not in self.adjacency[y]:
                    raise GraphError(f"asymmetric edge {x}-{y}")
        if n > 1 and (bfs_distances(self, 0) < 0).any():
            raise GraphError("graph is not connected")

    @property
    def n(self) -> int:
        return len(self.adjacency)

    @cached_property
    def kappa(self) -> int:
        """Degree bound, set to the true maximum degree (at least 1)."""
        return max(1, max(len(a) for a in self.adjacency))

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """``(n, kappa)`` int array of neighbors padded with the sentinel ``n``."""
        table = np.full((self.n, self.kappa), self.n, dtype=np.int64)
        for x, nbrs in enumerate(self.adjacency):
            table[x, : len(nbrs)] = nbrs
        return table

    def neighbors(self, x: int) -> tuple[int, ...]:
        return self.adjacency[x]

    def edges(self) -> list[tuple[int, int]]:
        return [(x, y) for x, nbrs in enumerate(self.adjacency) for y in nbrs if x < y]

    def is_adjacent(self, x: int, y: int) -> bool:
        return y in self.adjacency[x]

    def check_site(self, x: int) -> int:
        if not 0 <= int(x) < self.n:
            raise GraphError(f"site {x} not in window of {self.n} vertices")
        return int(x)

    def dump_edges(self) -> str:
        """Edge list, one ``"u v"`` pair per line, 0-based ids."""
        return "".join(f"{u} {v}\n" for u, v in self.edges())

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], **kwargs) -> "GraphView":
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        return cls(tuple(tuple(sorted(a)) for a in adj), **kwargs)

    @classmethod
    def parse_edges(cls, text: str, n: int | None = None) -> "GraphView":
        pairs = [tuple(int(tok) for tok in line.split()) for line in text.splitlines() if line.strip()]
        if n is None:
            n = 1 + max(max(p) for p in pairs)
        return cls.from_edges(n, pairs)


def _path_window(radius: int, both_ends_cut: bool) -> GraphView:
    n = radius + 1
    adj = tuple(tuple(y for y in (x - 1, x + 1) if 0 <= y < n) for x in range(n))
    boundary = frozenset({0, radius}) if both_ends_cut else frozenset({radius})
    return GraphView(adj, boundary=boundary, kind="path" if both_ends_cut else "half_line")


def _grid_window(radius: int) -> GraphView:
    pts = [(i, j) for i in range(-radius, radius + 1) for j in range(-radius, radius + 1)
           if abs(i) + abs(j) <= radius]
    pts.sort(key=lambda p: (abs(p[0]) + abs(p[1]), p))
    index = {p: k for k, p in enumerate(pts)}
    adj = []
    for i, j in pts:
        nb = [index[p] for p in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)) if p in index]
        adj.append(tuple(sorted(nb)))
    boundary = frozenset(k for k, p in enumerate(pts) if abs(p[0]) + abs(p[1]) == radius)
    return GraphView(tuple(adj), boundary=boundary, kind="grid2d", coords=tuple(pts))


def _tree_window(radius: int, degree: int) -> GraphView:
    if degree < 2:
        raise GraphError("regular tree needs degree >= 2")
    adj: list[list[int]] = [[]]
    depth = [0]
    frontier = [0]
    for level in range(1, radius + 1):
        nxt = []
        for parent in frontier:
            children = degree if level == 1 else degree - 1
            for _ in range(children):
                v = len(adj)
                adj.append([parent])
                adj[parent].append(v)
                depth.append(level)
                nxt.append(v)
        frontier = nxt
    boundary = frozenset(v for v, d in enumerate(depth) if d == radius)
    return GraphView(tuple(tuple(sorted(a)) for a in adj), boundary=boundary, kind="regular_tree")


def window_size(kind: str, radius: int, degree: int = 3) -> int:
    """Vertex count of :func:`build_window` without building it."""
    if kind in ("path", "half_line"):
        return radius + 1
    if kind == "grid2d":
        return 2 * radius * (radius + 1) + 1
    if kind == "regular_tree":
        return 1 + sum(degree * (degree - 1) ** (k - 1) for k in range(1, radius + 1))
    raise GraphError(f"unknown window kind {kind!r}")


def build_window(kind: str, radius: int, *, degree: int = 3,
                 vertex_cap: int = DEFAULT_VERTEX_CAP) -> GraphView:
    """Finite window of one of the supported graph families.

    ``path`` and ``half_line`` are the segment ``0..radius`` (cut at both
    ends, respectively only at the far end); ``grid2d`` is the L1 ball of
    ``Z^2``; ``regular_tree`` is the ball around the root of the
    ``degree``-regular tree.
    """
    if radius < 1:
        raise GraphError("radius must be >= 1")
    size = window_size(kind, radius, degree)
    if size > vertex_cap:
        raise GraphError(f"window of {size} vertices exceeds cap {vertex_cap}")
    if kind == "path":
        return _path_window(radius, True)
    if kind == "half_line":
        return _path_window(radius, False)
    if kind == "grid2d":
        return _grid_window(radius)
    return _tree_window(radius, degree)


def bfs_distances(g: GraphView, source: int) -> np.ndarray:
    """Graph distances from ``source``; ``-1`` marks unreachable vertices."""
    dist = np.full(len(g.adjacency), -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def distance(g: GraphView, x: int, y: int) -> int:
    g.check_site(x)
    g.check_site(y)
    if x == y:
        return 0
    return int(bfs_distances(g, x)[y])


def distance_to_set(g: GraphView, targets: Iterable[int]) -> np.ndarray:
    """Multi-source BFS distances to the nearest vertex of ``targets``."""
    dist = np.full(g.n, -1, dtype=np.int64)
    queue = deque()
    for z in targets:
        if dist[z] < 0:
            dist[z] = 0
            queue.append(z)
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


# ---------------------------------------------------------------- growth


@dataclass(frozen=True)
class GrowthParams:
    """Ball-growth bound ``vartheta * exp(vartheta_tilde * r**(1 - eps))``."""

    vartheta: float
    vartheta_tilde: float
    eps: float

    def __post_init__(self):
        if self.vartheta <= 0 or self.vartheta_tilde <= 0:
            raise GraphError("vartheta and vartheta_tilde must be positive")
        if not 0 < self.eps < 1:
            raise GraphError("eps must lie in (0, 1)")

    def bound(self, r: int) -> float:
        return self.vartheta * math.exp(self.vartheta_tilde * r ** (1 - self.eps))


@dataclass(frozen=True)
class PolynomialGrowth:
    """Polynomial variant ``beta * max(r, 1)**d``."""

    beta: float
    d: float

    def __post_init__(self):
        if self.beta <= 0 or self.d < 1:
            raise GraphError("need beta > 0 and d >= 1")

    def bound(self, r: int) -> float:
        return self.beta * max(r, 1) ** self.d


@dataclass(frozen=True)
class GrowthRow:
    r: int
    max_ball: int
    bound: float
    ok: bool


@dataclass(frozen=True)
class GrowthReport:
    rows: tuple[GrowthRow, ...]
    centers: int

    @property
    def passed(self) -> bool:
        return all(row.ok for row in self.rows)

    @property
    def first_failure(self) -> int | None:
        for row in self.rows:
            if not row.ok:
                return row.r
        return None


def check_growth(g: GraphView, params: GrowthParams | PolynomialGrowth, r_max: int,
                 max_centers: int | None = None) -> GrowthReport:
    """Compare ball sizes against a growth bound on boundary-free balls.

    A ball ``B(x, r)`` counts only when every boundary vertex of the window
    is at distance at least ``r`` from ``x``, so that the window does not
    clip it.
    """
    if r_max < 0:
        raise GraphError("r_max must be nonnegative")
    to_boundary = (distance_to_set(g, g.boundary) if g.boundary
                   else np.full(g.n, np.iinfo(np.int64).max))
    centers = np.flatnonzero(to_boundary >= r_max)
    if centers.size == 0:
        raise GraphError(f"no center with an unclipped ball of radius {r_max}")
    if max_centers is not None and centers.size > max_centers:
        pick = np.linspace(0, centers.size - 1, max_centers).round().astype(int)
        centers = centers[np.unique(pick)]
    max_ball = np.zeros(r_max + 1, dtype=np.int64)
    for c in centers:
        d = bfs_distances(g, int(c))
        counts = np.bincount(d[(d >= 0) & (d <= r_max)], minlength=r_max + 1)
        max_ball = np.maximum(max_ball, np.cumsum(counts))
    rows = []
    for r in range(r_max + 1):
        b = params.bound(r)
        rows.append(GrowthRow(r, int(max_ball[r]), b, bool(max_ball[r] <= b)))
    return GrowthReport(tuple(rows), int(centers.size))


# ------------------------------------------------------------ half-lines


@dataclass(frozen=True)
class HalfLine:
    """Simple path ``z_0, z_1, ..., z_n`` inside a window."""

    sites: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.sites)

    def __getitem__(self, i):
        return self.sites[i]

    def index_of(self, site: int) -> int:
        return self.sites.index(site)

    def validate(self, g: GraphView) -> None:
        if len(set(self.sites)) != len(self.sites):
            raise GraphError("half-line revisits a site")
        for a, b in zip(self.sites, self.sites[1:]):
            if not g.is_adjacent(a, b):
                raise GraphError(f"half-line sites {a}, {b} not adjacent")


@dataclass(frozen=True)
class ExtendedHalfLine:
    """Shortest path from ``origin`` to a half-line, then along it."""

    origin: int
    prefix: tuple[int, ...]
    continuation: tuple[int, ...]
    join_index: int

    @property
    def sites(self) -> tuple[int, ...]:
        return self.prefix + self.continuation

    def __len__(self) -> int:
        return len(self.prefix) + len(self.continuation)

    def validate(self, g: GraphView) -> None:
        seq = self.sites
        if seq[0] != self.origin:
            raise GraphError("extended half-line must start at its origin")
        for a, b in zip(seq, seq[1:]):
            if not g.is_adjacent(a, b):
                raise GraphError(f"sites {a}, {b} not adjacent")


def embed_half_line(g: GraphView, z0: int, length: int, node_budget: int = 1_000_000) -> HalfLine:
    """Deterministic simple path with ``length`` edges starting at ``z0``.

    Depth-first search visiting lower ids first, with backtracking.
    """
    g.check_site(z0)
    if length < 1:
        raise GraphError("length must be >= 1")
    if length + 1 > g.n:
        raise GraphError(f"no simple path of length {length} in a {g.n}-vertex window")
    path = [z0]
    on_path = {z0}
    iters = [iter(g.adjacency[z0])]
    visited = 0
    while iters:
        if len(path) == length + 1:
            return HalfLine(tuple(path))
        advanced = False
        for v in iters[-1]:
            if v not in on_path:
                visited += 1
                if visited > node_budget:
                    raise GraphError("half-line search budget exhausted")
                path.append(v)
                on_path.add(v)
                iters.append(iter(g.adjacency[v]))
                advanced = True
                break
        if not advanced:
            iters.pop()
            on_path.discard(path.pop())
    raise GraphError(f"no simple path of length {length} from {z0}")


def _shortest_path(g: GraphView, src: int, dst: int) -> list[int]:
    # BFS from dst so each step from src can pick the lowest-id closer neighbor
    d = bfs_distances(g, dst)
    path = [src]
    while path[-1] != dst:
        here = path[-1]
        path.append(min(v for v in g.adjacency[here] if d[v] == d[here] - 1))
    return path


def extend_half_line(g: GraphView, y0: int, hl: HalfLine) -> ExtendedHalfLine:
    g.check_site(y0)
    d = bfs_distances(g, y0)
    dists = [int(d[z]) for z in hl.sites]
    best = min(dists)
    j = dists.index(best)
    prefix = tuple(_shortest_path(g, y0, hl.sites[j]))
    return ExtendedHalfLine(origin=y0, prefix=prefix, continuation=tuple(hl.sites[j + 1:]), join_index=j)


def line_neighbors(length: int) -> list[tuple[int, ...]]:
    """Neighbor lists of the index line ``0..length-1``."""
    return [tuple(j for j in (i - 1, i + 1) if 0 <= j < length) for i in range(length)]


def as_sequence(line: HalfLine | ExtendedHalfLine | Sequence[int]) -> tuple[int, ...]:
    if isinstance(line, (HalfLine, ExtendedHalfLine)):
        return line.sites
    return tuple(int(s) for s in line)
