"""Finite bounded-degree graphs, rooted balls and boundary metrics.

All ratios are exact ``Fraction`` values. Distances are hop counts in the
ambient graph.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import StructuralError

UNREACHED = -1


class BoundedDegreeGraph:
    """Immutable simple graph on vertices ``0..n-1`` with degree bound ``d``."""

    __slots__ = ("n", "d", "adj", "_cache")

    def __init__(self, n: int, adjacency: Sequence[Iterable[int]], d: int | None = None):
        if n < 0 or len(adjacency) != n:
            raise StructuralError(f"adjacency has {len(adjacency)} rows for n={n}")
        adj = []
        for x, nbrs in enumerate(adjacency):
            nbrs = list(nbrs)
            row = tuple(sorted(set(nbrs)))
            if len(row) != len(nbrs):
                raise StructuralError(f"parallel edge at vertex {x}")
            for y in row:
                if not 0 <= y < n:
                    raise StructuralError(f"vertex {x} has out-of-range neighbor {y}")
                if y == x:
                    raise StructuralError(f"self-loop at vertex {x}")
            adj.append(row)
        for x, row in enumerate(adj):
            for y in row:
                if x not in adj[y]:
                    raise StructuralError(f"edge {x}-{y} is not symmetric")
        maxdeg = max((len(r) for r in adj), default=0)
        if d is None:
            d = max(1, maxdeg)
        if d < 1:
            raise StructuralError("degree bound must be at least 1")
        if maxdeg > d:
            raise StructuralError(f"degree {maxdeg} exceeds bound d={d}")
        self.n = n
        self.d = d
        self.adj = tuple(adj)
        self._cache = {}

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], d: int | None = None) -> "BoundedDegreeGraph":
        adj = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise StructuralError(f"edge {u}-{v} out of range for n={n}")
            if u == v:
                raise StructuralError(f"self-loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise StructuralError(f"parallel edge {key}")
            seen.add(key)
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, adj, d)

    def edges(self) -> list[tuple[int, int]]:
        return [(x, y) for x in range(self.n) for y in self.adj[x] if x < y]

    def degree(self, x: int) -> int:
        return len(self.adj[x])

    def max_degree(self) -> int:
        return max((len(r) for r in self.adj), default=0)

    def check_vertex(self, x: int) -> None:
        if not (isinstance(x, (int, np.integer)) and 0 <= x < self.n):
            raise StructuralError(f"vertex {x!r} out of range for n={self.n}")

    def to_dict(self) -> dict:
        return {"n": self.n, "d": self.d, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_dict(cls, data: dict) -> "BoundedDegreeGraph":
        try:
            return cls.from_edges(int(data["n"]), data["edges"], int(data["d"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed graph object: {exc}") from exc

    def disjoint_union(self, other: "BoundedDegreeGraph") -> "BoundedDegreeGraph":
        off = self.n
        adj = [list(r) for r in self.adj] + [[y + off for y in r] for r in other.adj]
        return BoundedDegreeGraph(self.n + other.n, adj, max(self.d, other.d))

    def relabel(self, perm: Sequence[int]) -> "BoundedDegreeGraph":
        """Graph with vertex ``x`` renamed to ``perm[x]``."""
        adj = [[] for _ in range(self.n)]
        for x in range(self.n):
            adj[perm[x]] = [perm[y] for y in self.adj[x]]
        return BoundedDegreeGraph(self.n, adj, self.d)

    def induced(self, vertices: Sequence[int]) -> tuple["BoundedDegreeGraph", list[int]]:
        """Induced subgraph on ``vertices`` (in the given order) and the local->host map."""
        index = {v: i for i, v in enumerate(vertices)}
        adj = [[index[y] for y in self.adj[v] if y in index] for v in vertices]
        return BoundedDegreeGraph(len(vertices), adj, self.d), list(vertices)

    def __eq__(self, other) -> bool:
        return isinstance(other, BoundedDegreeGraph) and (self.n, self.d, self.adj) == (other.n, other.d, other.adj)

    def __hash__(self) -> int:
        return hash((self.n, self.d, self.adj))

    def __repr__(self) -> str:
        return f"BoundedDegreeGraph(n={self.n}, d={self.d}, m={sum(map(len, self.adj)) // 2})"


def bfs(G: BoundedDegreeGraph, sources: int | Iterable[int], limit: int | None = None) -> dict[int, int]:
    """Distances from a source (or set of sources), optionally truncated at ``limit``."""
    if isinstance(sources, (int, np.integer)):
        sources = [int(sources)]
    dist = {}
    queue = deque()
    for s in sources:
        G.check_vertex(s)
        if s not in dist:
            dist[s] = 0
            queue.append(s)
    while queue:
        x = queue.popleft()
        dx = dist[x]
        if limit is not None and dx >= limit:
            continue
        for y in G.adj[x]:
            if y not in dist:
                dist[y] = dx + 1
                queue.append(y)
    return dist


def distance_matrix(G: BoundedDegreeGraph, sources: Sequence[int] | None = None) -> np.ndarray:
    """Hop distances as an int matrix (rows = sources), ``UNREACHED`` when disconnected."""
    if sources is None:
        cached = G._cache.get("apsp")
        if cached is not None:
            return cached
    if G.n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    rows, cols = [], []
    for x, y in G.edges():
        rows += [x, y]
        cols += [y, x]
    mat = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(G.n, G.n))
    idx = None if sources is None else np.asarray(sources, dtype=np.int64)
    raw = shortest_path(mat, method="D", unweighted=True, directed=False, indices=idx)
    raw = np.atleast_2d(raw)
    out = np.where(np.isinf(raw), UNREACHED, raw).astype(np.int64)
    if sources is None:
        out.setflags(write=False)
        G._cache["apsp"] = out
    return out


def distance(G: BoundedDegreeGraph, x: int, y: int) -> float:
    d = bfs(G, x).get(y)
    return math.inf if d is None else d


@dataclass(frozen=True)
class RootedBall:
    """Induced ball with local vertex ids; local 0 is the root."""

    graph: BoundedDegreeGraph
    vertices: tuple[int, ...]  # local id -> host vertex
    radius: int
    depth: tuple[int, ...]  # local id -> distance from the root

    @property
    def root(self) -> int:
        return 0

    @property
    def host_root(self) -> int:
        return self.vertices[0]


def ball(G: BoundedDegreeGraph, x: int, r: int) -> RootedBall:
    G.check_vertex(x)
    if r < 0:
        raise ValueError("radius must be non-negative")
    dist = bfs(G, x, limit=r)
    order = sorted(dist, key=lambda v: (dist[v], v))
    sub, vmap = G.induced(order)
    return RootedBall(sub, tuple(vmap), r, tuple(dist[v] for v in order))


def ball_members(G: BoundedDegreeGraph, x: int, r: int) -> frozenset[int]:
    return frozenset(bfs(G, x, limit=r))


def _as_set(H: Iterable[int]) -> frozenset[int]:
    return H if isinstance(H, frozenset) else frozenset(H)


def boundary(G: BoundedDegreeGraph, H: Iterable[int]) -> frozenset[int]:
    """Vertices of H with a neighbor outside H."""
    H = _as_set(H)
    return frozenset(x for x in H if any(y not in H for y in G.adj[x]))


def k_boundary(G: BoundedDegreeGraph, H: Iterable[int], K: int) -> frozenset[int]:
    """Vertices of H within distance K of the complement."""
    H = _as_set(H)
    outside = [v for v in range(G.n) if v not in H]
    if not outside or not H:
        return frozenset()
    near = bfs(G, outside, limit=K)
    return frozenset(v for v in near if v in H)


def k_closure(G: BoundedDegreeGraph, H: Iterable[int], K: int) -> frozenset[int]:
    H = _as_set(H)
    if not H:
        return frozenset()
    return frozenset(bfs(G, sorted(H), limit=K))


@dataclass(frozen=True)
class Boundaries:
    inner: tuple[int, ...]
    k_inner: tuple[int, ...]
    k_closure: tuple[int, ...]


def boundaries(G: BoundedDegreeGraph, H: Iterable[int], K: int) -> Boundaries:
    if K < 1:
        raise ValueError("K must be at least 1")
    H = _as_set(H)
    for v in H:
        G.check_vertex(v)
    return Boundaries(
        tuple(sorted(boundary(G, H))),
        tuple(sorted(k_boundary(G, H, K))),
        tuple(sorted(k_closure(G, H, K))),
    )


def isoperimetric(G: BoundedDegreeGraph, H: Iterable[int]) -> Fraction:
    H = _as_set(H)
    if not H:
        raise ValueError("isoperimetric constant of an empty set")
    return Fraction(len(boundary(G, H)), len(H))


def subset_diameter(G: BoundedDegreeGraph, H: Iterable[int]) -> float:
    """Largest ambient distance between two members of H (inf if H spans components)."""
    H = sorted(_as_set(H))
    if not H:
        raise ValueError("diameter of an empty set")
    best = 0
    targets = set(H)
    for x in H:
        dist = {}
        queue = deque([x])
        dist[x] = 0
        found = 1
        while queue and found < len(targets):
            u = queue.popleft()
            for y in G.adj[u]:
                if y not in dist:
                    dist[y] = dist[u] + 1
                    if y in targets:
                        found += 1
                    queue.append(y)
        if found < len(targets):
            return math.inf
        best = max(best, max(dist[y] for y in H))
    return best


def components(G: BoundedDegreeGraph) -> list[list[int]]:
    seen = [False] * G.n
    out = []
    for s in range(G.n):
        if not seen[s]:
            comp = sorted(bfs(G, s))
            for v in comp:
                seen[v] = True
            out.append(comp)
    return out


def eccentricity(G: BoundedDegreeGraph, x: int) -> int:
    return max(bfs(G, x).values())


def max_eccentricity(G: BoundedDegreeGraph) -> int:
    """Largest finite distance in G (0 for edgeless graphs)."""
    if G.n == 0:
        return 0
    return int(distance_matrix(G).max())


def edge_arrays(G: BoundedDegreeGraph) -> tuple[np.ndarray, np.ndarray]:
    cached = G._cache.get("edge_arrays")
    if cached is None:
        e = np.array(G.edges(), dtype=np.int64).reshape(-1, 2)
        cached = (e[:, 0].copy(), e[:, 1].copy())
        G._cache["edge_arrays"] = cached
    return cached


class BallProfile:
    """Ball sizes and boundary sizes of B_r(x) for every radius, from one BFS.

    Radii past the eccentricity are clamped, where the ball is the component.
    """

    __slots__ = ("sizes", "bsizes", "ecc")

    def __init__(self, G: BoundedDegreeGraph, x: int, dist_row: np.ndarray | None = None):
        if dist_row is None:
            dmap = bfs(G, x)
            dist_row = np.full(G.n, UNREACHED, dtype=np.int64)
            for v, dv in dmap.items():
                dist_row[v] = dv
        reach = dist_row >= 0
        ecc = int(dist_row[reach].max())
        layer = np.bincount(dist_row[reach], minlength=ecc + 1)
        self.sizes = np.cumsum(layer)
        # a vertex at distance r is on the boundary of B_r iff it has a neighbor at r+1
        eu, ev = edge_arrays(G)
        du, dv = dist_row[eu], dist_row[ev]
        outer = np.zeros(G.n, dtype=bool)
        outer[eu[(du >= 0) & (dv == du + 1)]] = True
        outer[ev[(dv >= 0) & (du == dv + 1)]] = True
        self.bsizes = np.bincount(dist_row[outer], minlength=ecc + 1) if outer.any() else np.zeros(ecc + 1, dtype=np.int64)
        self.ecc = ecc

    def size(self, r: int) -> int:
        return int(self.sizes[min(r, self.ecc)])

    def boundary_size(self, r: int) -> int:
        return 0 if r >= self.ecc else int(self.bsizes[r])

    def iso(self, r: int) -> Fraction:
        return Fraction(self.boundary_size(r), self.size(r))


def ball_profiles(G: BoundedDegreeGraph, vertices: Sequence[int] | None = None) -> dict[int, BallProfile]:
    verts = list(range(G.n)) if vertices is None else list(vertices)
    key = ("profiles", tuple(verts) if vertices is not None else None)
    cached = G._cache.get(key)
    if cached is not None:
        return cached
    if vertices is None and G.n <= 4000:
        dm = distance_matrix(G)
        out = {x: BallProfile(G, x, dm[x]) for x in verts}
    else:
        out = {x: BallProfile(G, x) for x in verts}
    G._cache[key] = out
    return out


def doubling_constant(G: BoundedDegreeGraph, s_max: int) -> Fraction:
    """max over x and 1 <= s <= s_max of |B_2s(x)| / |B_s(x)|."""
    if s_max < 1:
        raise ValueError("s_max must be at least 1")
    best = Fraction(1)
    for prof in ball_profiles(G).values():
        for s in range(1, s_max + 1):
            q = Fraction(prof.size(2 * s), prof.size(s))
            if q > best:
                best = q
            if s >= prof.ecc:
                break
    return best


def greedy_net(G: BoundedDegreeGraph, candidates: Sequence[int], s: int) -> list[int]:
    """Greedy maximal set of candidates with pairwise distance > s, in the given order."""
    chosen = []
    blocked = set()
    for v in candidates:
        if v in blocked:
            continue
        chosen.append(v)
        blocked.update(bfs(G, v, limit=s))
    return chosen


def cover_witness(G: BoundedDegreeGraph, x: int, s: int) -> list[int]:
    """Centers of a greedy s-separated net of B_2s(x); their s-balls cover B_2s(x)."""
    if s < 1:
        raise ValueError("s must be at least 1")
    dist = bfs(G, x, limit=2 * s)
    order = sorted(dist, key=lambda v: (dist[v], v))
    inside = set(order)
    chosen = []
    covered = set()
    for v in order:
        if v in covered:
            continue
        chosen.append(v)
        covered.update(u for u in bfs(G, v, limit=s) if u in inside)
    return chosen
