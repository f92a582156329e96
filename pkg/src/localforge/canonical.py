"""Canonical encodings of rooted, optionally labeled balls.

Two balls get the same encoding exactly when they are isomorphic by a map
that fixes the root and preserves labels. Tree-shaped balls use a labeled
AHU encoding; everything else goes through colour refinement with full
backtracking over individualisations, keeping the smallest certificate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

from .graph import BoundedDegreeGraph, RootedBall, ball


def symbol_key(sym: Any) -> str:
    """Deterministic total-order key for a label symbol."""
    return json.dumps(sym, separators=(",", ":"), sort_keys=True)


@dataclass(frozen=True)
class CanonicalBall:
    radius: int
    size: int
    labels: tuple  # label values in canonical vertex order; root first
    edges: tuple[tuple[int, int], ...]
    encoding: bytes = field(repr=False)

    def __eq__(self, other) -> bool:
        return isinstance(other, CanonicalBall) and self.radius == other.radius and self.encoding == other.encoding

    def __hash__(self) -> int:
        return hash((self.radius, self.encoding))

    def __lt__(self, other: "CanonicalBall") -> bool:
        return (self.radius, self.encoding) < (other.radius, other.encoding)

    @property
    def labeled(self) -> bool:
        return any(v is not None for v in self.labels)

    def adjacency(self) -> list[list[int]]:
        adj = [[] for _ in range(self.size)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(a) for a in adj]

    def graph(self) -> BoundedDegreeGraph:
        return BoundedDegreeGraph(self.size, self.adjacency())

    def root_neighbors(self) -> list[int]:
        return [v for u, v in self.edges if u == 0]


def _tree_certificate(adj, keys, depth):
    k = len(adj)
    children = [[u for u in adj[v] if depth[u] == depth[v] + 1] for v in range(k)]
    enc = [""] * k
    for v in sorted(range(k), key=lambda v: -depth[v]):
        kids = sorted(enc[c] for c in children[v])
        enc[v] = f"({len(keys[v])}:{keys[v]}{''.join(kids)})"
    for v in range(k):
        children[v].sort(key=lambda c: enc[c])
    order = []
    stack = [0]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(children[v]))
    return order


def _refine(adj, colors):
    ncolors = len(set(colors))
    while True:
        sigs = [(colors[v], tuple(sorted(colors[u] for u in adj[v]))) for v in range(len(adj))]
        uniq = sorted(set(sigs))
        rank = {s: i for i, s in enumerate(uniq)}
        colors = [rank[s] for s in sigs]
        if len(uniq) == ncolors:
            return colors
        ncolors = len(uniq)


def _certificate_for(order, adj, keys):
    pos = {v: i for i, v in enumerate(order)}
    edges = tuple(sorted((min(pos[u], pos[v]), max(pos[u], pos[v])) for u in range(len(adj)) for v in adj[u] if u < v))
    return tuple(keys[v] for v in order), edges


def _general_order(adj, keys, depth):
    init_sigs = [(depth[v], keys[v]) for v in range(len(adj))]
    uniq = sorted(set(init_sigs))
    rank = {s: i for i, s in enumerate(uniq)}
    best = [None, None]

    def search(colors):
        colors = _refine(adj, colors)
        counts = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        target = min((c for c, m in counts.items() if m > 1), default=None)
        if target is None:
            order = sorted(range(len(adj)), key=lambda v: colors[v])
            cert = _certificate_for(order, adj, keys)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, order
            return
        for v in range(len(adj)):
            if colors[v] == target:
                nxt = [2 * c for c in colors]
                nxt[v] = 2 * target - 1
                search(nxt)

    search([rank[s] for s in init_sigs])
    return best[1]


def canonical_order(adj: Sequence[Sequence[int]], keys: Sequence[str], depth: Sequence[int]) -> list[int]:
    """Canonical vertex order of a connected rooted graph (root = vertex with depth 0)."""
    k = len(adj)
    m = sum(len(a) for a in adj) // 2
    if m == k - 1:
        return _tree_certificate(adj, keys, depth)
    return _general_order(adj, keys, depth)


def canonicalize(rb: RootedBall, labels: Sequence | None = None, *, local: bool = False) -> CanonicalBall:
    """Canonical form of a rooted ball.

    ``labels`` is indexed by host vertex, or by local id when ``local`` is set.
    A ``Labeling`` object is accepted as well.
    """
    values = getattr(labels, "values", labels)
    adj = rb.graph.adj
    k = rb.graph.n
    if values is None:
        vals = [None] * k
    elif local:
        vals = list(values)
    else:
        vals = [values[h] for h in rb.vertices]
    keys = [symbol_key(v) for v in vals]
    order = canonical_order(adj, keys, rb.depth)
    label_keys, edges = _certificate_for(order, adj, keys)
    encoding = json.dumps([k, list(label_keys), [list(e) for e in edges]], separators=(",", ":")).encode()
    return CanonicalBall(rb.radius, k, tuple(vals[v] for v in order), edges, encoding)


def canonical_ball(G: BoundedDegreeGraph, x: int, r: int, labels: Sequence | None = None) -> CanonicalBall:
    return canonicalize(ball(G, x, r), labels)


def ball_set(G: BoundedDegreeGraph, r: int, labels: Sequence | None = None) -> dict[int, frozenset[CanonicalBall]]:
    """Distinct canonical balls of every radius 0..r, keyed by radius."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    return {i: frozenset(canonical_ball(G, x, i, labels) for x in range(G.n)) for i in range(r + 1)}


def ball_signature(G: BoundedDegreeGraph, r: int) -> frozenset[CanonicalBall]:
    out = set()
    for s in ball_set(G, r).values():
        out |= s
    return frozenset(out)


def ball_from_canonical(cb: CanonicalBall) -> RootedBall:
    """Re-materialise a canonical ball as a rooted ball with local ids in canonical order."""
    g = cb.graph()
    depth = [0] * cb.size
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.adj[u]:
                if v not in seen:
                    seen.add(v)
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    return RootedBall(g, tuple(range(cb.size)), cb.radius, tuple(depth))
