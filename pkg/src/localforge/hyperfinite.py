"""Hyperfinite partitioning oracle: repeated sweeps of maximal systems of small pieces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from .graph import BoundedDegreeGraph, boundary
from .local import Labeling, order_key
from .partition import Partition

# finder(G, alive, x, K, eps) -> frozenset | None
Finder = Callable[[BoundedDegreeGraph, set, int, int, Fraction], "frozenset[int] | None"]


def _iso_ok(G: BoundedDegreeGraph, piece: frozenset, eps: Fraction) -> bool:
    return Fraction(len(boundary(G, piece)), len(piece)) <= eps


def ball_finder(G: BoundedDegreeGraph, alive: set, x: int, K: int, eps: Fraction):
    """Smallest ball around x inside the surviving subgraph with i_G <= eps and size <= K."""
    piece = {x}
    frontier = [x]
    while True:
        fz = frozenset(piece)
        if _iso_ok(G, fz, eps):
            return fz
        nxt = []
        for u in frontier:
            for y in G.adj[u]:
                if y in alive and y not in piece:
                    piece.add(y)
                    nxt.append(y)
        if not nxt or len(piece) > K:
            return None
        frontier = nxt


def connected_subset_finder(G: BoundedDegreeGraph, alive: set, x: int, K: int, eps: Fraction):
    """Exhaustive search over connected subsets containing x; smallest size first, then lexicographic."""
    seen = {frozenset([x])}
    layer = [frozenset([x])]
    for _ in range(K):
        hits = sorted((tuple(sorted(s)) for s in layer if _iso_ok(G, s, eps)))
        if hits:
            return frozenset(hits[0])
        nxt = []
        for s in layer:
            ext = {y for u in s for y in G.adj[u] if y in alive and y not in s}
            for y in ext:
                t = s | {y}
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        if not nxt:
            return None
        layer = nxt
    return None


FINDERS = {"ball": ball_finder, "exhaustive": connected_subset_finder}


@dataclass
class HyperfiniteResult:
    partition: Partition
    sweeps_budget: int
    sweeps_run: int
    star_bound: Fraction

    @property
    def star_size(self) -> int:
        return len(self.partition.star_members())


def sweep_budget(d: int, K: int, eps: Fraction) -> int:
    return math.ceil(Fraction(4 * d * d * K * K) / eps) + 1


def hyperfinite_oracle(G: BoundedDegreeGraph, eps, K: int, finder: Finder | str = "ball", phi: Labeling | None = None) -> HyperfiniteResult:
    """Star partition whose regular classes are connected, have size <= K and i_G <= eps.

    Each sweep picks, in label-priority order, a maximal system of finder
    pieces that are pairwise at distance >= 2 in the surviving subgraph, then
    removes the pieces and their surviving neighbours. Removed neighbours and
    whatever survives the last sweep form the star class.
    """
    eps = Fraction(eps)
    if isinstance(finder, str):
        finder = FINDERS[finder]
    budget = sweep_budget(G.d, K, eps)
    order = sorted(range(G.n), key=(lambda x: (order_key(phi[x]), x)) if phi is not None else None)
    alive = set(range(G.n))
    pieces: list[frozenset] = []
    star: set = set()
    run = 0
    for _ in range(budget):
        run += 1
        blocked: set = set()
        accepted = []
        for x in order:
            if x not in alive or x in blocked:
                continue
            piece = finder(G, alive, x, K, eps)
            if piece is None or len(piece) > K or not piece <= alive or piece & blocked:
                continue
            accepted.append(piece)
            blocked |= piece
            blocked.update(y for u in piece for y in G.adj[u] if y in alive)
        if not accepted:
            break
        for piece in accepted:
            pieces.append(piece)
            alive -= piece
        nbrs = {y for y in blocked if y in alive}
        star |= nbrs
        alive -= nbrs
    star |= alive
    part = Partition.from_classes(G.n, [sorted(p) for p in pieces], eps, K, sorted(star))
    return HyperfiniteResult(part, budget, run, (G.d + 1) * eps * G.n)
