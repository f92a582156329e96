"""Seeded graph generators for the test corpus."""

from __future__ import annotations

import random

from .errors import StructuralError
from .graph import BoundedDegreeGraph


def cycle(n: int) -> BoundedDegreeGraph:
    if n < 3:
        raise StructuralError("a cycle needs at least 3 vertices")
    return BoundedDegreeGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], 2)


def path(n: int) -> BoundedDegreeGraph:
    if n < 1:
        raise StructuralError("a path needs at least 1 vertex")
    return BoundedDegreeGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)], 2)


def grid(a: int, b: int) -> BoundedDegreeGraph:
    if a < 1 or b < 1:
        raise StructuralError("grid sides must be positive")
    idx = lambda i, j: i * b + j
    edges = []
    for i in range(a):
        for j in range(b):
            if i + 1 < a:
                edges.append((idx(i, j), idx(i + 1, j)))
            if j + 1 < b:
                edges.append((idx(i, j), idx(i, j + 1)))
    return BoundedDegreeGraph.from_edges(a * b, edges, 4)


def torus(a: int, b: int) -> BoundedDegreeGraph:
    # sides below 3 would create parallel edges
    if a < 3 or b < 3:
        raise StructuralError("torus sides must be at least 3")
    idx = lambda i, j: i * b + j
    edges = []
    for i in range(a):
        for j in range(b):
            edges.append((idx(i, j), idx((i + 1) % a, j)))
            edges.append((idx(i, j), idx(i, (j + 1) % b)))
    return BoundedDegreeGraph.from_edges(a * b, edges, 4)


def regular_tree(branching: int, depth: int) -> BoundedDegreeGraph:
    """Ball of radius ``depth`` around a vertex of the infinite ``branching``-regular tree.

    The root has ``branching`` children and every other internal vertex
    ``branching - 1``, so all internal vertices have degree ``branching``.
    """
    if branching < 2 or depth < 0:
        raise StructuralError("need branching >= 2 and depth >= 0")
    edges = []
    level = [0]
    n = 1
    for k in range(depth):
        nxt = []
        for v in level:
            for _ in range(branching if k == 0 else branching - 1):
                edges.append((v, n))
                nxt.append(n)
                n += 1
        level = nxt
    return BoundedDegreeGraph.from_edges(n, edges, branching)


def random_bounded_degree(n: int, d: int, seed: int = 0, edges: int | None = None) -> BoundedDegreeGraph:
    """Random simple graph with max degree d; tries to place ``edges`` edges (default n*d/2 * 3/4)."""
    if n < 1 or d < 1:
        raise StructuralError("need n >= 1 and d >= 1")
    rng = random.Random(seed)
    target = edges if edges is not None else (n * d * 3) // 8
    deg = [0] * n
    chosen = set()
    attempts = 0
    while len(chosen) < target and attempts < 20 * target + 100:
        attempts += 1
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v or deg[u] >= d or deg[v] >= d:
            continue
        e = (min(u, v), max(u, v))
        if e in chosen:
            continue
        chosen.add(e)
        deg[u] += 1
        deg[v] += 1
    return BoundedDegreeGraph.from_edges(n, sorted(chosen), d)


KINDS = {
    "cycle": lambda p, seed: cycle(int(p["n"])),
    "path": lambda p, seed: path(int(p["n"])),
    "grid": lambda p, seed: grid(int(p["a"]), int(p["b"])),
    "torus": lambda p, seed: torus(int(p["a"]), int(p["b"])),
    "regularTreeTruncation": lambda p, seed: regular_tree(int(p["branching"]), int(p["depth"])),
    "randomBoundedDegree": lambda p, seed: random_bounded_degree(
        int(p["n"]), int(p["d"]), seed, None if p.get("edges") is None else int(p["edges"])
    ),
}


def generate(kind: str, params: dict | None = None, seed: int = 0) -> BoundedDegreeGraph:
    if kind not in KINDS:
        raise StructuralError(f"unknown graph kind {kind!r}; choose from {sorted(KINDS)}")
    try:
        return KINDS[kind](params or {}, seed)
    except KeyError as exc:
        raise StructuralError(f"missing parameter {exc} for {kind}") from exc
