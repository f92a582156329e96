"""Local approximation algorithms: MIS, approximate maximum (weighted) independent sets, matchings."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .errors import AlphabetError, ContractError, SeparationError, SizeLimitError, StructuralError
from .graph import BoundedDegreeGraph, bfs, boundary
from .jsonio import frac_str
from .local import (
    Labeling,
    OracleSpec,
    RoundTrace,
    apply_oracle,
    compose,
    neighborhood_oracle,
    order_key,
    require_separation,
    separation_violation,
)
from .partition import CodeFamily, Partition

IN, OUT = "a", "b"


# ---------------------------------------------------------------- maximal independent set


def mis_round(k: int) -> OracleSpec:
    """Round k: a vertex labelled k joins the set unless a neighbour already has."""

    def step(own, nbrs):
        if own == k:
            return OUT if IN in nbrs else IN
        return own

    return neighborhood_oracle(step, name=f"mis-round-{k}")


def mis_oracle(m: int) -> OracleSpec:
    """The m rounds composed into one oracle of radius m."""
    return compose(*(mis_round(k) for k in range(1, m + 1)))


def _round_count(G: BoundedDegreeGraph, phi: Labeling) -> int:
    vals = phi.values
    if any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in vals):
        raise AlphabetError("MIS needs labels in {1..m}")
    top = max(vals, default=0)
    if phi.alphabet is not None:
        top = max([top, *phi.alphabet])
    return max(G.d + 1, top)


def mis_ctda(G: BoundedDegreeGraph, phi: Labeling, *, trace: RoundTrace | None = None) -> frozenset:
    """Maximal independent set from a 1-separating labeling over {1..m}, one relabeling round per label."""
    bad = separation_violation(G, phi.values, 1)
    if bad is not None:
        raise SeparationError(f"adjacent vertices {bad[0]} and {bad[1]} share a label")
    m = _round_count(G, phi)
    vals = Labeling(phi.values)
    for k in range(1, m + 1):
        vals = apply_oracle(G, vals, mis_round(k))
        if trace is not None:
            trace.rounds.append(vals.values)
    return frozenset(x for x in range(G.n) if vals[x] == IN)


def is_independent(G: BoundedDegreeGraph, S: Iterable[int]) -> bool:
    S = set(S)
    return all(y not in S for x in S for y in G.adj[x])


def is_maximal_independent(G: BoundedDegreeGraph, S: Iterable[int]) -> bool:
    S = set(S)
    if not is_independent(G, S):
        return False
    return all(x in S or any(y in S for y in G.adj[x]) for x in range(G.n))


# ---------------------------------------------------------------- exact weighted independent set


def max_weight_independent_set(
    adj: Mapping[int, Iterable[int]], weight: Mapping[int, int] | None = None, limit: int = 60
) -> tuple[int, frozenset]:
    """Exact maximum-weight independent set by branch and bound on an adjacency map.

    Components are solved separately; paths and cycles use a linear scan.
    """
    nodes = frozenset(adj)
    if len(nodes) > limit:
        raise SizeLimitError(f"{len(nodes)} vertices exceed the exact-solver limit {limit}")
    nb = {v: frozenset(u for u in adj[v] if u in nodes and u != v) for v in nodes}
    w = {v: (1 if weight is None else weight[v]) for v in nodes}
    if any(x < 0 for x in w.values()):
        raise ValueError("weights must be non-negative")

    def path_best(seq):
        take, skip = (0, ()), (0, ())
        for v in seq:
            take, skip = (skip[0] + w[v], skip[1] + (v,)), max(take, skip, key=lambda t: t[0])
        return max(take, skip, key=lambda t: t[0])

    def chain_order(S):
        ends = [v for v in S if len(nb[v] & S) <= 1]
        start = min(ends) if ends else min(S)
        seq, prev, cur = [start], None, start
        while True:
            nxt = sorted(u for u in nb[cur] & S if u != prev and u not in seq)
            if not nxt:
                return seq, not ends
            prev, cur = cur, nxt[0]
            seq.append(cur)

    @lru_cache(maxsize=None)
    def solve(S: frozenset) -> tuple[int, tuple]:
        if not S:
            return 0, ()
        start = min(S)
        comp, stack = {start}, [start]
        while stack:
            u = stack.pop()
            for y in nb[u] & S:
                if y not in comp:
                    comp.add(y)
                    stack.append(y)
        if len(comp) < len(S):
            a = solve(frozenset(comp))
            b = solve(S - comp)
            return a[0] + b[0], a[1] + b[1]
        degs = {v: len(nb[v] & S) for v in S}
        for v in sorted(S):
            if degs[v] == 0:
                rest = solve(S - {v})
                return rest[0] + w[v], rest[1] + (v,)
            if degs[v] == 1:
                (u,) = nb[v] & S
                if w[v] >= w[u]:
                    rest = solve(S - {v, u})
                    return rest[0] + w[v], rest[1] + (v,)
        if max(degs.values()) <= 2:
            seq, is_cycle = chain_order(S)
            if not is_cycle:
                return path_best(seq)
            a = path_best(seq[1:])
            b = path_best(seq[2:-1])
            b = (b[0] + w[seq[0]], b[1] + (seq[0],))
            return max(a, b, key=lambda t: t[0])
        v = max(sorted(S), key=lambda x: degs[x])
        out = solve(S - {v})
        inc = solve(S - {v} - nb[v])
        inc = (inc[0] + w[v], inc[1] + (v,))
        return max(inc, out, key=lambda t: t[0])

    best, members = solve(nodes)
    solve.cache_clear()
    return best, frozenset(members)


def _induced_adj(G: BoundedDegreeGraph, S: Iterable[int]) -> dict[int, list[int]]:
    S = set(S)
    return {v: [u for u in G.adj[v] if u in S] for v in S}


def max_independent_set(G: BoundedDegreeGraph, limit: int = 60) -> frozenset:
    return max_weight_independent_set(_induced_adj(G, range(G.n)), None, limit)[1]


def max_weighted_independent_set(G: BoundedDegreeGraph, w: Sequence[int], limit: int = 60) -> tuple[int, frozenset]:
    return max_weight_independent_set(_induced_adj(G, range(G.n)), dict(enumerate(w)), limit)


def max_matching_size(G: BoundedDegreeGraph) -> int:
    import networkx as nx

    H = nx.Graph()
    H.add_nodes_from(range(G.n))
    H.add_edges_from(G.edges())
    return len(nx.max_weight_matching(H, maxcardinality=True))


def brute_force_oracles(G: BoundedDegreeGraph, w: Sequence[int] | None = None, limit: int = 60) -> dict:
    out = {"maxIs": len(max_independent_set(G, limit)), "maxMatching": max_matching_size(G)}
    if w is not None:
        out["maxWeightedIs"] = max_weighted_independent_set(G, w, limit)[0]
    return out


# ---------------------------------------------------------------- approximate maximum independent set


@dataclass
class IndependentSetResult:
    members: frozenset
    weight: int
    star_fraction: Fraction
    boundary_fraction: Fraction

    def to_dict(self) -> dict:
        return {
            "set": sorted(self.members),
            "weight": self.weight,
            "starFraction": frac_str(self.star_fraction),
            "boundaryFraction": frac_str(self.boundary_fraction),
        }


def _solve_on_interiors(
    G: BoundedDegreeGraph, P: Partition, w: Sequence[int] | None, mode: str, limit: int
) -> IndependentSetResult:
    P.validate(G)
    chosen: set = set()
    bmass = 0
    for cid, members in sorted(P.regular_classes().items()):
        bd = boundary(G, members)
        bmass += len(bd)
        interior = [v for v in members if v not in bd]
        if mode == "maximal":
            local = set()
            for v in sorted(interior):
                if not any(u in local for u in G.adj[v]):
                    local.add(v)
            chosen |= local
            continue
        if len(interior) > limit:
            raise SizeLimitError(f"class {cid} has {len(interior)} interior vertices, above the exact-solver limit {limit}")
        weights = None if w is None else {v: w[v] for v in interior}
        chosen |= max_weight_independent_set(_induced_adj(G, interior), weights, limit)[1]
    total = sum(1 if w is None else w[v] for v in chosen)
    n = max(G.n, 1)
    return IndependentSetResult(frozenset(chosen), total, Fraction(len(P.star_members()), n), Fraction(bmass, n))


def approx_mis(G: BoundedDegreeGraph, sp: Partition, *, mode: str = "maximum", limit: int = 60) -> IndependentSetResult:
    """Union over regular classes of an independent set of the class interior.

    ``mode="maximum"`` solves each interior exactly; ``"maximal"`` takes a
    greedy maximal set instead, which is faster with weaker guarantees.
    """
    if mode not in ("maximum", "maximal"):
        raise ValueError(f"unknown mode {mode!r}")
    sp.validate(G)
    return _solve_on_interiors(G, sp, None, mode, limit)


@dataclass
class WeightedIsResult:
    results: list
    best_index: int
    optimum: int | None = None
    epsilon: Fraction | None = None
    meeting: int | None = None

    @property
    def best(self) -> IndependentSetResult:
        return self.results[self.best_index]

    def to_dict(self) -> dict:
        out = {
            "weights": [r.weight for r in self.results],
            "bestIndex": self.best_index,
            "best": self.best.to_dict(),
        }
        if self.optimum is not None:
            out["optimum"] = self.optimum
            out["meeting"] = self.meeting
            out["meetingFraction"] = frac_str(Fraction(self.meeting, len(self.results)))
        return out


def weighted_is(
    G: BoundedDegreeGraph,
    family: CodeFamily | Sequence[Partition],
    w: Sequence[int],
    *,
    epsilon=None,
    optimum: int | None = None,
    limit: int = 60,
) -> WeightedIsResult:
    """Exact weighted independent sets on class interiors for every family member.

    With ``epsilon`` given, members are scored against the optimum (computed
    exactly when the graph is small enough, or passed in): a member meets the
    target when its weight is at least optimum - epsilon * w(V).
    """
    parts = family.partitions() if isinstance(family, CodeFamily) else list(family)
    if not parts:
        raise ContractError("empty family")
    if len(w) != G.n or any(x < 0 for x in w):
        raise StructuralError("weights must be one non-negative integer per vertex")
    results = [_solve_on_interiors(G, P, w, "maximum", limit) for P in parts]
    best = max(range(len(results)), key=lambda i: (results[i].weight, -i))
    out = WeightedIsResult(results, best)
    if epsilon is not None:
        eps = Fraction(epsilon)
        if optimum is None:
            optimum = max_weighted_independent_set(G, w, max(limit, G.n))[0]
        total = sum(w)
        out.optimum, out.epsilon = optimum, eps
        out.meeting = sum(1 for r in results if r.weight >= optimum - eps * total)
    return out


# ---------------------------------------------------------------- matchings


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def validate_matching(G: BoundedDegreeGraph, M: Iterable[Sequence[int]]) -> dict[int, int]:
    mate: dict[int, int] = {}
    for e in M:
        u, v = e
        if v not in G.adj[u]:
            raise StructuralError(f"({u}, {v}) is not an edge")
        if u in mate or v in mate:
            raise StructuralError(f"vertex shared by two matching edges at ({u}, {v})")
        mate[u], mate[v] = v, u
    return mate


def _find_augmenting(G: BoundedDegreeGraph, mate: dict, x: int, max_edges: int) -> list | None:
    """Shortest augmenting path from unmatched x with at most max_edges edges (exhaustive DFS)."""

    def dfs(path, seen, budget):
        u = path[-1]
        for y in G.adj[u]:
            if y in seen or mate.get(u) == y:
                continue
            if y not in mate:
                return path + [y]
            if budget >= 3:
                z = mate[y]
                if z in seen:
                    continue
                found = dfs(path + [y, z], seen | {y, z}, budget - 2)
                if found:
                    return found
        return None

    for L in range(1, max_edges + 1, 2):
        found = dfs([x], {x}, L)
        if found:
            return found
    return None


def _flip(mate: dict, path: list) -> None:
    for i in range(0, len(path) - 1, 2):
        u, v = path[i], path[i + 1]
        mate[u], mate[v] = v, u


def _matching_from(mate: dict) -> frozenset:
    return frozenset(_edge(u, v) for u, v in mate.items())


def covering_families(G: BoundedDegreeGraph, phi: Labeling, sep: int) -> list[list[int]]:
    """Maximal sep-separated systems J_1..J_t, built until they jointly cover V(G).

    Each new system is grown from the still uncovered vertices first, in label order.
    """
    order = sorted(range(G.n), key=lambda x: (order_key(phi[x]), x))
    uncovered = set(range(G.n))
    families = []
    while uncovered:
        chosen, blocked = [], set()
        for x in [v for v in order if v in uncovered] + [v for v in order if v not in uncovered]:
            if x not in blocked:
                chosen.append(x)
                blocked.update(bfs(G, x, limit=sep))
        uncovered -= set(chosen)
        families.append(sorted(chosen, key=lambda x: (order_key(phi[x]), x)))
    return families


@dataclass
class MatchingRun:
    matching: frozenset
    sweeps: int
    improvements: int
    families: int


def matching_ctda(G: BoundedDegreeGraph, phi: Labeling, T: int, *, bound: int | None = None) -> MatchingRun:
    """Grow a matching by local improvements until no augmenting path with fewer than T matched edges remains.

    Every center of every family that is unmatched flips a shortest short
    augmenting path starting at it. Sweeps repeat until nothing changes, or
    ``bound`` sweeps when given.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    require_separation(G, phi, 20 * T)
    families = covering_families(G, phi, 10 * T)
    mate: dict[int, int] = {}
    sweeps = improvements = 0
    while bound is None or sweeps < bound:
        sweeps += 1
        changed = False
        for J in families:
            for x in J:
                if x in mate:
                    continue
                path = _find_augmenting(G, mate, x, 2 * T - 1)
                if path:
                    _flip(mate, path)
                    improvements += 1
                    changed = True
        if not changed:
            break
    return MatchingRun(_matching_from(mate), sweeps, improvements, len(families))


@dataclass
class MatchingReport:
    size: int
    T: int
    augmenting_path: list | None
    maximum: int | None = None

    @property
    def passed(self) -> bool:
        return self.augmenting_path is None

    @property
    def bound(self) -> Fraction:
        return Fraction(self.size * (self.T + 1), self.T)

    @property
    def bound_holds(self) -> bool | None:
        return None if self.maximum is None else self.maximum <= self.bound

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "size": self.size,
            "T": self.T,
            "augmentingPath": self.augmenting_path,
            "bound": frac_str(self.bound),
            "maximum": self.maximum,
            "boundHolds": self.bound_holds,
        }


def verify_matching(G: BoundedDegreeGraph, M: Iterable[Sequence[int]], T: int, *, oracle_limit: int = 60) -> MatchingReport:
    """Search every unmatched vertex for an augmenting path with fewer than T matched edges."""
    mate = validate_matching(G, M)
    found = None
    for x in range(G.n):
        if x not in mate:
            found = _find_augmenting(G, mate, x, 2 * T - 1)
            if found:
                break
    maximum = max_matching_size(G) if G.n <= oracle_limit else None
    return MatchingReport(len(mate) // 2, T, found, maximum)


def matching_to_function(G: BoundedDegreeGraph, M: Iterable[Sequence[int]], phi: Labeling) -> Labeling:
    """Matched endpoints share the label of the endpoint with the smaller phi label; others keep theirs."""
    require_separation(G, phi, 11)
    mate = validate_matching(G, M)
    out = list(phi.values)
    for u, v in mate.items():
        leader = min((u, v), key=lambda x: (order_key(phi[x]), x))
        out[u] = phi[leader]
    return Labeling(tuple(out), phi.alphabet, 5)


def matching_function_violation(G: BoundedDegreeGraph, rho: Labeling):
    """First pair breaking the matching-function conditions within distance 5, or None."""
    for x in range(G.n):
        same = [y for y in bfs(G, x, limit=5) if y != x and rho[y] == rho[x]]
        if len(same) > 1:
            return (x, same)
        if same and same[0] not in G.adj[x]:
            return (x, same)
    return None


def function_to_matching(G: BoundedDegreeGraph, rho: Labeling) -> frozenset:
    bad = matching_function_violation(G, rho)
    if bad is not None:
        raise ContractError(f"not a matching function near vertex {bad[0]}")
    return frozenset(_edge(u, v) for u, v in G.edges() if rho[u] == rho[v])
