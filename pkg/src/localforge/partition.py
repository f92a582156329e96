"""Partitions, their exact verification, the class/label codec and partition families."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, StructuralError
from .graph import BoundedDegreeGraph, bfs, boundary, components, distance_matrix
from .jsonio import frac_str, parse_fraction
from .local import Labeling

STAR_LABEL = "*"


@dataclass(frozen=True)
class Partition:
    class_of: tuple
    epsilon: Fraction
    K: int
    star: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "class_of", tuple(self.class_of))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))

    @classmethod
    def from_classes(cls, n: int, classes: Iterable[Iterable[int]], epsilon, K: int, star_members: Iterable[int] | None = None) -> "Partition":
        """Build from explicit classes; a vertex in no class or in two classes is a structural error."""
        owner = [None] * n
        groups = [list(c) for c in classes]
        if star_members is not None:
            groups.append(list(star_members))
        for cid, members in enumerate(groups):
            for v in members:
                if not 0 <= v < n:
                    raise StructuralError(f"vertex {v} out of range")
                if owner[v] is not None:
                    raise StructuralError(f"vertex {v} is in classes {owner[v]} and {cid}")
                owner[v] = cid
        missing = [v for v in range(n) if owner[v] is None]
        if missing:
            raise StructuralError(f"vertex {missing[0]} is not covered ({len(missing)} uncovered)")
        star = len(groups) - 1 if star_members is not None else None
        return cls(tuple(owner), epsilon, K, star)

    @property
    def n(self) -> int:
        return len(self.class_of)

    def classes(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for v, c in enumerate(self.class_of):
            out.setdefault(c, []).append(v)
        return {c: tuple(m) for c, m in sorted(out.items())}

    def regular_classes(self) -> dict[int, tuple[int, ...]]:
        return {c: m for c, m in self.classes().items() if c != self.star}

    def star_members(self) -> tuple[int, ...]:
        if self.star is None:
            return ()
        return tuple(v for v, c in enumerate(self.class_of) if c == self.star)

    def normalized(self) -> "Partition":
        """Renumber classes by first occurrence so equal partitions compare equal."""
        remap = {}
        for c in self.class_of:
            if c not in remap:
                remap[c] = len(remap)
        star = remap.get(self.star) if self.star is not None else None
        return Partition(tuple(remap[c] for c in self.class_of), self.epsilon, self.K, star)

    def validate(self, G: BoundedDegreeGraph) -> None:
        if len(self.class_of) != G.n:
            raise StructuralError(f"partition has {len(self.class_of)} entries for {G.n} vertices")
        for v, c in enumerate(self.class_of):
            if not isinstance(c, int) or isinstance(c, bool) or c < 0:
                raise StructuralError(f"vertex {v} is not covered (class {c!r})")

    def to_dict(self) -> dict:
        out = {"epsilon": frac_str(self.epsilon), "K": self.K, "classOf": list(self.class_of)}
        if self.star is not None:
            out["star"] = self.star
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Partition":
        try:
            raw = data["classOf"]
            star = data.get("star")
            return cls(tuple(raw), parse_fraction(data["epsilon"]), int(data["K"]), None if star is None else int(star))
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed partition object: {exc}") from exc


@dataclass
class PartitionReport:
    max_diam: float
    max_iso: Fraction
    dichotomy_holds: bool
    passed: bool
    class_count: int
    star_size: int
    worst_iso_class: int | None = None
    worst_diam_class: int | None = None

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "maxDiam": None if math.isinf(self.max_diam) else int(self.max_diam),
            "maxIso": frac_str(self.max_iso),
            "dichotomyHolds": self.dichotomy_holds,
            "classCount": self.class_count,
            "starSize": self.star_size,
            "worstIsoClass": self.worst_iso_class,
            "worstDiamClass": self.worst_diam_class,
        }


def _class_distances(G: BoundedDegreeGraph, members: Sequence[int]) -> np.ndarray:
    """Ambient distance matrix among members (UNREACHED = -1)."""
    if len(members) > 64:
        dm = distance_matrix(G, members)
        return dm[:, list(members)]
    idx = {v: i for i, v in enumerate(members)}
    out = np.full((len(members), len(members)), -1, dtype=np.int64)
    for i, x in enumerate(members):
        dist = {x: 0}
        frontier = [x]
        found = 1
        while frontier and found < len(members):
            nxt = []
            for u in frontier:
                for y in G.adj[u]:
                    if y not in dist:
                        dist[y] = dist[u] + 1
                        if y in idx:
                            found += 1
                        nxt.append(y)
            frontier = nxt
        for y, j in idx.items():
            if y in dist:
                out[i, j] = dist[y]
    return out


def class_diameter_and_dichotomy(G: BoundedDegreeGraph, members: Sequence[int], K: int) -> tuple[float, bool]:
    dm = _class_distances(G, members)
    if (dm < 0).any():
        return math.inf, bool(((dm <= K) & (dm >= 0) | (dm >= 3 * K) | (dm < 0)).all())
    diam = int(dm.max()) if dm.size else 0
    return diam, bool(((dm <= K) | (dm >= 3 * K)).all())


def verify_partition(G: BoundedDegreeGraph, P: Partition) -> PartitionReport:
    """Exact per-class diameter and isoperimetric check; the star class is exempt."""
    P.validate(G)
    max_diam: float = 0
    max_iso = Fraction(0)
    dich = True
    worst_iso = worst_diam = None
    regular = P.regular_classes()
    for cid, members in regular.items():
        diam, ok = class_diameter_and_dichotomy(G, members, P.K)
        iso = Fraction(len(boundary(G, members)), len(members))
        dich = dich and ok
        if worst_diam is None or diam > max_diam:
            max_diam, worst_diam = diam, cid
        if worst_iso is None or iso > max_iso:
            max_iso, worst_iso = iso, cid
    passed = max_diam <= P.K and max_iso <= P.epsilon
    return PartitionReport(max_diam, max_iso, dich, passed, len(regular), len(P.star_members()), worst_iso, worst_diam)


# ---------------------------------------------------------------- codec


def _greedy_class_coloring(G: BoundedDegreeGraph, classes: dict[int, tuple[int, ...]], reach: int) -> dict[int, int]:
    owner = {}
    for cid, members in classes.items():
        for v in members:
            owner[v] = cid
    order = sorted(classes, key=lambda c: classes[c][0])
    color: dict[int, int] = {}
    for cid in order:
        near = bfs(G, classes[cid], limit=reach)
        used = {color[owner[v]] for v in near if v in owner and owner[v] != cid and owner[v] in color}
        c = 1
        while c in used:
            c += 1
        color[cid] = c
    return color


def encode_partition(G: BoundedDegreeGraph, P: Partition) -> Labeling:
    """Labels such that x, y share a class iff they share a label and d(x, y) <= K.

    Classes within distance 3K of each other receive distinct labels; star
    vertices get the label ``"*"``.
    """
    rep = verify_partition(G, P)
    if not rep.dichotomy_holds or rep.max_diam > P.K:
        raise ContractError("partition violates the distance dichotomy; the label encoding would be ambiguous")
    regular = P.regular_classes()
    color = _greedy_class_coloring(G, regular, 3 * P.K)
    q = max(color.values(), default=0)
    bound = G.d ** (5 * P.K + 1)
    if q > bound:
        raise ContractError(f"class colouring used {q} labels, above the bound {bound}")
    values = [STAR_LABEL if c == P.star else color[c] for c in P.class_of]
    return Labeling(tuple(values))


def decode_partition(G: BoundedDegreeGraph, labels: Labeling, K: int, epsilon=Fraction(1)) -> Partition:
    parent = list(range(G.n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for x in range(G.n):
        if labels[x] == STAR_LABEL:
            continue
        for y in bfs(G, x, limit=K):
            if y > x and labels[y] == labels[x]:
                ra, rb = find(x), find(y)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    remap: dict = {}
    class_of = []
    star_id = None
    for x in range(G.n):
        key = STAR_LABEL if labels[x] == STAR_LABEL else find(x)
        if key not in remap:
            remap[key] = len(remap)
        class_of.append(remap[key])
    if STAR_LABEL in remap:
        star_id = remap[STAR_LABEL]
    return Partition(tuple(class_of), epsilon, K, star_id)


# ---------------------------------------------------------------- families


@dataclass
class CodeFamily:
    members: list  # list of (code tuple, Partition)
    seed: int | None
    epsilon: Fraction
    K: int
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.members)

    def partitions(self) -> list[Partition]:
        return [p for _, p in self.members]

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "epsilon": frac_str(self.epsilon),
            "K": self.K,
            "members": [{"code": [list(c) if isinstance(c, tuple) else c for c in code], "partition": p.to_dict()} for code, p in self.members],
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CodeFamily":
        try:
            members = []
            for m in data["members"]:
                code = tuple(tuple(c) if isinstance(c, list) else c for c in m["code"])
                members.append((code, Partition.from_dict(m["partition"])))
            return cls(members, data.get("seed"), parse_fraction(data["epsilon"]), int(data["K"]), data.get("meta", {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed family object: {exc}") from exc


@dataclass
class StrongFamilyReport:
    fractions: tuple
    max: Fraction
    mean: Fraction
    histogram: dict
    passed: bool
    size: int

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "size": self.size,
            "max": frac_str(self.max),
            "mean": frac_str(self.mean),
            "histogram": {frac_str(k): v for k, v in sorted(self.histogram.items())},
        }


def boundary_membership(G: BoundedDegreeGraph, partitions: Sequence[Partition]) -> list[int]:
    """For each vertex, the number of partitions in which it lies on its class boundary."""
    counts = [0] * G.n
    for P in partitions:
        P.validate(G)
        for x in range(G.n):
            c = P.class_of[x]
            if any(P.class_of[y] != c for y in G.adj[x]):
                counts[x] += 1
    return counts


def verify_strong_family(G: BoundedDegreeGraph, family: CodeFamily | Sequence[Partition], epsilon) -> StrongFamilyReport:
    parts = family.partitions() if isinstance(family, CodeFamily) else list(family)
    if not parts:
        raise ContractError("empty family")
    T = len(parts)
    counts = boundary_membership(G, parts)
    fr = tuple(Fraction(c, T) for c in counts)
    mx = max(fr, default=Fraction(0))
    mean = Fraction(sum(counts), T * G.n) if G.n else Fraction(0)
    hist = Counter(fr)
    return StrongFamilyReport(fr, mx, mean, dict(hist), mx < Fraction(epsilon), T)


def arc_partition(n: int, length: int, offset: int = 0, epsilon=None, K: int | None = None) -> Partition:
    """Cycle C_n cut into consecutive arcs of ``length`` starting at ``offset``."""
    if length < 1 or length > n:
        raise ValueError("arc length must lie in 1..n")
    class_of = tuple(((v - offset) % n) // length for v in range(n))
    eps = Fraction(2, length) if epsilon is None and length < n else (epsilon if epsilon is not None else Fraction(0))
    return Partition(class_of, eps, K if K is not None else length - 1)


def rotated_arc_family(n: int, length: int, shift: int, count: int, epsilon=None) -> CodeFamily:
    members = [((k,), arc_partition(n, length, k * shift, epsilon)) for k in range(count)]
    eps = max(p.epsilon for _, p in members)
    return CodeFamily(members, None, eps, length - 1)


def is_tree(G: BoundedDegreeGraph) -> bool:
    return G.n >= 1 and len(G.edges()) == G.n - 1 and len(components(G)) == 1


def fractional_tree_family(tree: BoundedDegreeGraph, root: int, l: int) -> CodeFamily:
    """l partitions of a rooted tree by depth bands of width l.

    In partition i every class hangs from a top vertex whose depth is
    congruent to i mod l and contains its descendants down to l-1 levels
    below; the part above the first cut forms the root class. A vertex is on
    a class boundary only at a top (not the root) or at the bottom level of
    its band, so at most two partitions out of l put it on a boundary.
    """
    if not is_tree(tree):
        raise StructuralError("input is not a tree")
    tree.check_vertex(root)
    if l < 3:
        raise ContractError("l must be at least 3")
    depth = bfs(tree, root)
    order = sorted(depth, key=lambda v: (depth[v], v))
    parent = {root: None}
    for v in order:
        for u in tree.adj[v]:
            if u not in parent:
                parent[u] = v
    members = []
    for i in range(1, l + 1):
        c = i % l
        top = {}
        for v in order:
            if v == root or depth[v] % l == c:
                top[v] = v
            else:
                top[v] = top[parent[v]]
        remap = {}
        class_of = []
        for v in range(tree.n):
            t = top[v]
            if t not in remap:
                remap[t] = len(remap)
            class_of.append(remap[t])
        members.append(((i,), Partition(tuple(class_of), Fraction(1), 2 * (l - 1))))
    return CodeFamily(members, None, Fraction(1), 2 * (l - 1), {"root": root, "l": l})
