"""Partitions of doubling graphs: good tuples, nice balls, the Ψ extension and code families.

Everything is adaptive to the concrete input: scale tuples and radii are
searched against the graph's actual ball profiles and every claimed
property is re-checked with exact arithmetic afterwards.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CapacityError, ContractError, SearchError
from .graph import (
    BallProfile,
    BoundedDegreeGraph,
    ball_members,
    ball_profiles,
    bfs,
    boundary,
    doubling_constant,
    k_boundary,
    max_eccentricity,
    subset_diameter,
)
from .jsonio import frac_str
from .local import Labeling, maximal_separated_system, order_key, require_separation
from .partition import CodeFamily, Partition, verify_partition


# ---------------------------------------------------------------- good tuples


def _pow_lt(base: Fraction, N: int, bound: Fraction) -> bool:
    return base**N < bound


def minimal_levels(D: int, eps, delta=None, exact_limit: int = 4000) -> int:
    """Smallest N with (1 - 1/(4D^3))^N < eps, and (1 - 1/D^20)^N < delta/2 if delta is given."""
    eps = Fraction(eps)
    conds = [(Fraction(4 * D**3 - 1, 4 * D**3), eps)]
    if delta is not None:
        conds.append((1 - Fraction(1, D**20), Fraction(delta) / 2))
    best = 1
    for base, bound in conds:
        if base == 0:
            continue
        if bound >= 1:
            continue
        est = math.log(bound) / math.log(base)
        N = max(1, math.floor(est) - 1)
        if N <= exact_limit:
            while not _pow_lt(base, N, bound):
                N += 1
            while N > 1 and _pow_lt(base, N - 1, bound):
                N -= 1
        else:
            N = math.floor(est) + 1
        best = max(best, N)
    return best


@dataclass(frozen=True)
class GoodTuple:
    N: int
    D: int
    epsilon: Fraction
    S: tuple  # S_1 > S_2 > ... > S_N
    delta: Fraction | None = None
    R: tuple | None = None
    margin_factor: int = 20

    @property
    def strong(self) -> bool:
        return self.R is not None

    def margin(self, i: int) -> int:
        """Ratio-test margin for level i (1-based); zero on the last level."""
        if i >= self.N:
            return 0
        return self.margin_factor * self.N * self.S[i]

    def violations(self) -> list[str]:
        out = []
        for i in range(self.N - 1):
            if not self.S[i] > 4 * sum(self.S[i + 1 :]):
                out.append(f"eq2 fails at level {i + 1}")
        if not _pow_lt(Fraction(4 * self.D**3 - 1, 4 * self.D**3), self.N, self.epsilon):
            out.append("eq3 fails: too few levels for epsilon")
        if self.strong:
            if self.delta is None:
                out.append("strong tuple without delta")
            else:
                if self.N <= 4000 and not _pow_lt(1 - Fraction(1, self.D**20), self.N, self.delta / 2):
                    out.append("strong level count fails for delta")
                for i in range(self.N - 1):
                    if not Fraction(10 * self.S[i + 1], self.R[i]) < self.delta / (2 * self.N):
                        out.append(f"neq3 fails at level {i + 1}")
                    if not self.R[i] < self.S[i]:
                        out.append(f"R exceeds S at level {i + 1}")
        return out

    @property
    def is_good(self) -> bool:
        return not self.violations()

    def to_dict(self) -> dict:
        out = {
            "N": self.N,
            "D": self.D,
            "epsilon": frac_str(self.epsilon),
            "S": [str(s) for s in self.S],
            "marginFactor": self.margin_factor,
            "violations": self.violations(),
        }
        if self.strong:
            out["delta"] = frac_str(self.delta)
            out["R"] = [str(r) for r in self.R]
        return out


class _Admissible:
    """Radius admissibility for one level, evaluated from a ball profile with integer arithmetic."""

    def __init__(self, tup: GoodTuple, level: int):
        self.eps = tup.epsilon
        self.scale = 10 * tup.D**3
        self.margin = tup.margin(level)
        self.last = level >= tup.N
        self.shift = tup.R[level - 1] if tup.strong else 0

    def _basic(self, prof: BallProfile, r: int) -> bool:
        p, q = self.eps.numerator, self.eps.denominator
        if not prof.boundary_size(r) * q < p * prof.size(r):
            return False
        if self.last:
            return True
        big, small = prof.size(r + self.margin), prof.size(r)
        return big * q * self.scale < small * (q * self.scale + p)

    def ok(self, prof: BallProfile, r: int) -> bool:
        if self.shift:
            return all(self._basic(prof, r + j) for j in range(1, self.shift + 1))
        return self._basic(prof, r)

    def next_table(self, prof: BallProfile) -> np.ndarray:
        """nxt[r] = smallest admissible radius >= r, for r up to where admissibility is permanent."""
        top = prof.ecc + 1
        good = np.array([self.ok(prof, r) for r in range(top + 1)], dtype=bool)
        good[top] = True
        nxt = np.empty(top + 1, dtype=np.int64)
        cur = top
        for r in range(top, -1, -1):
            if good[r]:
                cur = r
            nxt[r] = cur
        return nxt

    def window_radius(self, prof: BallProfile, s: int) -> int | None:
        hi = 2 * s - self.shift  # exclusive
        r = s
        top = prof.ecc + 1
        while r < hi:
            if r >= top:
                return r
            if self.ok(prof, r):
                return r
            r += 1
        return None


def _sample_vertices(G: BoundedDegreeGraph, sample: int | None, seed: int) -> list[int]:
    if sample is None or sample >= G.n:
        return list(range(G.n))
    return sorted(random.Random(seed).sample(range(G.n), sample))


def good_tuple_search(
    G: BoundedDegreeGraph,
    D: int,
    eps,
    delta=None,
    *,
    levels: int | None = None,
    margin_factor: int = 20,
    sample: int | None = None,
    seed: int = 0,
    max_levels: int = 512,
) -> GoodTuple:
    """Build S_N..S_1 bottom-up against the ball profiles of G.

    ``levels`` overrides the level count (a relaxed tuple; the violated
    inequality is then listed by ``violations()``).
    """
    eps = Fraction(eps)
    if G.n == 0:
        raise SearchError("empty graph")
    delta = None if delta is None else Fraction(delta)
    N = levels if levels is not None else minimal_levels(D, eps, delta)
    if N > max_levels:
        raise SearchError(f"level count N={N} is beyond the desk-scale limit {max_levels}; pass levels= for a relaxed tuple", witness=N)
    if sample is None and G.n > 4000:
        sample = 256
    verts = _sample_vertices(G, sample, seed)
    profs = ball_profiles(G, None if len(verts) == G.n else verts)
    S = [0] * N
    R = [0] * N if delta is not None else None
    for i in range(N, 0, -1):
        lower = 4 * sum(S[i:]) + 1
        if R is not None:
            R[i - 1] = 1 if i == N else (20 * N * S[i] * delta.denominator) // delta.numerator + 1
            lower = max(lower, R[i - 1] + 1)
        partial = GoodTuple(N, D, eps, tuple(S), delta, None if R is None else tuple(R), margin_factor)
        adm = _Admissible(partial, i)
        shift = adm.shift
        tables = {q: adm.next_table(p) for q, p in profs.items()}
        s = lower
        last_bad = None
        while True:
            order = ([last_bad] if last_bad is not None else []) + verts
            bad = None
            for q in order:
                t = tables[q]
                r = int(t[min(s, len(t) - 1)]) if s < len(t) else s
                if not r < 2 * s - shift:
                    bad = q
                    break
            if bad is None:
                break
            last_bad = bad
            s += 1
            if s > lower + 10 * (max(p.ecc for p in profs.values()) + shift + 2):
                raise SearchError(f"no admissible radius at level {i}", witness=bad)
        S[i - 1] = s
    return GoodTuple(N, D, eps, tuple(S), delta, None if R is None else tuple(R), margin_factor)


# ---------------------------------------------------------------- nice balls


@dataclass(frozen=True)
class Ball:
    center: int
    radius: int
    type: int
    members: frozenset = field(repr=False, compare=False)


@dataclass
class NiceBallSystem:
    nice: list
    discarded: list  # (Ball, index into nice of a blocking ball)
    chosen: list  # every chosen ball, in construction order
    tuple: GoodTuple | None = None

    def covered(self) -> frozenset:
        out = set()
        for b in self.nice:
            out |= b.members
        return frozenset(out)

    def to_dict(self) -> dict:
        return {
            "nice": [[b.center, b.radius, b.type] for b in self.nice],
            "discarded": [[b.center, b.radius, b.type, k] for b, k in self.discarded],
        }


def _level_radius_clamp(G: BoundedDegreeGraph, r: int) -> int:
    return min(r, max_eccentricity(G) + 1)


def _profile(G: BoundedDegreeGraph, x: int) -> BallProfile:
    allp = G._cache.get(("profiles", None))
    if allp is not None:
        return allp[x]
    key = ("profile", x)
    if key not in G._cache:
        G._cache[key] = BallProfile(G, x)
    return G._cache[key]


def _construct(levels: Sequence[Sequence[Ball]], tup: GoodTuple | None) -> NiceBallSystem:
    """Keep a type-i ball unless it meets a kept ball of smaller type."""
    nice: list[Ball] = []
    owner: dict[int, int] = {}
    discarded = []
    chosen = []
    for balls in levels:
        fresh = []
        for b in balls:
            chosen.append(b)
            hit = next((owner[v] for v in sorted(b.members) if v in owner), None)
            if hit is None:
                fresh.append(b)
            else:
                discarded.append((b, hit))
        for b in fresh:
            idx = len(nice)
            nice.append(b)
            for v in b.members:
                owner[v] = idx
    return NiceBallSystem(nice, discarded, chosen, tup)


def basic_algorithm(G: BoundedDegreeGraph, tup: GoodTuple, phi: Labeling) -> NiceBallSystem:
    """Maximal 8S_i-separated centers per type, smallest admissible radius per center, then discard overlaps."""
    cap = max_eccentricity(G) + 1
    require_separation(G, phi, 2 * min(8 * tup.S[0], cap))
    if G.n <= 4000:
        ball_profiles(G)
    levels = []
    systems: dict[int, list[int]] = {}
    for i in range(1, tup.N + 1):
        s = tup.S[i - 1]
        sep = min(8 * s, cap)
        if sep not in systems:
            systems[sep] = maximal_separated_system(G, phi, sep)
        adm = _Admissible(tup, i)
        balls = []
        for q in systems[sep]:
            prof = _profile(G, q)
            r = adm.window_radius(prof, s)
            if r is None:
                raise SearchError(f"no admissible radius for center {q} at level {i}", witness=(q, i))
            balls.append(Ball(q, r, i, ball_members(G, q, min(r, prof.ecc))))
        levels.append(balls)
    return _construct(levels, tup)


def audit_nice_balls(G: BoundedDegreeGraph, system: NiceBallSystem, eps=None) -> dict:
    """Re-check disjointness, radius windows, isoperimetry and the discard rule."""
    tup = system.tuple
    eps = Fraction(eps) if eps is not None else (tup.epsilon if tup else None)
    seen: set = set()
    disjoint = True
    for b in system.nice:
        if seen & b.members:
            disjoint = False
        seen |= b.members
    iso_ok = eps is None or all(Fraction(len(boundary(G, b.members)), len(b.members)) < eps for b in system.nice)
    windows = True
    if tup is not None:
        for b in system.chosen:
            s = tup.S[b.type - 1]
            if not s <= b.radius < 2 * s:
                windows = False
    replay = True
    for b, k in system.discarded:
        blocker = system.nice[k]
        if not (blocker.type < b.type and blocker.members & b.members):
            replay = False
    kept = {(b.center, b.type) for b in system.nice}
    for b in system.chosen:
        if (b.center, b.type) in kept:
            if any(o.type < b.type and o.members & b.members for o in system.nice):
                replay = False
    return {"disjoint": disjoint, "isoperimetric": iso_ok, "radiusWindows": windows, "discardReplay": replay}


@dataclass
class CoverageReport:
    fraction: Fraction
    hypothesis_ratio: Fraction
    hypothesis_threshold: Fraction
    hypothesis_holds: bool

    def to_dict(self) -> dict:
        return {
            "fraction": frac_str(self.fraction),
            "hypothesisRatio": frac_str(self.hypothesis_ratio),
            "hypothesisThreshold": frac_str(self.hypothesis_threshold),
            "hypothesisHolds": self.hypothesis_holds,
        }


def coverage_report(G: BoundedDegreeGraph, A: Sequence[int], system: NiceBallSystem, tup: GoodTuple | None = None) -> CoverageReport:
    tup = tup or system.tuple
    A = frozenset(A)
    if not A:
        raise ValueError("A must be nonempty")
    inside = set()
    for b in system.nice:
        if b.members <= A:
            inside |= b.members
    K = 16 * tup.N * tup.S[0]
    ratio = Fraction(len(k_boundary(G, A, _level_radius_clamp(G, K))), len(A))
    thr = tup.epsilon / (10 * tup.D**3)
    return CoverageReport(Fraction(len(inside), len(A)), ratio, thr, ratio < thr)


# ---------------------------------------------------------------- net covers


@dataclass
class NetCover:
    s: int
    n: int
    centers: list
    families: list  # list of lists of centers
    D: int
    bound: int

    @property
    def bound_holds(self) -> bool:
        return len(self.families) <= self.bound

    def balls(self, G: BoundedDegreeGraph, family: int) -> list[tuple[int, frozenset]]:
        return [(z, ball_members(G, z, self.s)) for z in self.families[family]]


def net_cover(G: BoundedDegreeGraph, s: int, n: int = 0, phi: Labeling | None = None) -> NetCover:
    """Maximal s-net split into families whose centers are pairwise more than 2^(n+2) s apart."""
    if s < 1 or n < 0:
        raise ValueError("need s >= 1 and n >= 0")
    order = sorted(range(G.n), key=(lambda x: (order_key(phi[x]), x)) if phi is not None else None)
    centers = []
    blocked = set()
    for v in order:
        if v not in blocked:
            centers.append(v)
            blocked.update(bfs(G, v, limit=s))
    reach = (2 ** (n + 2)) * s
    color: dict[int, int] = {}
    for z in centers:
        near = bfs(G, z, limit=reach)
        used = {color[y] for y in near if y in color}
        c = 0
        while c in used:
            c += 1
        color[z] = c
    m = max(color.values(), default=-1) + 1
    families = [[z for z in centers if color[z] == c] for c in range(m)]
    E = max(1, max_eccentricity(G))
    D = math.ceil(doubling_constant(G, E))
    return NetCover(s, n, centers, families, D, D ** (4 * (n + 3)))


# ---------------------------------------------------------------- Ψ extension


@dataclass
class Extension:
    partition: Partition
    psi: dict
    max_displacement: int
    family_count: int
    slice_sizes: dict
    boundary_bound_holds: bool
    injective: bool

    def to_dict(self) -> dict:
        return {
            "partition": self.partition.to_dict(),
            "psi": [[x, y] for x, y in sorted(self.psi.items())],
            "maxDisplacement": self.max_displacement,
            "familyCount": self.family_count,
            "boundaryBoundHolds": self.boundary_bound_holds,
            "injective": self.injective,
        }


def _slice_size(size: int, eps_prime: Fraction) -> int:
    lo, hi = 2 * eps_prime * size, 3 * eps_prime * size
    sigma = math.floor(lo) + 1
    if not sigma < hi:
        sigma = math.ceil(lo) + 1
    return sigma


def extend_partition(
    G: BoundedDegreeGraph,
    system: NiceBallSystem,
    eps_prime,
    *,
    cover_radius: int | None = None,
    level: int = 0,
    phi: Labeling | None = None,
) -> Extension:
    """Absorb uncovered vertices into nice balls via an injection into reserved slices."""
    eps_prime = Fraction(eps_prime)
    nice = system.nice
    if not nice:
        raise CapacityError("no nice balls to extend", witness=None)
    covered = system.covered()
    U = sorted(set(range(G.n)) - covered)
    psi: dict[int, int] = {}
    fam_count = 0
    sizes = {}
    if U:
        s = cover_radius if cover_radius is not None else 4 * max(b.radius for b in nice) + 1
        s = min(s, max_eccentricity(G) + 1)
        cover = net_cover(G, s, level, phi)
        fam_count = len(cover.families)
        slices: dict[int, list[list[int]]] = {}
        for k, b in enumerate(nice):
            sigma = _slice_size(len(b.members), eps_prime)
            if fam_count * sigma > len(b.members):
                raise CapacityError(
                    f"nice ball at {b.center} has {len(b.members)} vertices, too few for {fam_count} slices of {sigma}",
                    witness=b.center,
                )
            sizes[b.center] = sigma
            mem = sorted(b.members)
            slices[k] = [mem[j * sigma : (j + 1) * sigma] for j in range(fam_count)]
        home: dict[int, tuple[int, int]] = {}
        capacity: dict[tuple[int, int], list[int]] = {}
        Uset = set(U)
        for i in range(fam_count):
            for z, B in cover.balls(G, i):
                cap = []
                for k, b in enumerate(nice):
                    if b.members <= B:
                        cap.extend(slices[k][i])
                here = Uset & B
                if here and not len(here) < len(cap):
                    raise CapacityError(
                        f"cover ball at {z} (family {i}) holds {len(here)} uncovered vertices but only {len(cap)} reserved slots",
                        witness=(i, z),
                    )
                capacity[(i, z)] = cap
                for x in here:
                    if x not in home:
                        home[x] = (i, z)
        used: dict[tuple[int, int], int] = {}
        for x in U:
            key = home.get(x)
            if key is None:
                raise CapacityError(f"vertex {x} lies in no cover ball", witness=x)
            j = used.get(key, 0)
            psi[x] = capacity[key][j]
            used[key] = j + 1
    owner = {}
    for k, b in enumerate(nice):
        for v in b.members:
            owner[v] = k
    groups = [set(b.members) for b in nice]
    for x, y in psi.items():
        groups[owner[y]].add(x)
    classes = [sorted(g) for g in groups]
    bound_ok = True
    max_iso = Fraction(0)
    max_diam = 0
    for k, cls in enumerate(classes):
        extra = len(cls) - len(nice[k].members)
        bd = len(boundary(G, cls))
        if bd > len(boundary(G, nice[k].members)) + extra:
            bound_ok = False
        max_iso = max(max_iso, Fraction(bd, len(cls)))
        max_diam = max(max_diam, subset_diameter(G, cls))
    part = Partition.from_classes(G.n, classes, max_iso, int(max_diam) if max_diam != math.inf else 10**9)
    disp = 0
    for x, y in psi.items():
        disp = max(disp, bfs(G, x)[y])
    injective = len(set(psi.values())) == len(psi)
    return Extension(part, psi, disp, fam_count, sizes, bound_ok, injective)


# ---------------------------------------------------------------- strong families


class _LevelSystems:
    """Lazily built maximal 8S-separated systems; jointly their S-balls cover the graph."""

    def __init__(self, G: BoundedDegreeGraph, phi: Labeling, s: int):
        cap = max_eccentricity(G) + 1
        self.G, self.phi = G, phi
        self.s = min(s, cap)
        self.sep = min(8 * s, cap)
        order = sorted(range(G.n), key=lambda x: (order_key(phi[x]), x))
        self.order = order
        net = []
        blocked = set()
        for v in order:
            if v not in blocked:
                net.append(v)
                blocked.update(bfs(G, v, limit=self.s))
        color: dict[int, int] = {}
        for z in net:
            used = {color[y] for y in bfs(G, z, limit=self.sep) if y in color}
            c = 0
            while c in used:
                c += 1
            color[z] = c
        self.count = max(color.values(), default=-1) + 1
        self.seeds = [[z for z in net if color[z] == c] for c in range(self.count)]
        self._cache: dict[int, list[int]] = {}

    def system(self, t: int) -> list[int]:
        """The t-th system (1-based, taken cyclically): colour class t grown to a maximal system."""
        c = (t - 1) % self.count
        if c not in self._cache:
            chosen = list(self.seeds[c])
            blocked = set()
            for z in chosen:
                blocked.update(bfs(self.G, z, limit=self.sep))
            for v in self.order:
                if v not in blocked:
                    chosen.append(v)
                    blocked.update(bfs(self.G, v, limit=self.sep))
            self._cache[c] = sorted(chosen)
        return self._cache[c]


def _sample_codes(tup: GoodTuple, system_count: int, count: int, seed: int) -> list[tuple]:
    rng = random.Random(seed)
    space = 1
    for i in range(tup.N):
        space *= system_count * tup.R[i]
        if space > count * 4:
            break
    want = min(count, space)
    codes: list[tuple] = []
    seen = set()
    attempts = 0
    while len(codes) < want and attempts < 1000 * want:
        attempts += 1
        code = tuple((rng.randint(1, system_count), rng.randint(1, tup.R[i])) for i in range(tup.N))
        if code not in seen:
            seen.add(code)
            codes.append(code)
    return codes


def code_nice_balls(G: BoundedDegreeGraph, tup: GoodTuple, systems: list, code: tuple) -> NiceBallSystem:
    levels = []
    for i in range(1, tup.N + 1):
        t, j = code[i - 1]
        adm = _Admissible(tup, i)
        balls = []
        for q in systems[i - 1].system(t):
            prof = _profile(G, q)
            r = adm.window_radius(prof, tup.S[i - 1])
            if r is None:
                raise SearchError(f"no admissible radius for center {q} at level {i}", witness=(q, i))
            r += j
            balls.append(Ball(q, r, i, ball_members(G, q, min(r, prof.ecc))))
        levels.append(balls)
    return _construct(levels, tup)


def strong_family(
    G: BoundedDegreeGraph,
    tup: GoodTuple,
    sample_count: int,
    seed: int,
    phi: Labeling,
    *,
    eps_prime=None,
    epsilon=None,
    cover_radius: int | None = None,
    system_count: int | None = None,
    threads: int = 1,
) -> CodeFamily:
    """Sample codes (t_i, j_i) and build one partition per code.

    t_i picks one of the maximal systems at level i and j_i shifts every
    radius at that level. Each member goes through the Basic Algorithm's
    construction round and the Ψ extension, then is verified.
    """
    if not tup.strong:
        raise ContractError("strong families need a tuple with R")
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    cap = max_eccentricity(G) + 1
    require_separation(G, phi, 2 * min(8 * tup.S[0], cap))
    if G.n <= 4000:
        ball_profiles(G)
    systems = [_LevelSystems(G, phi, s) for s in tup.S]
    count = system_count or max(ls.count for ls in systems)
    codes = _sample_codes(tup, count, sample_count, seed)
    eps_prime = Fraction(eps_prime) if eps_prime is not None else tup.epsilon / 4

    def build(code):
        system = code_nice_balls(G, tup, systems, code)
        ext = extend_partition(G, system, eps_prime, cover_radius=cover_radius, phi=phi)
        return code, ext.partition

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            built = list(pool.map(build, codes))
    else:
        built = [build(c) for c in codes]
    if epsilon is not None:
        eps = Fraction(epsilon)
        K = max(p.K for _, p in built)
    else:
        eps = max(p.epsilon for _, p in built)
        K = max(p.K for _, p in built)
    members = []
    for code, p in built:
        p = Partition(p.class_of, eps, K)
        rep = verify_partition(G, p)
        if not rep.passed:
            raise ContractError(f"family member {code} fails verification (maxIso {rep.max_iso}, maxDiam {rep.max_diam})")
        members.append((code, p))
    return CodeFamily(members, seed, eps, K, {"systemCount": count, "N": tup.N})
