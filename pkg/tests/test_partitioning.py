import random
from collections import deque
from fractions import Fraction

import pytest

from localforge.doubling import (
    Ball,
    NiceBallSystem,
    GoodTuple,
    audit_nice_balls,
    basic_algorithm,
    coverage_report,
    extend_partition,
    good_tuple_search,
    minimal_levels,
    net_cover,
    strong_family,
)
from localforge.errors import CapacityError, ContractError, SearchError, StructuralError
from localforge.generators import cycle, path, random_bounded_degree, regular_tree, torus, grid
from localforge.graph import BoundedDegreeGraph, boundary, distance_matrix
from localforge.hyperfinite import connected_subset_finder, hyperfinite_oracle, sweep_budget
from localforge.local import Labeling
from localforge.partition import (
    CodeFamily,
    Partition,
    arc_partition,
    boundary_membership,
    decode_partition,
    encode_partition,
    fractional_tree_family,
    rotated_arc_family,
    verify_partition,
    verify_strong_family,
)


def injective(G):
    return Labeling(tuple(range(1, G.n + 1)))


def class_iso(G, members):
    members = set(members)
    bd = [x for x in members if any(y not in members for y in G.adj[x])]
    return Fraction(len(bd), len(members))


def is_connected_subset(G, members):
    members = set(members)
    start = next(iter(members))
    seen = {start}
    q = deque([start])
    while q:
        u = q.popleft()
        for y in G.adj[u]:
            if y in members and y not in seen:
                seen.add(y)
                q.append(y)
    return seen == members


# ---------------------------------------------------------------- verifyPartition


def test_arc_partition_verification():
    C = cycle(100)
    rep = verify_partition(C, arc_partition(100, 20, 0, Fraction(1, 10), 19))
    assert rep.passed and rep.max_iso == Fraction(1, 10) and rep.max_diam == 19
    rep = verify_partition(C, arc_partition(100, 20, 0, Fraction(1, 20), 19))
    assert not rep.passed and rep.max_iso == Fraction(1, 10)
    whole = Partition((0,) * 100, Fraction(1, 100), 50)
    rep = verify_partition(C, whole)
    assert rep.passed and rep.max_iso == 0


def test_structural_errors():
    with pytest.raises(StructuralError):
        Partition.from_classes(4, [[0, 1], [1, 2, 3]], Fraction(1), 3)
    with pytest.raises(StructuralError):
        Partition.from_classes(4, [[0, 1], [2]], Fraction(1), 3)
    with pytest.raises(StructuralError):
        Partition((0, 0, 0), Fraction(1), 2).validate(cycle(4))


def test_partition_json_round_trip():
    P = arc_partition(30, 7, 3, Fraction(2, 7), 6)
    assert Partition.from_dict(P.to_dict()) == P


# ---------------------------------------------------------------- codec


def test_codec_round_trip_on_arcs():
    C = cycle(100)
    P = arc_partition(100, 20, 0, Fraction(1, 10), 19)
    lab = encode_partition(C, P)
    back = decode_partition(C, lab, 19, Fraction(1, 10))
    assert back.normalized().class_of == P.normalized().class_of


def test_codec_reuses_labels_for_far_classes():
    C = cycle(100)
    P = arc_partition(100, 5, 0, Fraction(2, 5), 4)
    lab = encode_partition(C, P)
    classes = P.classes()
    label_of = {cid: lab[members[0]] for cid, members in classes.items()}
    shared = [(a, b) for a in classes for b in classes if a < b and label_of[a] == label_of[b]]
    assert shared
    D = distance_matrix(C)
    for a, b in shared:
        assert min(D[x, y] for x in classes[a] for y in classes[b]) > 3 * 4
    assert decode_partition(C, lab, 4).normalized().class_of == P.normalized().class_of


def test_codec_singletons_and_alphabet_bound():
    G = random_bounded_degree(30, 3, seed=2)
    P = Partition(tuple(range(30)), Fraction(1), 0)
    lab = encode_partition(G, P)
    assert len(set(lab.values)) <= G.d ** (5 * 0 + 1)
    assert decode_partition(G, lab, 0).normalized().class_of == P.class_of
    # with K = 0 any proper colouring decodes to singletons too
    colours = [0] * G.n
    for x in range(G.n):
        used = {colours[y] for y in G.adj[x] if y < x}
        colours[x] = min(set(range(G.d + 1)) - used)
    assert decode_partition(G, Labeling(tuple(colours)), 0).normalized().class_of == P.class_of


def test_codec_rejects_broken_dichotomy():
    C = cycle(20)
    P = Partition(tuple(0 if v in (0, 10) else 1 for v in range(20)), Fraction(1), 3)
    with pytest.raises(ContractError):
        encode_partition(C, P)


# ---------------------------------------------------------------- hyperfinite oracle


def audit_star_partition(G, res, eps, K):
    P = res.partition
    for members in P.regular_classes().values():
        assert len(members) <= K
        assert class_iso(G, members) <= eps
        assert is_connected_subset(G, members)
    assert res.star_size <= (G.d + 1) * Fraction(eps) * G.n


def test_hyperfinite_cycle():
    C = cycle(100)
    res = hyperfinite_oracle(C, Fraction(1, 5), 20)
    audit_star_partition(C, res, Fraction(1, 5), 20)
    assert res.star_size < 60


def test_hyperfinite_tree_bound_still_holds():
    T = regular_tree(3, 5)
    res = hyperfinite_oracle(T, Fraction(1, 4), 30)
    audit_star_partition(T, res, Fraction(1, 4), 30)


def test_hyperfinite_exhaustive_finder():
    G = grid(4, 4)
    res = hyperfinite_oracle(G, Fraction(1, 2), 6, finder=connected_subset_finder)
    audit_star_partition(G, res, Fraction(1, 2), 6)


def test_sweep_budget():
    assert sweep_budget(2, 10, Fraction(1, 5)) == 4 * 4 * 100 * 5 + 1


# ---------------------------------------------------------------- good tuples


def test_minimal_levels():
    q = Fraction(31, 32)
    assert q**22 < Fraction(1, 2) <= q**21
    assert minimal_levels(2, Fraction(1, 2)) == 22


def test_tuple_inequalities():
    t = GoodTuple(3, 2, Fraction(1, 2), (100, 20, 4))
    assert not any("eq2" in v for v in t.violations())
    assert 100 > 4 * 24
    bad = GoodTuple(3, 2, Fraction(1, 2), (90, 20, 4))
    assert any("eq2" in v for v in bad.violations())


def test_search_on_long_cycle():
    C = cycle(10000)
    tup = good_tuple_search(C, 2, Fraction(1, 2), levels=2, margin_factor=1, sample=32)
    assert not any("eq2" in v for v in tup.violations())
    s = tup.S[-1]
    # arcs of radius in [S_N, 2S_N) have i = 2/(2r+1)
    assert any(Fraction(2, 2 * r + 1) < Fraction(1, 2) for r in range(s, 2 * s))


def test_search_faithful_level_count():
    C = cycle(60)
    tup = good_tuple_search(C, 2, Fraction(1, 2))
    assert tup.N == 22 and tup.is_good


def test_search_rejects_infeasible_strong_level_count():
    with pytest.raises(SearchError):
        good_tuple_search(cycle(20), 2, Fraction(1, 2), Fraction(1, 2))


# ---------------------------------------------------------------- basic algorithm


@pytest.fixture(scope="module")
def torus_run():
    T = torus(32, 32)
    tup = good_tuple_search(T, 2, Fraction(1, 2), levels=2)
    system = basic_algorithm(T, tup, injective(T))
    return T, tup, system


def test_basic_algorithm_contract(torus_run):
    T, tup, system = torus_run
    seen = set()
    for b in system.nice:
        assert not (seen & b.members)
        seen |= b.members
        assert class_iso(T, b.members) < Fraction(1, 2)
    audit = audit_nice_balls(T, system)
    assert all(audit.values()), audit


def test_basic_algorithm_small_graph_is_one_ball():
    C = cycle(9)
    tup = GoodTuple(1, 2, Fraction(1, 2), (10,))
    system = basic_algorithm(C, tup, injective(C))
    assert len(system.nice) == 1 and system.nice[0].members == frozenset(range(9))


def test_discard_audit_on_relaxed_tuple():
    G = torus(20, 20)
    tup = GoodTuple(2, 2, Fraction(1, 2), (3, 2), margin_factor=0)
    system = basic_algorithm(G, tup, injective(G))
    for b, k in system.discarded:
        blocker = system.nice[k]
        assert blocker.type < b.type and blocker.members & b.members
    assert all(audit_nice_balls(G, system).values())


def test_coverage_report(torus_run):
    T, tup, system = torus_run
    rep = coverage_report(T, range(T.n), system)
    assert rep.hypothesis_holds and rep.fraction >= 1 - tup.epsilon
    ball = system.nice[0].members
    assert coverage_report(T, ball, system).fraction == 1
    G = torus(20, 20)
    small = GoodTuple(1, 2, Fraction(1, 2), (2,))
    sys2 = basic_algorithm(G, small, injective(G))
    outside = set(range(G.n)) - sys2.covered()
    assert coverage_report(G, outside, sys2).fraction == 0


# ---------------------------------------------------------------- net cover


def test_net_cover_single_family_for_large_s():
    C = cycle(12)
    nc = net_cover(C, 6, 0)
    assert len(nc.families) == 1 and len(nc.centers) == 1


@pytest.mark.parametrize("seed", range(50))
def test_net_cover_separation_and_cover(seed):
    rng = random.Random(seed)
    G = torus(rng.randint(3, 9), rng.randint(3, 9)) if seed % 2 else cycle(rng.randint(10, 60))
    s, n = rng.randint(1, 3), rng.randint(0, 1)
    nc = net_cover(G, s, n)
    D = distance_matrix(G)
    covered = {v for z in nc.centers for v in range(G.n) if D[z, v] <= s}
    assert covered == set(range(G.n))
    for fam in nc.families:
        for a in fam:
            for b in fam:
                if a != b:
                    assert D[a, b] > 2 ** (n + 2) * s
    assert nc.bound_holds


def test_net_cover_cycle_example():
    nc = net_cover(cycle(20), 2, 0)
    assert nc.bound_holds and nc.bound == nc.D**12


# ---------------------------------------------------------------- extension


def test_extension_with_full_cover_is_identity(torus_run):
    T, tup, system = torus_run
    ext = extend_partition(T, system, Fraction(1, 40))
    if not (set(range(T.n)) - system.covered()):
        assert ext.psi == {}
    assert verify_partition(T, ext.partition).passed
    assert ext.injective and ext.boundary_bound_holds


def arc_system(n, radius, spacing):
    balls = []
    for c in range(radius, n - radius, spacing):
        balls.append(Ball(c, radius, 1, frozenset(range(c - radius, c + radius + 1))))
    return NiceBallSystem(balls, [], list(balls), None)


def test_extension_absorbs_uncovered_vertices():
    C = cycle(200)
    system = arc_system(200, 19, 40)
    U = set(range(200)) - system.covered()
    assert len(U) == 5
    ext = extend_partition(C, system, Fraction(1, 10), cover_radius=40)
    assert set(ext.psi) == U
    assert len(set(ext.psi.values())) == len(ext.psi)
    assert all(y in system.covered() for y in ext.psi.values())
    rep = verify_partition(C, ext.partition)
    assert rep.passed and ext.boundary_bound_holds
    owner = {v: k for k, b in enumerate(system.nice) for v in b.members}
    classes = {frozenset(m) for m in ext.partition.classes().values()}
    expect = set()
    for k, b in enumerate(system.nice):
        expect.add(frozenset(b.members | {x for x, y in ext.psi.items() if owner[y] == k}))
    assert classes == expect


def test_extension_capacity_failure():
    G = torus(20, 20)
    tup = GoodTuple(1, 2, Fraction(1, 2), (2,))
    system = basic_algorithm(G, tup, injective(G))
    with pytest.raises(CapacityError) as err:
        extend_partition(G, system, Fraction(1, 40))
    assert err.value.witness is not None


# ---------------------------------------------------------------- strong families


@pytest.fixture(scope="module")
def torus_family():
    T = torus(32, 32)
    tup = good_tuple_search(T, 2, Fraction(1, 2), Fraction(1, 2), levels=2)
    fam = strong_family(T, tup, 6, 7, injective(T), eps_prime=Fraction(1, 40))
    return T, tup, fam


def test_strong_family_members_verify(torus_family):
    T, tup, fam = torus_family
    codes = [c for c, _ in fam.members]
    assert len(set(codes)) == len(codes) == 6
    for code, P in fam.members:
        assert verify_partition(T, P).passed
        for i, (t, j) in enumerate(code):
            assert 1 <= j <= tup.R[i]
    rep = verify_strong_family(T, fam, Fraction(1, 2))
    assert rep.max <= Fraction(1, 2)


def test_strong_family_is_deterministic(torus_family):
    T, tup, fam = torus_family
    again = strong_family(T, tup, 6, 7, injective(T), eps_prime=Fraction(1, 40), threads=4)
    assert again.to_dict() == fam.to_dict()


def test_strong_family_needs_strong_tuple():
    T = torus(8, 8)
    with pytest.raises(ContractError):
        strong_family(T, GoodTuple(1, 2, Fraction(1, 2), (2,)), 1, 0, injective(T))


def test_family_json_round_trip(torus_family):
    _, _, fam = torus_family
    assert CodeFamily.from_dict(fam.to_dict()).to_dict() == fam.to_dict()


# ---------------------------------------------------------------- verifyStrongFamily


def test_identical_partitions_give_zero_one_fractions():
    C = cycle(40)
    P = arc_partition(40, 10)
    rep = verify_strong_family(C, [P, P, P], Fraction(1, 2))
    for x, f in enumerate(rep.fractions):
        assert f == (1 if x % 10 in (0, 9) else 0)


def membership_oracle(n, length, offsets):
    counts = [0] * n
    for o in offsets:
        for v in range(n):
            if (v - o) % length in (0, length - 1):
                counts[v] += 1
    return counts


def test_rotated_arcs_fraction():
    C = cycle(100)
    fam = rotated_arc_family(100, 20, 2, 10)
    rep = verify_strong_family(C, fam, Fraction(1, 2))
    counts = membership_oracle(100, 20, [2 * k for k in range(10)])
    assert [f * 10 for f in rep.fractions] == counts
    # each vertex is an arc endpoint for exactly one of the ten offsets
    assert set(rep.fractions) == {Fraction(1, 10)}


def test_empty_boundaries_give_zero():
    C = cycle(12)
    P = Partition((0,) * 12, Fraction(0), 6)
    assert verify_strong_family(C, [P, P], Fraction(1, 2)).max == 0


# ---------------------------------------------------------------- fractional tree families


def test_tree_family_on_path():
    P = path(30)
    fam = fractional_tree_family(P, 0, 5)
    for part in fam.partitions():
        for members in part.classes().values():
            assert list(members) == list(range(min(members), max(members) + 1))
            assert len(members) <= 5


def test_tree_family_membership_bound():
    T = regular_tree(3, 8)
    fam = fractional_tree_family(T, 0, 8)
    counts = boundary_membership(T, fam.partitions())
    assert max(counts) <= 2
    for part in fam.partitions():
        rep = verify_partition(T, Partition(part.class_of, Fraction(1), 2 * 7))
        assert rep.max_diam <= 2 * 7


def test_tree_family_fraction_below_eps():
    T = regular_tree(3, 6)
    eps = Fraction(1, 4)
    l = 9
    assert l > 2 / eps
    rep = verify_strong_family(T, fractional_tree_family(T, 0, l), eps)
    assert rep.passed


def test_tree_family_rejects_non_tree():
    with pytest.raises(StructuralError):
        fractional_tree_family(cycle(6), 0, 3)
