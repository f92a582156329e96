import random
from fractions import Fraction

import pytest

from localforge.combinatorial import (
    approx_mis,
    function_to_matching,
    is_maximal_independent,
    matching_ctda,
    matching_function_violation,
    matching_to_function,
    max_independent_set,
    max_matching_size,
    max_weight_independent_set,
    max_weighted_independent_set,
    mis_ctda,
    mis_oracle,
    verify_matching,
    weighted_is,
)
from localforge.errors import ContractError, SeparationError, SizeLimitError, StructuralError
from localforge.generators import cycle, path, random_bounded_degree
from localforge.graph import BoundedDegreeGraph
from localforge.local import Labeling, apply_oracle, greedy_separating_labeling
from localforge.partition import arc_partition, rotated_arc_family


def injective(G):
    return Labeling(tuple(range(1, G.n + 1)))


def independent_and_maximal(G, S):
    """Plain edge scan plus domination scan."""
    S = set(S)
    for u, v in G.edges():
        if u in S and v in S:
            return False
    for x in range(G.n):
        if x not in S and not any(y in S for y in G.adj[x]):
            return False
    return True


def doubled(G):
    n = G.n
    edges = list(G.edges()) + [(u + n, v + n) for u, v in G.edges()]
    return BoundedDegreeGraph.from_edges(2 * n, edges, d=G.d)


def subset_mis_oracle(G, w=None):
    w = w or [1] * G.n
    best = 0
    edges = G.edges()
    for mask in range(1 << G.n):
        if any(mask >> u & 1 and mask >> v & 1 for u, v in edges):
            continue
        best = max(best, sum(w[x] for x in range(G.n) if mask >> x & 1))
    return best


def matching_oracle(G):
    """Maximum matching by recursion on the lowest unresolved vertex."""
    adj = [set(a) for a in G.adj]

    def go(free):
        if not free:
            return 0
        x = min(free)
        rest = free - {x}
        best = go(rest)
        for y in adj[x]:
            if y in rest:
                best = max(best, 1 + go(rest - {y}))
        return best

    return go(frozenset(range(G.n)))


# ---------------------------------------------------------------- MIS


def test_mis_examples():
    C = cycle(6)
    assert mis_ctda(C, Labeling((1, 2, 1, 2, 1, 2))) == frozenset({0, 2, 4})
    P = path(3)
    assert mis_ctda(P, Labeling((2, 1, 2))) == frozenset({1})
    with pytest.raises(SeparationError):
        mis_ctda(path(2), Labeling((1, 1)))


def test_mis_composed_oracle_matches_rounds():
    G = random_bounded_degree(40, 4, seed=3)
    phi = greedy_separating_labeling(G, 1)
    m = max(G.d + 1, max(phi.values))
    out = apply_oracle(G, Labeling(phi.values), mis_oracle(m))
    assert frozenset(x for x in range(G.n) if out[x] == "a") == mis_ctda(G, phi)


@pytest.mark.parametrize("seed", range(200))
def test_mis_random(seed):
    rng = random.Random(seed)
    G = random_bounded_degree(rng.randint(2, 120), rng.randint(2, 5), seed=seed)
    phi = greedy_separating_labeling(G, 1)
    S = mis_ctda(G, phi)
    assert independent_and_maximal(G, S)
    assert is_maximal_independent(G, S)
    both = mis_ctda(doubled(G), Labeling(phi.values + phi.values))
    assert {x for x in both if x < G.n} == S
    assert {x - G.n for x in both if x >= G.n} == S


# ---------------------------------------------------------------- exact independent sets


@pytest.mark.parametrize("seed", range(40))
def test_exact_solver_against_subset_enumeration(seed):
    rng = random.Random(seed)
    G = random_bounded_degree(rng.randint(1, 14), rng.randint(2, 4), seed=seed)
    w = [rng.randint(0, 9) for _ in range(G.n)]
    assert len(max_independent_set(G)) == subset_mis_oracle(G)
    val, S = max_weighted_independent_set(G, w)
    assert val == subset_mis_oracle(G, w) == sum(w[x] for x in S)
    assert all(not (u in S and v in S) for u, v in G.edges())


def test_exact_solver_paths_and_cycles():
    assert len(max_independent_set(cycle(9))) == 4
    assert len(max_independent_set(path(9))) == 5
    assert max_weight_independent_set({0: [1], 1: [0, 2], 2: [1]}, {0: 1, 1: 5, 2: 1})[0] == 5
    with pytest.raises(SizeLimitError):
        max_independent_set(cycle(80), limit=60)


def test_matching_size_oracle_agrees():
    for seed in range(30):
        G = random_bounded_degree(random.Random(seed).randint(2, 12), 3, seed=seed)
        assert max_matching_size(G) == matching_oracle(G)


# ---------------------------------------------------------------- approximate independent sets


def test_approx_mis_on_cycle():
    C = cycle(100)
    sp = arc_partition(100, 20, 0, Fraction(1, 10), 19)
    res = approx_mis(C, sp)
    assert all(not (u in res.members and v in res.members) for u, v in C.edges())
    # each arc of 20 loses its two ends and keeps 9 of the 18 interior vertices
    assert res.weight == 45 and abs(res.weight - 50) <= 10
    assert res.boundary_fraction == Fraction(1, 10)
    greedy = approx_mis(C, sp, mode="maximal")
    assert greedy.weight == 45


def test_approx_mis_rejects_foreign_partition():
    with pytest.raises(StructuralError):
        approx_mis(cycle(10), arc_partition(12, 4, 0, Fraction(1, 2), 3))


def cycle_arc_dp(w, members, n):
    """Weighted IS on the interior of one arc, read as a path."""
    members = set(members)
    start = next(v for v in members if (v - 1) % n not in members)
    seq = [(start + j) % n for j in range(len(members))][1:-1]
    take = skip = 0
    for v in seq:
        take, skip = skip + w[v], max(take, skip)
    return max(take, skip)


def test_weighted_is_against_path_dp():
    C = cycle(30)
    fam = rotated_arc_family(30, 10, 1, 10)
    rng = random.Random(4)
    w = [rng.randint(0, 7) for _ in range(30)]
    res = weighted_is(C, fam, w, epsilon=Fraction(1, 5))
    for P, r in zip(fam.partitions(), res.results):
        assert r.weight == sum(cycle_arc_dp(w, m, 30) for m in P.classes().values())
    assert res.optimum == max_weighted_independent_set(C, w)[0]
    assert res.best.weight == max(r.weight for r in res.results)
    assert res.meeting == sum(1 for r in res.results if r.weight >= res.optimum - Fraction(1, 5) * sum(w))


def test_weighted_is_degenerate_weights():
    C = cycle(40)
    fam = rotated_arc_family(40, 10, 2, 5)
    zero = weighted_is(C, fam, [0] * 40, epsilon=Fraction(1, 10))
    assert all(r.weight == 0 for r in zero.results) and zero.meeting == 5
    ones = weighted_is(C, fam, [1] * 40)
    for P, r in zip(fam.partitions(), ones.results):
        assert r.weight == approx_mis(C, P).weight
    with pytest.raises(StructuralError):
        weighted_is(C, fam, [1] * 39)


# ---------------------------------------------------------------- matchings


def test_matching_examples():
    P4 = path(4)
    run = matching_ctda(P4, injective(P4), 1)
    assert run.matching == frozenset({(0, 1), (2, 3)})
    C6 = cycle(6)
    run = matching_ctda(C6, injective(C6), 5)
    assert len(run.matching) == 3
    assert verify_matching(C6, run.matching, 5).passed


def test_verify_matching_finds_short_path():
    P4 = path(4)
    rep = verify_matching(P4, [(1, 2)], 2)
    assert not rep.passed and len(rep.augmenting_path) == 4
    assert verify_matching(P4, [(1, 2)], 1).passed
    with pytest.raises(StructuralError):
        verify_matching(P4, [(0, 2)], 1)
    with pytest.raises(StructuralError):
        verify_matching(P4, [(0, 1), (1, 2)], 1)


@pytest.mark.parametrize("seed", range(100))
def test_matching_random(seed):
    rng = random.Random(seed)
    G = random_bounded_degree(rng.randint(2, 40), rng.randint(2, 4), seed=seed)
    T = rng.randint(1, 5)
    run = matching_ctda(G, injective(G), T)
    rep = verify_matching(G, run.matching, T)
    assert rep.passed and rep.bound_holds
    assert rep.maximum == max_matching_size(G)
    assert len(run.matching) * (T + 1) >= T * rep.maximum


def test_matching_requires_separation():
    C = cycle(12)
    with pytest.raises(SeparationError):
        matching_ctda(C, Labeling(tuple(k % 6 + 1 for k in range(12))), 1)


@pytest.mark.parametrize("seed", range(100))
def test_matching_function_round_trip(seed):
    rng = random.Random(seed)
    G = random_bounded_degree(rng.randint(2, 40), rng.randint(2, 4), seed=seed)
    edges = G.edges()
    rng.shuffle(edges)
    M, used = [], set()
    for u, v in edges:
        if u not in used and v not in used and rng.random() < 0.6:
            M.append((u, v))
            used |= {u, v}
    rho = matching_to_function(G, M, injective(G))
    assert matching_function_violation(G, rho) is None
    assert function_to_matching(G, rho) == frozenset(tuple(sorted(e)) for e in M)


def test_function_to_matching_rejects_bad_function():
    with pytest.raises(ContractError):
        function_to_matching(path(3), Labeling((1, 1, 1)))
    with pytest.raises(ContractError):
        function_to_matching(path(3), Labeling((1, 2, 1)))
