import itertools
import math
import random
from fractions import Fraction

import networkx as nx
import pytest

from localforge.canonical import canonical_ball
from localforge.generators import cycle, path, random_bounded_degree, torus
from localforge.limits import (
    achievable_configurations,
    all_word_classes,
    arithmetic_spectrum,
    awalk_exists,
    awalk_period,
    ball_word_class,
    configuration_set,
    continuation_digraph,
    cycle_configuration_classes,
    naive_distance,
    parameter_tester,
    word_class,
)


def to_nx(G):
    H = nx.Graph()
    H.add_nodes_from(range(G.n))
    H.add_edges_from(G.edges())
    return H


def rooted_balls(G, r):
    H = to_nx(G)
    out = []
    for x in range(G.n):
        B = nx.ego_graph(H, x, radius=r).copy()
        nx.set_node_attributes(B, {v: v == x for v in B}, "root")
        out.append(B)
    return out


def same_ball_sets(a, b):
    match = nx.algorithms.isomorphism.categorical_node_match("root", False)

    def covered(xs, ys):
        return all(any(nx.is_isomorphic(p, q, node_match=match) for q in ys) for p in xs)

    return covered(a, b) and covered(b, a)


def distance_oracle(G, H):
    """Independent route: rooted ego graphs compared with networkx isomorphism."""
    top = max(G.n, H.n) + 1
    for r in range(1, top + 1):
        if not same_ball_sets(rooted_balls(G, r), rooted_balls(H, r)):
            return Fraction(1, 2 ** (r - 1))
    return Fraction(0)


# ---------------------------------------------------------------- naive distance


def test_naive_distance_examples():
    assert naive_distance(cycle(4), cycle(5)) == Fraction(1, 2)
    assert naive_distance(cycle(3), cycle(4)) == 1
    G = random_bounded_degree(20, 3, seed=1)
    assert naive_distance(G, G) == 0
    assert naive_distance(cycle(30), cycle(40)) == Fraction(1, 2**14)


@pytest.mark.parametrize("seed", range(10))
def test_naive_distance_matches_networkx_route(seed):
    rng = random.Random(seed)
    G = random_bounded_degree(rng.randint(3, 9), 3, seed=seed)
    H = random_bounded_degree(rng.randint(3, 9), 3, seed=seed + 100)
    assert naive_distance(G, H) == distance_oracle(G, H)


def test_triangle_inequality():
    pool = [cycle(n) for n in range(3, 9)] + [path(n) for n in range(2, 7)]
    pool += [random_bounded_degree(8, 3, seed=s) for s in range(6)]
    rng = random.Random(0)
    for _ in range(100):
        a, b, c = (rng.choice(pool) for _ in range(3))
        dab, dbc, dac = naive_distance(a, b), naive_distance(b, c), naive_distance(a, c)
        assert dac <= dab + dbc
        assert dab == naive_distance(b, a)


# ---------------------------------------------------------------- configuration sets


def test_configuration_set_examples():
    C = cycle(6)
    assert len(configuration_set(C, (0, 1) * 3, 1)) == 2
    assert len(configuration_set(C, (0,) * 6, 1)) == 1
    assert len(configuration_set(C, (0, 0, 1, 0, 0, 1), 1)) == 2


def test_achievable_configurations_small():
    got = achievable_configurations(cycle(4), (0, 1), 1)
    expect = {configuration_set(cycle(4), vals, 1) for vals in itertools.product((0, 1), repeat=4)}
    assert got == expect
    assert frozenset() not in got
    # constant, alternating and the three mixed ones up to symmetry
    assert len(achievable_configurations(cycle(3), (0, 1), 1)) == 4


# ---------------------------------------------------------------- A-walks


def test_word_classes():
    assert word_class((1, 0, 0)) == (0, 0, 1)
    assert len(all_word_classes((0, 1), 1)) == 6
    g = continuation_digraph([(0, 1, 0), (1, 0, 1)])
    assert g[(0, 1, 0)] == [(1, 0, 1)]


def test_awalk_period_examples():
    alt = awalk_period([(0, 1, 0), (1, 0, 1)])
    assert alt.feasible and alt.period == 2
    assert awalk_period([(1, 1, 1)]).period == 1
    assert not awalk_period([(0, 1, 0)]).feasible
    assert not awalk_period([(0, 0, 0), (1, 1, 1)]).feasible


def test_awalk_exists_follows_period():
    A = [(0, 1, 0), (1, 0, 1)]
    for n in range(3, 20):
        assert awalk_exists(A, n) == (n % 2 == 0)
    assert all(awalk_exists([(1, 1, 1)], n) for n in range(1, 10))


def test_awalk_matches_exhaustive_labelings():
    Q = (0, 1)
    classes = all_word_classes(Q, 1)
    subsets = [frozenset(s) for k in range(1, len(classes) + 1) for s in itertools.combinations(classes, k)]
    assert len(subsets) == 63
    for n in range(4, 13):
        C = cycle(n)
        brute = {frozenset(ball_word_class(cb) for cb in conf) for conf in achievable_configurations(C, Q, 1)}
        direct = {cycle_configuration_classes(n, vals, 1) for vals in itertools.product(Q, repeat=n)}
        assert brute == direct
        for A in subsets:
            assert awalk_exists(A, n) == (A in brute), (n, sorted(A))


def test_ball_word_class_reads_canonical_ball():
    labels = (0, 0, 1, 1, 0, 1, 0)
    C = cycle(7)
    for x in range(7):
        word = tuple(labels[(x + j) % 7] for j in (-1, 0, 1))
        assert ball_word_class(canonical_ball(C, x, 1, labels)) == word_class(word)


# ---------------------------------------------------------------- arithmetic spectra


def test_powers_of_two():
    spec = arithmetic_spectrum([2**k for k in range(1, 21)], 64)
    assert spec.convergent
    assert spec.eventually == [1, 2, 4, 8, 16, 32, 64]


def test_factorials_are_eventually_divisible_by_everything():
    spec = arithmetic_spectrum([math.factorial(k) for k in range(1, 21)], 16)
    assert spec.eventually == list(range(1, 17))


def test_primes():
    primes = [p for p in range(2, 200) if all(p % q for q in range(2, int(p**0.5) + 1))][:30]
    spec = arithmetic_spectrum(primes, 20)
    assert spec.convergent and spec.eventually == [1]
    mixed = arithmetic_spectrum([k for k in range(1, 21)], 6, tail=6)
    assert not mixed.convergent and 2 in mixed.undecided


# ---------------------------------------------------------------- parameter testing


def test_parameter_tester():
    corpus = [path(10), cycle(10), cycle(11)]
    res = parameter_tester(lambda H: H.n, corpus, cycle(50), 3)
    assert res.found and res.representative == 1 and res.value == 10
    miss = parameter_tester(lambda H: H.n, corpus, torus(6, 6), 2)
    assert not miss.found
    with pytest.raises(ValueError):
        parameter_tester(len, [], cycle(5), 1)
