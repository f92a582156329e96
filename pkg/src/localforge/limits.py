"""Graph-limit metrics: naive distance, configuration sets, A-walks on labelled cycles, arithmetic spectra."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .canonical import CanonicalBall, ball_set, ball_signature
from .errors import SizeLimitError
from .graph import BoundedDegreeGraph, max_eccentricity
from .local import Labeling

Word = tuple


def naive_distance(G: BoundedDegreeGraph, H: BoundedDegreeGraph) -> Fraction:
    """2^-n for the largest n such that the radius-1..n ball sets agree; 0 when they always agree."""
    top = max(max_eccentricity(G), max_eccentricity(H)) + 1
    for r in range(1, top + 1):
        if ball_signature(G, r) != ball_signature(H, r):
            return Fraction(1, 2 ** (r - 1))
    return Fraction(0)


def configuration_set(G: BoundedDegreeGraph, phi: Labeling | Sequence, r: int) -> frozenset:
    """Distinct canonical labelled r-balls occurring in (G, phi)."""
    vals = phi.values if isinstance(phi, Labeling) else tuple(phi)
    return ball_set(G, r, vals)[r]


def achievable_configurations(G: BoundedDegreeGraph, Q: Sequence, r: int, budget: int = 1 << 16) -> set:
    """Every configuration set realised by some labeling of G over Q (exhaustive)."""
    count = len(Q) ** G.n
    if count > budget:
        raise SizeLimitError(f"{count} labelings exceed the budget {budget}")
    return {configuration_set(G, vals, r) for vals in itertools.product(Q, repeat=G.n)}


# ---------------------------------------------------------------- labelled cycles


def word_class(w: Word) -> Word:
    """Reflection class of a label word, represented by its smaller orientation."""
    w = tuple(w)
    return min(w, w[::-1])


def cycle_words(n: int, labels: Sequence, r: int) -> list[Word]:
    """Words phi(x-r) .. phi(x+r) around the cycle 0-1-..-(n-1)-0."""
    return [tuple(labels[(x + j) % n] for j in range(-r, r + 1)) for x in range(n)]


def ball_word_class(cb: CanonicalBall) -> Word:
    """Read a labelled path ball with the root in the middle as a word class."""
    adj = cb.adjacency()
    arms = []
    for start in adj[0]:
        arm, prev, cur = [], 0, start
        while True:
            arm.append(cb.labels[cur])
            nxt = [y for y in adj[cur] if y != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
        arms.append(arm)
    if len(arms) != 2 or len(arms[0]) != len(arms[1]) or any(len(a) > 2 for a in adj):
        raise ValueError("ball is not a path centred at its root")
    return word_class(tuple(arms[0][::-1]) + (cb.labels[0],) + tuple(arms[1]))


def all_word_classes(Q: Sequence, r: int) -> list[Word]:
    return sorted({word_class(w) for w in itertools.product(Q, repeat=2 * r + 1)})


def _oriented_words(A: Iterable[Word]) -> list[Word]:
    out = set()
    for c in A:
        out.add(tuple(c))
        out.add(tuple(c)[::-1])
    return sorted(out)


def continuation_digraph(A: Iterable[Word]) -> dict[Word, list[Word]]:
    """b follows a when b drops a's first letter and appends one."""
    words = _oriented_words(A)
    by_prefix: dict[Word, list[Word]] = {}
    for b in words:
        by_prefix.setdefault(b[:-1], []).append(b)
    return {a: sorted(by_prefix.get(a[1:], [])) for a in words}


def _sccs(graph: dict) -> list[list]:
    index, low, on, stack, out = {}, {}, set(), [], []
    counter = itertools.count()

    def visit(v):
        work = [(v, iter(graph[v]))]
        index[v] = low[v] = next(counter)
        stack.append(v)
        on.add(v)
        while work:
            u, it = work[-1]
            advanced = False
            for y in it:
                if y not in index:
                    index[y] = low[y] = next(counter)
                    stack.append(y)
                    on.add(y)
                    work.append((y, iter(graph[y])))
                    advanced = True
                    break
                if y in on:
                    low[u] = min(low[u], index[y])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[u])
            if low[u] == index[u]:
                comp = []
                while True:
                    y = stack.pop()
                    on.discard(y)
                    comp.append(y)
                    if y == u:
                        break
                out.append(sorted(comp))

    for v in sorted(graph):
        if v not in index:
            visit(v)
    return out


def _period(graph: dict, comp: list) -> int:
    """gcd of closed-walk lengths inside a strongly connected component."""
    members = set(comp)
    level = {comp[0]: 0}
    frontier = [comp[0]]
    g = 0
    while frontier:
        nxt = []
        for u in frontier:
            for y in graph[u]:
                if y not in members:
                    continue
                if y not in level:
                    level[y] = level[u] + 1
                    nxt.append(y)
                else:
                    g = math.gcd(g, level[u] + 1 - level[y])
        frontier = nxt
    return g


@dataclass(frozen=True)
class AWalkReport:
    feasible: bool
    period: int | None
    components: int

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "nA": self.period, "components": self.components}


def awalk_period(A: Iterable[Word]) -> AWalkReport:
    """Feasibility and period n_A of closed walks visiting every class of A."""
    A = {word_class(w) for w in A}
    if not A:
        raise ValueError("A must be nonempty")
    graph = continuation_digraph(A)
    periods = []
    for comp in _sccs(graph):
        if len(comp) == 1 and comp[0] not in graph[comp[0]]:
            continue
        if {word_class(w) for w in comp} == A:
            periods.append(_period(graph, comp))
    if not periods:
        return AWalkReport(False, None, 0)
    return AWalkReport(True, math.gcd(*periods), len(periods))


def awalk_exists(A: Iterable[Word], n: int) -> bool:
    """Is there a closed walk of length exactly n through the continuation digraph covering every class of A?"""
    A = sorted({word_class(w) for w in A})
    if not A:
        return False
    bit = {c: 1 << k for k, c in enumerate(A)}
    full = (1 << len(A)) - 1
    graph = continuation_digraph(A)
    for s in sorted(graph):
        states = {(s, bit[word_class(s)])}
        for _ in range(n):
            states = {(y, mask | bit[word_class(y)]) for w, mask in states for y in graph[w]}
            if not states:
                break
        if (s, full) in states:
            return True
    return False


def cycle_configuration_classes(n: int, labels: Sequence, r: int) -> frozenset:
    return frozenset(word_class(w) for w in cycle_words(n, labels, r))


# ---------------------------------------------------------------- arithmetic spectrum


@dataclass
class ArithmeticSpectrum:
    eventually: list
    eventually_not: list
    undecided: list

    @property
    def convergent(self) -> bool:
        return not self.undecided

    def to_dict(self) -> dict:
        return {
            "convergent": self.convergent,
            "eventuallyDivides": self.eventually,
            "eventuallyNot": self.eventually_not,
            "undecided": self.undecided,
        }


def arithmetic_spectrum(seq: Sequence[int], bound: int, tail: int | None = None) -> ArithmeticSpectrum:
    """Classify m = 1..bound by the divisibility pattern on the final ``tail`` terms of the prefix."""
    seq = list(seq)
    if not seq:
        raise ValueError("empty sequence")
    tail = tail if tail is not None else max(3, len(seq) // 4)
    tail = min(tail, len(seq))
    yes, no, open_ = [], [], []
    for m in range(1, bound + 1):
        hits = [x % m == 0 for x in seq[-tail:]]
        if all(hits):
            yes.append(m)
        elif not any(hits):
            no.append(m)
        else:
            open_.append(m)
    return ArithmeticSpectrum(yes, no, open_)


# ---------------------------------------------------------------- parameter testing


@dataclass
class TesterResult:
    value: object
    representative: int | None
    radius: int

    @property
    def found(self) -> bool:
        return self.representative is not None

    def to_dict(self) -> dict:
        return {"found": self.found, "representative": self.representative, "radius": self.radius, "value": self.value}


def parameter_tester(
    param: Callable[[BoundedDegreeGraph], object], corpus: Sequence[BoundedDegreeGraph], G: BoundedDegreeGraph, s: int
) -> TesterResult:
    """Return the parameter of the first corpus graph sharing G's radius-s ball signature."""
    if not corpus:
        raise ValueError("corpus must be nonempty")
    sig = ball_signature(G, s)
    for k, H in enumerate(corpus):
        if ball_signature(H, s) == sig:
            return TesterResult(param(H), k, s)
    return TesterResult(None, None, s)
