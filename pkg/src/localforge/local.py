"""Oracles over canonical balls and their round-synchronous application.

An oracle is a radius-r rule evaluated on the canonical labeled ball around
each vertex. Because the rule only ever sees the canonical form, any oracle
built here is isomorphism invariant by construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .canonical import CanonicalBall, ball_from_canonical, canonicalize, symbol_key
from .errors import AlphabetError, ContractError, SeparationError, StructuralError
from .graph import BoundedDegreeGraph, RootedBall, ball, bfs


def order_key(sym: Any):
    """Sort key putting integers in numeric order before everything else."""
    if isinstance(sym, bool) or not isinstance(sym, int):
        return (1, 0, symbol_key(sym))
    return (0, sym, "")


@dataclass(frozen=True)
class Labeling:
    values: tuple
    alphabet: tuple | None = None
    separation: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.alphabet is not None:
            object.__setattr__(self, "alphabet", tuple(sorted(set(self.alphabet), key=order_key)))
            allowed = set(map(symbol_key, self.alphabet))
            for v in self.values:
                if symbol_key(v) not in allowed:
                    raise AlphabetError(f"label {v!r} not in declared alphabet")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, x: int):
        return self.values[x]

    @property
    def injective(self) -> bool:
        return len(set(map(symbol_key, self.values))) == len(self.values)

    @property
    def effective_separation(self) -> float:
        """Declared separation, or infinity for an injective labeling."""
        if self.injective:
            return math.inf
        return self.separation or 0

    def symbols(self) -> tuple:
        if self.alphabet is not None:
            return self.alphabet
        return tuple(sorted(set(self.values), key=order_key))

    def to_dict(self) -> dict:
        return {
            "alphabet": list(self.symbols()),
            "separation": self.separation,
            "values": list(self.values),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Labeling":
        try:
            vals = [tuple(v) if isinstance(v, list) else v for v in data["values"]]
            alph = data.get("alphabet")
            if alph is not None:
                alph = [tuple(v) if isinstance(v, list) else v for v in alph]
            sep = data.get("separation")
            return cls(tuple(vals), None if alph is None else tuple(alph), None if sep is None else int(sep))
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed labeling object: {exc}") from exc


def separation_violation(G: BoundedDegreeGraph, values: Sequence, k: int):
    """First pair (x, y) with 0 < d(x, y) <= k and equal labels, or None."""
    if len(values) != G.n:
        raise StructuralError(f"labeling has {len(values)} values for {G.n} vertices")
    if k <= 0:
        return None
    if len(set(map(symbol_key, values))) == len(values):
        return None
    for x in range(G.n):
        for y in bfs(G, x, limit=k):
            if y != x and values[y] == values[x]:
                return (x, y)
    return None


def is_separating(G: BoundedDegreeGraph, values: Sequence, k: int) -> bool:
    return separation_violation(G, values, k) is None


def require_separation(G: BoundedDegreeGraph, phi: Labeling, k: int) -> None:
    """Check that phi is declared (or injective) and actually k-separating."""
    if k <= 0:
        if len(phi) != G.n:
            raise StructuralError(f"labeling has {len(phi)} values for {G.n} vertices")
        return
    if phi.effective_separation < k:
        raise SeparationError(f"labeling declares separation {phi.separation}, need {k}")
    bad = separation_violation(G, phi.values, k)
    if bad is not None:
        raise SeparationError(f"vertices {bad[0]} and {bad[1]} share a label within distance {k}")


@dataclass(frozen=True)
class OracleSpec:
    radius: int
    rule: Callable[[CanonicalBall], Any]
    separation: int = 0
    input_alphabet: frozenset | None = None
    output_alphabet: frozenset | None = None
    # Optional fast path for radius-1 rules that only read the root label and
    # the multiset of neighbour labels: star_rule(own, sorted_neighbour_labels).
    star_rule: Callable[[Any, tuple], Any] | None = None
    name: str = ""
    chain: tuple = field(default=(), repr=False)

    def steps(self) -> tuple["OracleSpec", ...]:
        return self.chain or (self,)


@dataclass
class RoundTrace:
    rounds: list = field(default_factory=list)

    @property
    def round_count(self) -> int:
        return len(self.rounds)

    def to_dict(self) -> dict:
        return {"roundCount": self.round_count, "rounds": [list(r) for r in self.rounds]}


def _sorted_nbr_labels(adj_row, values) -> tuple:
    return tuple(sorted((values[y] for y in adj_row), key=symbol_key))


def _evaluate(theta: OracleSpec, G: BoundedDegreeGraph, values: Sequence, targets: Iterable[int], fast: bool, cache: dict) -> dict:
    out = {}
    if theta.chain:
        for x in targets:
            cb = canonicalize(ball(G, x, theta.radius), values)
            key = (id(theta), cb)
            if key not in cache:
                cache[key] = theta.rule(cb)
            out[x] = cache[key]
        return out
    if fast and theta.star_rule is not None and theta.radius == 1:
        for x in targets:
            out[x] = theta.star_rule(values[x], _sorted_nbr_labels(G.adj[x], values))
        return out
    for x in targets:
        cb = canonicalize(ball(G, x, theta.radius), values)
        key = (id(theta), cb)
        if key not in cache:
            cache[key] = theta.rule(cb)
        out[x] = cache[key]
    return out


def _check_input(phi_values: Sequence, theta: OracleSpec) -> None:
    if theta.input_alphabet is None:
        return
    allowed = set(map(symbol_key, theta.input_alphabet))
    for v in phi_values:
        if symbol_key(v) not in allowed:
            raise AlphabetError(f"input symbol {v!r} outside the oracle's input alphabet")


def apply_oracle(G: BoundedDegreeGraph, phi: Labeling, theta: OracleSpec, *, fast: bool = True, trace: RoundTrace | None = None) -> Labeling:
    """Evaluate theta on the canonical labeled ball of every vertex.

    Composite oracles run step by step over the whole graph, which gives the
    same result as evaluating the composite rule on each radius-R ball.
    Pass ``fast=False`` to force every step through canonicalisation.
    """
    if len(phi) != G.n:
        raise StructuralError(f"labeling has {len(phi)} values for {G.n} vertices")
    require_separation(G, phi, theta.separation)
    _check_input(phi.values, theta)
    values = list(phi.values)
    cache = {}
    for step in theta.steps():
        res = _evaluate(step, G, values, range(G.n), fast, cache)
        values = [res[x] for x in range(G.n)]
        if trace is not None:
            trace.rounds.append(tuple(values))
    alph = None if theta.output_alphabet is None else tuple(theta.output_alphabet)
    return Labeling(tuple(values), alph)


def apply_oracle_canonical(G: BoundedDegreeGraph, phi: Labeling, theta: OracleSpec) -> Labeling:
    """Reference route: one canonical radius-R ball per vertex, evaluated by the full rule."""
    if len(phi) != G.n:
        raise StructuralError(f"labeling has {len(phi)} values for {G.n} vertices")
    require_separation(G, phi, theta.separation)
    _check_input(phi.values, theta)
    cache = {}
    out = []
    for x in range(G.n):
        cb = canonicalize(ball(G, x, theta.radius), phi.values)
        if cb not in cache:
            cache[cb] = theta.rule(cb)
        out.append(cache[cb])
    alph = None if theta.output_alphabet is None else tuple(theta.output_alphabet)
    return Labeling(tuple(out), alph)


def _chain_rule(chain: tuple, radius: int):
    def rule(cb: CanonicalBall):
        rb = ball_from_canonical(cb)
        H = rb.graph
        values = list(cb.labels)
        remaining = radius
        cache = {}
        for step in chain:
            remaining -= step.radius
            region = sorted(bfs(H, 0, limit=remaining))
            res = _evaluate(step, H, values, region, True, cache)
            values = [res.get(v) for v in range(H.n)]
        return values[0]

    return rule


def _alphabet_fits(out_alph, in_alph) -> bool:
    if out_alph is None or in_alph is None:
        return True
    return set(map(symbol_key, out_alph)) <= set(map(symbol_key, in_alph))


def compose(*oracles: OracleSpec) -> OracleSpec:
    """Run the oracles one after another; the radius is the sum of radii."""
    if not oracles:
        raise ValueError("compose needs at least one oracle")
    for a, b in zip(oracles, oracles[1:]):
        if not _alphabet_fits(a.output_alphabet, b.input_alphabet):
            raise AlphabetError(f"output alphabet of {a.name or 'oracle'} does not feed {b.name or 'oracle'}")
    chain = tuple(itertools.chain.from_iterable(o.steps() for o in oracles))
    if len(chain) == 1:
        return chain[0]
    radius = sum(o.radius for o in chain)
    return OracleSpec(
        radius=radius,
        rule=_chain_rule(chain, radius),
        separation=oracles[0].separation,
        input_alphabet=oracles[0].input_alphabet,
        output_alphabet=oracles[-1].output_alphabet,
        name="∘".join(o.name or "?" for o in oracles),
        chain=chain,
    )


def parallel(factors: Sequence[OracleSpec], theta: OracleSpec) -> OracleSpec:
    """Oracle reading tuple labels: factor i sees coordinate i, theta sees the tuple of outputs."""
    if not factors:
        raise ValueError("parallel needs at least one factor")
    outs = [f.output_alphabet for f in factors]
    if theta.input_alphabet is not None and all(o is not None for o in outs):
        prod = set(map(symbol_key, itertools.product(*outs)))
        if not prod <= set(map(symbol_key, theta.input_alphabet)):
            raise AlphabetError("theta does not accept the product of the factor outputs")
    radius = max(f.radius for f in factors) + theta.radius
    ins = [f.input_alphabet for f in factors]
    in_alph = frozenset(itertools.product(*ins)) if all(a is not None for a in ins) else None

    def rule(cb: CanonicalBall):
        H = ball_from_canonical(cb).graph
        region = bfs(H, 0, limit=theta.radius)
        cache = {}
        outs = []
        for i, f in enumerate(factors):
            vals = [t[i] if t is not None else None for t in cb.labels]
            remaining = theta.radius + f.radius
            for step in f.steps():
                remaining -= step.radius
                res = _evaluate(step, H, vals, sorted(bfs(H, 0, limit=remaining)), True, cache)
                vals = [res.get(v) for v in range(H.n)]
            outs.append(vals)
        combined = [tuple(o[v] for o in outs) if v in region else None for v in range(H.n)]
        return _evaluate(theta, H, combined, [0], True, cache)[0]

    sep = max(f.separation for f in factors)
    return OracleSpec(radius, rule, sep, in_alph, theta.output_alphabet, name=f"par({','.join(f.name for f in factors)})")


def constant_oracle(value, radius: int = 0) -> OracleSpec:
    return OracleSpec(radius, lambda cb: value, output_alphabet=frozenset([value]), star_rule=(lambda own, nb: value) if radius == 1 else None, name=f"const({value})")


def identity_oracle() -> OracleSpec:
    return OracleSpec(0, lambda cb: cb.labels[0], name="id")


def neighborhood_oracle(fn: Callable[[Any, tuple], Any], *, name: str = "", input_alphabet=None, output_alphabet=None, separation: int = 0) -> OracleSpec:
    """Radius-1 oracle whose output depends on the root label and the multiset of neighbour labels."""

    def rule(cb: CanonicalBall):
        nbrs = tuple(sorted((cb.labels[v] for v in cb.root_neighbors()), key=symbol_key))
        return fn(cb.labels[0], nbrs)

    return OracleSpec(
        1,
        rule,
        separation,
        None if input_alphabet is None else frozenset(input_alphabet),
        None if output_alphabet is None else frozenset(output_alphabet),
        star_rule=fn,
        name=name,
    )


def run_rounds(G: BoundedDegreeGraph, phi: Labeling, oracles: Sequence[OracleSpec], *, trace: bool = False) -> tuple[Labeling, RoundTrace | None]:
    tr = RoundTrace() if trace else None
    out = apply_oracle(G, phi, compose(*oracles), trace=tr)
    return out, tr


def largest_ball(G: BoundedDegreeGraph, r: int) -> int:
    return max((len(bfs(G, x, limit=r)) for x in range(G.n)), default=0)


def compress_labels(G: BoundedDegreeGraph, phi: Labeling, m: int, r: int, *, trace: RoundTrace | None = None) -> Labeling:
    """Shrink an r-separating labeling over {1..n} to one over {1..m}.

    Round j relabels every vertex carrying m+j with the smallest label of
    {1..m} not seen within distance r.
    """
    vals = list(phi.values)
    if any(not isinstance(v, int) or v < 1 for v in vals):
        raise AlphabetError("compress_labels needs positive integer labels")
    if not is_separating(G, vals, r):
        raise SeparationError(f"input labeling is not {r}-separating")
    need = largest_ball(G, r)
    if m < need:
        raise AlphabetError(f"target size {m} is below the largest {r}-ball ({need} vertices)")
    n = max(vals, default=0)
    if phi.alphabet is not None:
        n = max(n, max(phi.alphabet))
    for j in range(1, n - m + 1):
        movers = [x for x in range(G.n) if vals[x] == m + j]
        new = list(vals)
        for x in movers:
            used = {vals[y] for y in bfs(G, x, limit=r) if y != x}
            new[x] = next(i for i in range(1, m + 1) if i not in used)
        vals = new
        if trace is not None:
            trace.rounds.append(tuple(vals))
    return Labeling(tuple(vals), tuple(range(1, m + 1)), r)


def greedy_separating_labeling(G: BoundedDegreeGraph, k: int) -> Labeling:
    """Sequential greedy k-separating labeling over {1..q}, in vertex order."""
    if k < 1:
        raise ValueError("k must be at least 1")
    vals = [0] * G.n
    for x in range(G.n):
        used = {vals[y] for y in bfs(G, x, limit=k) if vals[y]}
        c = 1
        while c in used:
            c += 1
        vals[x] = c
    q = max(vals, default=0)
    return Labeling(tuple(vals), tuple(range(1, q + 1)), k)


def maximal_separated_system(G: BoundedDegreeGraph, phi: Labeling, r: int) -> list[int]:
    """Maximal set with pairwise distances > r, chosen label class by label class."""
    if r < 0:
        raise ValueError("r must be non-negative")
    require_separation(G, phi, 2 * r)
    order = sorted(range(G.n), key=lambda x: (order_key(phi[x]), x))
    chosen = []
    blocked = set()
    for x in order:
        if x in blocked:
            continue
        chosen.append(x)
        blocked.update(bfs(G, x, limit=r))
    return sorted(chosen)


def ball_local_labeling(
    G: BoundedDegreeGraph,
    phi: Labeling,
    centers: Iterable[int],
    r: int,
    rule: Callable[[RootedBall, Labeling, Labeling | None], dict],
    prior: Labeling | None = None,
    blank: Any = None,
) -> Labeling:
    """Label each ball B_r(x), x a center, independently; other vertices get ``blank``.

    ``rule(ball, phi, prior)`` returns a mapping host vertex -> label for
    vertices inside its ball.
    """
    out = [blank] * G.n
    owner = {}
    for x in sorted(centers):
        rb = ball(G, x, r)
        region = set(rb.vertices)
        clash = next((v for v in rb.vertices if v in owner), None)
        if clash is not None:
            raise ContractError(f"balls around {owner[clash]} and {x} overlap at vertex {clash}")
        for v in region:
            owner[v] = x
        for v, lab in rule(rb, phi, prior).items():
            if v not in region:
                raise ContractError(f"rule for center {x} wrote outside its ball at {v}")
            out[v] = lab
    return Labeling(tuple(out))
