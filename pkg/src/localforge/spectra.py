"""Laplacian spectra, restricted operator norms, indicator polynomials and local spectrum estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.special import erf

from .canonical import CanonicalBall, ball_signature
from .errors import ContractError
from .graph import BoundedDegreeGraph, bfs, k_boundary
from .partition import CodeFamily, Partition

TOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    values: tuple
    tolerance: float = TOL
    provenance: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        out = {"values": [round(v, 12) for v in self.values], "tolerance": self.tolerance}
        if self.provenance:
            out["provenance"] = dict(self.provenance)
        return out


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError("empty interval")


def laplacian_matrix(G: BoundedDegreeGraph) -> np.ndarray:
    L = np.zeros((G.n, G.n))
    for x in range(G.n):
        L[x, x] = len(G.adj[x])
        for y in G.adj[x]:
            L[x, y] = -1.0
    return L


def laplacian_spectrum(G: BoundedDegreeGraph) -> Spectrum:
    """All eigenvalues of deg - adjacency, sorted, checked against [0, 2d]."""
    if G.n == 0:
        return Spectrum(())
    vals = np.linalg.eigvalsh(laplacian_matrix(G))
    top = 2 * G.d
    if vals[0] < -TOL or vals[-1] > top + TOL:
        raise ContractError(f"eigenvalues outside [0, {top}]: {vals[0]}, {vals[-1]}")
    return Spectrum(tuple(float(v) for v in np.clip(vals, 0.0, top)))


# ---------------------------------------------------------------- Hausdorff distance


def _points(A) -> np.ndarray:
    vals = np.array(sorted(A.values if isinstance(A, Spectrum) else A), dtype=float)
    if vals.size == 0:
        raise ValueError("empty set")
    return vals


def _sup_to_points(I: Interval, X: np.ndarray) -> float:
    """sup over t in I of the distance from t to the finite set X."""
    cands = [I.lo, I.hi]
    mids = (X[:-1] + X[1:]) / 2
    cands.extend(m for m in mids if I.lo <= m <= I.hi)
    return max(float(np.min(np.abs(X - t))) for t in cands)


def _dist_to_interval(x: float, I: Interval) -> float:
    return max(I.lo - x, 0.0, x - I.hi)


def hausdorff(A, B) -> float:
    """Hausdorff distance between finite sets and closed intervals."""
    if isinstance(A, Interval) and isinstance(B, Interval):
        return max(abs(A.lo - B.lo), abs(A.hi - B.hi))
    if isinstance(A, Interval):
        A, B = B, A
    X = _points(A)
    if isinstance(B, Interval):
        return max(_sup_to_points(B, X), max(_dist_to_interval(x, B) for x in X))
    Y = _points(B)
    D = np.abs(X[:, None] - Y[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


# ---------------------------------------------------------------- restricted norms


@dataclass
class NormReport:
    global_norm: float
    restricted: float
    delta: float | None = None

    @property
    def gap(self) -> float:
        return self.global_norm - self.restricted

    @property
    def gap_bound(self) -> float | None:
        if self.delta is None:
            return None
        return 3 * (1 - math.sqrt(1 - math.sqrt(self.delta)))

    def to_dict(self) -> dict:
        out = {"global": round(self.global_norm, 12), "restricted": round(self.restricted, 12), "gap": round(self.gap, 12)}
        if self.delta is not None:
            out["delta"] = round(self.delta, 12)
            out["bound"] = round(self.gap_bound, 12)
        return out


def _as_poly(P) -> Polynomial:
    if isinstance(P, (Polynomial, Chebyshev)):
        return P.convert(kind=Polynomial)
    return Polynomial(list(P))


def interior(G: BoundedDegreeGraph, H: Iterable[int], l: int = 1) -> list[int]:
    """H minus every vertex within distance l-1 of its boundary, that is H minus its l-boundary."""
    H = frozenset(H)
    return sorted(H - k_boundary(G, H, l))


def restricted_norm(
    G: BoundedDegreeGraph,
    family: CodeFamily | Sequence[Partition] | Partition,
    P,
    *,
    l: int = 1,
    delta: float | None = None,
) -> NormReport:
    """Norm of P(L) globally and on functions supported inside class interiors.

    ``P`` is a coefficient list (constant term first) or a numpy polynomial.
    The restricted norm is the largest singular value of P(L) restricted to
    the columns of one class interior, maximised over classes and members.
    """
    poly = _as_poly(P)
    if poly.degree() > l:
        raise ContractError(f"polynomial degree {poly.degree()} exceeds the separation parameter {l}")
    if isinstance(family, Partition):
        parts = [family]
    elif isinstance(family, CodeFamily):
        parts = family.partitions()
    else:
        parts = list(family)
    vals, vecs = np.linalg.eigh(laplacian_matrix(G))
    pv = poly(vals)
    glob = float(np.max(np.abs(pv))) if G.n else 0.0
    PL = (vecs * pv) @ vecs.T
    best = 0.0
    for part in parts:
        for members in part.classes().values():
            S = interior(G, members, l)
            if not S:
                continue
            block = PL[:, S]
            gram = block.T @ block
            top = float(np.linalg.eigvalsh(gram)[-1])
            best = max(best, math.sqrt(max(top, 0.0)))
    return NormReport(glob, min(best, glob), delta)


# ---------------------------------------------------------------- indicator polynomials


@dataclass
class IndicatorPolynomial:
    index: int
    m: int
    d: int
    center: float
    poly: Chebyshev

    def __call__(self, t):
        return self.poly(t)

    def audit(self, points: int = 10_000) -> dict:
        m = self.m
        t = np.linspace(0.0, 2 * self.d, points)
        y = self.poly(t)
        far = np.abs(t - self.center) >= 1 / m
        near = np.abs(t - self.center) < 1 / (2 * m)
        return {
            "bounded": bool(np.all(y > 0) and np.all(y <= 1 + 1 / m)),
            "farSmall": bool(np.all(y[far] < 1 / m)),
            "peak": bool(np.all((y[near] > 1 - 1 / m) & (y[near] < 1 + 1 / m))),
        }

    def passes(self, points: int = 10_000) -> bool:
        return all(self.audit(points).values())


def _window(center: float, m: int):
    base = 1 / (4 * m)
    half = 3 / (4 * m)
    width = 1 / (10 * m)

    def f(t):
        bump = 0.5 * (erf((t - center + half) / width) - erf((t - center - half) / width))
        return base + (1 - base) * bump

    return f


def indicator_polynomials(m: int, d: int, *, points: int = 10_000, max_degree: int = 4000) -> list[IndicatorPolynomial]:
    """Polynomials P_1..P_{2dm} on [0, 2d] peaking at i/(2dm), certified on a dense grid.

    Each one interpolates a smoothed window at Chebyshev points; the degree
    doubles until the grid audit passes.
    """
    if m < 1 or d < 1:
        raise ValueError("need m >= 1 and d >= 1")
    out = []
    for i in range(1, 2 * d * m + 1):
        center = i / (2 * d * m)
        f = _window(center, m)
        deg = 32
        while True:
            cheb = Chebyshev.interpolate(f, deg, domain=[0, 2 * d])
            cand = IndicatorPolynomial(i, m, d, center, cheb)
            audit = cand.audit(points)
            if all(audit.values()):
                out.append(cand)
                break
            if deg >= max_degree:
                failed = [k for k, ok in audit.items() if not ok]
                raise ContractError(f"indicator polynomial {i} fails {failed} at degree {deg}")
            deg *= 2
    return out


# ---------------------------------------------------------------- local spectrum estimate


def _dirichlet_eigenvalues(cb: CanonicalBall, keep: int) -> list[float]:
    adj = cb.adjacency()
    g = cb.graph()
    depth = bfs(g, 0)
    S = sorted(v for v, dv in depth.items() if dv <= keep)
    pos = {v: k for k, v in enumerate(S)}
    M = np.zeros((len(S), len(S)))
    for v in S:
        M[pos[v], pos[v]] = len(adj[v])
        for y in adj[v]:
            if y in pos:
                M[pos[v], pos[y]] = -1.0
    return [float(x) for x in np.linalg.eigvalsh(M)]


def distributed_spectrum_estimate(balls: Iterable[CanonicalBall], s: int, t: int) -> Spectrum:
    """Union of Laplacian spectra compressed to B_{s-t}(root), over the radius-s balls given.

    Inside radius s-1 every vertex has its full neighbourhood in the ball, so
    the compressed operator agrees with the host graph's one. The result
    depends on the ball set alone.
    """
    if not s > t >= 1:
        raise ContractError("need s > t >= 1")
    chosen = sorted(cb for cb in balls if cb.radius == s)
    vals: list[float] = []
    for cb in chosen:
        vals.extend(_dirichlet_eigenvalues(cb, s - t))
    vals.sort()
    merged: list[float] = []
    for v in vals:
        if not merged or v - merged[-1] > TOL:
            merged.append(v)
    return Spectrum(tuple(merged), TOL, {"radius": s, "margin": t, "ballCount": len(chosen)})


def spectrum_estimate_for(G: BoundedDegreeGraph, s: int, t: int) -> Spectrum:
    return distributed_spectrum_estimate(ball_signature(G, s), s, t)
