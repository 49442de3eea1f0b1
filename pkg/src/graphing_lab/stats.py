"""Sampled and exact checks of the measure-theoretic identities of graphings.

Almost-everywhere statements become 4-sigma verdicts on seeded samples.  On
finite (atom-only) spaces every integral is computed exactly by summing
over atoms, and the reported standard error is 0.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._parallel import pmap
from .errors import DomainError
from .graphing import BallExplorer, Graphing, RootedBall, degree_into
from .ground import IntervalSet, Point, PointLike
from .iso import canonical_key
from .metric import DEFAULT_R_MAX, compact_distance

SIGMAS = 4.0
_EXACT_TOL = 1e-12


@dataclass(frozen=True)
class EstimateReport:
    estimate: float
    stderr: float
    n: int
    passed: bool | None
    lhs: float | None = None
    rhs: float | None = None
    exact: bool = False


def _verdict(gap: float, stderr: float) -> bool:
    return bool(abs(gap) <= max(SIGMAS * stderr, _EXACT_TOL))


def _integrate(
    g: Graphing,
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n: int,
    rng,
    stratified: bool,
) -> tuple[float, float, int, bool]:
    """Mean of ``f`` under lambda: exact on finite spaces, Monte-Carlo otherwise."""
    if g.space.is_finite:
        parts, coords, masses = g.space.atom_table()
        return float(np.dot(masses, f(parts, coords))), 0.0, len(masses), True
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(rng)
    parts, coords = g.space.sample_arrays(n, rng, stratified=stratified)
    vals = np.asarray(f(parts, coords), dtype=float)
    # plain-MC standard error; conservative for stratified draws
    stderr = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return float(vals.mean()), stderr, n, False


def unimodularity_gap(
    g: Graphing,
    A: IntervalSet,
    B: IntervalSet,
    n: int,
    rng: np.random.Generator | int | None = None,
    *,
    stratified: bool = True,
) -> EstimateReport:
    """Estimate ``int_A deg_B - int_B deg_A``; passes when within 4 standard errors of 0."""
    A.validate(g.space)
    B.validate(g.space)

    def both(parts, coords):
        left = A.contains_array(parts, coords) * degree_into(g, parts, coords, B)
        right = B.contains_array(parts, coords) * degree_into(g, parts, coords, A)
        return np.stack([left, right, left - right])

    if g.space.is_finite:
        parts, coords, masses = g.space.atom_table()
        vals = both(parts, coords) @ masses
        return EstimateReport(float(vals[2]), 0.0, len(masses), _verdict(vals[2], 0.0), float(vals[0]), float(vals[1]), True)
    rng = np.random.default_rng(rng)
    parts, coords = g.space.sample_arrays(n, rng, stratified=stratified)
    vals = both(parts, coords).astype(float)
    means = vals.mean(axis=1)
    stderr = float(vals[2].std(ddof=1) / math.sqrt(n))
    return EstimateReport(float(means[2]), stderr, n, _verdict(means[2], stderr), float(means[0]), float(means[1]))


def edge_measure(
    g: Graphing,
    A: IntervalSet,
    B: IntervalSet,
    n: int,
    rng: np.random.Generator | int | None = None,
    *,
    expected: float | None = None,
    stratified: bool = True,
) -> EstimateReport:
    """Estimate ``eta(A x B) = int_A deg_B dlambda``.

    ``passed`` compares against ``expected`` at 4 sigma when given, else is ``None``.
    """
    A.validate(g.space)
    B.validate(g.space)
    mean, stderr, used, exact = _integrate(
        g, lambda p, c: A.contains_array(p, c) * degree_into(g, p, c, B), n, rng, stratified
    )
    passed = None if expected is None else _verdict(mean - expected, stderr)
    return EstimateReport(mean, stderr, used, passed, exact=exact)


def _power_ball_term(args) -> tuple[int, int, int]:
    """``(difference, U-side term, W-side term)`` at one root."""
    g, x, U, W, r = args
    in_u, in_w = U.contains(x), W.contains(x)
    if not (in_u or in_w):
        return 0, 0, 0
    w_count = u_count = 0
    for p, _ in BallExplorer(g, x).iter_nodes(r):
        w_count += W.contains(p)
        u_count += U.contains(p)
    return in_u * w_count - in_w * u_count, in_u * w_count, in_w * u_count


def power_ball_identity(
    g: Graphing,
    U: IntervalSet,
    W: IntervalSet,
    r: int,
    n: int,
    rng: np.random.Generator | int | None = None,
    *,
    stratified: bool = True,
) -> EstimateReport:
    """Estimate ``int_U |W cap B(x,r)| - int_W |U cap B(y,r)|`` (the ``r``-th power graphing identity)."""
    if r < 1:
        raise DomainError("r must be >= 1")
    U.validate(g.space)
    W.validate(g.space)
    if g.space.is_finite:
        parts, coords, masses = g.space.atom_table()
        pts = [Point(int(p), int(c)) for p, c in zip(parts, coords)]
        weights = masses
        exact = True
    else:
        rng = np.random.default_rng(rng)
        parts, coords = g.space.sample_arrays(n, rng, stratified=stratified)
        pts = [g.space.point(Point(int(p), c)) for p, c in zip(parts, coords)]
        weights = np.full(len(pts), 1.0 / len(pts))
        exact = False
    terms = pmap(_power_ball_term, [(g, x, U, W, r) for x in pts])
    arr = np.array(terms, dtype=float)
    gap, lhs, rhs = weights @ arr
    if exact:
        return EstimateReport(float(gap), 0.0, len(pts), _verdict(gap, 0.0), float(lhs), float(rhs), True)
    stderr = float(arr[:, 0].std(ddof=1) / math.sqrt(len(pts)))
    return EstimateReport(float(gap), stderr, len(pts), _verdict(gap, stderr), float(lhs), float(rhs))


# ---------------------------------------------------------------------------
# Benjamini-Schramm statistics


@dataclass(frozen=True)
class BallStats:
    radius: int
    n: int
    histogram: dict[bytes, float]
    seed: int | None = None

    @property
    def classes(self) -> int:
        return len(self.histogram)


def _key_at(args) -> bytes:
    g, x, r = args
    return canonical_key(BallExplorer(g, x).ball(r))


def bs_histogram(g: Graphing, r: int, n: int, rng: np.random.Generator | int | None = None) -> BallStats:
    """Histogram of canonical ``r``-ball classes at ``n`` lambda-random roots."""
    if r < 0 or n < 1:
        raise DomainError("need r >= 0 and n >= 1")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = np.random.default_rng(rng)
    parts, coords = g.space.sample_arrays(n, gen)
    xs = [g.space.point(Point(int(p), c)) for p, c in zip(parts, coords)]
    counts = Counter(pmap(_key_at, [(g, x, r) for x in xs]))
    hist = {k: counts[k] / n for k in sorted(counts)}
    return BallStats(r, n, hist, None if seed is None else int(seed))


def exact_ball_distribution(g: Graphing, r: int) -> dict[bytes, float]:
    """Exact class distribution on a finite space (enumerates every atom)."""
    parts, coords, masses = g.space.atom_table()
    out: dict[bytes, float] = {}
    for p, c, m in zip(parts, coords, masses):
        key = canonical_key(BallExplorer(g, Point(int(p), int(c))).ball(r))
        out[key] = out.get(key, 0.0) + float(m)
    return dict(sorted(out.items()))


def local_equivalence_tv(s1: BallStats, s2: BallStats) -> float:
    """Total-variation distance between two ball-class histograms."""
    if s1.radius != s2.radius:
        raise DomainError(f"radius mismatch: {s1.radius} vs {s2.radius}")
    keys = set(s1.histogram) | set(s2.histogram)
    return 0.5 * math.fsum(abs(s1.histogram.get(k, 0.0) - s2.histogram.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# recurrence and self-density


def recurrence_profile(g: Graphing, A: IntervalSet, x: PointLike, R: int) -> list[tuple[int, int]]:
    """``|V(G_x) cap A cap B(x, r)|`` for ``r = 1..R`` by breadth-first enumeration."""
    A.validate(g.space)
    x = g.space.point(x)
    if not A.contains(x):
        raise DomainError("x must lie in A")
    if R < 1:
        raise DomainError("R must be >= 1")
    per_layer = [0] * (R + 1)
    for p, d in BallExplorer(g, x).iter_nodes(R):
        if A.contains(p):
            per_layer[d] += 1
    out = []
    total = per_layer[0]
    for r in range(1, R + 1):
        total += per_layer[r]
        out.append((r, total))
    return out


@dataclass(frozen=True)
class ProbeResult:
    witness: Point | None
    graph_distance: int | None
    distance: float | None
    explored: int

    @property
    def found(self) -> bool:
        return self.witness is not None


def self_dense_probe(
    g: Graphing,
    x: PointLike,
    eps: float,
    R_explore: int,
    r_max: int = DEFAULT_R_MAX,
) -> ProbeResult:
    """First ``z != x`` of the component (breadth-first, graph radius ``R_explore``)
    with certified compactification distance ``< eps``."""
    if eps <= 0:
        raise DomainError("eps must be > 0")
    x = g.space.point(x)
    explored = 0
    for z, d in BallExplorer(g, x).iter_nodes(R_explore):
        explored += 1
        if d == 0 or g.space.base_distance(x, z) >= eps:
            continue
        res = compact_distance(g, x, z, r_max)
        if res.value_upper < eps:
            return ProbeResult(z, d, res.value_upper, explored)
    return ProbeResult(None, None, None, explored)


def greedy_ball_coloring(b: RootedBall) -> tuple[int, ...]:
    """Proper coloring in breadth-first order; uses at most ``max_degree + 1`` colors."""
    colors = [-1] * b.size
    for i in sorted(range(b.size), key=lambda i: (b.dist_from_root[i], i)):
        used = {colors[j] for j in b.adjacency[i]}
        c = 0
        while c in used:
            c += 1
        colors[i] = c
    return tuple(colors)
