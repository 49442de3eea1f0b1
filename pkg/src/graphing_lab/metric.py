"""The compactification metric and the quantitative compactness checks.

For two points the metric is the infimum over radii ``r`` and over
``r``-neighborhood isomorphisms ``phi`` of ``max(1/(r+1), d0(phi))``.
Writing ``m_r`` for the least displacement at radius ``r`` (``inf`` when
the balls are not isomorphic), ``m_r`` is nondecreasing in ``r`` because
an isomorphism restricts to smaller balls.  Hence radius ``r`` can stop the
scan as soon as ``1/(r+1) <= m_r``; every later candidate is at least
``m_r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._parallel import pmap
from .errors import DomainError
from .graphing import ATOMS, BallExplorer, Graphing, RootedBall, ball
from .ground import CIRCLE, Point, PointLike
from .iso import NeighborhoodIso, enumerate_isos, min_displacement_iso

DEFAULT_R_MAX = 64
#: Slack in the stopping rule and in witness updates; far below every tolerance in use.
STOP_TOL = 1e-12


@dataclass(frozen=True)
class MetricResult:
    value_upper: float
    value_lower: float
    resolved: bool
    witness_radius: int | None
    witness_iso: NeighborhoodIso | None = field(default=None, repr=False)
    radii_examined: int = 0

    @property
    def value(self) -> float | None:
        """The distance when resolved, else ``None``."""
        return self.value_upper if self.resolved else None


def evaluate_levels(
    pair_at: Callable[[int], tuple[RootedBall, RootedBall]],
    r_max: int,
    slack: float = 0.0,
) -> MetricResult:
    """Scan radii ``0..r_max`` with the monotone stopping rule.

    ``slack`` bounds the coordinate uncertainty of the balls (limit towers);
    every ``m_r`` is then only known within ``+-slack`` and the result is a
    bracket.
    """
    if r_max < 0:
        raise DomainError("r_max must be >= 0")
    best_upper = math.inf
    best_lower = math.inf
    witness_r: int | None = None
    witness: NeighborhoodIso | None = None
    m_last = 0.0
    for r in range(r_max + 1):
        b1, b2 = pair_at(r)
        iso = min_displacement_iso(b1, b2)
        if iso is None:
            return _closed(best_upper, best_lower, witness_r, witness, r + 1, slack)
        h = 1.0 / (r + 1)
        m = iso.displacement
        cand_upper = max(h, min(1.0, m + slack))
        cand_lower = max(h, m - slack)
        if cand_upper < best_upper - STOP_TOL:
            best_upper, witness_r, witness = cand_upper, r, iso
        best_lower = min(best_lower, cand_lower)
        m_last = m
        if h <= m - slack + STOP_TOL:
            return _closed(best_upper, best_lower, witness_r, witness, r + 1, slack)
    lower = min(best_lower, max(0.0, m_last - slack))
    return MetricResult(best_upper, lower, False, witness_r, witness, r_max + 1)


def _closed(upper, lower, witness_r, witness, examined, slack) -> MetricResult:
    if slack == 0.0 or upper - lower <= STOP_TOL:
        return MetricResult(upper, upper, True, witness_r, witness, examined)
    return MetricResult(upper, lower, False, witness_r, witness, examined)


def compact_distance(
    g: Graphing,
    x: PointLike,
    y: PointLike,
    r_max: int = DEFAULT_R_MAX,
    node_cap: int | None = None,
) -> MetricResult:
    """Compactification distance between two points of a graphing."""
    kw = {} if node_cap is None else {"node_cap": node_cap}
    ex = BallExplorer(g, x, **kw)
    ey = BallExplorer(g, y, **kw)
    return evaluate_levels(lambda r: (ex.ball(r), ey.ball(r)), r_max)


def _distance_from(g: Graphing, center, y: Point, r_max: int) -> MetricResult:
    """Distance from a point or a limit tower to an ordinary point."""
    if isinstance(center, Point):
        return compact_distance(g, center, y, r_max)
    ey = BallExplorer(g, y)
    depth = min(r_max, center.depth)
    return evaluate_levels(lambda r: (center.levels[r], ey.ball(r)), depth, center.residual)


def _root_of(center) -> Point:
    return center if isinstance(center, Point) else center.levels[0].nodes[0]


def _slack_of(center) -> float:
    return 0.0 if isinstance(center, Point) else center.residual


# ---------------------------------------------------------------------------
# c3 check


@dataclass
class C3Report:
    eps: float
    r: int
    delta: float
    requested: int
    tested: int = 0
    passed: int = 0
    attempts: int = 0
    starved: bool = False
    strict: bool = False
    failures: list[tuple[Point, Point, float]] = field(default_factory=list)
    pairs: list[tuple[Point, Point, float, float]] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return not self.starved and self.tested == self.requested and self.passed == self.tested


def c3_delta(eps: float, r: int) -> float:
    """Sufficient closeness ``eps / (1 + r * eps)`` for an ``r``-iso of displacement ``<= eps``."""
    return eps / (1.0 + r * eps)


def _perturb(g: Graphing, x: Point, delta: float, rng: np.random.Generator) -> Point | None:
    kind = g.space.parts[x.part].kind
    if kind == ATOMS:
        return Point(x.part, int(rng.integers(g.space.parts[x.part].n)))
    s = (1.0 - rng.random()) * delta
    if rng.random() < 0.5:
        s = -s
    y = x.coord + s
    if kind == CIRCLE:
        y %= 1.0
        y = 0.0 if y >= 1.0 else y
    elif not 0.0 <= y < 1.0:
        return None
    return Point(x.part, y)


def _c3_pair(args) -> tuple[bool, float, float, float]:
    g, x, y, delta, r, eps, r_max, strict = args
    r_need = min(r_max, max(r, math.ceil(1.0 / delta)))
    res = compact_distance(g, x, y, r_need)
    if res.value_upper > delta + STOP_TOL:
        return False, res.value_upper, math.nan, math.nan
    b1, b2 = ball(g, x, r), ball(g, y, r)
    if not strict:
        iso = min_displacement_iso(b1, b2)
        disp = math.inf if iso is None else iso.displacement
        return True, res.value_upper, disp, disp
    best = math.inf
    for iso in enumerate_isos(b1, b2).isos:
        worst = max(
            0.0
            if g.space.same_point(b1.nodes[i], b2.nodes[j])
            else compact_distance(g, b1.nodes[i], b2.nodes[j], r_max).value_upper
            for i, j in enumerate(iso.mapping)
        )
        best = min(best, worst)
    return True, res.value_upper, best, best


def c3_check(
    g: Graphing,
    eps: float,
    r: int,
    n: int,
    rng: np.random.Generator | int | None = None,
    *,
    strict: bool = False,
    r_max: int = DEFAULT_R_MAX,
    attempts_per_pair: int = 50,
) -> C3Report:
    """Check that every pair at compactification distance ``<= delta`` has an
    ``r``-neighborhood isomorphism of displacement ``<= eps``.

    Pairs are generated by perturbing a lambda-random point by at most
    ``delta`` and accepted when the certified upper bound on their distance
    is ``<= delta``.  Displacement is measured in ``d0``; ``strict=True``
    measures it in the compactification metric instead (upper bounds).
    """
    if eps <= 0 or r < 0 or n < 1:
        raise DomainError("need eps > 0, r >= 0, n >= 1")
    rng = np.random.default_rng(rng)
    delta = c3_delta(eps, r)
    report = C3Report(eps, r, delta, n, strict=strict)
    budget = attempts_per_pair * n
    while report.tested < n and report.attempts < budget:
        block = []
        for _ in range(min(n - report.tested, budget - report.attempts)):
            x = g.space.sample_point(rng)
            y = _perturb(g, x, delta, rng)
            report.attempts += 1
            if y is not None:
                block.append((x, y))
        results = pmap(_c3_pair, [(g, x, y, delta, r, eps, r_max, strict) for x, y in block])
        for (x, y), (accepted, d, disp, _) in zip(block, results):
            if not accepted or report.tested >= n:
                continue
            report.tested += 1
            report.pairs.append((x, y, d, disp))
            if disp <= eps + STOP_TOL:
                report.passed += 1
            else:
                report.failures.append((x, y, disp))
    report.starved = report.tested < n
    return report


# ---------------------------------------------------------------------------
# separation profile and metric balls


def _separation_one(args) -> list[float]:
    g, x, t, r_max = args
    explorer = BallExplorer(g, x)
    best = [math.inf] * (t + 1)
    for y, d in explorer.iter_nodes(t):
        if d == 0:
            continue
        res = compact_distance(g, x, y, r_max)
        best[d] = min(best[d], res.value_lower)
    return best


def separation_profile(
    g: Graphing,
    t: int,
    n: int,
    rng: np.random.Generator | int | None = None,
    r_max: int = DEFAULT_R_MAX,
) -> list[tuple[int, float]]:
    """For ``t' = 1..t`` the least compactification distance between a sampled
    point and another point of its ``t'``-ball (lower bounds when unresolved)."""
    if t < 1 or n < 1:
        raise DomainError("need t >= 1 and n >= 1")
    rng = np.random.default_rng(rng)
    xs = [g.space.sample_point(rng) for _ in range(n)]
    rows = pmap(_separation_one, [(g, x, t, r_max) for x in xs])
    out = []
    running = math.inf
    for tp in range(1, t + 1):
        running = min([running] + [row[tp] for row in rows])
        out.append((tp, running))
    return out


@dataclass(frozen=True)
class BallMeasure:
    """Monte-Carlo estimate of a metric-ball measure with a certified bracket.

    ``estimate`` counts certain hits only; ``upper`` also counts the pairs
    whose bracket straddles the radius.
    """

    estimate: float
    stderr: float
    lower: float
    upper: float
    n: int
    hits: int
    ambiguous: int


def _hit(args) -> int:
    """1 certain hit, 0 certain miss, -1 undecided."""
    g, center, y, rho, r_max = args
    if g.space.base_distance(_root_of(center), y) - _slack_of(center) >= rho:
        return 0
    res = _distance_from(g, center, y, r_max)
    if res.value_upper < rho:
        return 1
    if res.value_lower >= rho:
        return 0
    return -1


def metric_ball_measure(
    g: Graphing,
    center,
    rho: float,
    n: int,
    rng: np.random.Generator | int | None = None,
    r_max: int = DEFAULT_R_MAX,
) -> BallMeasure:
    """Estimate ``lambda{y : d(center, y) < rho}``; ``center`` is a point or a limit tower."""
    if rho <= 0 or n < 1:
        raise DomainError("need rho > 0 and n >= 1")
    if isinstance(center, Point) or not hasattr(center, "levels"):
        center = g.space.point(center)
    rng = np.random.default_rng(rng)
    r_need = min(r_max, math.floor(1.0 / rho) + 1)
    ys = [g.space.sample_point(rng) for _ in range(n)]
    flags = pmap(_hit, [(g, center, y, rho, r_need) for y in ys])
    hits = sum(1 for f in flags if f == 1)
    amb = sum(1 for f in flags if f == -1)
    p = hits / n
    stderr = math.sqrt(p * (1.0 - p) / n)
    return BallMeasure(p, stderr, p, (hits + amb) / n, n, hits, amb)


__all__ = [
    "DEFAULT_R_MAX",
    "BallMeasure",
    "C3Report",
    "MetricResult",
    "c3_check",
    "c3_delta",
    "compact_distance",
    "evaluate_levels",
    "metric_ball_measure",
    "separation_profile",
]
