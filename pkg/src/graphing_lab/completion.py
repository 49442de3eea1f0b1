"""Points of the completion as finite limit towers.

A completion point is represented by a coherent chain of ordinary points
``y_0, y_1, ...`` whose balls of radius ``depth`` are all root-isomorphic,
linked by least-displacement isomorphisms whose displacements follow the
schedule ``c / 2**j``.  The tower keeps the balls of the last chain element
as the limit coordinates; every coordinate is within ``residual`` of its
limit provided the chain continues on schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError
from .graphing import BallExplorer, Graphing, RootedBall
from .ground import Point, PointLike
from .iso import canonical_key, min_displacement_iso
from .metric import DEFAULT_R_MAX, MetricResult, evaluate_levels, metric_ball_measure

DEFAULT_SCAN_BUDGET = 100_000
DEFAULT_SCHEDULE = 0.5
_MAX_OPEN_CHAINS = 32


@dataclass(frozen=True)
class LimitTower:
    """Finite-depth approximation of a point of the completion.

    ``levels[r]`` is a rooted ball of radius ``r``; consecutive levels are
    nested (level ``r + 1`` restricted to radius ``r`` is level ``r``).
    """

    levels: tuple[RootedBall, ...]
    residual: float = 0.0
    chain: tuple[Point, ...] = ()
    link_displacements: tuple[float, ...] = ()
    key: bytes = field(default=b"", repr=False)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def root(self) -> Point:
        return self.levels[0].nodes[0]

    @property
    def top(self) -> RootedBall:
        return self.levels[-1]


def _levels_of(top: RootedBall) -> tuple[RootedBall, ...]:
    return tuple(top.restrict(r) for r in range(top.radius)) + (top,)


def point_tower(g: Graphing, x: PointLike, depth: int) -> LimitTower:
    """An ordinary point lifted to a tower of its own balls (residual 0)."""
    top = BallExplorer(g, x).ball(depth)
    return LimitTower(_levels_of(top), 0.0, (top.nodes[0],), (), canonical_key(top))


@dataclass
class _Chain:
    key: bytes
    points: list[Point]
    balls: list[RootedBall]
    displacements: list[float]


class TowerFailure(DomainError):
    """No coherent chain of the requested depth was found within the scan budget."""

    def __init__(self, message: str, scanned: int, best_length: int):
        super().__init__(message)
        self.scanned = scanned
        self.best_length = best_length


def build_tower(
    g: Graphing,
    points: Iterable[PointLike],
    depth: int,
    *,
    subsequence: bool = True,
    schedule: float = DEFAULT_SCHEDULE,
    budget: int = DEFAULT_SCAN_BUDGET,
) -> LimitTower:
    """Extract a coherent chain from ``points`` and return its limit tower.

    With ``subsequence=True`` the scan may skip points, keeping several open
    chains at once (pigeonhole over ball classes).  With ``subsequence=False``
    the chain must consist of consecutive terms of the sequence; a break
    restarts the chain at the offending term.

    Raises
    ------
    TowerFailure
        If no chain of ``depth + 1`` points is found among the first
        ``budget`` points.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    need = depth + 1
    chains: list[_Chain] = []
    scanned = 0
    best_len = 0
    for raw in points:
        if scanned >= budget:
            break
        scanned += 1
        x = g.space.point(raw)
        top = BallExplorer(g, x).ball(depth)
        key = canonical_key(top)
        extended = False
        for chain in chains:
            if chain.key != key:
                continue
            link = len(chain.displacements)
            iso = min_displacement_iso(chain.balls[-1], top)
            if iso is None or iso.displacement >= schedule / 2**link:
                continue
            chain.points.append(x)
            chain.balls.append(top)
            chain.displacements.append(iso.displacement)
            extended = True
            best_len = max(best_len, len(chain.points))
            if len(chain.points) == need:
                return _finish(chain, schedule)
            break
        best_len = max(best_len, 1)
        if extended:
            continue
        if not subsequence:
            chains = [_Chain(key, [x], [top], [])]
            continue
        chains.append(_Chain(key, [x], [top], []))
        if len(chains) > _MAX_OPEN_CHAINS:
            chains.sort(key=lambda c: len(c.points), reverse=True)
            chains.pop()
    raise TowerFailure(
        f"no coherent chain of {need} points among {scanned} scanned (longest {best_len})",
        scanned,
        best_len,
    )


def _finish(chain: _Chain, schedule: float) -> LimitTower:
    links = len(chain.displacements)
    residual = schedule / 2 ** (links - 1)
    top = chain.balls[-1]
    return LimitTower(
        _levels_of(top),
        residual,
        tuple(chain.points),
        tuple(chain.displacements),
        chain.key,
    )


def tower_distance(t1: LimitTower, t2: LimitTower) -> MetricResult:
    """Compactification distance between two towers, as a bracket."""
    if t1.depth < 1 or t2.depth < 1:
        raise DomainError("towers need depth >= 1")
    depth = min(t1.depth, t2.depth)
    slack = t1.residual + t2.residual
    return evaluate_levels(lambda r: (t1.levels[r], t2.levels[r]), depth, slack)


def closure_neighbors(t: LimitTower) -> list[LimitTower]:
    """Towers of the limit's neighbors, re-rooted inside the top level and one radius shorter."""
    if t.depth < 2:
        raise DomainError("closure_neighbors needs depth >= 2")
    top = t.top
    out = []
    for i in top.adjacency[top.root]:
        sub = top.reroot(i, t.depth - 1)
        out.append(LimitTower(_levels_of(sub), t.residual, (), (), canonical_key(sub)))
    return out


@dataclass(frozen=True)
class SupportVerdict:
    in_support: bool
    radii: tuple[float, ...]
    brackets: tuple[tuple[float, float], ...]
    n: int

    @property
    def label(self) -> str:
        return "in-support" if self.in_support else "off-support"


def support_classify(
    g: Graphing,
    p,
    rho: float,
    n: int,
    rng: np.random.Generator | int | None = None,
    *,
    radii: Iterable[float] | None = None,
    r_max: int = DEFAULT_R_MAX,
) -> SupportVerdict:
    """Statistical membership test for the support of lambda.

    ``p`` is in-support when every tested radius ``rho' <= rho`` (default just
    ``rho``) produces at least one certain hit.  Otherwise the verdict is
    off-support with measure bracket ``[hits/n, (hits + undecided + 3)/n]``
    for each radius.
    """
    if rho <= 0:
        raise DomainError("rho must be > 0")
    tested = tuple(sorted(set(radii or (rho,)), reverse=True))
    if any(r > rho for r in tested):
        raise DomainError("tested radii must be <= rho")
    rng = np.random.default_rng(rng)
    if not isinstance(p, LimitTower):
        p = g.space.point(p)
    brackets = []
    inside = True
    for r in tested:
        m = metric_ball_measure(g, p, r, n, rng, r_max)
        brackets.append((m.lower, min(1.0, m.upper + 3.0 / n)))
        if m.hits == 0:
            inside = False
    return SupportVerdict(inside, tested, tuple(brackets), n)


def tower_rows(t: LimitTower) -> list[dict]:
    """Per-level node table: level, index, part, coordinate, distance, neighbors."""
    rows = []
    for level in t.levels:
        for i, (p, d) in enumerate(zip(level.nodes, level.dist_from_root)):
            rows.append(
                {
                    "level": level.radius,
                    "index": i,
                    "part": p.part,
                    "coordinate": p.coord,
                    "dist_from_root": d,
                    "adjacency": " ".join(str(j) for j in level.adjacency[i]),
                }
            )
    return rows


def approach_sequence(
    alpha: float,
    target: float,
    count: int,
    *,
    start: float = 0.0,
    step_sign: int = -1,
    k_min: int = 1,
    scale: float = DEFAULT_SCHEDULE / 4,
    ratio: float = 0.5,
    k_limit: int = 10**7,
) -> list[tuple[int, float]]:
    """Orbit points ``start + k * step_sign * alpha`` (mod 1) closing in on ``target``.

    The ``j``-th returned pair ``(k, coordinate)`` is the first ``k`` after
    the previous one whose circle distance to ``target`` is below
    ``scale * ratio**j``.  With the defaults, consecutive points are close
    enough to form a chain on the default tower schedule.  For the rotation
    with the edge ``(0, alpha)`` deleted, ``step_sign=-1`` walks the one-way
    path starting at 0.
    """
    if count < 1 or not 0.0 < ratio < 1.0:
        raise DomainError("need count >= 1 and 0 < ratio < 1")
    out: list[tuple[int, float]] = []
    k = k_min
    block = 65_536
    while len(out) < count and k <= k_limit:
        ks = np.arange(k, min(k + block, k_limit + 1), dtype=np.int64)
        ys = np.mod(start + step_sign * ks * alpha, 1.0)
        ys[ys >= 1.0] = 0.0
        gap = np.abs(ys - target)
        gap = np.minimum(gap, 1.0 - gap)
        pos = 0
        while len(out) < count:
            hit = np.flatnonzero(gap[pos:] < scale * ratio ** len(out))
            if hit.size == 0:
                break
            pos += int(hit[0])
            out.append((int(ks[pos]), float(ys[pos])))
            pos += 1
        k = int(ks[-1]) + 1
    if len(out) < count:
        raise DomainError(f"only {len(out)} of {count} approach points found up to k={k_limit}")
    return out


def approach_points(
    g: Graphing,
    start: PointLike,
    target: PointLike,
    count: int,
    *,
    radius: int = 100_000,
    min_distance: int = 0,
    scale: float = DEFAULT_SCHEDULE / 4,
    ratio: float = 0.5,
) -> list[tuple[int, Point]]:
    """Breadth-first walk of the component of ``start`` keeping points that close in on ``target``.

    Same selection rule as :func:`approach_sequence`, but on any graphing;
    returns ``(graph distance from start, point)`` pairs.
    """
    if count < 1 or not 0.0 < ratio < 1.0:
        raise DomainError("need count >= 1 and 0 < ratio < 1")
    target = g.space.point(target)
    out: list[tuple[int, Point]] = []
    for p, d in BallExplorer(g, start).iter_nodes(radius):
        if d < min_distance:
            continue
        if g.space.base_distance(p, target) < scale * ratio ** len(out):
            out.append((d, p))
            if len(out) == count:
                return out
    raise DomainError(f"only {len(out)} of {count} approach points within graph radius {radius}")
