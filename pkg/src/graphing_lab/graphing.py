"""Graphings generated by measure-preserving partial piecewise translations.

Edges are never stored explicitly.  Every generator is a partial bijection of
the ground space built from translation pieces (continuous parts) or atom
maps (finite parts); it contributes the edges ``x -- g(x)``.  A finite list
of removed and added edges turns null-set modifications such as deleting one
edge of an irrational rotation into first-class data.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DomainError, ResourceError
from .ground import ATOMS, CIRCLE, TAU, GroundSpace, IntervalSet, Point, PointLike

DEFAULT_NODE_CAP = 100_000

_BUCKETS = int(round(1.0 / TAU))
_LINEAR_FIND = 32


@dataclass(frozen=True)
class TranslationPiece:
    """``x -> x + offset`` on ``[lo, hi)`` of a continuous part (mod 1 on circles)."""

    part: int
    lo: float
    hi: float
    offset: float


@dataclass(frozen=True)
class AtomPiece:
    """Injective partial map between atoms of one finite part."""

    part: int
    mapping: tuple[tuple[int, int], ...]


Piece = TranslationPiece | AtomPiece


def _wrap(y: float) -> float:
    y %= 1.0
    return 0.0 if y >= 1.0 else y


@dataclass(frozen=True)
class Generator:
    pieces: tuple[Piece, ...]
    _fwd_atoms: dict = field(init=False, repr=False, compare=False, hash=False)
    _bwd_atoms: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pieces", tuple(self.pieces))
        fwd: dict[tuple[int, int], int] = {}
        bwd: dict[tuple[int, int], int] = {}
        for piece in self.pieces:
            if isinstance(piece, AtomPiece):
                for a, b in piece.mapping:
                    fwd.setdefault((piece.part, a), b)
                    bwd.setdefault((piece.part, b), a)
        object.__setattr__(self, "_fwd_atoms", fwd)
        object.__setattr__(self, "_bwd_atoms", bwd)

    @classmethod
    def rotation(cls, alpha: float, part: int = 0) -> Generator:
        return cls((TranslationPiece(part, 0.0, 1.0, float(alpha) % 1.0),))

    @classmethod
    def atom_map(cls, mapping: dict[int, int] | list[tuple[int, int]], part: int = 0) -> Generator:
        items = sorted(dict(mapping).items())
        return cls((AtomPiece(part, tuple((int(a), int(b)) for a, b in items)),))

    def forward(self, space: GroundSpace, x: Point) -> Point | None:
        if space.parts[x.part].kind == ATOMS:
            b = self._fwd_atoms.get((x.part, x.coord))
            return None if b is None else Point(x.part, b)
        circle = space.parts[x.part].kind == CIRCLE
        for piece in self.pieces:
            if type(piece) is TranslationPiece and piece.part == x.part and piece.lo <= x.coord < piece.hi:
                y = x.coord + piece.offset
                return Point(x.part, _wrap(y) if circle else y)
        return None

    def backward(self, space: GroundSpace, x: Point) -> Point | None:
        if space.parts[x.part].kind == ATOMS:
            a = self._bwd_atoms.get((x.part, x.coord))
            return None if a is None else Point(x.part, a)
        circle = space.parts[x.part].kind == CIRCLE
        for piece in self.pieces:
            if type(piece) is TranslationPiece and piece.part == x.part:
                z = x.coord - piece.offset
                if circle:
                    z = _wrap(z)
                if piece.lo <= z < piece.hi:
                    return Point(x.part, z)
        return None

    def forward_array(
        self, space: GroundSpace, parts: np.ndarray, coords: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        return self._apply_array(space, parts, coords, inverse=False)

    def backward_array(
        self, space: GroundSpace, parts: np.ndarray, coords: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        return self._apply_array(space, parts, coords, inverse=True)

    def _apply_array(self, space, parts, coords, *, inverse):
        defined = np.zeros(coords.shape, dtype=bool)
        out = coords.copy()
        for piece in self.pieces:
            on_part = parts == piece.part
            if isinstance(piece, AtomPiece):
                pairs = [(b, a) for a, b in piece.mapping] if inverse else piece.mapping
                for a, b in pairs:
                    hit = on_part & (coords == a) & ~defined
                    out[hit] = b
                    defined |= hit
                continue
            circle = space.parts[piece.part].kind == CIRCLE
            if inverse:
                src = coords - piece.offset
                if circle:
                    src = np.mod(src, 1.0)
                    src[src >= 1.0] = 0.0
                hit = on_part & ~defined & (src >= piece.lo) & (src < piece.hi)
                out[hit] = src[hit]
            else:
                hit = on_part & ~defined & (coords >= piece.lo) & (coords < piece.hi)
                img = coords + piece.offset
                if circle:
                    img = np.mod(img, 1.0)
                    img[img >= 1.0] = 0.0
                out[hit] = img[hit]
            defined |= hit
        return defined, out

    def is_involution(self, space: GroundSpace) -> bool:
        """True when the generator equals its inverse (checked on piece probes)."""
        for piece in self.pieces:
            if isinstance(piece, AtomPiece):
                for a, b in piece.mapping:
                    if self._fwd_atoms.get((piece.part, b)) != a:
                        return False
                continue
            span = piece.hi - piece.lo
            for t in (0.0, 0.25, 0.5, 0.75, 1.0 - 1e-6):
                x = Point(piece.part, piece.lo + t * span)
                y = self.forward(space, x)
                z = None if y is None else self.forward(space, y)
                if z is None or not space.same_point(x, z):
                    return False
        return True


@dataclass(frozen=True)
class Graphing:
    """Bounded-degree graphing on a ground space.

    Attributes
    ----------
    space : GroundSpace
        Ground probability metric space.
    generators : tuple of Generator
        Partial measure-preserving bijections; edge ``x -- g(x)`` for each.
    degree_bound : int
        Global degree bound ``D``; enforced by :func:`validate`.
    removed_edges, added_edges : tuple of (Point, Point)
        Finite edge exceptions (a null-set modification).
    """

    space: GroundSpace
    generators: tuple[Generator, ...]
    degree_bound: int
    removed_edges: tuple[tuple[Point, Point], ...] = ()
    added_edges: tuple[tuple[Point, Point], ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "removed_edges", tuple((Point(*a), Point(*b)) for a, b in self.removed_edges))
        object.__setattr__(self, "added_edges", tuple((Point(*a), Point(*b)) for a, b in self.added_edges))

    def point(self, x: PointLike, part: int | None = None) -> Point:
        return self.space.point(x, part)

    def neighbors(self, x: PointLike) -> list[Point]:
        return neighbors(self, x)


def _generator_neighbors(g: Graphing, x: Point) -> list[Point]:
    space = g.space
    out: list[Point] = []
    for gen in g.generators:
        for y in (gen.forward(space, x), gen.backward(space, x)):
            if y is None or space.same_point(x, y):
                continue
            for z in out:
                if space.same_point(y, z):
                    break
            else:
                out.append(y)
    return out


def _matches_edge(space: GroundSpace, edge: tuple[Point, Point], x: Point, y: Point) -> bool:
    a, b = edge
    return (space.same_point(a, x) and space.same_point(b, y)) or (
        space.same_point(b, x) and space.same_point(a, y)
    )


def neighbors(g: Graphing, x: PointLike) -> list[Point]:
    """Neighbors of ``x``: generator images and preimages, corrected by the exception lists."""
    return _neighbors(g, g.space.point(x))


def _neighbors(g: Graphing, x: Point) -> list[Point]:
    space = g.space
    out = _generator_neighbors(g, x)
    if g.removed_edges:
        touching = [e for e in g.removed_edges if space.same_point(e[0], x) or space.same_point(e[1], x)]
        if touching:
            out = [y for y in out if not any(_matches_edge(space, e, x, y) for e in touching)]
    for a, b in g.added_edges:
        for here, there in ((a, b), (b, a)):
            if space.same_point(here, x) and not any(space.same_point(there, z) for z in out):
                out.append(there)
    return out


def degree_into(g: Graphing, parts: np.ndarray, coords: np.ndarray, B: IntervalSet) -> np.ndarray:
    """Vectorised ``deg_B(x)`` for arrays of points.

    Mirrors :func:`neighbors` (deduplication at tolerance ``TAU``, self-images
    dropped, exceptions applied) so that Monte-Carlo integrals can run on
    10^6 samples at once.
    """
    space = g.space
    images: list[tuple[np.ndarray, np.ndarray]] = []
    for gen in g.generators:
        for defined, img in (gen.forward_array(space, parts, coords), gen.backward_array(space, parts, coords)):
            valid = defined & ~space.same_array(parts, coords, img)
            for prev_valid, prev in images:
                valid &= ~(prev_valid & space.same_array(parts, prev, img))
            images.append((valid, img))
    deg = np.zeros(coords.shape, dtype=np.int64)
    for valid, img in images:
        deg += valid & B.contains_array(parts, img)
    for edges, sign in ((g.removed_edges, -1), (g.added_edges, 1)):
        for a, b in edges:
            for here, there in ((a, b), (b, a)):
                if B.contains(there):
                    at = (parts == here.part) & space.same_array(parts, coords, np.full_like(coords, here.coord))
                    deg[at] += sign
    return deg


# ---------------------------------------------------------------------------
# rooted balls


@dataclass(frozen=True)
class RootedBall:
    """Induced subgraph ``B(x, r)`` with ground coordinates on every node.

    Nodes are stored in breadth-first order, so ``nodes[0]`` is the root and
    the ball of any smaller radius is a prefix of the node list.
    """

    space: GroundSpace
    nodes: tuple[Point, ...]
    adjacency: tuple[tuple[int, ...], ...]
    dist_from_root: tuple[int, ...]
    radius: int
    root: int = 0

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, nb in enumerate(self.adjacency) for j in nb if i < j]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @property
    def max_degree(self) -> int:
        return max((len(nb) for nb in self.adjacency), default=0)

    def restrict(self, r: int) -> RootedBall:
        """The ball of radius ``r <= radius`` around the same root."""
        if r > self.radius:
            raise DomainError(f"cannot restrict a radius-{self.radius} ball to radius {r}")
        if self.root != 0:
            return _ball_from_edges(self.space, self.nodes, self.adjacency, self.root, r)
        n = sum(1 for d in self.dist_from_root if d <= r)
        adjacency = tuple(tuple(j for j in self.adjacency[i] if j < n) for i in range(n))
        return RootedBall(self.space, self.nodes[:n], adjacency, self.dist_from_root[:n], r)

    def reroot(self, i: int, r: int) -> RootedBall:
        """Ball of radius ``r`` around node ``i``, computed inside this ball.

        Only meaningful when ``B(nodes[i], r)`` lies within this ball, e.g. a
        neighbor of the root with ``r <= radius - 1``.
        """
        return _ball_from_edges(self.space, self.nodes, self.adjacency, i, r)

    def relabel(self, perm: list[int]) -> RootedBall:
        """Same graph with node ``i`` moved to position ``perm[i]``; root stays first if ``perm[0] == 0``."""
        n = self.size
        nodes = [None] * n
        dist = [0] * n
        adj: list[tuple[int, ...]] = [()] * n
        for i in range(n):
            nodes[perm[i]] = self.nodes[i]
            dist[perm[i]] = self.dist_from_root[i]
            adj[perm[i]] = tuple(sorted(perm[j] for j in self.adjacency[i]))
        return RootedBall(self.space, tuple(nodes), tuple(adj), tuple(dist), self.radius, perm[self.root])


def _ball_from_edges(space, nodes, adjacency, root, r) -> RootedBall:
    dist = {root: 0}
    order = [root]
    queue = deque([root])
    while queue:
        i = queue.popleft()
        if dist[i] == r:
            continue
        for j in adjacency[i]:
            if j not in dist:
                dist[j] = dist[i] + 1
                order.append(j)
                queue.append(j)
    pos = {old: new for new, old in enumerate(order)}
    adj = tuple(tuple(sorted(pos[j] for j in adjacency[i] if j in pos)) for i in order)
    return RootedBall(space, tuple(nodes[i] for i in order), adj, tuple(dist[i] for i in order), r)


class BallExplorer:
    """Incremental breadth-first exploration around one point.

    ``ball(r)`` only expands the layers it needs, so evaluating the
    compactification metric radius by radius costs no more than one
    exploration to the final radius.
    """

    def __init__(self, g: Graphing, x: PointLike, node_cap: int = DEFAULT_NODE_CAP):
        x = g.space.point(x)
        self.g = g
        self.node_cap = node_cap
        self.nodes: list[Point] = [x]
        self.dist: list[int] = [0]
        self.adj: list[list[int] | None] = [None]
        self._expanded = 0
        # bucket index, built once the ball outgrows a linear scan
        self._index: dict[tuple[int, int], list[int]] | None = None

    def _key(self, p: Point) -> tuple[int, int]:
        if self.g.space.parts[p.part].kind == ATOMS:
            return (p.part, int(p.coord))
        b = math.floor(p.coord / TAU)
        if self.g.space.parts[p.part].kind == CIRCLE:
            b %= _BUCKETS
        return (p.part, b)

    def _register(self, i: int) -> None:
        if self._index is not None:
            self._index.setdefault(self._key(self.nodes[i]), []).append(i)
        elif len(self.nodes) > _LINEAR_FIND:
            self._index = {}
            for j in range(len(self.nodes)):
                self._index.setdefault(self._key(self.nodes[j]), []).append(j)

    def find(self, p: Point) -> int | None:
        space = self.g.space
        if self._index is None:
            for i, q in enumerate(self.nodes):
                if space.same_point(q, p):
                    return i
            return None
        part, b = self._key(p)
        keys = [(part, b)]
        if space.parts[part].kind != ATOMS:
            span = (b - 1, b + 1)
            if space.parts[part].kind == CIRCLE:
                span = ((b - 1) % _BUCKETS, (b + 1) % _BUCKETS)
            keys += [(part, span[0]), (part, span[1])]
        for key in keys:
            for i in self._index.get(key, ()):
                if space.same_point(self.nodes[i], p):
                    return i
        return None

    def _expand_next(self, limit: int) -> None:
        i = self._expanded
        here = self.dist[i]
        nbrs = []
        for y in _neighbors(self.g, self.nodes[i]):
            j = self.find(y)
            if j is None:
                if here + 1 <= limit and len(self.nodes) >= self.node_cap:
                    raise ResourceError(f"ball exceeds node cap {self.node_cap}")
                j = len(self.nodes)
                self.nodes.append(y)
                self.dist.append(here + 1)
                self.adj.append(None)
                self._register(j)
            nbrs.append(j)
        self.adj[i] = nbrs
        self._expanded += 1

    def discover(self, r: int) -> int:
        """Make every node at distance ``<= r`` known; return how many there are."""
        while self._expanded < len(self.nodes) and self.dist[self._expanded] < r:
            self._expand_next(r)
        return sum(1 for d in self.dist if d <= r)

    def ball(self, r: int) -> RootedBall:
        if r < 0:
            raise DomainError("radius must be >= 0")
        while self._expanded < len(self.nodes) and self.dist[self._expanded] <= r:
            self._expand_next(r)
        n = 0
        while n < len(self.nodes) and self.dist[n] <= r:
            n += 1
        if n > self.node_cap:
            raise ResourceError(f"ball exceeds node cap {self.node_cap}")
        sets: list[set[int]] = [set() for _ in range(n)]
        for i in range(n):
            for j in self.adj[i]:
                if j < n and j != i:
                    sets[i].add(j)
                    sets[j].add(i)
        adjacency = tuple(tuple(sorted(s)) for s in sets)
        return RootedBall(self.g.space, tuple(self.nodes[:n]), adjacency, tuple(self.dist[:n]), r)

    def iter_nodes(self, r: int) -> Iterator[tuple[Point, int]]:
        """Nodes of ``B(x, r)`` with their graph distance, in breadth-first order."""
        i = 0
        while True:
            while i >= len(self.nodes) and self._expanded < len(self.nodes) and self.dist[self._expanded] < r:
                self._expand_next(r)
            if i >= len(self.nodes) or self.dist[i] > r:
                return
            yield self.nodes[i], self.dist[i]
            i += 1


def ball(g: Graphing, x: PointLike, r: int, node_cap: int = DEFAULT_NODE_CAP) -> RootedBall:
    """Rooted ball ``B(x, r)``: breadth-first closure plus all induced edges."""
    return BallExplorer(g, x, node_cap).ball(r)


def graph_distance(g: Graphing, x: PointLike, y: PointLike, cutoff: int) -> int | None:
    """Graph distance if it is at most ``cutoff``; ``None`` means beyond the cutoff.

    Infinite distance (different components) is never certified.
    """
    if cutoff < 0:
        raise DomainError("cutoff must be >= 0")
    y = g.space.point(y)
    explorer = BallExplorer(g, x)
    for r in range(cutoff + 1):
        explorer.discover(r)
        j = explorer.find(y)
        if j is not None and explorer.dist[j] <= r:
            return explorer.dist[j]
        if explorer._expanded == len(explorer.nodes):
            return None
    return None


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def _circle_image(lo: float, hi: float, offset: float) -> list[tuple[float, float]]:
    a = (lo + offset) % 1.0
    b = a + (hi - lo)
    if b <= 1.0 + TAU:
        return [(a, min(b, 1.0))]
    return [(a, 1.0), (0.0, b - 1.0)]


def _overlaps(intervals: list[tuple[float, float]]) -> bool:
    reach = -1.0
    for lo, hi in sorted(iv for iv in intervals if iv[1] - iv[0] > TAU):
        if lo < reach - TAU:
            return True
        reach = max(reach, hi)
    return False


def _breakpoints(g: Graphing) -> list[Point]:
    """Probe points on which degrees are evaluated: piece endpoints, image endpoints, midpoints."""
    probes: list[Point] = []
    for i, part in enumerate(g.space.parts):
        if part.kind == ATOMS:
            probes += [Point(i, a) for a in range(part.n)]
            continue
        cuts = {0.0, 1.0}
        for gen in g.generators:
            for piece in gen.pieces:
                if isinstance(piece, TranslationPiece) and piece.part == i:
                    for t in (piece.lo, piece.hi, piece.lo + piece.offset, piece.hi + piece.offset):
                        cuts.add(t % 1.0 if part.kind == CIRCLE else min(max(t, 0.0), 1.0))
        cuts = sorted(cuts)
        for a, b in zip(cuts, cuts[1:]):
            probes.append(Point(i, a))
            probes.append(Point(i, 0.5 * (a + b)))
    return [p for p in probes if p.coord < 1.0]


def max_degree(g: Graphing) -> int:
    """Largest degree over breakpoint probes, cell midpoints and exception endpoints."""
    probes = _breakpoints(g)
    for a, b in g.removed_edges + g.added_edges:
        probes += [a, b]
    return max((len(neighbors(g, p)) for p in probes), default=0)


def validate(g: Graphing) -> ValidationReport:
    """Check generator bijectivity, fixed points, exceptions and the degree bound."""
    report = ValidationReport()
    space = g.space
    bad = report.violations
    for k, gen in enumerate(g.generators):
        sources: dict[int, list[tuple[float, float]]] = {}
        images: dict[int, list[tuple[float, float]]] = {}
        atom_src: dict[int, list[int]] = {}
        atom_img: dict[int, list[int]] = {}
        for piece in gen.pieces:
            if not 0 <= piece.part < len(space.parts):
                bad.append(f"generator {k}: piece on missing part {piece.part}")
                continue
            kind = space.parts[piece.part].kind
            if isinstance(piece, AtomPiece):
                if kind != ATOMS:
                    bad.append(f"generator {k}: atom piece on continuous part {piece.part}")
                    continue
                n = space.parts[piece.part].n
                for a, b in piece.mapping:
                    if not (0 <= a < n and 0 <= b < n):
                        bad.append(f"generator {k}: atom index out of range in {a}->{b}")
                    if a == b:
                        bad.append(f"generator {k}: fixed point at atom {a} (edge on the diagonal)")
                    atom_src.setdefault(piece.part, []).append(a)
                    atom_img.setdefault(piece.part, []).append(b)
                continue
            if kind == ATOMS:
                bad.append(f"generator {k}: translation piece on atom part {piece.part}")
                continue
            if not (0.0 <= piece.lo < piece.hi <= 1.0):
                bad.append(f"generator {k}: piece [{piece.lo}, {piece.hi}) not a subinterval of [0, 1)")
                continue
            shift = piece.offset % 1.0 if kind == CIRCLE else piece.offset
            if min(abs(shift), abs(1.0 - shift) if kind == CIRCLE else math.inf) < TAU:
                bad.append(f"generator {k}: fixed points on [{piece.lo}, {piece.hi}) (edges on the diagonal)")
            sources.setdefault(piece.part, []).append((piece.lo, piece.hi))
            if kind == CIRCLE:
                images.setdefault(piece.part, []).extend(_circle_image(piece.lo, piece.hi, piece.offset))
            else:
                lo, hi = piece.lo + piece.offset, piece.hi + piece.offset
                if lo < -TAU or hi > 1.0 + TAU:
                    bad.append(f"generator {k}: image [{lo}, {hi}) leaves [0, 1), not measure preserving")
                images.setdefault(piece.part, []).append((lo, hi))
        for part, ivs in sources.items():
            if _overlaps(ivs):
                bad.append(f"generator {k}: bijectivity violated, overlapping source pieces on part {part}")
        for part, ivs in images.items():
            if _overlaps(ivs):
                bad.append(f"generator {k}: bijectivity violated, overlapping image pieces on part {part}")
        for label, table in (("source", atom_src), ("image", atom_img)):
            for part, atoms in table.items():
                if len(set(atoms)) != len(atoms):
                    bad.append(f"generator {k}: bijectivity violated, repeated {label} atom on part {part}")
    if bad:
        return report

    for a, b in g.removed_edges + g.added_edges:
        for p in (a, b):
            try:
                space.check_point(p)
            except DomainError as exc:
                bad.append(f"exception endpoint invalid: {exc}")
    if bad:
        return report
    for a, b in g.removed_edges:
        if not any(space.same_point(b, y) for y in _generator_neighbors(g, a)):
            bad.append(f"removed edge ({a.coord}, {b.coord}) is not an edge of the generators")
    for a, b in g.added_edges:
        if space.same_point(a, b):
            bad.append(f"added edge ({a.coord}, {b.coord}) is a loop")
        elif any(space.same_point(b, y) for y in _generator_neighbors(g, a)):
            bad.append(f"added edge ({a.coord}, {b.coord}) duplicates a generator edge")
    deg = max_degree(g)
    if deg > g.degree_bound:
        bad.append(f"degree bound violated: max degree {deg} > D = {g.degree_bound}")
    return report
