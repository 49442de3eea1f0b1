"""Built-in graphing constructors and the circle-rotation fixtures."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import DomainError, ValidationError
from .graphing import AtomPiece, Generator, Graphing, TranslationPiece, max_degree, neighbors, validate
from .ground import TAU, GroundSpace, Point, PointLike

#: Golden-ratio rotation number ``(sqrt(5) - 1) / 2``.
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _checked(g: Graphing) -> Graphing:
    report = validate(g)
    if not report.valid:
        raise ValidationError("; ".join(report.violations))
    return g


def make_cycle_rotation(alpha: float) -> Graphing:
    """Circle graphing joining ``x`` and ``x + alpha`` (mod 1)."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    gen = Generator.rotation(alpha)
    space = GroundSpace.circle()
    involution = min(abs(2 * alpha - 1.0), abs(2 * alpha % 1.0)) < TAU
    return _checked(Graphing(space, (gen,), 1 if involution else 2, name=f"rotation({alpha!r})"))


def delete_edge(g: Graphing, x: PointLike, y: PointLike) -> Graphing:
    """The graphing with the edge ``xy`` removed."""
    x, y = g.space.point(x), g.space.point(y)
    if not any(g.space.same_point(y, z) for z in neighbors(g, x)):
        raise DomainError(f"({x.coord}, {y.coord}) is not an edge")
    space = g.space
    added = tuple(
        e for e in g.added_edges
        if not ((space.same_point(e[0], x) and space.same_point(e[1], y)) or (space.same_point(e[0], y) and space.same_point(e[1], x)))
    )
    if len(added) != len(g.added_edges):
        return Graphing(g.space, g.generators, g.degree_bound, g.removed_edges, added, g.name)
    return Graphing(g.space, g.generators, g.degree_bound, g.removed_edges + ((x, y),), g.added_edges, g.name)


def add_edge(g: Graphing, x: PointLike, y: PointLike) -> Graphing:
    """The graphing with the extra edge ``xy`` (degree bound still enforced)."""
    x, y = g.space.point(x), g.space.point(y)
    if g.space.same_point(x, y) or any(g.space.same_point(y, z) for z in neighbors(g, x)):
        raise DomainError("edge is a loop or already present")
    return _checked(Graphing(g.space, g.generators, g.degree_bound, g.removed_edges, g.added_edges + ((x, y),), g.name))


def make_finite_graph(edges: Iterable[tuple[int, int]], n: int | None = None) -> Graphing:
    """Finite simple graph on ``atoms(n)`` as a graphing.

    The edge set is split into matchings by greedy proper edge coloring; each
    matching becomes one involution generator.
    """
    edges = [(int(a), int(b)) for a, b in edges]
    if n is None:
        n = 1 + max((max(e) for e in edges), default=0)
    seen: set[frozenset[int]] = set()
    for a, b in edges:
        if a == b:
            raise DomainError(f"loop at node {a}")
        if not (0 <= a < n and 0 <= b < n):
            raise DomainError(f"edge ({a}, {b}) outside nodes 0..{n - 1}")
        if frozenset((a, b)) in seen:
            raise DomainError(f"multi-edge ({a}, {b})")
        seen.add(frozenset((a, b)))
    at_node: dict[int, set[int]] = {}
    classes: list[list[tuple[int, int]]] = []
    for a, b in edges:
        used = at_node.get(a, set()) | at_node.get(b, set())
        c = 0
        while c in used:
            c += 1
        if c == len(classes):
            classes.append([])
        classes[c].append((a, b))
        at_node.setdefault(a, set()).add(c)
        at_node.setdefault(b, set()).add(c)
    gens = []
    for matching in classes:
        mapping = sorted([(a, b) for a, b in matching] + [(b, a) for a, b in matching])
        gens.append(Generator((AtomPiece(0, tuple(mapping)),)))
    degree = max((len(v) for v in at_node.values()), default=0)
    return _checked(Graphing(GroundSpace.atoms(n), tuple(gens), degree, name=f"finite({n})"))


def make_interval_exchange(pieces: Sequence[tuple[float, float, float]]) -> Graphing:
    """Interval graphing of one piecewise translation ``[lo, hi) -> [lo + offset, hi + offset)``.

    Sources and images must each partition ``[0, 1)``.
    """
    if not pieces:
        raise ValidationError("interval exchange needs at least one piece")
    tp = tuple(TranslationPiece(0, float(lo), float(hi), float(off)) for lo, hi, off in pieces)
    for label, ivs in (
        ("source", sorted((p.lo, p.hi) for p in tp)),
        ("image", sorted((p.lo + p.offset, p.hi + p.offset) for p in tp)),
    ):
        cursor = 0.0
        for lo, hi in ivs:
            if abs(lo - cursor) > TAU or hi <= lo:
                raise ValidationError(f"{label} pieces do not partition [0, 1)")
            cursor = hi
        if abs(cursor - 1.0) > TAU:
            raise ValidationError(f"{label} pieces do not partition [0, 1)")
    g = Graphing(GroundSpace.interval(), (Generator(tp),), 2, name="interval_exchange")
    return _checked(g)


def make_union(items: Sequence[tuple[Graphing, float]]) -> Graphing:
    """Disjoint union of graphings with the given mixture weights."""
    space = GroundSpace.union([(g.space, w) for g, w in items])
    gens: list[Generator] = []
    removed, added = [], []
    offset = 0
    for g, _ in items:
        for gen in g.generators:
            shifted = []
            for piece in gen.pieces:
                if isinstance(piece, AtomPiece):
                    shifted.append(AtomPiece(piece.part + offset, piece.mapping))
                else:
                    shifted.append(TranslationPiece(piece.part + offset, piece.lo, piece.hi, piece.offset))
            gens.append(Generator(tuple(shifted)))
        shift = lambda p, o=offset: Point(p.part + o, p.coord)
        removed += [(shift(a), shift(b)) for a, b in g.removed_edges]
        added += [(shift(a), shift(b)) for a, b in g.added_edges]
        offset += len(g.space.parts)
    D = max(g.degree_bound for g, _ in items)
    out = Graphing(space, tuple(gens), D, tuple(removed), tuple(added), name="union")
    return _checked(out)


def p1_point(alpha: float, k: int) -> Point:
    """``k``-th node of the one-way path left at 0 after deleting ``(0, alpha)``."""
    y = (-k * alpha) % 1.0
    return Point(0, 0.0 if y >= 1.0 else y)


def golden_rotation() -> Graphing:
    return make_cycle_rotation(GOLDEN)


def golden_rotation_cut() -> Graphing:
    """Golden rotation with the edge ``(0, alpha)`` deleted."""
    return delete_edge(golden_rotation(), 0.0, GOLDEN)


def k3() -> Graphing:
    return make_finite_graph([(0, 1), (1, 2), (0, 2)], 3)


def _edge_points(g: Graphing, raw) -> tuple[Point, Point]:
    if not isinstance(raw, Sequence) or len(raw) != 2:
        raise ValidationError(f"edge must be a pair of points, got {raw!r}")
    # each endpoint is a bare coordinate or a [part, coord] pair
    return g.space.point(raw[0]), g.space.point(raw[1])


def graphing_from_spec(spec: Mapping[str, Any]) -> Graphing:
    """Build a graphing from a JSON-style description.

    Recognised families: ``rotation`` (``alpha``), ``interval_exchange``
    (``pieces`` as ``[lo, hi, offset]`` triples), ``finite`` (``edges`` and
    optional ``n``) and ``union`` (``components``: list of ``{"spec": ...,
    "weight": w}``).  ``deleted_edges`` and ``added_edges`` are applied after
    construction; ``degree_bound`` overrides the default bound.
    """
    if not isinstance(spec, Mapping) or "family" not in spec:
        raise ValidationError("spec must be an object with a 'family' field")
    family = spec["family"]
    params = spec.get("params", {}) or {}
    try:
        if family == "rotation":
            g = make_cycle_rotation(float(params["alpha"]))
        elif family == "interval_exchange":
            g = make_interval_exchange([tuple(p) for p in params["pieces"]])
        elif family == "finite":
            g = make_finite_graph([tuple(e) for e in params["edges"]], params.get("n"))
        elif family == "union":
            g = make_union([(graphing_from_spec(c["spec"]), float(c["weight"])) for c in params["components"]])
        else:
            raise ValidationError(f"unknown family {family!r}")
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad parameters for family {family!r}: {exc}") from exc
    if spec.get("degree_bound") is not None:
        g = Graphing(g.space, g.generators, int(spec["degree_bound"]), g.removed_edges, g.added_edges, g.name)
    for raw in spec.get("deleted_edges", []) or []:
        g = delete_edge(g, *_edge_points(g, raw))
    for raw in spec.get("added_edges", []) or []:
        g = add_edge(g, *_edge_points(g, raw))
    return _checked(g)


def load_spec(path: str | Path) -> tuple[Graphing, bytes]:
    """Read a JSON graphing description; returns the graphing and the raw file bytes."""
    raw = Path(path).read_bytes()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return graphing_from_spec(data), raw


__all__ = [
    "GOLDEN",
    "add_edge",
    "delete_edge",
    "golden_rotation",
    "golden_rotation_cut",
    "graphing_from_spec",
    "k3",
    "load_spec",
    "make_cycle_rotation",
    "make_finite_graph",
    "make_interval_exchange",
    "make_union",
    "max_degree",
    "p1_point",
]
