"""Concrete ground probability spaces ``(I, d0, lambda)``.

A :class:`GroundSpace` is a weighted disjoint union of *parts*; each part is
the unit circle ``R/Z``, the unit interval ``[0, 1)`` or a finite set of
equally weighted atoms.  A plain circle is simply a union with one part of
weight 1, so every point carries a part index (0 for non-union spaces).

The base metric ``d0`` is the arc metric on the circle (diameter 1/2), the
absolute difference on the interval, the discrete metric on atoms, and 1
between points of different parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import DomainError, ValidationError

#: Point-identity tolerance used by every downstream module.
TAU = 1e-9

CIRCLE = "circle"
INTERVAL = "interval"
ATOMS = "atoms"
UNION = "union"

_WEIGHT_TOL = 1e-12


class Point(NamedTuple):
    part: int
    coord: float


PointLike = Union[Point, float, int, Sequence[float]]


@dataclass(frozen=True)
class Part:
    kind: str
    n: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (CIRCLE, INTERVAL, ATOMS):
            raise ValidationError(f"unknown part kind {self.kind!r}")
        if self.kind == ATOMS and self.n < 1:
            raise ValidationError("atoms part needs n >= 1")

    @property
    def continuous(self) -> bool:
        return self.kind != ATOMS


@dataclass(frozen=True)
class GroundSpace:
    """Weighted disjoint union of circle, interval and atom parts."""

    parts: tuple[Part, ...]
    weights: tuple[float, ...]
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.parts or len(self.parts) != len(self.weights):
            raise ValidationError("parts and weights must be non-empty and aligned")
        if any(w < 0 for w in self.weights):
            raise ValidationError("union weights must be nonnegative")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValidationError(f"union weights sum to {total!r}, not 1")
        object.__setattr__(self, "_cum", tuple(np.cumsum(self.weights).tolist()))

    # -- constructors -----------------------------------------------------
    @classmethod
    def circle(cls) -> GroundSpace:
        return cls((Part(CIRCLE),), (1.0,))

    @classmethod
    def interval(cls) -> GroundSpace:
        return cls((Part(INTERVAL),), (1.0,))

    @classmethod
    def atoms(cls, n: int) -> GroundSpace:
        return cls((Part(ATOMS, int(n)),), (1.0,))

    @classmethod
    def union(cls, items: Iterable[tuple[GroundSpace, float]]) -> GroundSpace:
        """Disjoint union; nested unions are flattened with multiplied weights."""
        parts: list[Part] = []
        weights: list[float] = []
        for space, w in items:
            for p, pw in zip(space.parts, space.weights):
                parts.append(p)
                weights.append(float(w) * pw)
        return cls(tuple(parts), tuple(weights))

    @property
    def kind(self) -> str:
        if len(self.parts) > 1:
            return UNION
        return self.parts[0].kind

    @property
    def is_finite(self) -> bool:
        return all(p.kind == ATOMS for p in self.parts)

    # -- points -----------------------------------------------------------
    def point(self, coord: PointLike, part: int | None = None) -> Point:
        """Coerce ``coord`` (a float, an atom index, a pair or a Point) to a valid Point."""
        if isinstance(coord, Point):
            p = coord
        elif isinstance(coord, (tuple, list)):
            if len(coord) != 2:
                raise DomainError(f"cannot read a point from {coord!r}")
            p = Point(int(coord[0]), coord[1])
        else:
            p = Point(0 if part is None else int(part), coord)
        self.check_point(p)
        if self.parts[p.part].kind == ATOMS:
            return Point(p.part, int(p.coord))
        return Point(p.part, float(p.coord))

    def check_point(self, p: Point) -> None:
        if not 0 <= p.part < len(self.parts):
            raise DomainError(f"part index {p.part} out of range")
        part = self.parts[p.part]
        if part.kind == ATOMS:
            if int(p.coord) != p.coord or not 0 <= p.coord < part.n:
                raise DomainError(f"atom index {p.coord!r} invalid for atoms({part.n})")
        elif not (0.0 <= p.coord < 1.0) or math.isnan(p.coord):
            raise DomainError(f"coordinate {p.coord!r} outside [0, 1)")

    def base_distance(self, x: Point, y: Point) -> float:
        if x.part != y.part:
            return 1.0
        kind = self.parts[x.part].kind
        if kind == CIRCLE:
            t = abs(x.coord - y.coord)
            return min(t, 1.0 - t)
        if kind == INTERVAL:
            return abs(x.coord - y.coord)
        return 0.0 if x.coord == y.coord else 1.0

    def same_point(self, x: Point, y: Point) -> bool:
        if x.part != y.part:
            return False
        t = abs(x.coord - y.coord)
        kind = self.parts[x.part].kind
        if kind == ATOMS:
            return t == 0
        return t < TAU or (kind == CIRCLE and 1.0 - t < TAU)

    # -- sampling ---------------------------------------------------------
    def sample_point(self, rng: np.random.Generator) -> Point:
        parts, coords = self.sample_arrays(1, rng)
        return self.point(Point(int(parts[0]), coords[0]))

    def sample_arrays(
        self, n: int, rng: np.random.Generator, *, stratified: bool = False
    ) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``n`` points of lambda as ``(parts, coords)`` arrays.

        With ``stratified=True`` one uniform is drawn in each cell
        ``[i/n, (i+1)/n)`` before the inverse-CDF map, which keeps the
        estimator unbiased and never increases its variance.
        """
        if stratified:
            u = (np.arange(n) + rng.random(n)) / n
        else:
            u = rng.random(n)
        return self.from_unit(u)

    def from_unit(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Measure-preserving map from Lebesgue ``[0, 1)`` onto the space."""
        cum = np.asarray(self._cum)
        cum[-1] = 1.0
        parts = np.searchsorted(cum, u, side="right")
        parts = np.minimum(parts, len(self.parts) - 1)
        lo = np.concatenate(([0.0], cum[:-1]))[parts]
        w = np.asarray(self.weights)[parts]
        local = np.clip((u - lo) / np.where(w > 0, w, 1.0), 0.0, np.nextafter(1.0, 0.0))
        coords = local.copy()
        for i, part in enumerate(self.parts):
            if part.kind == ATOMS:
                mask = parts == i
                coords[mask] = np.minimum(np.floor(local[mask] * part.n), part.n - 1)
        return parts.astype(np.int64), coords

    def atom_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All atoms of a finite space as ``(parts, coords, masses)``."""
        if not self.is_finite:
            raise DomainError("atom_table needs a space made of atoms only")
        parts, coords, masses = [], [], []
        for i, (part, w) in enumerate(zip(self.parts, self.weights)):
            for a in range(part.n):
                parts.append(i)
                coords.append(float(a))
                masses.append(w / part.n)
        return np.asarray(parts, dtype=np.int64), np.asarray(coords), np.asarray(masses)

    # -- vectorised helpers -------------------------------------------------
    def distance_array(self, parts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``d0`` between ``(parts, a)`` and ``(parts, b)`` elementwise."""
        out = np.ones_like(a, dtype=float)
        for i, part in enumerate(self.parts):
            mask = parts == i
            if not mask.any():
                continue
            diff = np.abs(a[mask] - b[mask])
            if part.kind == CIRCLE:
                out[mask] = np.minimum(diff, 1.0 - diff)
            elif part.kind == INTERVAL:
                out[mask] = diff
            else:
                out[mask] = (diff != 0).astype(float)
        return out

    def same_array(self, parts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = self.distance_array(parts, a, b)
        return d < TAU

    def measure(self, A: IntervalSet) -> float:
        return measure(self, A)


def base_distance(s: GroundSpace, x: Point, y: Point) -> float:
    """Base metric ``d0(x, y)`` in ``[0, 1]``."""
    s.check_point(x)
    s.check_point(y)
    return s.base_distance(x, y)


def sample_point(s: GroundSpace, rng: np.random.Generator | int | None) -> Point:
    """One point distributed by lambda."""
    return s.sample_point(np.random.default_rng(rng))


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of half-open intervals and atom subsets, tagged by part."""

    intervals: tuple[tuple[int, float, float], ...] = ()
    atom_sets: tuple[tuple[int, frozenset[int]], ...] = ()

    @classmethod
    def interval(cls, lo: float, hi: float, part: int = 0) -> IntervalSet:
        return cls(intervals=((part, float(lo), float(hi)),))

    @classmethod
    def atoms(cls, indices: Iterable[int], part: int = 0) -> IntervalSet:
        return cls(atom_sets=((part, frozenset(int(i) for i in indices)),))

    @classmethod
    def empty(cls) -> IntervalSet:
        return cls()

    @classmethod
    def full(cls, space: GroundSpace) -> IntervalSet:
        out = cls()
        for i, part in enumerate(space.parts):
            if part.kind == ATOMS:
                out = out | cls.atoms(range(part.n), i)
            else:
                out = out | cls.interval(0.0, 1.0, i)
        return out

    def __or__(self, other: IntervalSet) -> IntervalSet:
        return IntervalSet(self.intervals + other.intervals, self.atom_sets + other.atom_sets)

    def validate(self, space: GroundSpace) -> None:
        by_part: dict[int, list[tuple[float, float]]] = {}
        for part, lo, hi in self.intervals:
            if not 0 <= part < len(space.parts) or not space.parts[part].continuous:
                raise ValidationError(f"interval on part {part}, which is not continuous")
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValidationError(f"interval [{lo}, {hi}) not inside [0, 1)")
            by_part.setdefault(part, []).append((lo, hi))
        for part, ivs in by_part.items():
            reach = -1.0
            for lo, hi in sorted(iv for iv in ivs if iv[0] < iv[1]):
                if lo < reach:
                    raise ValidationError(f"overlapping intervals on part {part} near {lo}")
                reach = max(reach, hi)
        seen: dict[int, set[int]] = {}
        for part, atoms in self.atom_sets:
            if not 0 <= part < len(space.parts) or space.parts[part].kind != ATOMS:
                raise ValidationError(f"atom subset on part {part}, which has no atoms")
            if any(not 0 <= a < space.parts[part].n for a in atoms):
                raise ValidationError("atom index out of range")
            if seen.setdefault(part, set()) & atoms:
                raise ValidationError("overlapping atom subsets")
            seen[part] |= atoms

    def contains(self, p: Point) -> bool:
        for part, lo, hi in self.intervals:
            if p.part == part and lo <= p.coord < hi:
                return True
        for part, atoms in self.atom_sets:
            if p.part == part and int(p.coord) in atoms:
                return True
        return False

    def contains_array(self, parts: np.ndarray, coords: np.ndarray) -> np.ndarray:
        out = np.zeros(coords.shape, dtype=bool)
        for part, lo, hi in self.intervals:
            out |= (parts == part) & (coords >= lo) & (coords < hi)
        for part, atoms in self.atom_sets:
            if atoms:
                out |= (parts == part) & np.isin(coords, np.fromiter(atoms, float))
        return out


def measure(s: GroundSpace, A: IntervalSet) -> float:
    """lambda(A): weighted total length plus weighted atom counts."""
    A.validate(s)
    terms = [s.weights[part] * (hi - lo) for part, lo, hi in A.intervals]
    terms += [s.weights[part] * len(atoms) / s.parts[part].n for part, atoms in A.atom_sets]
    return math.fsum(terms)
