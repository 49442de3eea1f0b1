"""Root-preserving isomorphisms between rooted balls.

The search assigns the nodes of the source ball in breadth-first order
(layer, then degree, then coordinate).  Every node after the root has an
already assigned parent, so its candidates are the unassigned neighbors of
the parent's image that agree on layer, degree and refined color.  The
minimum-displacement variant is a branch and bound on the running maximum
of ``d0(z, phi(z))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import DomainError, ResourceError
from .graphing import RootedBall

DEFAULT_ENUMERATION_LIMIT = 10_000
DEFAULT_KEY_BUDGET = 1_000_000
_REFINE_ROUNDS = 2


@dataclass(frozen=True)
class NeighborhoodIso:
    source: RootedBall
    target: RootedBall
    mapping: tuple[int, ...]
    displacement: float

    def image(self, i: int) -> int:
        return self.mapping[i]


class IsoEnumeration(NamedTuple):
    isos: list[NeighborhoodIso]
    truncated: bool


def displacement(b1: RootedBall, b2: RootedBall, mapping: tuple[int, ...] | list[int]) -> float:
    """``max_z d0(z, phi(z))`` for a node mapping."""
    space = b1.space
    return max(space.base_distance(b1.nodes[i], b2.nodes[j]) for i, j in enumerate(mapping))


def _initial_colors(b: RootedBall) -> list[tuple]:
    return [(b.dist_from_root[i], len(b.adjacency[i]), i == b.root) for i in range(b.size)]


def _refine(balls: list[RootedBall], rounds: int) -> list[list[int]]:
    """Color refinement run jointly so that color ids are comparable across balls."""
    colors = [_initial_colors(b) for b in balls]
    table = {c: k for k, c in enumerate(sorted({c for cs in colors for c in cs}))}
    ids = [[table[c] for c in cs] for cs in colors]
    for _ in range(rounds):
        sigs = [
            [(cs[i], tuple(sorted(cs[j] for j in b.adjacency[i]))) for i in range(b.size)]
            for b, cs in zip(balls, ids)
        ]
        table = {s: k for k, s in enumerate(sorted({s for ss in sigs for s in ss}))}
        new = [[table[s] for s in ss] for ss in sigs]
        if len(table) == len({c for cs in ids for c in cs}):
            ids = new
            break
        ids = new
    return ids


class _Plan:
    """Precomputed search order and candidate filters for one pair of balls."""

    def __init__(self, b1: RootedBall, b2: RootedBall):
        if b1.radius != b2.radius:
            raise DomainError(f"radius mismatch: {b1.radius} vs {b2.radius}")
        self.b1, self.b2 = b1, b2
        self.feasible = self._precheck()
        if not self.feasible:
            return
        c1, c2 = _refine([b1, b2], _REFINE_ROUNDS)
        if sorted(c1) != sorted(c2) or c1[b1.root] != c2[b2.root]:
            self.feasible = False
            return
        self.c1, self.c2 = c1, c2
        n = b1.size
        order = sorted(
            range(n),
            key=lambda i: (i != b1.root, b1.dist_from_root[i], len(b1.adjacency[i]), b1.nodes[i]),
        )
        rank = {v: k for k, v in enumerate(order)}
        self.order = order
        self.parent: list[int] = [-1] * n
        self.earlier: list[list[int]] = [[] for _ in range(n)]
        for k, z in enumerate(order):
            prev = [w for w in b1.adjacency[z] if rank[w] < k]
            self.earlier[k] = prev
            if k:
                self.parent[k] = min(prev, key=lambda w: rank[w])
        self.adj2 = [set(nb) for nb in b2.adjacency]

    def _precheck(self) -> bool:
        b1, b2 = self.b1, self.b2
        if b1.size != b2.size or len(b1.edges) != len(b2.edges):
            return False
        prof1 = sorted((b1.dist_from_root[i], len(b1.adjacency[i])) for i in range(b1.size))
        prof2 = sorted((b2.dist_from_root[i], len(b2.adjacency[i])) for i in range(b2.size))
        return prof1 == prof2


def _search(plan: _Plan, mode: str, limit: int = DEFAULT_ENUMERATION_LIMIT):
    """Iterative backtracking.

    mode ``exists``: first iso; ``min``: branch and bound on displacement;
    ``all``: every iso up to ``limit`` (returns ``(list, truncated)``).
    """
    b1, b2 = plan.b1, plan.b2
    space = b1.space
    n = b1.size
    phi = [-1] * n
    inv = [-1] * n
    assigned_nbrs = [0] * n  # per b2 node: how many of its neighbors are already images
    order = plan.order
    root_cost = space.base_distance(b1.nodes[b1.root], b2.nodes[b2.root])
    incumbent = math.inf
    best: list[int] | None = None
    found: list[tuple[tuple[int, ...], float]] = []
    truncated = False

    def assign(z: int, w: int) -> None:
        phi[z] = w
        inv[w] = z
        for u in b2.adjacency[w]:
            assigned_nbrs[u] += 1

    def unassign(z: int) -> None:
        w = phi[z]
        phi[z] = -1
        inv[w] = -1
        for u in b2.adjacency[w]:
            assigned_nbrs[u] -= 1

    def candidates(k: int, running: float) -> list[tuple[float, int]]:
        z = order[k]
        need = plan.earlier[k]
        color = plan.c1[z]
        out = []
        for w in b2.adjacency[phi[plan.parent[k]]]:
            if inv[w] != -1 or plan.c2[w] != color or assigned_nbrs[w] != len(need):
                continue
            adj = plan.adj2[w]
            if any(phi[e] not in adj for e in need):
                continue
            cost = max(running, space.base_distance(b1.nodes[z], b2.nodes[w]))
            if mode == "min" and cost >= incumbent:
                continue
            out.append((cost, w))
        if mode == "min":
            out.sort()
        return out

    assign(order[0], b2.root)
    if n == 1:
        mapping = (b2.root,)
        return _finish(plan, mode, [(mapping, root_cost)], False)

    stack: list[tuple[list[tuple[float, int]], int]] = [(candidates(1, root_cost), 0)]
    while stack:
        k = len(stack)
        cands, pos = stack[-1]
        if phi[order[k]] != -1:
            unassign(order[k])
        if mode == "min":
            while pos < len(cands) and cands[pos][0] >= incumbent:
                pos += 1
        if pos >= len(cands):
            stack.pop()
            continue
        cost, w = cands[pos]
        stack[-1] = (cands, pos + 1)
        assign(order[k], w)
        if k + 1 == n:
            mapping = tuple(phi)
            if mode == "exists":
                return _finish(plan, mode, [(mapping, cost)], False)
            if mode == "all":
                if len(found) >= limit:
                    truncated = True
                    break
                found.append((mapping, cost))
            else:
                incumbent, best = cost, list(phi)
                if incumbent <= root_cost:
                    break
            unassign(order[k])
            continue
        stack.append((candidates(k + 1, cost), 0))
    if mode == "min":
        return _finish(plan, mode, [] if best is None else [(tuple(best), incumbent)], False)
    return _finish(plan, mode, found, truncated)


def _finish(plan: _Plan, mode: str, found, truncated):
    isos = [NeighborhoodIso(plan.b1, plan.b2, m, d) for m, d in found]
    if mode == "all":
        return isos, truncated
    return isos[0] if isos else None


def iso_exists(b1: RootedBall, b2: RootedBall) -> bool:
    """Whether a root-preserving isomorphism ``b1 -> b2`` exists."""
    plan = _Plan(b1, b2)
    return plan.feasible and _search(plan, "exists") is not None


def min_displacement_iso(b1: RootedBall, b2: RootedBall) -> NeighborhoodIso | None:
    """An isomorphism of least displacement, or ``None`` when the balls differ."""
    plan = _Plan(b1, b2)
    if not plan.feasible:
        return None
    return _search(plan, "min")


def enumerate_isos(b1: RootedBall, b2: RootedBall, limit: int = DEFAULT_ENUMERATION_LIMIT) -> IsoEnumeration:
    """All root-preserving isomorphisms, in deterministic order, up to ``limit``."""
    if limit < 1:
        raise DomainError("limit must be >= 1")
    plan = _Plan(b1, b2)
    if not plan.feasible:
        return IsoEnumeration([], False)
    isos, truncated = _search(plan, "all", limit)
    return IsoEnumeration(isos, truncated)


# ---------------------------------------------------------------------------
# canonical keys


def _is_tree(b: RootedBall) -> bool:
    return len(b.edges) == b.size - 1


def _tree_code(b: RootedBall) -> str:
    # rooted-tree canonical string, children sorted; bottom-up over reversed BFS order
    order = sorted(range(b.size), key=lambda i: b.dist_from_root[i])
    code: dict[int, str] = {}
    for v in reversed(order):
        kids = sorted(code[u] for u in b.adjacency[v] if b.dist_from_root[u] > b.dist_from_root[v])
        code[v] = "(" + "".join(kids) + ")"
    return code[b.root]


def _graph_code(b: RootedBall, budget: int) -> tuple:
    """Lexicographically least BFS code over all breadth-first orderings.

    Entry of the node placed at position ``j`` is ``(color, positions of its
    earlier neighbors)``.  Only orderings that place a minimal entry next are
    explored, prefixes worse than the incumbent are cut, and interchangeable
    twins (same neighborhood) are tried once.
    """
    (colors,) = _refine([b], b.size)
    n = b.size
    adj = [set(nb) for nb in b.adjacency]
    best: list | None = None
    steps = 0

    pos = {b.root: 0}
    order = [b.root]
    code: list = [(colors[b.root], ())]

    def entry(v: int) -> tuple:
        return (colors[v], tuple(sorted(pos[w] for w in adj[v] if w in pos)))

    def rec(expanding: int, pending: list[int]) -> None:
        nonlocal best, steps
        steps += 1
        if steps > budget:
            raise ResourceError("canonical key search exceeded its budget")
        while not pending:
            expanding += 1
            if expanding >= len(order):
                if len(order) == n and (best is None or code < best):
                    best = list(code)
                return
            pending = sorted(w for w in adj[order[expanding]] if w not in pos)
        entries = [(entry(v), v) for v in pending]
        low = min(e for e, _ in entries)
        k = len(code)
        if best is not None:
            head = best[:k]
            if code > head or (code == head and low > best[k]):
                return
        tried: list[int] = []
        for e, v in entries:
            if e != low:
                continue
            if any(adj[v] - {u} == adj[u] - {v} for u in tried):
                continue
            tried.append(v)
            pos[v] = len(order)
            order.append(v)
            code.append(e)
            rec(expanding, [w for w in pending if w != v])
            code.pop()
            order.pop()
            del pos[v]

    rec(-1, [])
    return tuple(best)


def canonical_key(b: RootedBall, budget: int = DEFAULT_KEY_BUDGET) -> bytes:
    """Byte string equal for two balls iff they are root-isomorphic (coordinates ignored)."""
    if _is_tree(b):
        return b"T" + _tree_code(b).encode()
    return b"G" + repr(_graph_code(b, budget)).encode()
