"""Batch command-line front end.

Every subcommand loads a graphing description (``--spec``), runs one
operation and writes a table as CSV or JSON.  Output starts with a
provenance block (spec hash, seed, version, all parameters) and contains no
timestamps, so identical invocations give byte-identical files.

Exit status: 0 success, 1 a verification check failed, 2 invalid input,
3 resource cap exceeded, 4 unresolved distance with ``--require-resolved``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .completion import (
    DEFAULT_SCAN_BUDGET,
    approach_points,
    build_tower,
    closure_neighbors,
    support_classify,
    tower_rows,
)
from .errors import DomainError, ResourceError, ValidationError
from .families import load_spec
from .graphing import Graphing, ball, validate
from .ground import GroundSpace, IntervalSet, Point
from .metric import DEFAULT_R_MAX, c3_check, compact_distance, separation_profile
from .stats import (
    bs_histogram,
    local_equivalence_tv,
    power_ball_identity,
    recurrence_profile,
    self_dense_probe,
    unimodularity_gap,
)

EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_RESOURCE = 3
EXIT_UNRESOLVED = 4

STOCHASTIC = {
    "check-unimodular",
    "check-c3",
    "check-power-ball",
    "bs-stats",
    "compare-local",
    "separation",
    "support",
}


class _Outcome:
    """Rows plus optional extra metadata and a status code."""

    def __init__(self, columns: Sequence[str], rows: list[dict], meta: dict | None = None, status: int = 0):
        self.columns = list(columns)
        self.rows = rows
        self.meta = meta or {}
        self.status = status


# ---------------------------------------------------------------------------
# argument parsing helpers


def parse_point(space: GroundSpace, text: str) -> Point:
    """``coord`` or ``part/coord``."""
    part, _, coord = text.rpartition("/")
    try:
        return space.point((int(part) if part else 0, float(coord)))
    except ValueError as exc:
        raise ValidationError(f"cannot read point {text!r}: {exc}") from exc


def parse_set(text: str) -> IntervalSet:
    """Semicolon-separated ``[part/]lo:hi`` intervals and ``[part/]@i,j,...`` atom sets."""
    out = IntervalSet.empty()
    for item in filter(None, (t.strip() for t in text.split(";"))):
        part_s, _, body = item.rpartition("/")
        part = int(part_s) if part_s else 0
        try:
            if body.startswith("@"):
                out = out | IntervalSet.atoms((int(a) for a in body[1:].split(",") if a), part)
            else:
                lo, hi = body.split(":")
                out = out | IntervalSet.interval(float(lo), float(hi), part)
        except ValueError as exc:
            raise ValidationError(f"cannot read set {item!r}") from exc
    return out


def format_set(A: IntervalSet) -> str:
    items = [f"{p}/{lo!r}:{hi!r}" for p, lo, hi in A.intervals]
    items += [f"{p}/@" + ",".join(str(a) for a in sorted(atoms)) for p, atoms in A.atom_sets]
    return ";".join(items)


def _random_box(space: GroundSpace, rng: np.random.Generator) -> IntervalSet:
    """A random interval (or atom subset) on a random part."""
    part = int(rng.integers(len(space.parts)))
    spec = space.parts[part]
    if spec.continuous:
        lo, hi = sorted(rng.random(2))
        return IntervalSet.interval(float(lo), float(hi), part)
    chosen = [i for i in range(spec.n) if rng.random() < 0.5]
    return IntervalSet.atoms(chosen, part)


def _num(x: float) -> Any:
    """JSON-safe number (infinities become strings)."""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


# ---------------------------------------------------------------------------
# subcommands


def cmd_metric(g: Graphing, a) -> _Outcome:
    x, y = parse_point(g.space, a.x), parse_point(g.space, a.y)
    res = compact_distance(g, x, y, a.rmax)
    row = {
        "x_part": x.part,
        "x": x.coord,
        "y_part": y.part,
        "y": y.coord,
        "value_lower": res.value_lower,
        "value_upper": res.value_upper,
        "resolved": res.resolved,
        "witness_radius": res.witness_radius,
        "radii_examined": res.radii_examined,
    }
    status = EXIT_UNRESOLVED if a.require_resolved and not res.resolved else 0
    return _Outcome(row, [row], status=status)


def cmd_ball(g: Graphing, a) -> _Outcome:
    b = ball(g, parse_point(g.space, a.x), a.r)
    cols = ["index", "part", "coordinate", "dist_from_root", "degree", "adjacency"]
    rows = [
        {
            "index": i,
            "part": p.part,
            "coordinate": p.coord,
            "dist_from_root": b.dist_from_root[i],
            "degree": len(b.adjacency[i]),
            "adjacency": " ".join(map(str, b.adjacency[i])),
        }
        for i, p in enumerate(b.nodes)
    ]
    return _Outcome(cols, rows, {"nodes": b.size, "edges": len(b.edges)})


_ESTIMATE_COLS = ["A", "B", "lhs", "rhs", "gap", "stderr", "n", "exact", "passed"]


def _estimate_row(A: IntervalSet, B: IntervalSet, rep) -> dict:
    return {
        "A": format_set(A),
        "B": format_set(B),
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "gap": rep.estimate,
        "stderr": rep.stderr,
        "n": rep.n,
        "exact": rep.exact,
        "passed": rep.passed,
    }


def _set_pairs(g: Graphing, a, first: str, second: str, rng: np.random.Generator) -> list[tuple[IntervalSet, IntervalSet]]:
    s1, s2 = getattr(a, first), getattr(a, second)
    if s1 is not None and s2 is not None:
        return [(parse_set(s1), parse_set(s2))]
    if s1 is not None or s2 is not None:
        raise ValidationError(f"give both --{first} and --{second}, or --random")
    return [(_random_box(g.space, rng), _random_box(g.space, rng)) for _ in range(a.random)]


def cmd_check_unimodular(g: Graphing, a) -> _Outcome:
    rng = np.random.default_rng(a.seed)
    rows = []
    for A, B in _set_pairs(g, a, "A", "B", rng):
        rows.append(_estimate_row(A, B, unimodularity_gap(g, A, B, a.n, rng)))
    return _Outcome(_ESTIMATE_COLS, rows, status=0 if all(r["passed"] for r in rows) else EXIT_FAILED)


def cmd_check_power_ball(g: Graphing, a) -> _Outcome:
    rng = np.random.default_rng(a.seed)
    rows = []
    for U, W in _set_pairs(g, a, "U", "W", rng):
        rows.append(_estimate_row(U, W, power_ball_identity(g, U, W, a.r, a.n, rng)))
    cols = ["r"] + _ESTIMATE_COLS
    rows = [{"r": a.r, **row} for row in rows]
    return _Outcome(cols, rows, status=0 if all(r["passed"] for r in rows) else EXIT_FAILED)


def cmd_check_c3(g: Graphing, a) -> _Outcome:
    rep = c3_check(g, a.eps, a.r, a.n, a.seed, strict=a.strict, r_max=a.rmax)
    row = {
        "eps": rep.eps,
        "r": rep.r,
        "delta": rep.delta,
        "requested": rep.requested,
        "tested": rep.tested,
        "passed": rep.passed,
        "attempts": rep.attempts,
        "starved": rep.starved,
        "strict": rep.strict,
        "ok": rep.ok,
    }
    fails = [{"x": x.coord, "y": y.coord, "displacement": d} for x, y, d in rep.failures]
    return _Outcome(row, [row], {"failures": fails} if fails else {}, 0 if rep.ok else EXIT_FAILED)


def _histogram_rows(stats) -> list[dict]:
    rows = []
    for i, (key, freq) in enumerate(stats.histogram.items()):
        rows.append(
            {
                "class": i,
                "frequency": freq,
                "stderr": math.sqrt(freq * (1.0 - freq) / stats.n),
                "key": key.decode("ascii"),
            }
        )
    return rows


def cmd_bs_stats(g: Graphing, a) -> _Outcome:
    stats = bs_histogram(g, a.r, a.n, a.seed)
    return _Outcome(["class", "frequency", "stderr", "key"], _histogram_rows(stats), {"classes": stats.classes})


def cmd_compare_local(g: Graphing, a) -> _Outcome:
    other, _ = load_spec(a.spec2)
    seeds = np.random.SeedSequence(a.seed).spawn(2)
    s1 = bs_histogram(g, a.r, a.n, np.random.default_rng(seeds[0]))
    s2 = bs_histogram(other, a.r, a.n, np.random.default_rng(seeds[1]))
    row = {"r": a.r, "n": a.n, "classes_1": s1.classes, "classes_2": s2.classes, "tv": local_equivalence_tv(s1, s2)}
    return _Outcome(row, [row])


def cmd_separation(g: Graphing, a) -> _Outcome:
    prof = separation_profile(g, a.t, a.n, a.seed, a.rmax)
    return _Outcome(["t", "epsilon"], [{"t": t, "epsilon": e} for t, e in prof])


def cmd_recurrence(g: Graphing, a) -> _Outcome:
    A = parse_set(a.A)
    prof = recurrence_profile(g, A, parse_point(g.space, a.x), a.R)
    return _Outcome(["r", "count"], [{"r": r, "count": c} for r, c in prof])


def cmd_self_dense(g: Graphing, a) -> _Outcome:
    res = self_dense_probe(g, parse_point(g.space, a.x), a.eps, a.R, a.rmax)
    row = {
        "found": res.found,
        "witness_part": None if res.witness is None else res.witness.part,
        "witness": None if res.witness is None else res.witness.coord,
        "graph_distance": res.graph_distance,
        "distance_upper": res.distance,
        "explored": res.explored,
    }
    return _Outcome(row, [row])


def _tower_from_args(g: Graphing, a):
    start = parse_point(g.space, a.start)
    target = parse_point(g.space, a.target)
    pts = approach_points(
        g, start, target, a.depth + 1, radius=a.walk_radius, min_distance=a.min_distance if a.min_distance is not None else a.depth + 1
    )
    return build_tower(g, [p for _, p in pts], a.depth, subsequence=False, budget=DEFAULT_SCAN_BUDGET), pts


def cmd_compactify_trace(g: Graphing, a) -> _Outcome:
    tower, pts = _tower_from_args(g, a)
    cols = ["level", "index", "part", "coordinate", "dist_from_root", "adjacency"]
    meta = {
        "residual": tower.residual,
        "chain_graph_distances": [d for d, _ in pts],
        "chain": [p.coord for p in tower.chain],
        "link_displacements": list(tower.link_displacements),
        "closure_neighbors": len(closure_neighbors(tower)) if tower.depth >= 2 else None,
    }
    return _Outcome(cols, tower_rows(tower), meta)


def cmd_support(g: Graphing, a) -> _Outcome:
    if (a.x is None) == (a.target is None):
        raise ValidationError("give exactly one of --x or --target")
    if a.x is not None:
        center = parse_point(g.space, a.x)
        label = a.x
    else:
        center, _ = _tower_from_args(g, a)
        label = f"tower->{a.target}"
    v = support_classify(g, center, a.rho, a.n, a.seed, r_max=a.rmax)
    rows = [
        {"center": label, "rho": r, "lower": lo, "upper": hi, "n": v.n, "verdict": v.label}
        for r, (lo, hi) in zip(v.radii, v.brackets)
    ]
    return _Outcome(["center", "rho", "lower", "upper", "n", "verdict"], rows)


def cmd_validate(g: Graphing, a) -> _Outcome:
    rep = validate(g)
    rows = [{"valid": rep.valid, "violation": v} for v in rep.violations] or [{"valid": True, "violation": ""}]
    return _Outcome(["valid", "violation"], rows, status=0 if rep.valid else EXIT_INVALID)


# ---------------------------------------------------------------------------
# parser and driver


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="JSON graphing description")
    common.add_argument("--seed", type=int, help="64-bit seed (required for sampled commands)")
    common.add_argument("--rmax", type=int, default=DEFAULT_R_MAX, help="largest radius examined by the metric")
    common.add_argument("--n", type=int, default=10_000, help="sample count")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="graphing-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"graphing-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("metric", cmd_metric, "compactification distance between two points")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--require-resolved", action="store_true")

    sp = add("ball", cmd_ball, "dump the rooted r-ball of a point")
    sp.add_argument("--x", required=True)
    sp.add_argument("--r", type=int, required=True)

    for name, fn, s1, s2, help_ in (
        ("check-unimodular", cmd_check_unimodular, "A", "B", "edge-measure symmetry check"),
        ("check-power-ball", cmd_check_power_ball, "U", "W", "r-th power graphing identity check"),
    ):
        sp = add(name, fn, help_)
        sp.add_argument(f"--{s1}", help="set, e.g. '0:0.5' or '1/@0,2'")
        sp.add_argument(f"--{s2}")
        sp.add_argument("--random", type=int, default=20, help="number of random set pairs when none given")
        if name == "check-power-ball":
            sp.add_argument("--r", type=int, required=True)

    sp = add("check-c3", cmd_check_c3, "uniform near-isomorphism of close points")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--strict", action="store_true", help="measure displacement in the compactification metric")

    sp = add("bs-stats", cmd_bs_stats, "histogram of r-ball classes")
    sp.add_argument("--r", type=int, required=True)

    sp = add("compare-local", cmd_compare_local, "total variation between two ball-class histograms")
    sp.add_argument("--spec2", required=True)
    sp.add_argument("--r", type=int, required=True)

    sp = add("separation", cmd_separation, "least distance to points within graph distance t'")
    sp.add_argument("--t", type=int, required=True)

    sp = add("recurrence", cmd_recurrence, "visits of a set along growing balls")
    sp.add_argument("--A", required=True)
    sp.add_argument("--x", required=True)
    sp.add_argument("--R", type=int, required=True)

    sp = add("self-dense", cmd_self_dense, "search the component for a close point")
    sp.add_argument("--x", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--R", type=int, required=True)

    def tower_args(sp, required):
        sp.add_argument("--start", default="0", help="walk start point")
        sp.add_argument("--target", required=required, help="point the chain approaches")
        sp.add_argument("--depth", type=int, default=10)
        sp.add_argument("--walk-radius", type=int, default=100_000)
        sp.add_argument("--min-distance", type=int, help="skip points this close to the start (default depth+1)")

    sp = add("compactify-trace", cmd_compactify_trace, "build a limit tower and dump its levels")
    tower_args(sp, True)

    sp = add("support", cmd_support, "classify a point or limit tower as in or off the support")
    sp.add_argument("--x")
    sp.add_argument("--rho", type=float, required=True)
    tower_args(sp, False)

    sp = add("validate", cmd_validate, "check a graphing description")
    return p


def _params(a) -> dict:
    skip = {"func", "spec", "out", "format"}
    return {k: v for k, v in sorted(vars(a).items()) if k not in skip}


def render(outcome: _Outcome, provenance: dict, fmt: str) -> str:
    if fmt == "json":
        rows = [{c: _num(r.get(c)) for c in outcome.columns} for r in outcome.rows]
        doc = {"provenance": provenance, "meta": outcome.meta, "columns": outcome.columns, "rows": rows}
        return json.dumps(doc, indent=2, sort_keys=False, default=_num) + "\n"
    buf = io.StringIO()
    for k, v in provenance.items():
        buf.write(f"# {k}: {json.dumps(v, sort_keys=True)}\n")
    for k, v in outcome.meta.items():
        buf.write(f"# {k}: {json.dumps(v, default=_num)}\n")
    w = csv.DictWriter(buf, fieldnames=outcome.columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in outcome.rows:
        w.writerow({c: "" if r.get(c) is None else r.get(c) for c in outcome.columns})
    return buf.getvalue()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.command in STOCHASTIC and a.seed is None:
        parser.error(f"{a.command} needs --seed")
    if a.seed is not None and not 0 <= a.seed < 2**64:
        parser.error("--seed must be a 64-bit unsigned integer")
    try:
        g, raw = load_spec(a.spec)
        outcome = a.func(g, a)
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    provenance = {
        "tool": "graphing-lab",
        "version": __version__,
        "command": a.command,
        "spec_sha256": hashlib.sha256(raw).hexdigest(),
        "seed": a.seed,
        "params": _params(a),
    }
    text = render(outcome, provenance, a.format)
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return outcome.status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
