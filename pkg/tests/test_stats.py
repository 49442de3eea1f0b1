import math
from fractions import Fraction

import numpy as np
import pytest

from graphing_lab import (
    GOLDEN,
    DomainError,
    IntervalSet,
    ball,
    bs_histogram,
    edge_measure,
    exact_ball_distribution,
    greedy_ball_coloring,
    local_equivalence_tv,
    make_finite_graph,
    power_ball_identity,
    recurrence_profile,
    self_dense_probe,
    unimodularity_gap,
)
from graphing_lab.stats import BallStats

FULL = IntervalSet.interval(0.0, 1.0)


def arc_overlap(a_lo, a_hi, b_lo, b_hi, shift):
    """lambda{x in [a_lo, a_hi) : x + shift mod 1 in [b_lo, b_hi)} by interval arithmetic."""
    total = 0.0
    for k in (-2, -1, 0, 1, 2):
        lo = max(a_lo + shift + k, b_lo)
        hi = min(a_hi + shift + k, b_hi)
        total += max(0.0, hi - lo)
    return total


def eta_oracle(A, B, shifts):
    return sum(arc_overlap(*A, *B, s) for s in shifts)


def test_eta_half_circle(calpha):
    exact = eta_oracle((0, 0.5), (0.5, 1), (GOLDEN, -GOLDEN))
    assert exact == pytest.approx(0.763932, abs=1e-6)
    rep = edge_measure(calpha, IntervalSet.interval(0, 0.5), IntervalSet.interval(0.5, 1), 10**5, 1, expected=exact)
    assert rep.passed
    assert abs(rep.estimate - exact) <= 4 * rep.stderr + 1e-12


def test_unimodular_half_circle(calpha):
    rep = unimodularity_gap(calpha, IntervalSet.interval(0, 0.5), IntervalSet.interval(0.5, 1), 10**5, 2)
    assert rep.passed
    assert rep.lhs == pytest.approx(0.763932, abs=0.01)


def test_unimodular_k3_exact(tri):
    rep = unimodularity_gap(tri, IntervalSet.atoms([0]), IntervalSet.atoms([1]), 1, 0)
    assert rep.exact
    assert rep.lhs == pytest.approx(1 / 3, abs=1e-15) and rep.rhs == pytest.approx(1 / 3, abs=1e-15)
    assert rep.estimate == 0.0 and rep.passed


def test_unimodular_same_set(cprime):
    A = IntervalSet.interval(0.2, 0.6)
    rep = unimodularity_gap(cprime, A, A, 1000, 3)
    assert rep.estimate == 0.0 and rep.passed


def test_edge_measure_full_and_empty(calpha):
    assert edge_measure(calpha, FULL, FULL, 1000, 4).estimate == 2.0
    assert edge_measure(calpha, IntervalSet.empty(), FULL, 1000, 4).estimate == 0.0


def test_edge_measure_symmetry(cprime):
    A, B = IntervalSet.interval(0.05, 0.3), IntervalSet.interval(0.4, 0.95)
    ab = edge_measure(cprime, A, B, 200_000, 5)
    ba = edge_measure(cprime, B, A, 200_000, 6)
    assert abs(ab.estimate - ba.estimate) <= 4 * math.hypot(ab.stderr, ba.stderr)


def test_power_ball_rotation(calpha):
    U, W = IntervalSet.interval(0, 0.3), IntervalSet.interval(0.3, 1.0)
    rep = power_ball_identity(calpha, U, W, 2, 20_000, 7)
    assert rep.passed
    # exact value over the offsets +-alpha, +-2 alpha
    exact = eta_oracle((0, 0.3), (0.3, 1.0), (GOLDEN, -GOLDEN, 2 * GOLDEN, -2 * GOLDEN))
    assert abs(rep.lhs - exact) <= 0.02


def test_power_ball_k3_exact(tri):
    rep = power_ball_identity(tri, IntervalSet.atoms([0]), IntervalSet.atoms([1, 2]), 1, 1, 0)
    assert rep.exact and rep.lhs == pytest.approx(2 / 3) and rep.rhs == pytest.approx(2 / 3)


def test_power_ball_same_sets(calpha):
    U = IntervalSet.interval(0.1, 0.4)
    assert power_ball_identity(calpha, U, U, 2, 500, 1).estimate == 0.0


def test_power_ball_radius(calpha):
    with pytest.raises(DomainError):
        power_ball_identity(calpha, FULL, FULL, 0, 10, 1)


def test_bs_single_classes(calpha, cprime, tri):
    assert bs_histogram(tri, 1, 100, 1).classes == 1
    a = bs_histogram(calpha, 2, 10_000, 1)
    b = bs_histogram(cprime, 2, 10_000, 2)
    assert a.classes == b.classes == 1
    assert list(a.histogram.values()) == [1.0]
    assert local_equivalence_tv(a, b) == 0.0


def test_bs_deterministic(cprime):
    assert bs_histogram(cprime, 3, 500, 9) == bs_histogram(cprime, 3, 500, 9)


def test_bs_convergence():
    # path on 4 atoms: two ball classes at radius 1 with masses 1/2 and 1/2
    g = make_finite_graph([(0, 1), (1, 2), (2, 3)])
    s1, s2 = bs_histogram(g, 1, 10**5, 1), bs_histogram(g, 1, 10**5, 2)
    assert local_equivalence_tv(s1, s2) <= 0.01
    assert math.isclose(sum(s1.histogram.values()), 1.0, abs_tol=1e-12)


def test_tv_disjoint_supports(calpha, tri):
    assert local_equivalence_tv(bs_histogram(tri, 1, 50, 1), bs_histogram(calpha, 1, 50, 1)) == 1.0


def test_tv_radius_mismatch():
    with pytest.raises(DomainError):
        local_equivalence_tv(BallStats(1, 1, {b"x": 1.0}), BallStats(2, 1, {b"x": 1.0}))


def test_exact_distribution_matches_enumeration():
    g = make_finite_graph([(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (4, 0)])
    dist = exact_ball_distribution(g, 1)
    counts: dict = {}
    from graphing_lab import canonical_key

    for v in range(5):
        k = canonical_key(ball(g, v, 1))
        counts[k] = counts.get(k, Fraction(0)) + Fraction(1, 5)
    assert dist == {k: float(v) for k, v in sorted(counts.items())}


def orbit_count(x, alpha, lo, hi, R):
    return sum(1 for k in range(-R, R + 1) if lo <= (x + k * alpha) % 1.0 < hi)


def test_recurrence_rotation(calpha):
    prof = recurrence_profile(calpha, IntervalSet.interval(0, 0.1), 0.05, 100)
    counts = [c for _, c in prof]
    assert counts == sorted(counts)
    assert counts[-1] == orbit_count(0.05, GOLDEN, 0, 0.1, 100)
    assert abs(counts[-1] - 20) <= 5


def test_recurrence_finite(tri):
    assert recurrence_profile(tri, IntervalSet.atoms([0]), 0, 5) == [(r, 1) for r in range(1, 6)]


def test_recurrence_requires_x_in_a(calpha):
    with pytest.raises(DomainError):
        recurrence_profile(calpha, IntervalSet.interval(0, 0.1), 0.5, 10)


def test_self_dense_examples(calpha, tri):
    found = self_dense_probe(calpha, 0.2, 0.05, 200)
    assert found.found and found.distance < 0.05
    one = self_dense_probe(calpha, 0.2, 0.5, 5)
    assert one.found and one.graph_distance == 1
    assert not self_dense_probe(tri, 0, 0.9, 5).found


def test_greedy_coloring(calpha, tri, cprime):
    assert len(set(greedy_ball_coloring(ball(calpha, 0.3, 2)))) == 2
    assert len(set(greedy_ball_coloring(ball(tri, 0, 1)))) == 3
    rng = np.random.default_rng(3)
    g = make_finite_graph([(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (1, 4)])
    for b in [ball(g, v, r) for v in range(6) for r in range(3)] + [ball(cprime, float(x), 4) for x in rng.random(20)]:
        colors = greedy_ball_coloring(b)
        assert all(colors[i] != colors[j] for i, j in b.edges)
        assert max(colors) <= b.max_degree
