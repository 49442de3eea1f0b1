import math

import numpy as np
import pytest

from graphing_lab import (
    GOLDEN,
    DomainError,
    ball,
    c3_check,
    c3_delta,
    compact_distance,
    enumerate_isos,
    metric_ball_measure,
    p1_point,
    separation_profile,
)
from graphing_lab.iso import displacement


def oracle_distance(g, x, y, r_top):
    """min over r <= r_top of max(1/(r+1), min displacement by exhaustive enumeration)."""
    best = math.inf
    for r in range(r_top + 1):
        b1, b2 = ball(g, x, r), ball(g, y, r)
        isos = enumerate_isos(b1, b2).isos
        if not isos:
            break
        m = min(displacement(b1, b2, i.mapping) for i in isos)
        best = min(best, max(1.0 / (r + 1), m))
    return best


def test_rotation_example(calpha):
    res = compact_distance(calpha, 0.1, 0.2, 64)
    assert res.resolved and res.value == pytest.approx(0.1, abs=1e-12)
    assert res.witness_radius == 9
    assert oracle_distance(calpha, 0.1, 0.2, 12) == pytest.approx(res.value, abs=1e-12)


def test_endpoint_vs_interior_is_one(cprime):
    res = compact_distance(cprime, 0.0, 0.4)
    assert res.resolved and res.value == 1.0


@pytest.mark.parametrize("k,a", [(5, 0.01), (3, 0.2), (8, 0.05), (1, 0.3)])
def test_lifted_path_law(cprime, k, a):
    u = p1_point(GOLDEN, k)
    z = (u.coord + a) % 1.0
    res = compact_distance(cprime, u, z)
    assert res.resolved
    assert res.value == pytest.approx(max(1 / (k + 1), a), abs=1e-9)
    assert oracle_distance(cprime, u, z, k + 2) == pytest.approx(res.value, abs=1e-12)


def test_identical_points_unresolved(calpha):
    res = compact_distance(calpha, 0.3, 0.3, 10)
    assert not res.resolved and res.value is None
    assert res.value_lower == 0.0
    assert res.value_upper == pytest.approx(1 / 11)


def test_result_invariants_and_symmetry(calpha, cprime):
    rng = np.random.default_rng(1)
    for g in (calpha, cprime):
        for _ in range(300):
            x, y = rng.random(2)
            if rng.random() < 0.3:
                x = p1_point(GOLDEN, int(rng.integers(0, 15))).coord
            d1, d2 = compact_distance(g, x, y, 32), compact_distance(g, y, x, 32)
            assert d1.value_lower <= d1.value_upper <= 1.0
            assert (d1.value_upper, d1.value_lower, d1.resolved) == (d2.value_upper, d2.value_lower, d2.resolved)
            if d1.resolved:
                d0 = g.space.base_distance(g.space.point(x), g.space.point(y))
                assert d0 <= d1.value + 1e-12
                again = compact_distance(g, x, y, 42)
                assert again.resolved and again.value == d1.value


def test_edges_of_atom_graphings_at_distance_one(tri):
    assert compact_distance(tri, 0, 1).value == 1.0


def test_negative_rmax(calpha):
    with pytest.raises(DomainError):
        compact_distance(calpha, 0.1, 0.2, -1)


def test_c3_delta_arithmetic():
    assert c3_delta(0.25, 3) == pytest.approx(1 / 7)
    assert c3_delta(0.2, 3) == pytest.approx(0.125)


def test_c3_rotation(calpha):
    rep = c3_check(calpha, 0.2, 4, 100, 3)
    assert rep.ok and rep.passed == 100
    assert rep.delta == pytest.approx(0.2 / 1.8)


def test_c3_radius_zero(calpha):
    rep = c3_check(calpha, 0.1, 0, 50, 4)
    assert rep.ok


def test_c3_strict_mode(calpha):
    rep = c3_check(calpha, 0.2, 2, 20, 5, strict=True)
    assert rep.ok and rep.strict


def test_c3_starvation_flag(calpha):
    # with r_max = 2 no pair can be certified below delta ~ 0.036
    rep = c3_check(calpha, 0.05, 8, 5, 6, r_max=2, attempts_per_pair=3)
    assert rep.starved and not rep.ok and rep.tested == 0


def test_c3_atoms_use_identical_pairs(tri):
    rep = c3_check(tri, 0.2, 1, 5, 6)
    assert rep.ok
    assert all(x == y for x, y, _, _ in rep.pairs)


def test_separation_examples(calpha, tri):
    prof = dict(separation_profile(calpha, 2, 30, 2))
    assert prof[1] == pytest.approx(0.3819660113, abs=1e-9)
    assert prof[2] == pytest.approx(0.2360679775, abs=1e-9)
    assert dict(separation_profile(tri, 2, 5, 1))[2] == 1.0


def test_metric_ball_rotation(calpha):
    m = metric_ball_measure(calpha, 0.37, 0.1, 4000, 7)
    assert abs(m.estimate - 0.2) <= 3 * math.sqrt(0.2 * 0.8 / 4000)
    assert m.lower <= m.estimate <= m.upper


def test_metric_ball_endpoint_empty(cprime):
    assert metric_ball_measure(cprime, p1_point(GOLDEN, 1), 0.2, 2000, 8).upper == 0.0


def test_metric_ball_everything(tri, calpha):
    assert metric_ball_measure(calpha, 0.5, 1.5, 200, 9).estimate == 1.0
    assert metric_ball_measure(tri, 1, 1.01, 200, 9).estimate == 1.0
