import json

import numpy as np
import pytest

from graphing_lab import (
    GOLDEN,
    DomainError,
    GroundSpace,
    Graphing,
    IntervalSet,
    ValidationError,
    add_edge,
    ball,
    bs_histogram,
    delete_edge,
    golden_rotation,
    graphing_from_spec,
    load_spec,
    local_equivalence_tv,
    make_cycle_rotation,
    make_finite_graph,
    make_interval_exchange,
    make_union,
    neighbors,
    p1_point,
    validate,
)


def coords(points):
    return sorted(p.coord for p in points)


def test_rotation_neighbors():
    g = make_cycle_rotation(0.6180339887)
    assert coords(neighbors(g, 0.0)) == pytest.approx([0.3819660113, 0.6180339887], abs=1e-12)
    assert g.degree_bound == 2


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
def test_rotation_domain(alpha):
    with pytest.raises(DomainError):
        make_cycle_rotation(alpha)


def test_rational_rotations():
    third = make_cycle_rotation(1 / 3)
    assert ball(third, 0.2, 2).size == 3
    half = make_cycle_rotation(0.5)
    assert half.degree_bound == 1
    assert coords(neighbors(half, 0.1)) == pytest.approx([0.6])


def test_delete_edge(calpha):
    g = delete_edge(calpha, 0.0, GOLDEN)
    assert coords(neighbors(g, 0.0)) == pytest.approx([1 - GOLDEN])
    assert coords(neighbors(g, GOLDEN)) == pytest.approx([2 * GOLDEN - 1])
    with pytest.raises(DomainError):
        delete_edge(g, 0.0, GOLDEN)
    with pytest.raises(DomainError):
        delete_edge(calpha, 0.0, 0.5)


def test_add_then_delete_restores(calpha):
    with pytest.raises(ValidationError):
        add_edge(calpha, 0.1, 0.2)
    roomy = Graphing(calpha.space, calpha.generators, 3)
    g = add_edge(roomy, 0.1, 0.2)
    assert len(neighbors(g, 0.1)) == 3
    with pytest.raises(DomainError):
        add_edge(g, 0.1, 0.2)
    h = delete_edge(g, 0.2, 0.1)
    assert h.added_edges == () and h.removed_edges == ()


def test_p1_points(cprime):
    for k in range(1, 6):
        assert cprime.space.same_point(p1_point(GOLDEN, k), ball(cprime, 0.0, k).nodes[-1])


def test_finite_graph_matchings():
    k3 = make_finite_graph([(0, 1), (1, 2), (0, 2)])
    assert len(k3.generators) == 3
    assert all(len(g.pieces[0].mapping) == 2 for g in k3.generators)
    assert all(gen.is_involution(k3.space) for gen in k3.generators)
    assert len(make_finite_graph([(0, 1)]).generators) == 1
    empty = make_finite_graph([], 4)
    assert empty.generators == () and all(neighbors(empty, i) == [] for i in range(4))


def test_finite_graph_coloring_bound():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = 10
        edges = {tuple(sorted(rng.choice(n, 2, replace=False).tolist())) for _ in range(15)}
        g = make_finite_graph(sorted(edges), n)
        assert len(g.generators) <= 2 * g.degree_bound - 1
        for v in range(n):
            want = sorted({b for a, b in edges if a == v} | {a for a, b in edges if b == v})
            assert coords(neighbors(g, v)) == want


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 1), (0, 1)]])
def test_finite_graph_rejects(edges):
    with pytest.raises(DomainError):
        make_finite_graph(edges, 3)


def test_interval_exchange_swap():
    g = make_interval_exchange([(0.0, 0.4, 0.6), (0.4, 1.0, -0.4)])
    assert coords(neighbors(g, 0.1)) == pytest.approx([0.5, 0.7])


def test_interval_exchange_rejects():
    with pytest.raises(ValidationError):
        make_interval_exchange([(0.0, 1.0, 0.0)])
    with pytest.raises(ValidationError):
        make_interval_exchange([(0.0, 0.5, 0.5), (0.4, 1.0, -0.4)])
    with pytest.raises(ValidationError):
        make_interval_exchange([(0.0, 0.5, 0.6)])


def test_rotation_as_exchange_agrees():
    a = GOLDEN
    rot = make_cycle_rotation(a)
    iet = make_interval_exchange([(0.0, 1 - a, a), (1 - a, 1.0, a - 1)])
    rng = np.random.default_rng(4)
    for x in rng.random(1000):
        n1, n2 = coords(neighbors(rot, float(x))), coords(neighbors(iet, float(x)))
        assert len(n1) == len(n2)
        assert all(abs(u - v) < 1e-9 for u, v in zip(n1, n2))


def test_union():
    g = make_union([(golden_rotation(), 0.5), (make_finite_graph([(0, 1)]), 0.5)])
    assert validate(g).valid
    assert len(g.space.parts) == 2
    assert coords(neighbors(g, (1, 0))) == [1]
    assert len(neighbors(g, (0, 0.3))) == 2


def test_delete_edge_is_null_modification(calpha, cprime):
    tv = local_equivalence_tv(bs_histogram(calpha, 3, 10**5, 1), bs_histogram(cprime, 3, 10**5, 2))
    assert tv == 0.0


def test_spec_round_trip(tmp_path):
    spec = {
        "family": "rotation",
        "params": {"alpha": GOLDEN},
        "deleted_edges": [[0.0, GOLDEN]],
    }
    path = tmp_path / "g.json"
    path.write_text(json.dumps(spec))
    g, raw = load_spec(path)
    assert raw == path.read_bytes()
    assert coords(neighbors(g, 0.0)) == pytest.approx([1 - GOLDEN])


def test_spec_families():
    iet = graphing_from_spec({"family": "interval_exchange", "params": {"pieces": [[0, 0.4, 0.6], [0.4, 1, -0.4]]}})
    assert iet.space == GroundSpace.interval()
    u = graphing_from_spec(
        {
            "family": "union",
            "params": {
                "components": [
                    {"spec": {"family": "rotation", "params": {"alpha": 0.3}}, "weight": 0.25},
                    {"spec": {"family": "finite", "params": {"edges": [[0, 1], [1, 2]]}}, "weight": 0.75},
                ]
            },
        }
    )
    assert u.space.weights == (0.25, 0.75)
    g = graphing_from_spec({"family": "finite", "params": {"edges": [[0, 1]], "n": 3}, "added_edges": [[[0, 1], [0, 2]]], "degree_bound": 2})
    assert coords(neighbors(g, 1)) == [0, 2]


@pytest.mark.parametrize(
    "spec",
    [
        {"family": "nope"},
        {"params": {}},
        {"family": "rotation", "params": {}},
        {"family": "rotation", "params": {"alpha": 0.3}, "degree_bound": 1},
    ],
)
def test_spec_errors(spec):
    with pytest.raises(ValidationError):
        graphing_from_spec(spec)


def test_every_family_validates():
    gs = [
        make_cycle_rotation(0.3),
        make_interval_exchange([(0.0, 0.25, 0.5), (0.25, 0.5, 0.5), (0.5, 1.0, -0.5)]),
        make_finite_graph([(0, 1), (1, 2)]),
    ]
    for g in gs:
        assert validate(g).valid
        measure_check = IntervalSet.full(g.space)
        assert measure_check.contains(g.space.sample_point(np.random.default_rng(0)))
