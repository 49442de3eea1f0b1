import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphing_lab import DomainError, GroundSpace, IntervalSet, Point, ValidationError, base_distance, measure, sample_point

CIRCLE = GroundSpace.circle()
coords = st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False)


@pytest.mark.parametrize(
    "space,x,y,expected",
    [
        (CIRCLE, 0.1, 0.2, 0.1),
        (CIRCLE, 0.05, 0.95, 0.1),
        (GroundSpace.interval(), 0.05, 0.95, 0.9),
        (GroundSpace.atoms(3), 0, 2, 1.0),
        (GroundSpace.atoms(3), 1, 1, 0.0),
    ],
)
def test_base_distance_examples(space, x, y, expected):
    assert base_distance(space, space.point(x), space.point(y)) == pytest.approx(expected, abs=1e-15)


def test_cross_part_distance_is_one():
    s = GroundSpace.union([(CIRCLE, 0.5), (GroundSpace.atoms(2), 0.5)])
    assert base_distance(s, Point(0, 0.3), Point(1, 0)) == 1.0


@pytest.mark.parametrize("bad", [1.0, -0.1, float("nan")])
def test_invalid_coordinate_rejected(bad):
    with pytest.raises(DomainError):
        CIRCLE.point(bad)


def test_invalid_atom_rejected():
    with pytest.raises(DomainError):
        GroundSpace.atoms(3).point(3)
    with pytest.raises(DomainError):
        GroundSpace.atoms(3).point(0.5)


def test_union_weights_must_sum_to_one():
    with pytest.raises(ValidationError):
        GroundSpace.union([(CIRCLE, 0.5), (CIRCLE, 0.4)])


def test_nested_union_flattens():
    inner = GroundSpace.union([(CIRCLE, 0.5), (GroundSpace.atoms(2), 0.5)])
    s = GroundSpace.union([(inner, 0.5), (GroundSpace.interval(), 0.5)])
    assert len(s.parts) == 3
    assert s.weights == pytest.approx((0.25, 0.25, 0.5))


@given(coords, coords, coords)
def test_circle_metric_axioms(x, y, z):
    d = lambda a, b: base_distance(CIRCLE, Point(0, a), Point(0, b))
    assert d(x, y) == d(y, x)
    assert 0.0 <= d(x, y) <= 0.5
    assert d(x, z) <= d(x, y) + d(y, z) + 1e-12


def test_sample_point_is_reproducible():
    assert sample_point(CIRCLE, 17) == sample_point(CIRCLE, 17)


def test_atoms_uniform_chi_square():
    rng = np.random.default_rng(5)
    s = GroundSpace.atoms(3)
    counts = np.bincount([s.sample_point(rng).coord for _ in range(30_000)], minlength=3)
    chi2 = float(((counts - 10_000) ** 2 / 10_000).sum())
    assert chi2 < 13.8  # 0.999 quantile, 2 degrees of freedom


def test_union_part_frequencies():
    s = GroundSpace.union([(CIRCLE, 0.5), (GroundSpace.atoms(2), 0.5)])
    parts, _ = s.sample_arrays(100_000, np.random.default_rng(2), stratified=False)
    freq = float(np.mean(parts == 0))
    assert abs(freq - 0.5) <= 3 * math.sqrt(0.25 / 100_000)


@pytest.mark.parametrize(
    "space,A,expected",
    [
        (CIRCLE, IntervalSet.interval(0, 0.25), 0.25),
        (CIRCLE, IntervalSet.interval(0.9, 1.0) | IntervalSet.interval(0, 0.1), 0.2),
        (GroundSpace.atoms(3), IntervalSet.atoms([0, 1]), 2 / 3),
        (CIRCLE, IntervalSet.empty(), 0.0),
    ],
)
def test_measure_examples(space, A, expected):
    assert measure(space, A) == pytest.approx(expected, abs=1e-12)


def test_overlapping_intervals_rejected():
    with pytest.raises(ValidationError):
        measure(CIRCLE, IntervalSet.interval(0, 0.5) | IntervalSet.interval(0.4, 0.6))
    # a long interval hides a later overlap from adjacent-pair checks
    with pytest.raises(ValidationError):
        measure(CIRCLE, IntervalSet.interval(0, 0.9) | IntervalSet.interval(0.1, 0.2) | IntervalSet.interval(0.5, 0.6))


@given(st.lists(coords, min_size=2, max_size=8, unique=True))
def test_measure_additive(cuts):
    cuts = sorted(cuts)
    pieces = [IntervalSet.interval(a, b) for a, b in zip(cuts, cuts[1:])]
    union = IntervalSet.empty()
    for p in pieces:
        union = union | p
    assert measure(CIRCLE, union) == pytest.approx(math.fsum(measure(CIRCLE, p) for p in pieces), abs=1e-12)


def test_empirical_measure_converges():
    A = IntervalSet.interval(0.1, 0.35) | IntervalSet.interval(0.8, 0.9)
    n = 10**6
    parts, cs = CIRCLE.sample_arrays(n, np.random.default_rng(11), stratified=False)
    p = float(A.contains_array(parts, cs).mean())
    lam = measure(CIRCLE, A)
    assert abs(p - lam) <= 4 * math.sqrt(lam * (1 - lam) / n)


def test_stratified_sampling_covers_each_stratum():
    parts, cs = CIRCLE.sample_arrays(1000, np.random.default_rng(0), stratified=True)
    assert sorted(np.floor(np.sort(cs) * 1000).astype(int).tolist()) == list(range(1000))
