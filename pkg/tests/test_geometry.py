import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supple.errors import RejectedInput
from supple.geometry import (ClosedSet, OpenBall, PointFamily, TildeSet, assert2_check, enlarge, example2_sets,
                             interval, point, tilde_set)


def brute_family_distance(x, scale, sign, n_max=1_000_000):
    members = np.concatenate([sign * scale / np.arange(1, n_max + 1, dtype=float) ** 2, [0.0]])
    members.sort()
    i = np.searchsorted(members, x)
    lo = members[np.clip(i - 1, 0, members.size - 1)]
    hi = members[np.clip(i, 0, members.size - 1)]
    return np.minimum(np.abs(x - lo), np.abs(x - hi))


@pytest.mark.parametrize("scale,sign", [(1.0, 1), (1.0, -1), (0.3, 1)])
def test_family_distance_brute_force(scale, sign):
    rng = np.random.default_rng(1)
    # |x| >= 1e-6 keeps the nearest member within the first 10^6 terms
    x = rng.uniform(1e-6, 1.5, 5000) * rng.choice([-1, 1], 5000)
    got = PointFamily(scale, sign).distance(x)
    np.testing.assert_allclose(got, brute_family_distance(x, scale, sign), rtol=0, atol=1e-15)


def test_family_members_have_zero_distance():
    fam = PointFamily(1.0, -1)
    n = np.arange(1, 2000, dtype=float)
    assert np.all(fam.distance(-1.0 / n**2) == 0.0)
    assert fam.distance(np.array([0.0]))[0] == 0.0


def test_closed_set_distance():
    z = ClosedSet(points=(2.0,), intervals=((-1.0, 0.0),))
    np.testing.assert_allclose(z.distance([-2.0, -0.5, 0.7, 1.5, 3.0]), [1.0, 0.0, 0.7, 0.5, 1.0])
    assert z.hull() == (-1.0, 2.0)
    assert z.contains(2.0) and not z.contains(1.0)


@settings(max_examples=80)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), st.floats(-4, 4), st.floats(-4, 4))
def test_distance_is_1_lipschitz(pts, x, y):
    z = ClosedSet(points=tuple(pts))
    assert abs(z.distance(x) - z.distance(y)) <= abs(x - y) + 1e-12


def test_json_round_trip():
    z = ClosedSet((0.5,), ((1.0, 2.0),), (PointFamily(1.0, -1),))
    assert ClosedSet.from_json(z.to_json()) == z
    with pytest.raises(RejectedInput):
        ClosedSet.from_json({"balls": []})


def test_rejections():
    with pytest.raises(RejectedInput):
        interval(1.0, 0.0)
    with pytest.raises(RejectedInput):
        ClosedSet().distance(0.0)
    with pytest.raises(RejectedInput):
        PointFamily(0.0)
    with pytest.raises(RejectedInput):
        tilde_set(point(0.0), point(1.0), 0.0)
    with pytest.raises(RejectedInput):
        tilde_set(ClosedSet(), point(1.0), 0.1)


def test_open_ball_and_enlarge():
    b = OpenBall(0.0, 1.0)
    assert b.contains(0.999) and not b.contains(1.0)
    near = enlarge(point(0.0), 0.1)
    assert near(0.05) and not near(0.1)


def test_tilde_between_points():
    t = tilde_set(point(0.0), point(1.0), 0.8)
    # nearer to 0 than to 1 stops at the midpoint; the delta bound stops on the left
    assert len(t.intervals) == 1
    a, b = t.intervals[0]
    assert a == pytest.approx(-0.8, abs=1e-11)
    assert b == pytest.approx(0.5, abs=1e-11)


def test_tilde_without_z2():
    t = tilde_set(interval(-0.5, 0.5), ClosedSet(), 0.2)
    assert t.intervals[0] == pytest.approx((-0.7, 0.7), abs=1e-11)


@pytest.mark.parametrize("delta", [0.1, 0.02])
def test_tilde_intervals_agree_with_gap(delta):
    z1, z2 = example2_sets()
    t = tilde_set(z1, z2, delta)
    xs = np.random.default_rng(2).uniform(-2, 2, 20_000)
    margin = np.min(np.abs(np.subtract.outer(xs, np.array(t.boundaries()))), axis=1)
    safe = margin > 1e-9
    assert np.array_equal(t.in_intervals(xs)[safe], t.contains(xs)[safe])
    # the points of Z1 sit inside the decomposed set
    assert np.all(t.in_intervals(z1.sample_points(-2, 2, 1e-4)))


@pytest.mark.parametrize("delta", [0.1, 0.02])
def test_example2_thickening_touches_z2_only_at_zero(delta):
    z1, z2 = example2_sets()
    t = tilde_set(z1, z2, delta)
    members = z2.sample_points(-2, 2, 1e-6)
    hits = members[t.contains(members)]
    assert np.array_equal(hits, [0.0])


def test_tilde_distance_matches_intervals():
    t = tilde_set(point(0.0), point(1.0), 0.3)
    assert t.distance(2.0) == pytest.approx(1.7, abs=1e-11)
    assert t.distance(0.1) == 0.0
    assert isinstance(t, TildeSet) and not t.clipped


def test_clipped_flag():
    assert tilde_set(interval(-1.9, 1.9), ClosedSet(), 0.5).clipped


ASSERT2_FIXTURES = [
    (*example2_sets(), 0.1),
    (*example2_sets(), 0.02),
    (point(0.0), point(1.0), 0.3),
    (interval(-1.0, 0.0), interval(0.0, 1.0), 0.25),
    (ClosedSet(points=(-0.5, 0.5)), ClosedSet(points=(0.0,), intervals=((1.0, 1.2),)), 0.4),
    (example2_sets(0.5)[0], interval(-0.3, -0.1), 0.05),
]


@pytest.mark.parametrize("z1,z2,delta", ASSERT2_FIXTURES)
def test_assert2_zero_violations(z1, z2, delta):
    rep = assert2_check(z1, z2, delta, 100_000, seed=0)
    assert rep.ok, rep.to_dict()
    assert rep.samples >= 100_000

