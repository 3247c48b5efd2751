import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supple.errors import RejectedInput
from supple.manifold import (TWO_PI, CircleSet, angular_distance, certify_circle, check_transformation_law,
                             circle_embed, inverse_power_net, make_atlas, manifold_decompose, non_flabby_demo,
                             partition_of_unity, perturbed, reconstruct, wrap)
from supple.suppleness import FAIL

ANGLES = np.linspace(0.0, TWO_PI, 10_000, endpoint=False)


@pytest.fixture(scope="module")
def pou():
    return partition_of_unity()


@settings(max_examples=100)
@given(st.floats(-50, 50), st.floats(-10, 10))
def test_wrap_range(theta, lo):
    w = float(wrap(theta, lo))
    assert lo <= w < lo + TWO_PI + 1e-12
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)


@settings(max_examples=100)
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_angular_distance(a, b):
    d = float(angular_distance(a, b))
    assert 0.0 <= d <= math.pi + 1e-12
    assert d == pytest.approx(float(angular_distance(b, a)), abs=1e-12)


def test_atlas_covers_circle():
    atlas = make_atlas()
    assert np.all(atlas.covering(ANGLES) >= 1)
    with pytest.raises(RejectedInput):
        atlas.chart_for_ball(0.0, 4.0)


def test_chart_transition_is_identity_mod_2pi():
    atlas = make_atlas()
    a, b = atlas["1"], atlas["2"]
    x = np.linspace(0.5, 2.7, 50)
    np.testing.assert_allclose(a.transition_to(b, x), x)
    x = np.linspace(-2.7, -0.5, 50)
    np.testing.assert_allclose(a.transition_to(b, x), x + TWO_PI)


def test_partition_sums_to_one(pou):
    s = sum(pou.chi(a, ANGLES) ** 2 for a in pou.plateaus)
    assert np.max(np.abs(s - 1.0)) < 1e-10
    assert all(np.all(pou.chi(a, ANGLES) >= 0) for a in pou.plateaus)


def test_partition_support_inside_chart(pou):
    atlas = pou.atlas
    for a in pou.plateaus:
        c = atlas[a]
        outside = ~c.contains(ANGLES)
        assert np.all(pou.chi(a, ANGLES[outside]) == 0.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_chi_derivatives_against_difference_quotients(pou, n):
    th = np.array([2.55, 2.6, 3.0, 3.6, -2.5])

    def cd(a, h):
        return (pou.chi(a, th + h, n - 1) - pou.chi(a, th - h, n - 1)) / (2 * h)

    for a in pou.plateaus:
        fd = (4 * cd(a, 5e-4) - cd(a, 1e-3)) / 3  # Richardson step
        np.testing.assert_allclose(pou.chi(a, th, n), fd, rtol=1e-5, atol=1e-5)


def test_reconstruction(pou):
    u = circle_embed([(0.0, 1.0), (2.0, -0.5), (4.0, 2.0)])
    for eps in (2.0**-3, 2.0**-6):
        assert np.max(np.abs(reconstruct(u, pou, eps, ANGLES) - u.eval(eps, ANGLES))) <= 1e-12


def test_transformation_law():
    u = circle_embed([(0.0, 1.0), (2.8, 1.0)])
    ok, dev = check_transformation_law(u)
    assert ok and dev <= 1e-9
    ok, dev = check_transformation_law(perturbed(u, "2", 1e-6))
    assert not ok and dev == pytest.approx(1e-6, rel=1e-6)


def test_circle_set_geometry():
    z = CircleSet(angles=(0.1,), arcs=((3.0, 3.5),))
    assert float(z.distance(TWO_PI + 0.1)) == pytest.approx(0.0, abs=1e-12)
    assert float(z.distance(3.2)) == 0.0
    assert float(z.distance(-0.1)) == pytest.approx(0.2)
    assert CircleSet.from_json(z.to_json()) == z


CIRCLE_FIXTURES = [
    ([(0.0, 1.0)], CircleSet(angles=(0.0,)), CircleSet(angles=(math.pi,)), 0.2),
    ([(0.0, 1.0), (2.0, -1.0), (4.5, 0.5)], CircleSet(angles=(0.0, 2.0)), CircleSet(angles=(2.0, 4.5)), 0.3),
]


@pytest.fixture(scope="module", params=range(len(CIRCLE_FIXTURES)))
def circle_split(request):
    atoms, z1, z2, delta = CIRCLE_FIXTURES[request.param]
    return manifold_decompose(circle_embed(atoms), z1, z2, delta)


def test_circle_additivity(circle_split):
    r = circle_split
    rng = np.random.default_rng(0)
    for eps, th in zip(2.0 ** -rng.uniform(3, 20, 300), rng.uniform(0, TWO_PI, 300)):
        v = r.u.eval(eps, th)
        assert abs(r.u1.eval(eps, th) + r.u2.eval(eps, th) - v) <= 1e-12 * max(1.0, abs(v))


def test_circle_parts_obey_transformation_law(circle_split):
    for part in (circle_split.u1, circle_split.u2):
        ok, dev = check_transformation_law(part)
        assert ok, dev


def test_circle_certificate(circle_split):
    cert = certify_circle(circle_split)
    assert cert.counts()[FAIL] == 0
    assert len(cert.probes) >= 8


def test_circle_probe_validation(circle_split):
    with pytest.raises(RejectedInput, match="probe inside target set"):
        certify_circle(circle_split, [(0.0, "u1")])
    with pytest.raises(RejectedInput):
        certify_circle(circle_split, [(1.0, "f1")])


@pytest.mark.parametrize("n", [0, 1, 2, 4, 7])
def test_inverse_power_derivatives_against_mpmath(n):
    net = inverse_power_net()
    mpmath.mp.dps = 30
    for eps, x in ((0.1, 0.7), (2.0**-10, 0.4), (0.3, 1.3)):
        ref = mpmath.diff(lambda t: mpmath.mpf(eps) ** (-1 / t), x, n)
        assert net.eval(eps, x, n) == pytest.approx(float(ref), rel=1e-10)


def test_non_flabby_table():
    rows = non_flabby_demo()
    assert [r["c"] for r in rows] == [1.0, 0.5, 0.2, 0.1]
    for r in rows:
        assert r["slope_times_c"] == pytest.approx(-1.0, abs=1e-9)
    with pytest.raises(RejectedInput):
        non_flabby_demo([0.0])
