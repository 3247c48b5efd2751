"""Acceptance criteria 1-9; each prints one pass/fail line in the terminal summary."""

import json
import math
import time

import numpy as np
import pytest
from scipy import integrate

from supple import cli
from supple.embedding import AtomicDistribution, bump_density, embed, example2_net, pairing_partial_sums, \
    plateau_test_function
from supple.geometry import ClosedSet, assert2_check, example2_sets, interval, point
from supple.manifold import (TWO_PI, CircleSet, certify_circle, check_transformation_law, circle_embed,
                             inverse_power_net, manifold_decompose, non_flabby_demo, partition_of_unity,
                             reconstruct)
from supple.mollifier import LINEAR, LOG, kernel_eps, merge_intervals, normalize_bump, scaled, smooth_indicator
from supple.nets import CompactBox, fit_order, is_ginfty, separable
from supple.suppleness import FAIL, certify_support, decompose, ginf_decompose


def test_criterion_1_mollifier(record):
    record.update(n=1, what="bump mass, plateau exactness on 5 fixtures, convolution vs quadrature")
    b = normalize_bump()
    mass = integrate.quad(lambda t: float(b.profile(t)), -1, 1, points=[0.0], epsabs=1e-15, epsrel=1e-12)[0]
    assert abs(mass - 1.0) < 1e-10

    fixtures = [[(0.0, 1.0)], [(-1.0, -0.5), (0.5, 1.0)], [(-0.3, -0.3)],
                [(-1.0, 0.0), (0.05, 0.4), (1.2, 1.5)], [(-0.9, -0.8), (-0.1, 0.1), (0.6, 0.6), (0.9, 1.3)]]
    for ivs in fixtures:
        eta = smooth_indicator(ivs, LINEAR)
        for eps in (0.2, 0.01):
            w = LINEAR(eps)
            x = np.linspace(-2.0, 2.5, 10_000)
            d = np.min([np.maximum(np.maximum(a - x, x - c), 0.0) for a, c in ivs], axis=0)
            v = eta.eval(eps, x)
            assert np.all(v[d == 0.0] == 1.0) and np.all(v[d >= w] == 0.0)

    eta = smooth_indicator([(-0.5, 0.2), (0.6, 0.9)], LINEAR)
    for eps in (0.3, 0.02):
        h = 0.5 * LINEAR(eps)
        grown = merge_intervals([(-0.5 - h, 0.2 + h), (0.6 - h, 0.9 + h)])
        for x in np.linspace(-0.8, 1.2, 25):
            ref = sum(integrate.quad(lambda y: float(kernel_eps(b, h, x - y)), max(a, x - h), min(c, x + h),
                                     epsabs=1e-14, epsrel=1e-12)[0]
                      for a, c in grown if max(a, x - h) < min(c, x + h))
            assert abs(eta.eval(eps, x) - ref) < 1e-8


def test_criterion_2_scale(record):
    record.update(n=2, what="slopes of the closed-form pool on 2^-3..2^-20")
    k = CompactBox(-1.0, 1.0)
    for n in range(4):
        assert fit_order(scaled(), k, n).slope == pytest.approx(-1 - n, abs=0.05)

    def sin_derivs(x, n):
        return np.sin(x + 0.5 * math.pi * n)

    assert fit_order(separable(lambda e: e**2, sin_derivs, "e2sin"), k).slope == pytest.approx(2.0, abs=0.05)
    assert fit_order(separable(lambda e: math.exp(-1 / e), sin_derivs, "expsin"), k).slope >= 10
    net = inverse_power_net()
    for c in (1.0, 0.5, 0.2, 0.1):
        assert fit_order(net, CompactBox(c, 1.0), 0).slope == pytest.approx(-1 / c, rel=0.1)


def test_criterion_3_thickening(record):
    record.update(n=3, what="thickening properties on 6 fixtures, 10^5 samples each")
    fixtures = [
        (*example2_sets(), 0.1),
        (*example2_sets(), 0.02),
        (point(0.0), point(1.0), 0.3),
        (interval(-1.0, 0.0), interval(0.0, 1.0), 0.25),
        (ClosedSet(points=(-0.5, 0.5)), ClosedSet(points=(0.0,), intervals=((1.0, 1.2),)), 0.4),
        (example2_sets(0.5)[0], interval(-0.3, -0.1), 0.05),
    ]
    for z1, z2, delta in fixtures:
        rep = assert2_check(z1, z2, delta, 100_000, seed=0)
        assert rep.ok, rep.to_dict()


def test_criterion_4_decomposition(record):
    record.update(n=4, what="two-sided delta sum split: additivity and zero-FAIL support certificates")
    t0 = time.perf_counter()
    z1, z2 = example2_sets()
    f = example2_net()
    rng = np.random.default_rng(0)
    for delta in (0.1, 0.02):
        res = decompose(f, z1, z2, delta)
        for eps, x in zip(2.0 ** -rng.uniform(3, 20, 1000), rng.uniform(-2, 2, 1000)):
            v = f.eval(eps, x)
            assert abs(res.f1.eval(eps, x) + res.f2.eval(eps, x) - v) <= 1e-12 * max(1.0, abs(v))
        cert = certify_support(res)
        assert len(cert.probes) >= 20
        assert cert.counts()[FAIL] == 0, [p.to_dict() for p in cert.failures]
        assert {"in_tilde", "off_tilde", "in_z1"} <= {p.case for p in cert.probes}
    assert time.perf_counter() - t0 <= 300


def test_criterion_5_example2_contrast(record):
    record.update(n=5, what="moderate order-0 slope near 0 vs divergent partial pairings")
    fit = fit_order(example2_net(), CompactBox(-0.1, 0.1), 0)
    assert fit.slope == pytest.approx(-1.5, abs=0.2)
    psi = plateau_test_function(-1.0, 1.0, 0.5)
    assert pairing_partial_sums(psi, [10, 1000, 100_000]) == [10.0, 1000.0, 100_000.0]


def test_criterion_6_ginfty(record):
    record.update(n=6, what="log-width cutoff in G-infinity; regular fixture splits; delta flagged")
    # a G-infinity fixture: two smooth densities on disjoint pieces
    d = AtomicDistribution(densities=((1.0, bump_density(-1.5, 0.4)), (1.0, bump_density(1.5, 0.4))))
    r = ginf_decompose(embed(d), interval(-1.9, -1.1), interval(1.1, 1.9), 0.25, window=(-3, 3))
    regular_parts = all(c.ok for c in r.regularity.values())

    r = ginf_decompose(embed(AtomicDistribution.delta(0.0)), point(0.0), point(1.0), 0.25)
    delta_slopes = r.regularity["f"].slopes()
    delta_flagged = not r.regularity["f"].ok and all(
        abs(s - (-1 - n)) < 0.1 for n, s in delta_slopes.items())

    eta_hat = is_ginfty(smooth_indicator([(-1.0, 1.0)], LOG), CompactBox(-2.0, 2.0))
    assert regular_parts
    assert delta_flagged, delta_slopes
    assert eta_hat.ok, eta_hat.detail


def test_criterion_7_manifold(record):
    record.update(n=7, what="circle partition, reconstruction, split additivity, certificates, transformation law")
    pou = partition_of_unity()
    th = np.linspace(0.0, TWO_PI, 10_000, endpoint=False)
    assert np.max(np.abs(sum(pou.chi(a, th) ** 2 for a in pou.plateaus) - 1.0)) < 1e-10
    fixtures = [
        ([(0.0, 1.0)], CircleSet(angles=(0.0,)), CircleSet(angles=(math.pi,)), 0.2),
        ([(0.0, 1.0), (2.0, -1.0), (4.5, 0.5)], CircleSet(angles=(0.0, 2.0)), CircleSet(angles=(2.0, 4.5)), 0.3),
    ]
    rng = np.random.default_rng(0)
    for atoms, z1, z2, delta in fixtures:
        u = circle_embed(atoms)
        for eps in (2.0**-3, 2.0**-6):
            assert np.max(np.abs(reconstruct(u, pou, eps, th) - u.eval(eps, th))) <= 1e-12
        res = manifold_decompose(u, z1, z2, delta, pou)
        for eps, t in zip(2.0 ** -rng.uniform(3, 20, 1000), rng.uniform(0, TWO_PI, 1000)):
            v = u.eval(eps, t)
            assert abs(res.u1.eval(eps, t) + res.u2.eval(eps, t) - v) <= 1e-12 * max(1.0, abs(v))
        assert certify_circle(res).counts()[FAIL] == 0
        for part in (u, res.u1, res.u2):
            ok, dev = check_transformation_law(part)
            assert ok and dev <= 1e-9


def test_criterion_8_non_flabby(record):
    record.update(n=8, what="slope(c) * c = -1 for c in {1, 0.5, 0.2, 0.1}")
    for row in non_flabby_demo([1.0, 0.5, 0.2, 0.1]):
        assert row["slope_times_c"] == pytest.approx(-1.0, rel=0.1)


def test_criterion_9_cli(record, tmp_path, capsys):
    record.update(n=9, what="bundled scenarios reproduce byte-for-byte; exit codes 0/1/2")
    for name in cli.bundled_scenarios():
        outs = []
        for i in range(2):
            path = tmp_path / f"{name}.{i}"
            assert cli.main(["run", name, "--out", str(path)]) == 0
            outs.append(cli.dumps(cli.strip_volatile(json.loads(path.read_text()))))
        assert outs[0] == outs[1], name

    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "decompose",')
    assert cli.main(["run", str(bad)]) == 1
    fail = tmp_path / "fail.json"
    fail.write_text(json.dumps({
        "kind": "decompose", "net": {"atoms": [{"c": 0.5}]}, "z1": {"points": [0.0]},
        "z2": {"points": [1.0]}, "delta": 0.5, "probes": [{"x": 0.5, "part": "f2"}],
    }))
    assert cli.main(["run", str(fail), "--out", str(tmp_path / "f.out")]) == 2
    capsys.readouterr()
