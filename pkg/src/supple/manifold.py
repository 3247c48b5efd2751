"""The circle as a two-chart manifold: atlas, partition of unity, chart-wise splitting.

Angles are plain floats; the chart maps only wrap them into the chart's
coordinate range, so every transition map is a shift by 0 or 2*pi and
derivatives carry over between charts unchanged.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import RejectedInput
from .geometry import ClosedSet
from .mollifier import LINEAR, Width, kernel_eps, normalize_bump, smooth_indicator
from .nets import (DEFAULT_SCHEDULE, CompactBox, EpsSchedule, Net, fit_order, fit_power_law, mul,
                   sup_on_compact)
from .suppleness import (EXACT_ZERO, FAIL, NEGLIGIBLE, ProbeResult,
                         SupportCertificate, decompose, worker_count)

TWO_PI = 2.0 * math.pi
PARTITION_EPS = 0.5  # the partition of unity is eps-independent; any eps reads it


def wrap(theta, lo: float):
    """Representative of theta in [lo, lo + 2 pi)."""
    return lo + np.mod(np.asarray(theta, dtype=float) - lo, TWO_PI)


def angular_distance(a, b):
    d = np.abs(np.mod(np.asarray(a, dtype=float) - b + math.pi, TWO_PI) - math.pi)
    return d


@dataclass(frozen=True)
class Chart:
    """An arc V with coordinate map psi: angle -> (lo, hi) taking the representative in [base, base + 2 pi)."""

    name: str
    lo: float
    hi: float
    base: float

    def to_chart(self, theta):
        return wrap(theta, self.base)

    def from_chart(self, x):
        return np.asarray(x, dtype=float)

    def contains(self, theta):
        x = self.to_chart(theta)
        return (x > self.lo) & (x < self.hi)

    def transition_to(self, other: "Chart", x):
        """psi_other o psi_self^-1 on coordinates of this chart."""
        return other.to_chart(self.from_chart(x))


@dataclass(frozen=True)
class Atlas:
    charts: tuple[Chart, ...]

    def __getitem__(self, name: str) -> Chart:
        for c in self.charts:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return sorted(c.name for c in self.charts)

    def covering(self, theta) -> np.ndarray:
        """Number of chart domains containing each angle."""
        return sum(c.contains(theta).astype(int) for c in self.charts)

    def chart_for_ball(self, theta: float, r: float) -> Chart:
        for name in self.names:
            c = self[name]
            x = float(c.to_chart(theta))
            if c.lo < x - r and x + r < c.hi:
                return c
        raise RejectedInput(f"no chart contains the ball of radius {r} at angle {theta}")


def make_atlas() -> Atlas:
    """V1 = angles with representative in (-2.8, 2.8); V2 = (0.4, 2 pi - 0.4)."""
    return Atlas((Chart("1", -2.8, 2.8, -math.pi), Chart("2", 0.4, TWO_PI - 0.4, 0.0)))


# -- closed subsets of the circle --------------------------------------------


@dataclass(frozen=True)
class CircleSet:
    """Finitely many angles and closed arcs [a, b] (counterclockwise, b - a < 2 pi)."""

    angles: tuple[float, ...] = ()
    arcs: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        arcs = tuple((float(a), float(b)) for a, b in self.arcs)
        for a, b in arcs:
            if not 0 <= b - a < TWO_PI:
                raise RejectedInput(f"arc [{a}, {b}] must satisfy 0 <= b - a < 2 pi")
        object.__setattr__(self, "arcs", arcs)

    @property
    def is_empty(self) -> bool:
        return not (self.angles or self.arcs)

    def __or__(self, other: "CircleSet") -> "CircleSet":
        return CircleSet(self.angles + other.angles, self.arcs + other.arcs)

    def distance(self, theta):
        """Geodesic distance on the unit circle."""
        if self.is_empty:
            raise RejectedInput("distance to the empty set")
        th = np.asarray(theta, dtype=float)
        d = np.full(th.shape, np.inf)
        for p in self.angles:
            d = np.minimum(d, angular_distance(th, p))
        for a, b in self.arcs:
            inside = np.mod(th - a, TWO_PI) <= b - a
            ends = np.minimum(angular_distance(th, a), angular_distance(th, b))
            d = np.minimum(d, np.where(inside, 0.0, ends))
        return float(d) if d.ndim == 0 else d

    def contains(self, theta):
        return self.distance(theta) == 0.0

    def in_chart(self, chart: Chart, lo: float, hi: float) -> ClosedSet:
        """The part lying over the chart-coordinate interval [lo, hi], as a set of reals."""
        pts = []
        for p in self.angles:
            x = float(chart.to_chart(p))
            if lo <= x <= hi:
                pts.append(x)
        ivs = []
        for a, b in self.arcs:
            a0 = float(chart.to_chart(a))
            for shift in (-TWO_PI, 0.0):
                s, e = a0 + shift, a0 + shift + (b - a)
                s, e = max(s, lo), min(e, hi)
                if s <= e:
                    ivs.append((s, e))
        return ClosedSet(points=tuple(pts), intervals=tuple(ivs))

    def sample_points(self) -> np.ndarray:
        out = list(self.angles)
        for a, b in self.arcs:
            out += [a, b, 0.5 * (a + b)]
        return np.asarray(out, dtype=float)

    def to_json(self) -> dict:
        return {"angles": list(self.angles), "arcs": [list(a) for a in self.arcs]}

    @classmethod
    def from_json(cls, obj: dict) -> "CircleSet":
        unknown = set(obj) - {"angles", "arcs"}
        if unknown:
            raise RejectedInput(f"unknown angle-set fields: {sorted(unknown)}")
        return cls(tuple(obj.get("angles", [])), tuple(tuple(a) for a in obj.get("arcs", [])))


# -- nets on the circle -------------------------------------------------------


def _chart_features(c: Chart, features):
    def feats(eps):
        out = []
        for ang, hw in features(eps):
            x = float(c.to_chart(ang))
            out += [(x + s, hw) for s in (-TWO_PI, 0.0, TWO_PI) if c.lo - hw < x + s < c.hi + hw]
        return out

    return feats


@dataclass(frozen=True, eq=False)
class ManifoldNet:
    """Local expressions u_alpha, one Net per chart on the chart's coordinate range."""

    atlas: Atlas
    local: dict
    label: str = ""

    def eval(self, eps: float, theta, n: int = 0):
        th = np.asarray(theta, dtype=float)
        out = np.full(th.shape, np.nan)
        todo = np.ones(th.shape, dtype=bool)
        for name in self.atlas.names:
            c = self.atlas[name]
            m = todo & c.contains(th)
            if np.any(m):
                out[m] = self.local[name]._eval(eps, c.to_chart(th[m]), n)
                todo &= ~m
        return float(out) if out.ndim == 0 else out

    @classmethod
    def from_global(cls, atlas: Atlas, body: Callable[[float, np.ndarray, int], np.ndarray],
                    max_order: int, label: str = "", features: Callable[[float], Sequence] | None = None):
        """Local expressions of a function of the angle; ``body`` must be 2 pi periodic."""
        local = {}
        for c in atlas.charts:
            feats = _chart_features(c, features) if features is not None else None
            local[c.name] = Net(body, (c.lo, c.hi), max_order, label=f"{label}@{c.name}", features=feats)
        return cls(atlas, local, label)

    def __add__(self, other: "ManifoldNet") -> "ManifoldNet":
        return ManifoldNet(self.atlas, {k: self.local[k] + other.local[k] for k in self.local},
                           f"({self.label} + {other.label})")


def circle_embed(atoms: Sequence[tuple[float, float]], atlas: Atlas | None = None, kernel=None) -> ManifoldNet:
    """Mollified sum of coef * delta at the given angles."""
    atlas = atlas or make_atlas()
    kernel = kernel or normalize_bump()
    atoms = [(float(c), float(a)) for c, a in atoms]

    def body(eps, theta, n):
        out = np.zeros(np.shape(theta))
        for c, coef in atoms:
            out = out + coef * kernel_eps(kernel, eps, wrap(theta - c, -math.pi), n)
        return out

    label = "delta[" + ",".join(f"{c:g}" for c, _ in atoms) + "]"
    return ManifoldNet.from_global(atlas, body, kernel.max_order, label,
                                   lambda eps: [(c, eps * kernel.radius) for c, _ in atoms])


def circle_zero(atlas: Atlas | None = None) -> ManifoldNet:
    atlas = atlas or make_atlas()
    return ManifoldNet.from_global(atlas, lambda eps, th, n: np.zeros(np.shape(th)), 64, "zero")


def perturbed(u: ManifoldNet, chart: str, offset: float) -> ManifoldNet:
    """u with one local expression shifted by a constant (breaks the transformation law)."""
    local = dict(u.local)
    local[chart] = local[chart] + offset
    return ManifoldNet(u.atlas, local, f"{u.label}+{offset:g}@{chart}")


def check_transformation_law(u: ManifoldNet, eps_list: Iterable[float] = (2.0**-3, 2.0**-5, 2.0**-7),
                             samples: int = 400, tol: float = 1e-9):
    """Max of |u_a(x) - u_b(psi_b o psi_a^-1 (x))| over overlap samples; (ok, deviation)."""
    worst = 0.0
    for a in u.atlas.charts:
        xs = np.linspace(a.lo, a.hi, samples + 2)[1:-1]
        for b in u.atlas.charts:
            if a.name == b.name:
                continue
            m = b.contains(a.from_chart(xs))
            if not np.any(m):
                continue
            x = xs[m]
            y = a.transition_to(b, x)
            for eps in eps_list:
                dev = np.abs(u.local[a.name]._eval(eps, x, 0) - u.local[b.name]._eval(eps, y, 0))
                worst = max(worst, float(np.max(dev)))
    return worst <= tol, worst


# -- partition of unity -------------------------------------------------------


def _cauchy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    for k in range(a.shape[0]):
        out[k] = sum(a[j] * b[k - j] for j in range(k + 1))
    return out


def _series_power(a: np.ndarray, p: float) -> np.ndarray:
    """Taylor coefficients of a^p from those of a (a[0] > 0)."""
    b = np.zeros_like(a)
    b[0] = a[0] ** p
    for k in range(1, a.shape[0]):
        acc = sum(((p + 1) * j - k) * a[j] * b[k - j] for j in range(1, k + 1))
        b[k] = acc / (k * a[0])
    return b


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """chi_a = raw_a / sqrt(sum raw_b^2), raw_a a smoothed indicator of an arc inside V_a."""

    atlas: Atlas
    plateaus: dict  # chart name -> (lo, hi) in that chart's coordinates
    width: float = 0.3
    _raw: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_raw", {
            name: smooth_indicator([iv], Width("const", value=self.width))
            for name, iv in self.plateaus.items()
        })
        for name, (a, b) in self.plateaus.items():
            c = self.atlas[name]
            if not (c.lo < a - self.width and b + self.width < c.hi):
                raise RejectedInput(f"support of the bump for chart {name} leaves its domain")
        grid = np.linspace(0.0, TWO_PI, 20001)
        denom = np.sqrt(sum(self.raw(name, grid) ** 2 for name in self.plateaus))
        i = int(np.argmin(denom))
        if not denom[i] > 0.1:
            raise RejectedInput(f"bumps do not cover the circle: angle {grid[i]:.6g} has weight {denom[i]:.3g}")

    def support(self, name: str) -> tuple[float, float]:
        a, b = self.plateaus[name]
        return a - self.width, b + self.width

    def _raw_jet(self, name: str, theta: np.ndarray, order: int) -> np.ndarray:
        c = self.atlas[name]
        inside = c.contains(theta)
        jet = np.zeros((order + 1,) + theta.shape)
        if np.any(inside):
            x = c.to_chart(theta[inside])
            for k in range(order + 1):
                jet[k][inside] = self._raw[name]._eval(PARTITION_EPS, x, k) / math.factorial(k)
        return jet

    def raw(self, name: str, theta, n: int = 0) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        return self._raw_jet(name, th, n)[n] * math.factorial(n)

    def chi(self, name: str, theta, n: int = 0) -> np.ndarray:
        """n-th derivative of chi_name with respect to the angle."""
        th = np.asarray(theta, dtype=float)
        jets = {k: self._raw_jet(k, th, n) for k in self.plateaus}
        s = sum(_cauchy(j, j) for j in jets.values())
        inv_sqrt = _series_power(s, -0.5)
        return _cauchy(jets[name], inv_sqrt)[n] * math.factorial(n)

    def local_net(self, name: str, chart: str | None = None) -> Net:
        """chi_name as a net (constant in eps) in the coordinates of ``chart``."""
        c = self.atlas[chart or name]
        return Net(lambda eps, x, n: self.chi(name, c.from_chart(x), n), (c.lo, c.hi),
                   normalize_bump().max_order, label=f"chi_{name}@{c.name}")


def partition_of_unity(atlas: Atlas | None = None, width: float = 0.3) -> PartitionOfUnity:
    """Plateaus [-2.4, 2.4] in chart 1 and [0.8, 2 pi - 0.8] in chart 2; they already cover the circle."""
    atlas = atlas or make_atlas()
    return PartitionOfUnity(atlas, {"1": (-2.4, 2.4), "2": (0.8, TWO_PI - 0.8)}, width)


def reconstruct(u: ManifoldNet, pou: PartitionOfUnity, eps: float, theta) -> np.ndarray:
    """sum_a chi_a (chi_a u) at the given angles."""
    th = np.asarray(theta, dtype=float)
    val = u.eval(eps, th)
    return sum(pou.chi(a, th) * (pou.chi(a, th) * val) for a in pou.plateaus)


# -- chart-wise splitting -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class CircleDecomposition:
    u: ManifoldNet
    u1: ManifoldNet
    u2: ManifoldNet
    parts: dict  # chart name -> DecompositionResult of chi_a u in that chart
    z1: CircleSet
    z2: CircleSet
    delta: float
    pou: PartitionOfUnity
    width: Width
    spread: Width | None
    certificate: SupportCertificate | None = None

    def to_dict(self) -> dict:
        d = {
            "delta": self.delta,
            "width": self.width.to_json(),
            "charts": {name: {"tilde_intervals": [list(iv) for iv in r.tilde_intervals],
                              "window": list(r.window)} for name, r in sorted(self.parts.items())},
        }
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        return d


def _pullback_sum(atlas: Atlas, pieces: dict, label: str) -> ManifoldNet:
    """Angle function sum_a [theta in V_a] w_a(psi_a(theta)) for chart-local nets w_a."""
    names = sorted(pieces)

    def body(eps, theta, n):
        th = np.asarray(theta, dtype=float)
        out = np.zeros(th.shape)
        for a in names:
            c = atlas[a]
            m = c.contains(th)
            if np.any(m):
                out[m] += pieces[a]._eval(eps, c.to_chart(th[m]), n)
        return out

    def features(eps):
        return [(float(atlas[a].from_chart(x)), hw) for a in names for x, hw in pieces[a].windows(eps)]

    order = min(p.max_analytic_order for p in pieces.values())
    return ManifoldNet.from_global(atlas, body, order, label, features)


def manifold_decompose(u: ManifoldNet, z1: CircleSet, z2: CircleSet, delta: float,
                       pou: PartitionOfUnity | None = None, width: Width = LINEAR,
                       spread: Width | None = LINEAR) -> CircleDecomposition:
    """Split chi_a u in every chart, then glue: u_i = sum_a chi_a (chi_a u)_i."""
    pou = pou or partition_of_unity(u.atlas)
    atlas = u.atlas
    parts, p1, p2 = {}, {}, {}
    for a in atlas.names:
        c = atlas[a]
        chi = pou.local_net(a)
        v = mul(chi, u.local[a])
        k_lo, k_hi = pou.support(a)
        zz1, zz2 = z1.in_chart(c, k_lo, k_hi), z2.in_chart(c, k_lo, k_hi)
        reach = delta + width.cap + 0.5
        res = decompose(v, zz1, zz2, delta, (k_lo - reach, k_hi + reach), width)
        parts[a] = res
        p1[a] = mul(chi, res.f1)
        p2[a] = mul(chi, res.f2)
    u1 = _pullback_sum(atlas, p1, f"({u.label})_1")
    u2 = _pullback_sum(atlas, p2, f"({u.label})_2")
    return CircleDecomposition(u, u1, u2, parts, z1, z2, float(delta), pou, width, spread)


def _circle_probe(res: CircleDecomposition, theta: float, part: str, sched: EpsSchedule,
                  slope_threshold: float, grid_points: int) -> ProbeResult:
    target = res.z1 if part == "u1" else res.z2
    d = float(target.distance(theta)) if not target.is_empty else math.pi
    r = min(0.5 * d, 0.5)
    net = res.u1 if part == "u1" else res.u2
    spread = res.spread or Width("const", value=math.inf)
    if part == "u1":
        # f_eps lives within spread of Z and eta within w of the thickening:
        # on the ball both cannot be nonzero once spread + 2w <= r
        ok = [e for e in sched if spread(e) + 2 * res.width(e) <= r]
    else:
        ok = [e for e in sched if spread(e) < min(res.delta, r)]
    eps0 = max(ok) if ok else 0.0
    case = "circle_" + part
    if not ok:
        return ProbeResult(theta, part, case, r, eps0, None, FAIL, "no schedule entry satisfies the eps0 rule")
    chart = res.u.atlas.chart_for_ball(theta, r)
    xc = float(chart.to_chart(theta))
    core = r * (1.0 - 1e-9)
    box = CompactBox(xc - core, xc + core)
    sups = [sup_on_compact(net.local[chart.name], box, e, 0, grid_points) for e in ok]
    fit = fit_power_law(ok, sups) if all(s == 0.0 for s in sups) else None
    if fit is not None:
        return ProbeResult(theta, part, case, r, eps0, fit, EXACT_ZERO,
                           f"zero at every sample for {len(ok)} eps <= {eps0:.3g}")
    try:
        fit = fit_power_law(ok, sups)
    except ValueError as exc:
        return ProbeResult(theta, part, case, r, eps0, None, FAIL, str(exc))
    verdict = NEGLIGIBLE if fit.slope >= slope_threshold else FAIL
    return ProbeResult(theta, part, case, r, eps0, fit, verdict, f"slope {fit.slope:.4g}")


def certify_circle(res: CircleDecomposition, probes: Sequence[tuple[float, str]] | None = None,
                   sched: EpsSchedule = DEFAULT_SCHEDULE, slope_threshold: float = 10.0,
                   grid_points: int = 257) -> SupportCertificate:
    """Probes (angle, "u1"|"u2") with positive geodesic distance to Z1 (resp. Z2)."""
    if probes is None:
        probes = default_circle_probes(res)
    probes = [(float(t), p) for t, p in probes]
    for t, p in probes:
        if p not in ("u1", "u2"):
            raise RejectedInput(f"circle probe part must be 'u1' or 'u2', got {p!r}")
        target = res.z1 if p == "u1" else res.z2
        if not target.is_empty and target.distance(t) == 0.0:
            raise RejectedInput(f"probe inside target set: angle {t} lies in {'Z1' if p == 'u1' else 'Z2'}")
    with ThreadPoolExecutor(max_workers=worker_count(len(probes))) as pool:
        results = tuple(pool.map(lambda q: _circle_probe(res, q[0], q[1], sched, slope_threshold, grid_points),
                                 probes))
    return SupportCertificate(results, slope_threshold)


def default_circle_probes(res: CircleDecomposition, per_part: int = 8) -> list[tuple[float, str]]:
    """Angles off each target set: members of the other set, then a uniform sweep."""
    out = []
    sweep = np.linspace(0.0, TWO_PI, 4 * per_part, endpoint=False) + 0.05
    for part, target, other in (("u1", res.z1, res.z2), ("u2", res.z2, res.z1)):
        def clear(t):
            return target.is_empty or target.distance(t) > 0.05

        members = [float(t) for t in np.mod(other.sample_points(), TWO_PI) if clear(t)]
        rest = [float(t) for t in sweep if clear(t)]
        extra = max(per_part - len(members), 0)
        if rest and extra:
            members += [rest[i] for i in np.unique(np.linspace(0, len(rest) - 1, extra).round().astype(int))]
        out += [(t, part) for t in sorted(set(members))]
    return out


# -- the non-extendable net ------------------------------------------------------


def _inverse_power_polys(order: int):
    """R_n(u, L) with d^n/dx^n exp(L/x) = R_n(1/x) exp(L/x), as coefficient arrays in u whose
    entries are polynomials in L (index [i, j] multiplies u^i L^j)."""
    polys = [np.ones((1, 1))]
    for _ in range(order):
        r = polys[-1]
        du = np.zeros_like(r)
        if r.shape[0] > 1:
            du[:-1] = r[1:] * np.arange(1, r.shape[0])[:, None]
        lr = np.zeros((r.shape[0], r.shape[1] + 1))
        lr[:, 1:] = r
        s = np.zeros_like(lr)
        s[:, : du.shape[1]] += du
        s += lr
        nxt = np.zeros((s.shape[0] + 2, s.shape[1]))
        nxt[2:] = -s  # times -u^2
        polys.append(nxt)
    return polys


_IP_ORDER = 12
_IP_POLYS = _inverse_power_polys(_IP_ORDER)


def inverse_power_net() -> Net:
    """eps^(-1/x) on (0, inf)."""

    def body(eps, x, n):
        big_l = -math.log(eps)
        u = 1.0 / x
        coef = _IP_POLYS[n] @ (big_l ** np.arange(_IP_POLYS[n].shape[1]))
        return np.polynomial.polynomial.polyval(u, coef) * np.exp(big_l * u)

    return Net(body, (0.0, math.inf), _IP_ORDER, label="eps^(-1/x)")


def non_flabby_demo(c_list: Iterable[float] = (1.0, 0.5, 0.2, 0.1),
                    sched: EpsSchedule = DEFAULT_SCHEDULE) -> list[dict]:
    """Order-0 exponent of eps^(-1/x) on [c, 1]; it behaves like -1/c, unbounded as c -> 0."""
    net = inverse_power_net()
    rows = []
    for c in c_list:
        c = float(c)
        if not 0.0 < c <= 1.0:
            raise RejectedInput(f"left endpoint must lie in (0, 1], got {c}")
        fit = fit_order(net, CompactBox(c, 1.0), 0, sched)
        rows.append({"c": c, "slope": fit.slope, "slope_times_c": fit.slope * c,
                     "r_squared": fit.r_squared})
    return rows
