"""Closed subsets of the real line with exact distance oracles.

Three atom kinds cover every set we need: isolated points, closed intervals,
and point families ``{sign * s / n**2 : n >= 1} U {0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import RejectedInput

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class PointFamily:
    scale: float
    sign: int = 1

    def __post_init__(self):
        if not self.scale > 0:
            raise RejectedInput("family scale must be positive")
        if self.sign not in (1, -1):
            raise RejectedInput("family sign must be +1 or -1")

    def distance(self, x: np.ndarray) -> np.ndarray:
        y = self.sign * x
        d = np.abs(y)  # the limit point 0 always belongs to the family
        pos = y > 0
        if np.any(pos):
            yp = y[pos]
            r = np.sqrt(self.scale / yp)
            n_lo = np.maximum(np.floor(r), 1.0)
            n_hi = np.maximum(np.ceil(r), 1.0)
            d_lo = np.abs(yp - self.scale / n_lo**2)
            d_hi = np.abs(yp - self.scale / n_hi**2)
            d[pos] = np.minimum(d[pos], np.minimum(d_lo, d_hi))
        return d

    def points(self, lo: float, hi: float, resolution: float) -> list[float]:
        """Members inside [lo, hi] no closer than ``resolution`` to the limit point, plus 0."""
        n_max = int(math.sqrt(self.scale / resolution)) + 1
        n = np.arange(1, n_max + 1, dtype=float)
        p = self.sign * self.scale / n**2
        keep = [float(v) for v in p if lo <= v <= hi]
        if lo <= 0.0 <= hi:
            keep.append(0.0)
        return keep


@dataclass(frozen=True)
class ClosedSet:
    points: tuple[float, ...] = ()
    intervals: tuple[tuple[float, float], ...] = ()
    families: tuple[PointFamily, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not a <= b:
                raise RejectedInput(f"interval [{a}, {b}] has a > b")
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "families", tuple(self.families))

    @property
    def is_empty(self) -> bool:
        return not (self.points or self.intervals or self.families)

    def __or__(self, other: "ClosedSet") -> "ClosedSet":
        return ClosedSet(self.points + other.points, self.intervals + other.intervals,
                         self.families + other.families)

    def distance(self, x):
        """Exact Euclidean distance to the set (vectorized)."""
        if self.is_empty:
            raise RejectedInput("distance to the empty set")
        arr = np.asarray(x, dtype=float)
        flat = arr.reshape(-1)
        d = np.full(flat.shape, np.inf)
        for p in self.points:
            d = np.minimum(d, np.abs(flat - p))
        for a, b in self.intervals:
            d = np.minimum(d, np.maximum(np.maximum(a - flat, flat - b), 0.0))
        for fam in self.families:
            d = np.minimum(d, fam.distance(flat))
        d = d.reshape(arr.shape)
        return float(d) if d.ndim == 0 else d

    def contains(self, x):
        d = self.distance(x)
        return d == 0.0

    def hull(self) -> tuple[float, float]:
        if self.is_empty:
            raise RejectedInput("hull of the empty set")
        lo = [*self.points, *(a for a, _ in self.intervals)]
        hi = [*self.points, *(b for _, b in self.intervals)]
        for f in self.families:
            lo += [min(0.0, f.sign * f.scale)]
            hi += [max(0.0, f.sign * f.scale)]
        return min(lo), max(hi)

    def sample_points(self, lo: float, hi: float, resolution: float = 1e-6) -> np.ndarray:
        """Explicit members of the set inside [lo, hi]: points, interval ends, family points."""
        out = [p for p in self.points if lo <= p <= hi]
        for a, b in self.intervals:
            out += [v for v in (a, b, 0.5 * (a + b)) if lo <= v <= hi]
        for f in self.families:
            out += f.points(lo, hi, resolution)
        return np.unique(np.asarray(out, dtype=float))

    # -- JSON ---------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "points": list(self.points),
            "intervals": [list(iv) for iv in self.intervals],
            "families": [{"scale": f.scale, "sign": f.sign} for f in self.families],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClosedSet":
        unknown = set(obj) - {"points", "intervals", "families"}
        if unknown:
            raise RejectedInput(f"unknown ClosedSet fields: {sorted(unknown)}")
        fams = tuple(PointFamily(float(f["scale"]), int(f.get("sign", 1))) for f in obj.get("families", []))
        return cls(tuple(obj.get("points", [])), tuple(tuple(iv) for iv in obj.get("intervals", [])), fams)


def point(c: float) -> ClosedSet:
    return ClosedSet(points=(c,))


def interval(a: float, b: float) -> ClosedSet:
    return ClosedSet(intervals=((a, b),))


def example2_sets(scale: float = 1.0) -> tuple[ClosedSet, ClosedSet]:
    """The two halves {s/n^2} U {0} and {-s/n^2} U {0}."""
    return (ClosedSet(families=(PointFamily(scale, 1),)),
            ClosedSet(families=(PointFamily(scale, -1),)))


@dataclass(frozen=True)
class OpenBall:
    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise RejectedInput("ball radius must be positive")

    def contains(self, x):
        return np.abs(np.asarray(x, dtype=float) - self.center) < self.radius

    def closed_core(self, shrink: float = 1e-9) -> tuple[float, float]:
        r = self.radius * (1.0 - shrink)
        return self.center - r, self.center + r


def distance(s: ClosedSet, x):
    return s.distance(x)


def enlarge(s: ClosedSet, eps: float) -> Callable:
    """Membership predicate of the open enlargement {x : d(x, s) < eps}."""
    if not eps > 0:
        raise RejectedInput("enlargement radius must be positive")
    return lambda x: s.distance(x) < eps


# -- the nearer-to-Z1 thickening ----------------------------------------------


def _far(z: ClosedSet, x):
    if z.is_empty:
        return np.full(np.shape(x), np.inf)
    return z.distance(x)


@dataclass(frozen=True)
class TildeSet:
    """{x : d(x, Z1) <= delta and d(x, Z1) <= d(x, Z2)} with a windowed interval decomposition."""

    z1: ClosedSet
    z2: ClosedSet
    delta: float
    window: tuple[float, float]
    intervals: tuple[tuple[float, float], ...] = field(default=())
    clipped: bool = False

    def gap(self, x):
        """g(x) = max(d1 - delta, d1 - d2); the set is {g <= 0}."""
        d1 = self.z1.distance(x)
        return np.maximum(d1 - self.delta, d1 - _far(self.z2, x))

    def contains(self, x):
        return self.gap(x) <= 0.0

    def in_intervals(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        hit = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            hit |= (x >= a) & (x <= b)
        return hit

    def distance(self, x):
        """Distance to the decomposed set (exact up to boundary tolerance inside the window)."""
        x = np.asarray(x, dtype=float)
        d = np.full(x.shape, np.inf)
        for a, b in self.intervals:
            d = np.minimum(d, np.maximum(np.maximum(a - x, x - b), 0.0))
        return float(d) if d.ndim == 0 else d

    def boundaries(self) -> list[float]:
        lo, hi = self.window
        return [v for iv in self.intervals for v in iv if lo < v < hi]


def _bisect_boundary(pred, inside: np.ndarray, outside: np.ndarray) -> np.ndarray:
    """Shrink [inside, outside] brackets until width <= tolerance; return the inside ends."""
    a, b = inside.copy(), outside.copy()
    while np.any(np.abs(b - a) > BOUNDARY_TOL):
        m = 0.5 * (a + b)
        ins = pred(m)
        a = np.where(ins, m, a)
        b = np.where(ins, b, m)
    return a


def tilde_set(z1: ClosedSet, z2: ClosedSet, delta: float,
              window: tuple[float, float] = (-2.0, 2.0), grid_points: int = 200_001) -> TildeSet:
    """Build the thickening of Z1 and decompose it into closed intervals inside ``window``.

    Sign changes of the gap function are found on a uniform grid seeded with
    the members of Z1 (so isolated pieces around points are not missed) and
    each boundary is refined by bisection.
    """
    if not delta > 0:
        raise RejectedInput("delta must be positive")
    if z1.is_empty:
        raise RejectedInput("Z1 must be nonempty")
    lo, hi = map(float, window)
    if not lo < hi:
        raise RejectedInput(f"bad window {window}")
    proto = TildeSet(z1, z2, float(delta), (lo, hi))
    spacing = (hi - lo) / (grid_points - 1)
    xs = np.unique(np.concatenate([np.linspace(lo, hi, grid_points), z1.sample_points(lo, hi, spacing)]))
    ins = proto.contains(xs)
    if not ins.any():
        return proto

    starts = np.flatnonzero(ins & ~np.concatenate([[False], ins[:-1]]))
    ends = np.flatnonzero(ins & ~np.concatenate([ins[1:], [False]]))
    left = np.array([xs[i] for i in starts])
    right = np.array([xs[i] for i in ends])
    has_left = starts > 0
    has_right = ends < xs.size - 1
    if has_left.any():
        left[has_left] = _bisect_boundary(proto.contains, xs[starts[has_left]], xs[starts[has_left] - 1])
    if has_right.any():
        right[has_right] = _bisect_boundary(proto.contains, xs[ends[has_right]], xs[ends[has_right] + 1])
    ivs = tuple((float(a), float(b)) for a, b in zip(left, right))
    clipped = bool((~has_left).any() or (~has_right).any())
    return TildeSet(z1, z2, float(delta), (lo, hi), ivs, clipped)


@dataclass(frozen=True)
class Assert2Report:
    ok: bool
    samples: int
    outside_delta: int  # x in Z~ with d(x, Z1) > delta
    z1_not_covered: int  # x in Z1 but not in Z~
    extra_in_z2: int  # x in Z~ and Z2 but not in Z1

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def assert2_check(z1: ClosedSet, z2: ClosedSet, delta: float, sample_count: int = 100_000,
                  seed: int = 0, window: tuple[float, float] | None = None) -> Assert2Report:
    """Sampled check of Z1 in Z~, d(., Z1) <= delta on Z~, and Z~ & Z2 = Z1 & Z2.

    Quasi-random points are augmented by explicit members of Z1 and Z2, since
    a random sample never lands on an isolated point.
    """
    if window is None:
        hulls = [s.hull() for s in (z1, z2) if not s.is_empty]
        lo = min(h[0] for h in hulls) - 2 * delta - 1.0
        hi = max(h[1] for h in hulls) + 2 * delta + 1.0
    else:
        lo, hi = window
    sampler = qmc.Halton(d=1, scramble=True, seed=seed)
    xs = lo + (hi - lo) * sampler.random(sample_count)[:, 0]
    members = [z1.sample_points(lo, hi)]
    if not z2.is_empty:
        members.append(z2.sample_points(lo, hi))
    xs = np.concatenate([xs, *members])

    ts = TildeSet(z1, z2, float(delta), (lo, hi))
    in_t = ts.contains(xs)
    d1 = z1.distance(xs)
    in_z1 = d1 == 0.0
    in_z2 = _far(z2, xs) == 0.0
    outside_delta = int(np.sum(in_t & (d1 > delta + 1e-12)))
    not_covered = int(np.sum(in_z1 & ~in_t))
    extra = int(np.sum(in_t & in_z2 & ~in_z1))
    ok = outside_delta == 0 and not_covered == 0 and extra == 0
    return Assert2Report(ok, int(xs.size), outside_delta, not_covered, extra)
