"""Epsilon-nets of smooth functions on open intervals, and their asymptotic classification.

A :class:`Net` is a family ``(f_eps)`` with ``eps`` in (0, 1).  Its body is a
pure function ``body(eps, x, n)`` returning the n-th x-derivative on an array
of points.  Moderateness, negligibility and G-infinity regularity are decided
by fitting ``ln sup_K |f_eps^(n)|`` against ``ln eps`` over a finite schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientData, RejectedInput

Body = Callable[[float, np.ndarray, int], np.ndarray]
Window = tuple[float, float]  # (center, half-width)

ALL_ORDERS = 64  # "analytic at every order we will ever ask for"
REFINE_POINTS = 65
WINDOW_POINTS = 65


def default_fd_step(eps: float) -> float:
    return max(1e-6, eps / 1000.0)


@dataclass(frozen=True, eq=False)
class Net:
    """An eps-parametrized family of smooth functions on an open interval.

    ``features(eps)`` optionally lists ``(center, half_width)`` windows where
    eps-scale structure lives; sup estimation samples them densely and
    quadrature uses them as breakpoints.
    """

    body: Body
    domain: tuple[float, float] = (-math.inf, math.inf)
    max_analytic_order: int = 0
    label: str = ""
    features: Callable[[float], Sequence[Window]] | None = None
    fd_step: Callable[[float], float] | None = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise RejectedInput(f"empty domain {self.domain}")

    # -- evaluation -------------------------------------------------------

    def eval(self, eps: float, x, n: int = 0):
        """Return f_eps^(n)(x) for scalar or array ``x``."""
        if not 0.0 < eps < 1.0:
            raise RejectedInput(f"eps must lie in (0, 1), got {eps}")
        if n < 0 or int(n) != n:
            raise RejectedInput(f"derivative order must be a nonnegative integer, got {n}")
        arr = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if arr.size and not (np.all(arr > lo) and np.all(arr < hi)):
            raise RejectedInput(f"point outside domain ({lo}, {hi})")
        out = self._eval(eps, arr, int(n))
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def _eval(self, eps: float, x: np.ndarray, n: int) -> np.ndarray:
        if n <= self.max_analytic_order:
            return np.broadcast_to(np.asarray(self.body(eps, x, n), dtype=float), x.shape)
        h = (self.fd_step or default_fd_step)(eps)
        return (self._eval(eps, x + h, n - 1) - self._eval(eps, x - h, n - 1)) / (2.0 * h)

    def windows(self, eps: float) -> list[Window]:
        return list(self.features(eps)) if self.features is not None else []

    # -- algebra ----------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        return add(self, scale(_as_net(other), -1.0))

    def __rsub__(self, other):
        return add(_as_net(other), scale(self, -1.0))

    def __mul__(self, other):
        if isinstance(other, Net):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"Net({self.label or '<anonymous>'}, domain={self.domain})"


@dataclass(frozen=True)
class CompactBox:
    """A compact interval [lo, hi] standing in for K in the moderateness bounds."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise RejectedInput(f"CompactBox needs lo <= hi, got [{self.lo}, {self.hi}]")

    def margin(self, net: Net) -> float:
        """Distance from the box to the boundary of ``net``'s domain (must be > 0)."""
        lo, hi = net.domain
        m = min(self.lo - lo, hi - self.hi)
        if not m > 0:
            raise RejectedInput(f"[{self.lo}, {self.hi}] is not compactly inside {net.domain}")
        return m

    def grid(self, points: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, points)


@dataclass(frozen=True)
class EpsSchedule:
    values: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(e) for e in self.values)
        object.__setattr__(self, "values", v)
        if len(v) < 6:
            raise RejectedInput("an eps schedule needs at least 6 entries")
        if not all(0.0 < e < 1.0 for e in v):
            raise RejectedInput("schedule entries must lie in (0, 1)")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise RejectedInput("schedule must be strictly decreasing")

    @classmethod
    def geometric(cls, k_min: int = 3, k_max: int = 20, base: float = 2.0) -> "EpsSchedule":
        return cls(tuple(base ** -k for k in range(k_min, k_max + 1)))

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


DEFAULT_SCHEDULE = EpsSchedule.geometric(3, 20)


@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares fit of ``ln sup = intercept + slope * ln eps``."""

    slope: float
    intercept: float
    r_squared: float
    sup_values: tuple[tuple[float, float], ...]
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "slope": _jsonable(self.slope),
            "intercept": _jsonable(self.intercept),
            "r_squared": _jsonable(self.r_squared),
            "degenerate": self.degenerate,
            "sup_values": [[e, s] for e, s in self.sup_values],
        }


@dataclass(frozen=True)
class Classification:
    """Verdict of a moderateness/negligibility/regularity test, with per-order fits."""

    ok: bool
    test: str
    fits: Mapping[int, AsymptoticFit]
    detail: str = ""

    def __bool__(self):
        return self.ok

    def slopes(self) -> dict[int, float]:
        return {n: f.slope for n, f in self.fits.items()}

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "ok": self.ok,
            "detail": self.detail,
            "fits": {str(n): f.to_dict() for n, f in sorted(self.fits.items())},
        }


def _jsonable(v: float):
    return v if math.isfinite(v) else None


# -- sup and exponent fitting --------------------------------------------


def sup_on_compact(net: Net, k: CompactBox, eps: float, n: int = 0, grid_points: int = 257) -> float:
    """Two-stage grid estimate of ``sup_{x in K} |f_eps^(n)(x)|``.

    The coarse stage is a uniform grid on K plus dense local grids on every
    feature window that meets K; the second stage refines once around the
    coarse argmax.
    """
    if grid_points < 64:
        raise RejectedInput("grid_points must be >= 64")
    k.margin(net)
    parts = [k.grid(grid_points)]
    for c, hw in net.windows(eps):
        a, b = max(k.lo, c - hw), min(k.hi, c + hw)
        if a <= b:
            parts.append(np.linspace(a, b, WINDOW_POINTS))
    xs = np.unique(np.concatenate(parts))
    vals = np.abs(net._eval(eps, xs, n))
    if not np.all(np.isfinite(vals)):
        raise RejectedInput(f"non-finite values of {net.label} at eps={eps}, n={n}")
    i = int(np.argmax(vals))
    best = float(vals[i])
    if xs.size > 1:
        left = xs[i] - xs[i - 1] if i > 0 else 0.0
        right = xs[i + 1] - xs[i] if i < xs.size - 1 else 0.0
        fine = np.linspace(max(k.lo, xs[i] - left), min(k.hi, xs[i] + right), REFINE_POINTS)
        best = max(best, float(np.max(np.abs(net._eval(eps, fine, n)))))
    return best


def fit_power_law(eps_values: Sequence[float], sups: Sequence[float], min_points: int = 4) -> AsymptoticFit:
    """Fit a line through (ln eps, ln sup) over the entries with sup > 0."""
    e = np.asarray(eps_values, dtype=float)
    s = np.asarray(sups, dtype=float)
    pairs = tuple((float(a), float(b)) for a, b in zip(e, s))
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise RejectedInput("sup values must be finite and nonnegative")
    mask = s > 0
    if not mask.any():
        return AsymptoticFit(math.nan, math.nan, 1.0, pairs, degenerate=True)
    if mask.sum() < min_points:
        raise InsufficientData(f"only {int(mask.sum())} nonzero sups; need {min_points}")
    lx, ly = np.log(e[mask]), np.log(s[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    tiny = 1e-24 * max(1.0, float(np.sum(ly**2)))
    # a flat or exactly fitted series counts as a perfect fit
    r2 = 1.0 if ss_tot <= tiny or ss_res <= tiny else max(0.0, 1.0 - ss_res / ss_tot)
    return AsymptoticFit(float(slope), float(intercept), r2, pairs)


def fit_order(
    net: Net,
    k: CompactBox,
    n: int = 0,
    sched: EpsSchedule | Iterable[float] = DEFAULT_SCHEDULE,
    grid_points: int = 257,
) -> AsymptoticFit:
    eps_values = list(sched)
    sups = [sup_on_compact(net, k, e, n, grid_points) for e in eps_values]
    return fit_power_law(eps_values, sups)


def is_moderate(
    net: Net,
    k: CompactBox,
    orders: Iterable[int] = (0, 1, 2),
    sched: EpsSchedule = DEFAULT_SCHEDULE,
    slope_floor: float = -50.0,
    r2_min: float = 0.9,
) -> Classification:
    fits = {n: fit_order(net, k, n, sched) for n in orders}
    bad = [n for n, f in fits.items() if not f.degenerate and (f.slope < slope_floor or f.r_squared < r2_min)]
    detail = f"orders failing the floor {slope_floor} or r2 >= {r2_min}: {bad}" if bad else ""
    return Classification(not bad, "moderate", fits, detail)


def is_negligible(
    net: Net,
    k: CompactBox,
    sched: EpsSchedule | Iterable[float] = DEFAULT_SCHEDULE,
    slope_threshold: float = 10.0,
) -> Classification:
    # order 0 suffices: N(X) on a manifold is defined through sup |u_eps| alone
    fit = fit_order(net, k, 0, sched)
    ok = fit.degenerate or fit.slope >= slope_threshold
    detail = "exact zero on K" if fit.degenerate else f"slope {fit.slope:.4g} vs threshold {slope_threshold}"
    return Classification(ok, "negligible", {0: fit}, detail)


def is_ginfty(
    net: Net,
    k: CompactBox,
    orders: Iterable[int] = (0, 1, 2, 3, 4),
    sched: EpsSchedule = DEFAULT_SCHEDULE,
    spread_tol: float = 0.5,
) -> Classification:
    """One exponent for all tested orders: every slope within ``spread_tol`` below order 0's."""
    orders = sorted(set(orders))
    if not set(range(5)) <= set(orders):
        raise RejectedInput("is_ginfty needs at least orders 0..4")
    fits = {n: fit_order(net, k, n, sched) for n in orders}
    live = {n: f.slope for n, f in fits.items() if not f.degenerate}
    if not live:
        return Classification(True, "ginfty", fits, "exact zero on K")
    # a degenerate order-0 fit (f = 0 on K) forces every derivative to vanish too
    base = fits[0].slope if not fits[0].degenerate else 0.0
    worst = min(live.values())
    ok = worst >= base - spread_tol
    detail = f"order-0 slope {base:.4g}, min slope {worst:.4g}, spread {base - worst:.4g} (tol {spread_tol})"
    return Classification(ok, "ginfty", fits, detail)


# -- algebra -----------------------------------------------------------------


def _as_net(v) -> Net:
    return v if isinstance(v, Net) else constant(float(v))


def _intersect(a: Net, b: Net) -> tuple[float, float]:
    lo, hi = max(a.domain[0], b.domain[0]), min(a.domain[1], b.domain[1])
    if not lo < hi:
        raise RejectedInput(f"domains {a.domain} and {b.domain} do not intersect")
    return lo, hi


def _merged_features(*nets: Net):
    live = [n for n in nets if n.features is not None]
    if not live:
        return None
    if len(live) == 1:
        return live[0].features
    return lambda eps: [w for n in live for w in n.windows(eps)]


def _merged_step(a: Net, b: Net):
    if a.fd_step is None and b.fd_step is None:
        return None
    sa, sb = a.fd_step or default_fd_step, b.fd_step or default_fd_step
    return lambda eps: min(sa(eps), sb(eps))


def _product_spread(f: Net, g: Net) -> dict:
    # a product vanishes wherever either factor does
    s = [n.meta.get("spread") for n in (f, g) if n.meta.get("spread") is not None]
    if len(s) == 1 or (len(s) == 2 and s[0] == s[1]):
        return {"spread": s[0]}
    return {}


def constant(c: float, domain: tuple[float, float] = (-math.inf, math.inf)) -> Net:
    c = float(c)

    def body(eps, x, n):
        return np.full(x.shape, c if n == 0 else 0.0)

    return Net(body, domain, ALL_ORDERS, label=f"const({c:g})")


def zero(domain: tuple[float, float] = (-math.inf, math.inf)) -> Net:
    return Net(lambda eps, x, n: np.zeros(x.shape), domain, ALL_ORDERS, label="zero")


def separable(amplitude: Callable[[float], float], fn: Callable[[np.ndarray, int], np.ndarray],
              label: str, max_order: int = ALL_ORDERS,
              domain: tuple[float, float] = (-math.inf, math.inf)) -> Net:
    """Net ``amplitude(eps) * fn(x)`` where ``fn(x, n)`` supplies derivatives."""
    return Net(lambda eps, x, n: amplitude(eps) * fn(x, n), domain, max_order, label=label)


def add(f: Net, g) -> Net:
    g = _as_net(g)
    dom = _intersect(f, g)

    def body(eps, x, n):
        return f._eval(eps, x, n) + g._eval(eps, x, n)

    return Net(body, dom, max(f.max_analytic_order, g.max_analytic_order),
               label=f"({f.label} + {g.label})", features=_merged_features(f, g),
               fd_step=_merged_step(f, g))


def mul(f: Net, g) -> Net:
    """Pointwise product; derivatives by the Leibniz rule over each factor's own derivatives."""
    g = _as_net(g)
    dom = _intersect(f, g)

    def body(eps, x, n):
        if n == 0:
            return f._eval(eps, x, 0) * g._eval(eps, x, 0)
        out = np.zeros(x.shape)
        for j in range(n + 1):
            out = out + math.comb(n, j) * f._eval(eps, x, j) * g._eval(eps, x, n - j)
        return out

    return Net(body, dom, max(f.max_analytic_order, g.max_analytic_order),
               label=f"({f.label} * {g.label})", features=_merged_features(f, g),
               fd_step=_merged_step(f, g), meta=_product_spread(f, g))


def scale(f: Net, c: float) -> Net:
    c = float(c)
    return Net(lambda eps, x, n: c * f._eval(eps, x, n), f.domain, f.max_analytic_order,
               label=f"{c:g}*{f.label}", features=f.features, fd_step=f.fd_step, meta=f.meta)


def restrict(f: Net, interval: tuple[float, float]) -> Net:
    """Same net, narrower domain."""
    lo, hi = max(f.domain[0], interval[0]), min(f.domain[1], interval[1])
    if not lo < hi:
        raise RejectedInput(f"restriction to {interval} leaves nothing of {f.domain}")
    return Net(f.body, (lo, hi), f.max_analytic_order, label=f"{f.label}|({lo:g},{hi:g})",
               features=f.features, fd_step=f.fd_step, meta=f.meta)
