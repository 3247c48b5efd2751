"""Compactly supported bumps, scaled mollifier families and smoothed indicators."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from numpy.polynomial import Polynomial
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import IllConditioned, RejectedInput
from .nets import Net, zero

MAX_ORDER = 12
CDF_NODES = 4097
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


@functools.lru_cache(maxsize=None)
def _bump_polys(max_order: int = MAX_ORDER) -> tuple[Polynomial, ...]:
    """Q_n with d^n/dx^n exp(-1/(1-x^2)) = Q_n(x) (1-x^2)^(-2n) exp(-1/(1-x^2))."""
    x = Polynomial([0.0, 1.0])
    s = Polynomial([1.0, 0.0, -1.0])
    polys = [Polynomial([1.0])]
    for n in range(max_order):
        q = polys[-1]
        polys.append(q.deriv() * s * s + 4 * n * x * q * s - 2 * x * q)
    return tuple(polys)


def _raw_bump(t: np.ndarray, n: int = 0) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = np.abs(t) < 1.0
    if np.any(inside):
        ti = t[inside]
        s = 1.0 - ti * ti
        with np.errstate(under="ignore"):
            out[inside] = _bump_polys()[n](ti) * np.exp(-1.0 / s - 2 * n * np.log(s))
    return out


def _dense_sup(fn: Callable[[np.ndarray], np.ndarray]) -> float:
    t = np.linspace(-1.0, 1.0, 20001)
    v = np.abs(fn(t))
    i = int(np.argmax(v))
    fine = np.linspace(t[max(i - 1, 0)], t[min(i + 1, t.size - 1)], 201)
    return float(max(v[i], np.max(np.abs(fn(fine)))))


@dataclass(frozen=True, eq=False)
class Bump:
    """c * exp(-1/(1-x^2)) on (-1, 1), zero outside, with unit integral."""

    norm: float
    cdf_nodes: np.ndarray
    cdf_values: np.ndarray
    max_order: int = MAX_ORDER
    radius: float = 1.0
    label: str = "bump"
    _cdf: PchipInterpolator = field(init=False, repr=False)
    _sups: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_cdf", PchipInterpolator(self.cdf_nodes, self.cdf_values))
        object.__setattr__(self, "_sups", tuple(_dense_sup(lambda t, n=n: self.profile(t, n))
                                                for n in range(self.max_order + 1)))

    def profile(self, t, n: int = 0) -> np.ndarray:
        if n > self.max_order:
            raise RejectedInput(f"bump derivatives available up to order {self.max_order}")
        return self.norm * _raw_bump(t, n)

    def cdf(self, t) -> np.ndarray:
        """Antiderivative from -1; exactly 0 left of -1 and exactly 1 right of 1."""
        t = np.asarray(t, dtype=float)
        out = np.clip(self._cdf(np.clip(t, -1.0, 1.0)), 0.0, 1.0)
        out = np.where(t <= -1.0, 0.0, out)
        return np.where(t >= 1.0, 1.0, out)

    def sup_abs(self, n: int = 0) -> float:
        return self._sups[n]


@functools.lru_cache(maxsize=None)
def normalize_bump(nodes: int = CDF_NODES) -> Bump:
    """The unit-mass bump, its normalization computed by adaptive quadrature."""
    mass, _ = integrate.quad(lambda t: float(_raw_bump(t)), -1.0, 1.0, points=[0.0],
                             epsabs=1e-300, epsrel=1e-13, limit=200)
    norm = 1.0 / mass
    t = np.linspace(-1.0, 1.0, nodes)
    mid, half = 0.5 * (t[:-1] + t[1:]), 0.5 * (t[1:] - t[:-1])
    cells = (norm * _raw_bump(mid[:, None] + half[:, None] * _GL_NODES) * _GL_WEIGHTS).sum(axis=1) * half
    values = np.concatenate([[0.0], np.cumsum(cells)])
    values /= values[-1]
    return Bump(norm, t, values)


@dataclass(frozen=True, eq=False)
class MomentBump:
    """p(x) * bump(x) with p of degree M chosen so moments 1..M vanish."""

    base: Bump
    order: int
    coeffs: np.ndarray
    radius: float = 1.0
    _polys: tuple[Polynomial, ...] = field(init=False, repr=False)
    _sups: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        p = Polynomial(self.coeffs)
        derivs = [p]
        for _ in range(self.base.max_order):
            derivs.append(derivs[-1].deriv())
        object.__setattr__(self, "_polys", tuple(derivs))
        object.__setattr__(self, "_sups", tuple(_dense_sup(lambda t, n=n: self.profile(t, n))
                                                for n in range(self.max_order + 1)))

    @property
    def max_order(self) -> int:
        return self.base.max_order

    @property
    def label(self) -> str:
        return f"moment_bump(M={self.order})"

    def profile(self, t, n: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for k in range(n + 1):
            out = out + math.comb(n, k) * self._polys[k](t) * self.base.profile(t, n - k)
        return out

    def sup_abs(self, n: int = 0) -> float:
        return self._sups[n]


def moment_bump(order: int, base: Bump | None = None) -> MomentBump:
    """Solve the Hankel moment system for the polynomial correction of the bump."""
    if not 0 <= order <= 10:
        raise RejectedInput("moment order must be in 0..10")
    base = base or normalize_bump()
    moments = np.array([
        integrate.quad(lambda t, k=k: float(t**k * base.profile(t)), -1.0, 1.0, points=[0.0],
                       epsabs=1e-300, epsrel=1e-13, limit=200)[0]
        for k in range(2 * order + 1)
    ])
    hankel = scipy.linalg.hankel(moments[: order + 1], moments[order:])
    cond = np.linalg.cond(hankel, 1)
    if not cond <= 1e12:
        raise IllConditioned(f"moment system condition estimate {cond:.3g} exceeds 1e12")
    rhs = np.zeros(order + 1)
    rhs[0] = 1.0
    coeffs = scipy.linalg.lu_solve(scipy.linalg.lu_factor(hankel), rhs)
    return MomentBump(base, order, coeffs)


def kernel_eps(kernel, eps: float, x, n: int = 0) -> np.ndarray:
    """phi_eps^(n)(x) = eps^(-1-n) * phi^(n)(x / eps)."""
    return eps ** (-1 - n) * kernel.profile(np.asarray(x, dtype=float) / eps, n)


def scaled(kernel=None) -> Net:
    """The mollifier family x -> eps^-1 phi(x / eps)."""
    kernel = kernel or normalize_bump()
    return Net(lambda eps, x, n: kernel_eps(kernel, eps, x, n),
               max_analytic_order=kernel.max_order, label=f"scaled({kernel.label})",
               features=lambda eps: [(0.0, eps * kernel.radius)])


# -- widths ---------------------------------------------------------------------


@dataclass(frozen=True)
class Width:
    """Transition width as a function of eps.

    ``linear``: eps; ``log``: 1/|ln eps|; ``const``: a fixed value.  Capped so
    the net stays defined on all of (0, 1).
    """

    mode: str = "linear"
    cap: float = 0.5
    value: float = 0.0

    def __post_init__(self):
        if self.mode not in ("linear", "log", "const"):
            raise RejectedInput(f"unknown width mode {self.mode!r}")
        if self.mode == "const" and not 0 < self.value:
            raise RejectedInput("const width needs a positive value")

    def __call__(self, eps: float) -> float:
        if self.mode == "const":
            return self.value
        w = eps if self.mode == "linear" else 1.0 / abs(math.log(eps))
        return min(w, self.cap)

    def eps_below(self, r: float) -> float:
        """Largest eps in (0, 1) with width(eps) <= r (0 if none, 1 if all)."""
        if self.mode == "const":
            return 1.0 if self.value <= r else 0.0
        if r >= self.cap:
            return 1.0
        if r <= 0:
            return 0.0
        return r if self.mode == "linear" else math.exp(-1.0 / r)

    def to_json(self) -> dict:
        d = {"mode": self.mode, "cap": self.cap}
        if self.mode == "const":
            d["value"] = self.value
        return d


LINEAR = Width("linear")
LOG = Width("log")


def merge_intervals(intervals: Sequence[tuple[float, float]], gap: float = 0.0) -> list[tuple[float, float]]:
    """Union of closed intervals, also joining pieces separated by at most ``gap``."""
    out: list[list[float]] = []
    for a, b in sorted(intervals):
        if out and a - out[-1][1] <= gap:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def smooth_indicator(intervals: Sequence[tuple[float, float]], width: Callable[[float], float] = LINEAR,
                     kernel: Bump | None = None) -> Net:
    """eta_eps = 1_{A^(w/2)} * phi_(w/2) for a finite union A of closed intervals.

    Equals 1 on A, 0 at distance >= w from A, and lies in [0, 1].  Intervals
    whose half-width enlargements touch are merged first.
    """
    ivs = [(float(a), float(b)) for a, b in intervals]
    if not ivs:
        return zero()
    for a, b in ivs:
        if not a <= b:
            raise RejectedInput(f"interval [{a}, {b}] has a > b")
    kernel = kernel or normalize_bump()

    def groups(eps):
        w = width(eps)
        if not 0.0 < w < 1.0:
            raise RejectedInput(f"width {w} at eps={eps} must lie in (0, 1)")
        return 0.5 * w, merge_intervals(ivs, gap=w)

    def body(eps, x, n):
        h, grp = groups(eps)
        out = np.zeros(x.shape)
        for p, q in grp:
            # (x - p)/h + 1 keeps the plateau exactly 1 for x in [p, q]
            left = (x - p) / h + 1.0
            right = (x - q) / h - 1.0
            if n == 0:
                out = out + (kernel.cdf(left) - kernel.cdf(right))
            else:
                out = out + h ** (-n) * (kernel.profile(left, n - 1) - kernel.profile(right, n - 1))
        return out

    def features(eps):
        h, grp = groups(eps)
        return [(c, 2 * h) for p, q in grp for c in (p - h, q + h)]

    return Net(body, max_analytic_order=kernel.max_order,
               label=f"eta[{len(ivs)} intervals, {getattr(width, 'mode', 'custom')} width]",
               features=features, meta={"spread": width})
