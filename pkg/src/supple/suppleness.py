"""Splitting a generalized function along two closed sets, with support certificates.

Given f with support in Z1 U Z2, the cutoff eta is a smoothed indicator of
the nearer-to-Z1 thickening of Z1; then f1 = f * eta and f2 = f * (1 - eta).
Support inclusions are certified probe by probe: each probe point x outside
the target set gets a ball whose radius follows the case it falls into, and
the relevant part is tested for negligibility on that ball.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientData, RejectedInput
from .geometry import ClosedSet, TildeSet, tilde_set
from .mollifier import LINEAR, LOG, Width, smooth_indicator
from .nets import (DEFAULT_SCHEDULE, AsymptoticFit, Classification, CompactBox, EpsSchedule, Net,
                   constant, fit_power_law, is_ginfty, mul, sup_on_compact)

EXACT_ZERO = "exact_zero"
NEGLIGIBLE = "negligible_slope"
FAIL = "FAIL"

# which ball the argument uses at a probe point
CASES = {
    "in_tilde": "f1: x in the thickening but off Z1; radius d(x, Z1)/2, f itself vanishes there",
    "off_tilde": "f1: x off the thickening; radius d(x, thickening)/2, the cutoff vanishes there",
    "off_support": "f2: x off Z1 and Z2; radius d(x, Z)/2, f itself vanishes there",
    "in_z1": "f2: x in Z1 off Z2; radius min(d(x, Z2), delta)/2, the cutoff is 1 there",
}


@dataclass(frozen=True)
class Probe:
    x: float
    part: str  # "f1" (certify supp f1 in Z1) or "f2"

    def __post_init__(self):
        if self.part not in ("f1", "f2"):
            raise RejectedInput(f"probe part must be 'f1' or 'f2', got {self.part!r}")
        if not math.isfinite(self.x):
            raise RejectedInput("probe location must be finite")


@dataclass(frozen=True)
class ProbeResult:
    x: float
    part: str
    case: str
    radius: float
    eps0: float
    fit: AsymptoticFit | None
    verdict: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "part": self.part,
            "target": "Z1" if self.part == "f1" else "Z2",
            "case": self.case,
            "radius": self.radius,
            "eps0": self.eps0,
            "verdict": self.verdict,
            "detail": self.detail,
            "fit": self.fit.to_dict() if self.fit is not None else None,
        }


@dataclass(frozen=True)
class SupportCertificate:
    probes: tuple[ProbeResult, ...]
    slope_threshold: float = 10.0

    @property
    def failures(self) -> list[ProbeResult]:
        return [p for p in self.probes if p.verdict == FAIL]

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.ok

    def counts(self) -> dict[str, int]:
        out = {EXACT_ZERO: 0, NEGLIGIBLE: 0, FAIL: 0}
        for p in self.probes:
            out[p.verdict] += 1
        return out

    def to_dict(self) -> dict:
        return {"ok": self.ok, "counts": self.counts(), "slope_threshold": self.slope_threshold,
                "probes": [p.to_dict() for p in self.probes]}


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    f: Net
    f1: Net
    f2: Net
    eta: Net
    tilde: TildeSet
    z1: ClosedSet
    z2: ClosedSet
    delta: float
    width: Width
    window: tuple[float, float]
    certificate: SupportCertificate | None = None
    regularity: dict = field(default_factory=dict)

    @property
    def tilde_intervals(self) -> tuple[tuple[float, float], ...]:
        return self.tilde.intervals

    @property
    def width_mode(self) -> str:
        return self.width.mode

    def with_certificate(self, cert: SupportCertificate) -> "DecompositionResult":
        return DecompositionResult(self.f, self.f1, self.f2, self.eta, self.tilde, self.z1, self.z2,
                                   self.delta, self.width, self.window, cert, self.regularity)

    def to_dict(self) -> dict:
        d = {
            "delta": self.delta,
            "width": self.width.to_json(),
            "window": list(self.window),
            "tilde_intervals": [list(iv) for iv in self.tilde.intervals],
        }
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        if self.regularity:
            d["regularity"] = {k: v.to_dict() for k, v in sorted(self.regularity.items())}
        return d


def default_delta(window: tuple[float, float]) -> float:
    return (window[1] - window[0]) / 16.0


def _support_hull(z1: ClosedSet, z2: ClosedSet, domain: tuple[float, float]):
    hulls = [z.hull() for z in (z1, z2) if not z.is_empty]
    if not hulls:
        return None
    lo = max(min(h[0] for h in hulls), domain[0])
    hi = min(max(h[1] for h in hulls), domain[1])
    return (lo, hi) if lo <= hi else None


def decompose(f: Net, z1: ClosedSet, z2: ClosedSet, delta: float | None = None,
              window: tuple[float, float] = (-2.0, 2.0), width: Width = LINEAR,
              grid_points: int = 200_001) -> DecompositionResult:
    """f1 = f * eta, f2 = f * (1 - eta) with eta the smoothed indicator of the Z1-thickening.

    ``window`` is a geometric window for the interval decomposition; it must
    contain the support hull enlarged by delta plus the largest cutoff width.
    """
    lo, hi = map(float, window)
    if not lo < hi:
        raise RejectedInput(f"bad window {window}")
    delta = default_delta((lo, hi)) if delta is None else float(delta)
    if not delta > 0:
        raise RejectedInput("delta must be positive")
    hull = _support_hull(z1, z2, f.domain)
    if hull is not None:
        reach = delta + (width.value if width.mode == "const" else width.cap)
        need = (hull[0] - reach, hull[1] + reach)
        if need[0] < lo or need[1] > hi:
            raise RejectedInput(f"window [{lo}, {hi}] too small: need at least [{need[0]:.6g}, {need[1]:.6g}]")
    if z1.is_empty:
        tilde = TildeSet(z1, z2, delta, (lo, hi))
    else:
        tilde = tilde_set(z1, z2, delta, (lo, hi), grid_points)
        if tilde.clipped:
            raise RejectedInput(f"thickening of Z1 reaches the window edge of [{lo}, {hi}]")
    eta = smooth_indicator(list(tilde.intervals), width)
    f1 = mul(f, eta)
    f2 = mul(f, constant(1.0) - eta)
    return DecompositionResult(f, f1, f2, eta, tilde, z1, z2, delta, width, (lo, hi))


# -- certificates -------------------------------------------------------------


def _spread_of(f: Net, spread) -> Width | None:
    """How far beyond its support f_eps can be nonzero, as a width rule."""
    s = spread if spread is not None else f.meta.get("spread")
    if s is None or isinstance(s, Width):
        return s
    if s == "linear":
        return LINEAR
    if s == "log":
        return LOG
    raise RejectedInput(f"unknown spread rule {s!r}")


def classify_probe(res: DecompositionResult, probe: Probe, support: ClosedSet, spread: Width | None):
    """Case, ball radius and eps0 for a probe; raises if the probe sits in its target set."""
    x = probe.x
    lo, hi = res.window
    if not lo < x < hi:
        raise RejectedInput(f"probe {x} outside window [{lo}, {hi}]")
    target = res.z1 if probe.part == "f1" else res.z2
    if not target.is_empty and target.distance(x) == 0.0:
        raise RejectedInput(f"probe inside target set: x={x} lies in {'Z1' if probe.part == 'f1' else 'Z2'}")

    def from_spread(r):
        return 1.0 if spread is None else spread.eps_below(r)

    d_support = support.distance(x) if not support.is_empty else math.inf
    if probe.part == "f1":
        if not res.z1.is_empty and bool(res.tilde.contains(x)):
            case, r = "in_tilde", 0.5 * res.z1.distance(x)
            eps0 = from_spread(r)
        else:
            b = float(res.tilde.distance(x))
            case, r = "off_tilde", 0.5 * b
            eps0 = res.width.eps_below(r)
    else:
        if res.z1.is_empty or res.z1.distance(x) > 0.0:
            case, r = "off_support", 0.5 * d_support
            eps0 = from_spread(r)
        else:
            h = res.z2.distance(x) if not res.z2.is_empty else math.inf
            case, r = "in_z1", 0.5 * min(h, res.delta)
            eps0 = 1.0
    dom_lo, dom_hi = res.f.domain
    cap = min(x - lo, hi - x, x - dom_lo, dom_hi - x)
    if r > cap:
        r = 0.999 * cap
        if case in ("in_tilde", "off_support"):
            eps0 = from_spread(r)
        elif case == "off_tilde":
            eps0 = res.width.eps_below(r)
    return case, float(r), float(eps0)


def _run_probe(res: DecompositionResult, probe: Probe, support: ClosedSet, spread, sched: EpsSchedule,
               slope_threshold: float, grid_points: int) -> ProbeResult:
    case, r, eps0 = classify_probe(res, probe, support, spread)
    net = res.f1 if probe.part == "f1" else res.f2
    if not r > 0 or not math.isfinite(r):
        return ProbeResult(probe.x, probe.part, case, r, eps0, None, FAIL, "degenerate ball radius")
    core = r * (1.0 - 1e-9)
    box = CompactBox(probe.x - core, probe.x + core)
    sub = [e for e in sched if e <= eps0]
    if not sub:
        return ProbeResult(probe.x, probe.part, case, r, eps0, None, FAIL,
                           f"no schedule entry below eps0={eps0:.3g}")
    sups = [sup_on_compact(net, box, e, 0, grid_points) for e in sub]
    if all(s == 0.0 for s in sups):
        fit = fit_power_law(sub, sups)
        return ProbeResult(probe.x, probe.part, case, r, eps0, fit, EXACT_ZERO,
                           f"zero at every sample for {len(sub)} eps <= {eps0:.3g}")
    try:
        fit = fit_power_law(sub, sups)
    except InsufficientData as exc:
        return ProbeResult(probe.x, probe.part, case, r, eps0, None, FAIL, str(exc))
    if fit.slope >= slope_threshold:
        return ProbeResult(probe.x, probe.part, case, r, eps0, fit, NEGLIGIBLE,
                           f"slope {fit.slope:.4g} >= {slope_threshold}")
    return ProbeResult(probe.x, probe.part, case, r, eps0, fit, FAIL,
                       f"slope {fit.slope:.4g} < {slope_threshold}")


def worker_count(jobs: int) -> int:
    cap = os.environ.get("TOOL_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, int(cap))
        except ValueError:
            raise RejectedInput(f"TOOL_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(n, jobs))


def certify_support(res: DecompositionResult, probes: Sequence[Probe] | None = None,
                    f_ref_support: ClosedSet | None = None, spread=None,
                    sched: EpsSchedule = DEFAULT_SCHEDULE, slope_threshold: float = 10.0,
                    grid_points: int = 257) -> SupportCertificate:
    """Check supp f1 in Z1 and supp f2 in Z2 on balls around the probes.

    ``f_ref_support`` is the set containing supp f (default Z1 U Z2);
    ``spread`` says how far beyond it f_eps may be nonzero (default taken
    from the net's metadata).  Only schedule entries with eps <= eps0 are
    used, where eps0 is the point below which the argument forces an exact
    zero on the ball.
    """
    support = f_ref_support if f_ref_support is not None else res.z1 | res.z2
    spread = _spread_of(res.f, spread)
    if probes is None:
        probes = default_probes(res, support=support, spread=spread, sched=sched)
    probes = list(probes)
    for p in probes:
        classify_probe(res, p, support, spread)  # reject bad probes before any work

    def job(p):
        return _run_probe(res, p, support, spread, sched, slope_threshold, grid_points)

    with ThreadPoolExecutor(max_workers=worker_count(len(probes))) as pool:
        results = tuple(pool.map(job, probes))
    return SupportCertificate(results, slope_threshold)


def default_probes(res: DecompositionResult, count: int = 24, support: ClosedSet | None = None,
                   spread=None, sched: EpsSchedule = DEFAULT_SCHEDULE, min_entries: int = 4) -> list[Probe]:
    """Probes spread over the four cases, each leaving at least ``min_entries`` schedule entries."""
    support = support if support is not None else res.z1 | res.z2
    spread = _spread_of(res.f, spread)
    lo, hi = res.window
    span = hi - lo
    cands = list(np.linspace(lo + 0.01 * span, hi - 0.01 * span, 97))
    for z in (res.z1, res.z2):
        if z.is_empty:
            continue
        members = z.sample_points(lo, hi, resolution=1e-4)
        if members.size > 40:
            members = members[np.linspace(0, members.size - 1, 40).astype(int)]
        for m in members:
            cands += [m, m + 0.5 * res.delta, m - 0.5 * res.delta, m + 0.25 * res.delta]
    cands = sorted({round(float(c), 12) for c in cands if lo < c < hi})
    last = sorted(sched.values)[min_entries - 1]

    by_case: dict[str, list[Probe]] = {c: [] for c in CASES}
    for x in cands:
        for part in ("f1", "f2"):
            p = Probe(x, part)
            try:
                case, r, eps0 = classify_probe(res, p, support, spread)
            except RejectedInput:
                continue
            if r >= 1e-4 and eps0 >= last:
                by_case[case].append(p)
    picked: list[Probe] = []
    live = [c for c in CASES if by_case[c]]
    per = {c: 0 for c in live}
    total = 0
    while total < count and any(per[c] < len(by_case[c]) for c in live):
        for c in live:
            if per[c] < len(by_case[c]) and total < count:
                per[c] += 1
                total += 1
    for c in live:
        pool = by_case[c]
        idx = np.unique(np.linspace(0, len(pool) - 1, per[c]).round().astype(int)) if per[c] else []
        picked += [pool[i] for i in idx]
    return sorted(picked, key=lambda p: (p.x, p.part))


# -- the G-infinity variant ---------------------------------------------------


def ginf_decompose(f: Net, z1: ClosedSet, z2: ClosedSet, delta: float | None = None,
                   window: tuple[float, float] = (-2.0, 2.0), box: CompactBox | None = None,
                   orders: Iterable[int] = (0, 1, 2, 3, 4), sched: EpsSchedule = DEFAULT_SCHEDULE,
                   spread_tol: float = 0.5) -> DecompositionResult:
    """decompose with width 1/|ln eps|, reporting whether f, f1, f2 pass is_ginfty on ``box``."""
    if max(sched.values) > 2.0**-3:
        raise RejectedInput("log-width runs need a schedule with eps <= 2^-3")
    res = decompose(f, z1, z2, delta, window, LOG)
    box = box or CompactBox(*res.window)
    orders = tuple(orders)
    reg: dict[str, Classification] = {}
    for name, net in (("f", res.f), ("f1", res.f1), ("f2", res.f2)):
        reg[name] = is_ginfty(net, box, orders, sched, spread_tol)
    return DecompositionResult(res.f, res.f1, res.f2, res.eta, res.tilde, res.z1, res.z2, res.delta,
                               res.width, res.window, None, reg)
