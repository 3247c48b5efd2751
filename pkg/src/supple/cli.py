"""Scenario runner: ``supple run <scenario.json>`` and ``supple samples <scenario.json>``.

A scenario is a JSON object with a ``kind`` and the objects that kind needs.
Reports are JSON with sorted keys; apart from ``timestamp`` and
``wall_clock_s`` they are identical across runs of the same scenario.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .embedding import AtomicDistribution, Example2Family, embed, example2_net, pairing_partial_sums, \
    plateau_test_function
from .errors import RejectedInput
from .geometry import ClosedSet, assert2_check
from .manifold import (CircleSet, certify_circle, check_transformation_law, circle_embed, circle_zero,
                       manifold_decompose, non_flabby_demo, partition_of_unity, reconstruct,
                       inverse_power_net)
from .mollifier import LINEAR, LOG, Width, moment_bump, scaled, smooth_indicator
from .nets import (CompactBox, EpsSchedule, Net, add, constant, fit_order, is_ginfty, is_moderate,
                   is_negligible, mul, separable, zero)
from .suppleness import Probe, certify_support, decompose, ginf_decompose

KINDS = ("classify", "decompose", "ginf_decompose", "manifold_decompose", "example2", "non_flabby", "assert2")
VOLATILE = ("timestamp", "wall_clock_s")


class ScenarioError(RejectedInput):
    """Scenario file does not parse or validate."""


def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    if key not in obj:
        raise ScenarioError(f"{where}: missing field '{key}'")
    return obj[key]


# -- object decoders ------------------------------------------------------------


def parse_width(spec, where: str = "width") -> Width:
    if spec is None or spec == "linear":
        return LINEAR
    if spec == "log":
        return LOG
    if isinstance(spec, dict):
        return Width(spec.get("mode", "const"), float(spec.get("cap", 0.5)), float(spec.get("value", 0.0)))
    if isinstance(spec, (int, float)):
        return Width("const", value=float(spec))
    raise ScenarioError(f"{where}: expected 'linear', 'log', a number or an object")


def parse_schedule(spec, where: str = "schedule") -> EpsSchedule:
    if spec is None:
        return EpsSchedule.geometric()
    if isinstance(spec, list):
        return EpsSchedule(tuple(float(e) for e in spec))
    if isinstance(spec, dict):
        return EpsSchedule.geometric(int(spec.get("k_min", 3)), int(spec.get("k_max", 20)))
    raise ScenarioError(f"{where}: expected a list of eps values or {{k_min, k_max}}")


def parse_set(spec, where: str) -> ClosedSet:
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: expected a set object")
    try:
        return ClosedSet.from_json(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _kernel(spec):
    if spec is None:
        return None
    return moment_bump(int(_need(spec, "moment_order", "kernel")))


def parse_net(spec, where: str = "net") -> Net:
    """Nets by construction: distributions, closed-form families, and their sums/products."""
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: expected an object")
    if "type" not in spec and ("atoms" in spec or "example2" in spec):
        parts = []
        if spec.get("atoms"):
            parts.append(embed(AtomicDistribution.from_json(spec), _kernel(spec.get("kernel"))))
        if "example2" in spec:
            e2 = spec["example2"] or {}
            fam = Example2Family(float(e2.get("scale", 1.0)), bool(e2.get("center", True)))
            parts.append(example2_net(fam, _kernel(spec.get("kernel"))))
        if not parts:
            return zero()
        net = parts[0]
        for p in parts[1:]:
            net = add(net, p)
        return net
    kind = _need(spec, "type", where)
    if kind == "zero":
        return zero()
    if kind == "constant":
        return constant(float(_need(spec, "value", where)))
    if kind == "scaled_bump":
        return scaled(_kernel(spec.get("kernel")))
    if kind == "indicator":
        ivs = [tuple(map(float, iv)) for iv in _need(spec, "intervals", where)]
        return smooth_indicator(ivs, parse_width(spec.get("width"), f"{where}.width"))
    if kind == "power_sin":
        p = float(spec.get("power", 2.0))
        return separable(lambda e: e**p, _sin_derivs, f"eps^{p:g} sin x")
    if kind == "exp_sin":
        return separable(lambda e: math.exp(-1.0 / e), _sin_derivs, "exp(-1/eps) sin x")
    if kind == "inverse_power":
        return inverse_power_net()
    if kind in ("sum", "product"):
        items = _need(spec, "terms" if kind == "sum" else "factors", where)
        nets = [parse_net(s, f"{where}[{i}]") for i, s in enumerate(items)]
        if not nets:
            raise ScenarioError(f"{where}: empty {kind}")
        out = nets[0]
        for n in nets[1:]:
            out = add(out, n) if kind == "sum" else mul(out, n)
        return out
    raise ScenarioError(f"{where}: unknown net type {kind!r}")


def _sin_derivs(x, n):
    return np.sin(x + 0.5 * math.pi * n)


def parse_circle_net(spec, where: str = "u"):
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: expected an object")
    atoms = spec.get("atoms", [])
    if not atoms:
        return circle_zero()
    pairs = []
    for i, a in enumerate(atoms):
        pairs.append((float(_need(a, "angle", f"{where}.atoms[{i}]")), float(a.get("coef", 1.0))))
    return circle_embed(pairs)


def parse_circle_set(spec, where: str) -> CircleSet:
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: expected an angle-set object")
    return CircleSet.from_json(spec)


def _deltas(sc) -> list[float]:
    d = sc.get("delta", 0.1)
    return [float(v) for v in (d if isinstance(d, list) else [d])]


def _box(spec, where: str = "box") -> CompactBox:
    if not (isinstance(spec, list) and len(spec) == 2):
        raise ScenarioError(f"{where}: expected [lo, hi]")
    return CompactBox(float(spec[0]), float(spec[1]))


def _additivity(f, f1, f2, rng, count: int, window) -> float:
    """Max relative deviation |f1 + f2 - f| / max(1, |f|) over random (eps, x)."""
    worst = 0.0
    eps = 2.0 ** -rng.uniform(3, 20, count)
    xs = rng.uniform(window[0], window[1], count)
    for e, x in zip(eps, xs):
        v = f.eval(e, x)
        dev = abs(f1.eval(e, x) + f2.eval(e, x) - v) / max(1.0, abs(v))
        worst = max(worst, dev)
    return worst


# -- pipelines -----------------------------------------------------------------


def run_classify(sc, rng) -> tuple[dict, int]:
    net = parse_net(_need(sc, "net", "scenario"))
    box = _box(_need(sc, "box", "scenario"))
    sched = parse_schedule(sc.get("schedule"))
    out = {}
    for test in sc.get("tests", ["moderate", "negligible", "ginfty"]):
        if test == "moderate":
            out[test] = is_moderate(net, box, sc.get("orders", [0, 1, 2]), sched).to_dict()
        elif test == "negligible":
            out[test] = is_negligible(net, box, sched).to_dict()
        elif test == "ginfty":
            out[test] = is_ginfty(net, box, sc.get("ginfty_orders", [0, 1, 2, 3, 4]), sched).to_dict()
        else:
            raise ScenarioError(f"tests: unknown test {test!r}; valid: moderate, negligible, ginfty")
    return out, 0


def _probes(sc, res):
    spec = sc.get("probes", "auto")
    if spec == "auto":
        return None
    if not isinstance(spec, list):
        raise ScenarioError("probes: expected 'auto' or a list of {x, part}")
    return [Probe(float(_need(p, "x", f"probes[{i}]")), str(_need(p, "part", f"probes[{i}]")))
            for i, p in enumerate(spec)]


def run_decompose(sc, rng, log_width: bool = False) -> tuple[dict, int]:
    f = parse_net(_need(sc, "net", "scenario"))
    z1 = parse_set(_need(sc, "z1", "scenario"), "z1")
    z2 = parse_set(_need(sc, "z2", "scenario"), "z2")
    window = tuple(float(v) for v in sc.get("window", [-2.0, 2.0]))
    sched = parse_schedule(sc.get("schedule"))
    spread = sc.get("spread")
    spread = parse_width(spread, "spread") if spread is not None else None
    runs, code = [], 0
    for delta in _deltas(sc):
        if log_width:
            box = _box(sc["box"]) if "box" in sc else None
            res = ginf_decompose(f, z1, z2, delta, window, box, sc.get("orders", [0, 1, 2, 3, 4]), sched)
        else:
            res = decompose(f, z1, z2, delta, window, parse_width(sc.get("width")))
        entry = res.to_dict()
        entry["additivity_max_rel_dev"] = _additivity(f, res.f1, res.f2, rng,
                                                      int(sc.get("additivity_samples", 1000)), window)
        if sc.get("certify", True):
            cert = certify_support(res, _probes(sc, res), spread=spread, sched=sched)
            entry["certificate"] = cert.to_dict()
            if not cert.ok:
                code = 2
        runs.append(entry)
    return {"runs": runs}, code


def run_manifold(sc, rng) -> tuple[dict, int]:
    u = parse_circle_net(_need(sc, "u", "scenario"))
    z1 = parse_circle_set(_need(sc, "z1", "scenario"), "z1")
    z2 = parse_circle_set(_need(sc, "z2", "scenario"), "z2")
    pou = partition_of_unity(u.atlas)
    grid = np.linspace(0.0, 2 * math.pi, 10_000, endpoint=False)
    sumsq = float(np.max(np.abs(sum(pou.chi(a, grid) ** 2 for a in pou.plateaus) - 1.0)))
    recon = max(float(np.max(np.abs(reconstruct(u, pou, e, grid) - u.eval(e, grid)))) for e in (2.0**-3, 2.0**-6))
    runs, code = [], 0
    for delta in _deltas(sc):
        res = manifold_decompose(u, z1, z2, delta, pou)
        eps = 2.0 ** -rng.uniform(3, 20, 1000)
        th = rng.uniform(0.0, 2 * math.pi, 1000)
        dev = max(abs(res.u1.eval(e, t) + res.u2.eval(e, t) - u.eval(e, t)) / max(1.0, abs(u.eval(e, t)))
                  for e, t in zip(eps, th))
        law1, law2 = check_transformation_law(res.u1), check_transformation_law(res.u2)
        entry = res.to_dict()
        entry.update({
            "additivity_max_rel_dev": dev,
            "transformation_law": {"u1": {"ok": law1[0], "max_dev": law1[1]},
                                   "u2": {"ok": law2[0], "max_dev": law2[1]}},
        })
        probes = sc.get("probes", "auto")
        probes = None if probes == "auto" else [(float(p["angle"]), str(p["part"])) for p in probes]
        cert = certify_circle(res, probes, parse_schedule(sc.get("schedule")))
        entry["certificate"] = cert.to_dict()
        if not cert.ok:
            code = 2
        runs.append(entry)
    law = check_transformation_law(u)
    return {"partition_sumsq_max_dev": sumsq, "reconstruction_max_dev": recon,
            "input_transformation_law": {"ok": law[0], "max_dev": law[1]}, "runs": runs}, code


def run_example2(sc, rng) -> tuple[dict, int]:
    fam = Example2Family(float(sc.get("scale", 1.0)), bool(sc.get("center", True)))
    net = example2_net(fam)
    box = _box(sc.get("box", [-0.1, 0.1]))
    fit = fit_order(net, box, 0, parse_schedule(sc.get("schedule")))
    n_list = [int(n) for n in sc.get("n_list", [10, 1000, 100000])]
    psi = plateau_test_function(-1.0, 1.0, 0.5)
    sums = pairing_partial_sums(psi, n_list, fam.scale)
    bound = net.meta["truncation_bound"]
    return {
        "order0_fit": fit.to_dict(),
        "partial_sums": [{"N": n, "S_N": s} for n, s in zip(n_list, sums)],
        "truncation": [{"eps": e, "N": net.meta["truncation_count"](e), "bound": bound(e)}
                       for e in (2.0**-3, 2.0**-10, 2.0**-20)],
    }, 0


def run_non_flabby(sc, rng) -> tuple[dict, int]:
    return {"table": non_flabby_demo(sc.get("c_list", [1.0, 0.5, 0.2, 0.1]),
                                     parse_schedule(sc.get("schedule")))}, 0


def run_assert2(sc, rng) -> tuple[dict, int]:
    z1 = parse_set(_need(sc, "z1", "scenario"), "z1")
    z2 = parse_set(_need(sc, "z2", "scenario"), "z2")
    seed = int(sc.get("seed", 0))
    rows = []
    for delta in _deltas(sc):
        rep = assert2_check(z1, z2, delta, int(sc.get("sample_count", 100_000)), seed)
        rows.append({"delta": delta, **rep.to_dict()})
    return {"checks": rows}, 0 if all(r["ok"] for r in rows) else 2


PIPELINES = {
    "classify": run_classify,
    "decompose": run_decompose,
    "ginf_decompose": lambda sc, rng: run_decompose(sc, rng, log_width=True),
    "manifold_decompose": run_manifold,
    "example2": run_example2,
    "non_flabby": run_non_flabby,
    "assert2": run_assert2,
}


# -- files ----------------------------------------------------------------------


def bundled_scenarios() -> list[str]:
    root = resources.files("supple") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.name.endswith(".json") else p.name + ".json"
    candidate = resources.files("supple") / "scenarios" / name
    if str(p.parent) in ("", ".") and candidate.is_file():
        return Path(str(candidate))
    raise ScenarioError(f"{path}: no such file or bundled scenario")


def load_scenario(path: str) -> dict:
    p = resolve(path)
    text = p.read_text()
    try:
        sc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validate(sc)
    return sc


def validate(sc) -> dict:
    if not isinstance(sc, dict):
        raise ScenarioError("scenario: top level must be an object")
    kind = _need(sc, "kind", "scenario")
    if kind not in KINDS:
        raise ScenarioError(f"unknown kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    required = {
        "classify": ("net", "box"),
        "decompose": ("net", "z1", "z2"),
        "ginf_decompose": ("net", "z1", "z2"),
        "manifold_decompose": ("u", "z1", "z2"),
        "assert2": ("z1", "z2"),
    }.get(kind, ())
    for key in required:
        _need(sc, key, "scenario")
    if "schedule" in sc:
        parse_schedule(sc["schedule"])
    return sc


def run(sc: dict, seed: int | None = None) -> tuple[dict, int]:
    validate(sc)
    seed = int(sc.get("seed", 0)) if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    results, code = PIPELINES[sc["kind"]](sc, rng)
    report = {
        "tool": "supple",
        "version": __version__,
        "scenario": sc,
        "seed": seed,
        "results": results,
        "status": "FAIL" if code == 2 else "ok",
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "wall_clock_s": round(time.perf_counter() - t0, 3),
    }
    return report, code


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def strip_volatile(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in VOLATILE}


def emit_samples(net: Net, eps_list, grid, out_csv) -> int:
    """Write ``eps,x,value`` rows, eps-major; returns the row count."""
    grid = np.asarray(grid, dtype=float)
    rows = 0
    with open(out_csv, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "x", "value"])
        for e in eps_list:
            vals = np.atleast_1d(net.eval(float(e), grid))
            for x, v in zip(grid, vals):
                w.writerow([f"{float(e):.17e}", f"{x:.17e}", f"{v:.17e}"])
                rows += 1
    return rows


def samples_from_scenario(sc: dict, out: str | None = None) -> tuple[str, int]:
    spec = sc.get("samples")
    if not isinstance(spec, dict):
        raise ScenarioError("scenario: missing field 'samples' (object with eps, grid and out)")
    net = parse_net(spec.get("net", sc.get("net")), "samples.net")
    eps_list = [float(e) for e in _need(spec, "eps", "samples")]
    g = _need(spec, "grid", "samples")
    if isinstance(g, dict):
        grid = np.linspace(float(g["lo"]), float(g["hi"]), int(g["points"]))
    else:
        grid = np.asarray(g, dtype=float)
    path = out or spec.get("out", "samples.csv")
    return path, emit_samples(net, eps_list, grid, path)


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="supple", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario and write its JSON report")
    r.add_argument("scenario", help="path to a scenario file, or the name of a bundled scenario")
    r.add_argument("--out", help="report path (default: the scenario's 'out' field, else stdout)")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    s = sub.add_parser("samples", help="write a CSV table of net values for plotting")
    s.add_argument("scenario")
    s.add_argument("--out", help="CSV path (default: the scenario's samples.out)")
    sub.add_parser("list", help="list bundled scenarios")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            print("\n".join(bundled_scenarios()))
            return 0
        sc = load_scenario(args.scenario)
        if args.command == "samples":
            path, rows = samples_from_scenario(sc, args.out)
            print(f"wrote {rows} rows to {path}")
            return 0
        report, code = run(sc, args.seed)
        text = dumps(report)
        out = args.out or sc.get("out")
        if out:
            Path(out).write_text(text)
        else:
            sys.stdout.write(text)
        if code == 2:
            n = sum(r.get("certificate", {}).get("counts", {}).get("FAIL", 0)
                    for r in report["results"].get("runs", []))
            print(f"FAIL: {n} probe(s) failed" if n else "FAIL", file=sys.stderr)
        return code
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
