"""Experiment runner: parse a key=value spec, dispatch, cache, report.

Verbs:
  run SPEC           execute one experiment spec, emit a result envelope
  verify SUITE       run a named verification suite, report pass/fail
  list-suites        list the available suites
  export-csv FILE    flatten an envelope's rows to CSV

Spec files are plain text, one ``key=value`` per line, ``#`` comments.
Results are JSON envelopes: the echoed spec, a payload whose rows are flat
dicts, provenance (version, wall time, seeds, rejection counts), and an
exact/empirical flag.  Rationals are serialized as "p/q" strings.  Exit
codes: 0 success, 1 check failure, 2 usage error, 3 budget refusal.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import math
import os
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__, bklpr, eigendist, hurwitz, modmath, quadspace
from . import suites as suites_mod
from . import topology
from .errors import BudgetError
from .modmath import FiniteModule


class UsageError(Exception):
    """Bad arguments or a malformed spec; maps to exit code 2."""


# ---------------------------------------------------------------- encoding


def _encode(value):
    """JSON-safe encoding; Fractions become exact "p/q" strings."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, FiniteModule):
        return str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    return value


def _write_atomic(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ------------------------------------------------------------ spec parsing


def parse_spec_text(text: str) -> dict[str, str]:
    params: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise UsageError(f"line {lineno}: empty key")
        if key in params:
            raise UsageError(f"line {lineno}: duplicate key {key!r}")
        params[key] = value
    if "kind" not in params:
        raise UsageError("field 'kind' is required")
    return params


class _Params:
    """Typed access to string parameters; unread keys are rejected."""

    def __init__(self, kind: str, raw: dict[str, str]):
        self.kind = kind
        self.raw = dict(raw)
        self.read: set[str] = set()

    def _fetch(self, key: str, default):
        self.read.add(key)
        if key in self.raw:
            return self.raw[key]
        if default is _REQUIRED:
            raise UsageError(f"field {key!r} is required for kind {self.kind!r}")
        return default

    def get_int(self, key: str, default=None) -> int | None:
        val = self._fetch(key, default)
        if val is None or isinstance(val, int):
            return val
        try:
            return int(val)
        except ValueError:
            raise UsageError(f"field {key!r}: expected an integer, got {val!r}")

    def get_str(self, key: str, default=None, choices=None) -> str | None:
        val = self._fetch(key, default)
        if choices and val not in choices:
            raise UsageError(
                f"field {key!r}: expected one of {sorted(choices)}, got {val!r}")
        return val

    def get_int_list(self, key: str, default=None) -> list[int] | None:
        val = self._fetch(key, default)
        if val is None or isinstance(val, list):
            return val
        try:
            return [int(x) for x in str(val).split(",") if x.strip() != ""]
        except ValueError:
            raise UsageError(f"field {key!r}: expected comma-separated "
                             f"integers, got {val!r}")

    def finish(self) -> None:
        extra = set(self.raw) - self.read - {"kind"}
        if extra:
            raise UsageError(
                f"unknown field(s) {sorted(extra)} for kind {self.kind!r}")


class _REQUIRED:
    pass


# sweepable scalar keys per kind: comma values expand to parameter points
_SWEEPS = {
    "kernel-dist": ("nu", "rank"),
    "bklpr": ("nu", "n"),
    "moments": ("n",),
    "coset-check": ("rank",),
    "torsor-count": ("genus",),
    "orbits": (),
    "burnside": ("group",),
    "cells": ("g", "f", "n"),
    "ring-scan": (),
    "compare": ("n",),
}


def expand_points(params: dict[str, str]) -> list[dict[str, str]]:
    kind = params["kind"]
    if kind not in _SWEEPS:
        raise UsageError(f"field 'kind': unknown kind {params['kind']!r}")
    axes = []
    for key in _SWEEPS[kind]:
        if key in params and "," in params[key]:
            axes.append([(key, v.strip()) for v in params[key].split(",")])
    points = []
    for combo in itertools.product(*axes):
        point = dict(params)
        point.update(combo)
        points.append(point)
    return points


def _module_from_orders(field: str, orders: list[int]) -> FiniteModule:
    parts: dict[int, list[int]] = {}
    for d in orders:
        if d < 2:
            raise UsageError(f"field {field!r}: cyclic orders must be >= 2")
        for p, a in modmath.factorize(d):
            parts.setdefault(p, []).append(a)
    return FiniteModule.from_dict(parts)


def _prime_power(field: str, nu: int) -> tuple[int, int]:
    factors = modmath.factorize(nu)
    if len(factors) != 1:
        raise UsageError(f"field {field!r}: expected a prime power, got {nu}")
    return factors[0]


# -------------------------------------------------------------- dispatchers


def _dist_rows(dist, point: dict) -> list[dict]:
    rows = []
    for mod, p in sorted(dist.probabilities().items(),
                         key=lambda kv: (kv[0].order(), str(kv[0]))):
        rows.append({**point, "module": str(mod), "probability": _encode(p)})
    return rows


def _run_kernel_dist(p: _Params, seed: int):
    nu = p.get_int("nu", _REQUIRED)
    diag = p.get_int_list("diag", None)
    rank = p.get_int("rank", None)
    if (diag is None) == (rank is None):
        raise UsageError("field 'rank': give exactly one of rank/diag")
    population = p.get_str("population", "O",
                           choices={"O", "SO", "Omega", "A", "B", "C"})
    mode = p.get_str("mode", "exhaustive", choices={"exhaustive", "mc"})
    samples = p.get_int("samples", 4096)
    p.finish()
    entries = diag if diag is not None else [1] * rank
    space = quadspace.QuadSpace.diagonal(nu, tuple(entries))
    point = {"nu": nu, "diag": ",".join(map(str, entries)),
             "population": population}
    if mode == "exhaustive":
        dist = eigendist.kernel_distribution(space, population)
        return _dist_rows(dist, point), {}, True, [], {}
    dist = eigendist.kernel_distribution(
        space, population, mode="montecarlo", n_samples=samples, seed=seed)
    rows = _dist_rows(dist, {**point, "seed": seed})
    return rows, {"n_samples": samples}, False, [seed], {}


def _run_bklpr(p: _Params, seed: int):
    nu = p.get_int("nu", _REQUIRED)
    n = p.get_int("n", _REQUIRED)
    variant = p.get_str("variant", "mixed", choices={"mixed", "0", "1"})
    var = None if variant == "mixed" else int(variant)
    mode = p.get_str("mode", "exhaustive", choices={"exhaustive", "mc"})
    samples = p.get_int("samples", 4096)
    p.finish()
    point = {"nu": nu, "n": n, "variant": variant}
    if mode == "exhaustive":
        ref = bklpr.bklpr_distribution(nu, n, variant=var)
        return _dist_rows(ref.dist, point), {}, True, [], {}
    ref = bklpr.bklpr_distribution(nu, n, variant=var, mode="montecarlo",
                                   n_samples=samples, seed=seed)
    rows = _dist_rows(ref.dist, {**point, "seed": seed})
    return rows, {"n_samples": samples}, False, [seed], {}


def _run_moments(p: _Params, seed: int):
    nu = p.get_int("nu", _REQUIRED)
    ell, j = _prime_power("nu", nu)
    n = p.get_int("n", _REQUIRED)
    h = _module_from_orders("h", p.get_int_list("h", _REQUIRED))
    mode = p.get_str("mode", "exhaustive", choices={"exhaustive", "mc"})
    samples = p.get_int("samples", 10_000)
    p.finish()
    try:
        moment = bklpr.finite_n_moment(ell, j, n, h)
    except ValueError as exc:
        raise UsageError(f"field 'h': {exc}")
    row = {"nu": nu, "n": n, "h": str(h), "moment": _encode(moment),
           "limit": modmath.sym2_order(h)}
    if mode == "exhaustive":
        return [row], {}, True, [], {}
    dist = bklpr.bklpr_distribution(nu, n, mode="montecarlo",
                                    n_samples=samples, seed=seed).dist
    mean = var = 0.0
    for mod, prob in dist.probabilities().items():
        x = modmath.count_surj(mod, h)
        mean += float(prob) * x
        var += float(prob) * x * x
    se = math.sqrt(max(var - mean * mean, 0.0) / samples)
    row.update({"estimate": round(mean, 6), "stderr": round(se, 6),
                "samples": samples, "seed": seed})
    return [row], {}, False, [seed], {}


def _run_coset_check(p: _Params, seed: int):
    nu = p.get_int("nu", _REQUIRED)
    rank = p.get_int("rank", _REQUIRED)
    p.finish()
    space = quadspace.QuadSpace.diagonal(nu, (1,) * rank)
    report = eigendist.coset_identity_check(space)
    rows = [
        {"nu": nu, "rank": rank, "identity": r.name, "ok": r.ok,
         "residual": "0" if r.ok else str(r.worst_coefficient())}
        for r in report["identities"]
    ]
    return rows, {"ok": report["ok"]}, True, [], {}


def _run_torsor_count(p: _Params, seed: int):
    nu = p.get_int("nu", _REQUIRED)
    r = p.get_int("r", 1)
    genus = p.get_int("genus", _REQUIRED)
    n = p.get_int("n", _REQUIRED)
    drops = p.get_int_list("drops", _REQUIRED)
    p.finish()
    if len(drops) != n:
        raise UsageError(f"field 'drops': expected {n} entries, got {len(drops)}")
    if r != 1 and any(d not in (0, 2 * r) for d in drops):
        raise UsageError("field 'drops': for r > 1 only 0 and 2r have "
                         "built-in inertia matrices")
    mats = []
    for d in drops:
        if d == 0:
            mats.append(np.eye(2 * r, dtype=np.int64))
        elif d == 2 * r:
            mats.append((-np.eye(2 * r, dtype=np.int64)) % nu)
        elif d == 1 and r == 1:
            mats.append(np.array([[1, 1], [0, 1]], dtype=np.int64))
        else:
            raise UsageError(f"field 'drops': no built-in matrix with drop {d}")
    spec = hurwitz.InertiaSpec.of(mats, nu)
    tc = hurwitz.torsor_count(genus, spec, n, nu, r)
    row = {"nu": nu, "r": r, "genus": genus, "n": n,
           "drops": ",".join(map(str, drops)), "count": tc.count,
           "formula": tc.formula, "free_action": tc.free_action,
           "degenerate": tc.degenerate}
    return [row], {"ok": tc.ok}, True, [], {}


def _run_orbits(p: _Params, seed: int):
    nu = p.get_int("nu", _REQUIRED)
    r = p.get_int("r", 1)
    depth = p.get_int("depth", _REQUIRED)
    p.finish()
    cls = hurwitz.AffSymp.of(nu, r).class_c()
    ring = topology.build_ring(cls, depth)
    rows = [{"nu": nu, "r": r, "degree": n, "orbits": ring.basis_size(n)}
            for n in range(depth + 1)]
    return rows, {"class_size": len(cls)}, True, [], {}


def _run_burnside(p: _Params, seed: int):
    nu = p.get_int("nu", _REQUIRED)
    rank = p.get_int("rank", 3)
    gname = p.get_str("group", "O", choices={"O", "SO", "Omega"})
    h = _module_from_orders("h", p.get_int_list("h", _REQUIRED))
    p.finish()
    space = quadspace.QuadSpace.diagonal(nu, (1,) * rank)
    mats = quadspace.enumerate_orthogonal(space)
    if gname == "SO":
        mats = [m for m in mats if quadspace.dickson(space, m)[nu] == 0]
    elif gname == "Omega":
        mats = [m for m in mats if quadspace.omega_member(space, m)]
    avg = hurwitz.burnside_components(list(mats), h, nu)
    orbits = hurwitz.hom_orbit_count(list(mats), h, nu)
    row = {"nu": nu, "rank": rank, "group": gname, "h": str(h),
           "burnside": _encode(avg), "orbits": orbits}
    return [row], {"ok": avg == orbits}, True, [], {}


def _run_cells(p: _Params, seed: int):
    g = p.get_int("g", _REQUIRED)
    f = p.get_int("f", _REQUIRED)
    n = p.get_int("n", _REQUIRED)
    p.finish()
    cells = topology.enumerate_cells(g, f, n)
    top = max((c.dimension for c in cells), default=0)
    row = {"g": g, "f": f, "n": n, "cells": len(cells),
           "closed_form": topology.cell_count(g, f, n),
           "bound": 2 ** (2 * g + f + n), "top_dimension": top}
    ok = row["cells"] == row["closed_form"] and row["cells"] <= row["bound"]
    return [row], {"ok": ok}, True, [], {}


def _run_ring_scan(p: _Params, seed: int):
    nu = p.get_int("nu", _REQUIRED)
    r = p.get_int("r", 1)
    depth = p.get_int("depth", 6)
    max_q = p.get_int("maxq", 1)
    p.finish()
    if max_q not in (0, 1, 2):
        raise UsageError("field 'maxq': expected 0, 1 or 2")
    cls = hurwitz.AffSymp.of(nu, r).class_c()
    ring = topology.build_ring(cls, depth)
    u = topology.u_operator(ring)
    scan = topology.stabilization_scan(ring, u)
    hom = topology.k_complex(ring, max_q=max_q)
    rows = []
    for row in scan.rows:
        rows.append({"nu": nu, "r": r, "degree": row.degree,
                     "basis": row.domain_dim, "u_rank": row.rank,
                     "injective": row.injective, "bijective": row.bijective})
    extras = {
        "basis_sizes": ring.basis_sizes(),
        "u_degree": u.degree,
        "first_bijective": scan.first_bijective,
        "stable_after_first": scan.stable_after_first,
        "homology": [list(h) for h in hom.homology],
    }
    return rows, extras, True, [], {}


def _run_compare(p: _Params, seed: int):
    m = p.get_int("m", _REQUIRED)
    n = p.get_int("n", _REQUIRED)
    nu = p.get_int("nu", 3)
    ell, j = _prime_power("nu", nu)
    samples = p.get_int("samples", 100_000)
    weight = p.get_int("weight", 0)
    cap = p.get_int("cap", 81)
    p.finish()
    parity = m % 2
    rng = np.random.default_rng(seed)
    stats: dict = {}
    counts: Counter = Counter()
    for _ in range(samples):
        counts[bklpr.alternating_cokernel_sample(m, ell, j, rng,
                                                 stats=stats)] += 1
    alt = eigendist.ModuleDistribution.empirical(counts, samples, seed)
    grass = suites_mod._grassmannian_exact(n, parity)
    d, bar = suites_mod._capped_distance(alt, grass, weight, cap=cap)
    row = {"m": m, "n": n, "nu": nu, "weight": weight, "cap": cap,
           "distance": round(d, 6), "error_3sigma": round(bar, 6),
           "samples": samples, "seed": seed}
    return [row], {}, False, [seed], dict(stats)


_KINDS = {
    "kernel-dist": _run_kernel_dist,
    "bklpr": _run_bklpr,
    "moments": _run_moments,
    "coset-check": _run_coset_check,
    "torsor-count": _run_torsor_count,
    "orbits": _run_orbits,
    "burnside": _run_burnside,
    "cells": _run_cells,
    "ring-scan": _run_ring_scan,
    "compare": _run_compare,
}


def _run_point(args: tuple[dict[str, str], int]) -> tuple:
    point, seed = args
    params = _Params(point["kind"], {k: v for k, v in point.items()
                                     if k != "kind"})
    try:
        return _KINDS[point["kind"]](params, seed)
    except ValueError as exc:
        # library-level validation (bad modulus/population combos etc.)
        raise UsageError(str(exc)) from exc


# ------------------------------------------------------------------ caching


def _spec_digest(params: dict[str, str]) -> str:
    canon = json.dumps(dict(sorted(params.items())), separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _cache_load(cache_dir: str, digest: str):
    path = os.path.join(cache_dir, f"{digest}.json")
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        return json.load(fh)


def _cache_store(cache_dir: str, digest: str, params: dict, envelope: dict):
    os.makedirs(cache_dir, exist_ok=True)
    _write_atomic(os.path.join(cache_dir, f"{digest}.json"),
                  json.dumps(envelope, indent=1))
    index = os.path.join(cache_dir, "index.txt")
    line = f"{digest} {params['kind']} " + " ".join(
        f"{k}={v}" for k, v in sorted(params.items()) if k != "kind") + "\n"
    existing = ""
    if os.path.exists(index):
        with open(index) as fh:
            existing = fh.read()
    if digest not in existing:
        _write_atomic(index, existing + line)


# -------------------------------------------------------------------- verbs


def cmd_run(args) -> int:
    if args.spec == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(args.spec) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read spec file: {exc}")
    params = parse_spec_text(text)
    if args.seed is not None:
        params["seed"] = str(args.seed)
    if args.mode is not None:
        params["mode"] = args.mode
    if args.samples is not None:
        params["samples"] = str(args.samples)
    base_seed = int(params.pop("seed", "0"))

    digest = _spec_digest({**params, "seed": str(base_seed)})
    if args.cache_dir:
        hit = _cache_load(args.cache_dir, digest)
        if hit is not None:
            hit["provenance"]["cache_hit"] = True
            return _finish_run(hit, args)

    points = expand_points(params)
    jobs = [(pt, base_seed + 1009 * i) for i, pt in enumerate(points)]
    t0 = time.perf_counter()
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(job) for job in jobs]
    wall = time.perf_counter() - t0

    rows, extras, seeds = [], {}, []
    exact = True
    rejections: dict = {}
    for point_rows, point_extras, point_exact, point_seeds, rej in results:
        rows.extend(point_rows)
        for key, val in point_extras.items():
            extras[key] = extras.get(key, True) and val if key == "ok" else val
        exact = exact and point_exact
        seeds.extend(point_seeds)
        for k, v in rej.items():
            rejections[k] = rejections.get(k, 0) + v
    envelope = {
        "spec": {"kind": params["kind"],
                 "params": {k: v for k, v in sorted(params.items())
                            if k != "kind"},
                 "seed": base_seed},
        "payload": {"rows": _encode(rows), **_encode(extras)},
        "provenance": {"version": __version__,
                       "wall_time_s": round(wall, 3),
                       "seeds": seeds,
                       "rejections": rejections,
                       "cache_hit": False},
        "exact": exact,
    }
    if args.cache_dir:
        _cache_store(args.cache_dir, digest,
                     {**params, "seed": str(base_seed)}, envelope)
    return _finish_run(envelope, args)


def _finish_run(envelope: dict, args) -> int:
    text = json.dumps(envelope, indent=1)
    if args.output:
        _write_atomic(args.output, text)
    else:
        print(text)
    ok = envelope["payload"].get("ok", True)
    return 0 if ok else 1


def cmd_verify(args) -> int:
    names = [name for name, _ in suites_mod.suite_names()]
    if not args.suite:
        print("no suite named; available suites:", file=sys.stderr)
        for name, desc in suites_mod.suite_names():
            print(f"  {name}: {desc}", file=sys.stderr)
        return 2
    if args.suite not in names:
        print(f"unknown suite {args.suite!r}; available: "
              + ", ".join(sorted(names)), file=sys.stderr)
        return 2
    seed = args.seed or 0
    result = suites_mod.run_suite(args.suite, seed=seed)
    for check in result.checks:
        mark = "PASS" if check.ok else "FAIL"
        print(f"[{mark}] {result.suite}.{check.name}: {check.detail}")
    print(f"{result.suite}: {'pass' if result.ok else 'FAIL'} "
          f"({len(result.checks)} checks, {result.wall_time:.1f}s)")
    if args.output:
        report = {"seed": seed, "version": __version__, **result.to_json()}
        _write_atomic(args.output, json.dumps(report, indent=1))
    return 0 if result.ok else 1


def cmd_list_suites(args) -> int:
    for name, desc in suites_mod.suite_names():
        print(f"{name}: {desc}")
    return 0


def cmd_export_csv(args) -> int:
    try:
        with open(args.envelope) as fh:
            envelope = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read envelope: {exc}")
    rows = envelope.get("payload", {}).get("rows")
    if not isinstance(rows, list) or not rows:
        raise UsageError("envelope has no payload rows to export")
    header: list[str] = []
    for row in rows:
        for key in row:
            if key not in header:
                header.append(key)
    out = sys.stdout
    close = False
    if args.output:
        out = open(f"{args.output}.tmp{os.getpid()}", "w", newline="")
        close = True
    writer = csv.DictWriter(out, fieldnames=header, restval="")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    if close:
        out.close()
        os.replace(f"{args.output}.tmp{os.getpid()}", args.output)
    return 0


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadtwist",
        description="exact finite-group and random-model statistics")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="execute an experiment spec file")
    run.add_argument("spec", help="path to a key=value spec file, - for stdin")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--mode", choices=("exhaustive", "mc"), default=None)
    run.add_argument("--samples", type=int, default=None)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--cache-dir", default=None)
    run.add_argument("--output", default=None)
    run.set_defaults(fn=cmd_run)

    verify = sub.add_parser("verify", help="run a named verification suite")
    verify.add_argument("suite", nargs="?", default=None)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--output", default=None)
    verify.set_defaults(fn=cmd_verify)

    ls = sub.add_parser("list-suites", help="list verification suites")
    ls.set_defaults(fn=cmd_list_suites)

    export = sub.add_parser("export-csv", help="flatten envelope rows to CSV")
    export.add_argument("envelope", help="path to a result envelope JSON")
    export.add_argument("--output", default=None)
    export.set_defaults(fn=cmd_export_csv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        detail = f" (estimate {exc.estimate})" if exc.estimate else ""
        print(f"budget refusal: {exc}{detail}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
