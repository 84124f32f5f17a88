"""``distcache`` command line: simulate, predict, compare, sortbench, genkeys.

Every command writes CSV. Output goes to ``--out``; without it, to
``$DISTCACHE_OUT/<command>.csv`` when that variable is set, else stdout.

Exit codes: 0 all checks pass, 1 usage error or mismatched inputs,
2 a comparison failed or a sort produced unsorted output.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cache_sim import PRESETS, CacheGeometry, MissStats, Tag
from .distributions import ClassDistribution, ExponentDistribution, geometric, uniform
from .keyfile import KeyFileError, read_keys, write_keys
from .miss_analysis import (
    BoundInapplicable,
    OccupancyContext,
    exact_inplace,
    exact_outofplace,
    lower_inplace,
    msb_radix_report,
    uniform_report,
    upper_inplace,
    upper_outofplace,
    upper_sequences,
)
from .msb_radix_float import (
    FLOAT32,
    FLOAT64,
    PHASES,
    auto_plan,
    naive_plan,
    simulate_sort_misses,
    trace_first_pass,
    uniform_floats,
)
from .stochastic_process import CSV_FIELDS, ProcessParams, run_process

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
OUT_ENV = "DISTCACHE_OUT"

PRED_FIELDS = [
    "formula", "variant", "dist", "k", "B", "C", "n", "g", "K",
    "lower_rate_per_round", "upper_rate_per_round", "upper_additive_misses",
    "lower_total_misses", "upper_total_misses",
    "exact_rate_per_round", "exact_ci99_halfwidth", "status", "note",
]
COMPARE_FIELDS = [
    "variant", "dist", "k", "B", "C", "n", "seeds", "mean_rate_per_round",
    "stderr", "lower_rate_per_round", "exact_rate_per_round", "upper_rate_per_round",
    "upper_slack_per_round", "lower_ok", "upper_ok", "exact_agrees", "verdict",
]
SORT_FIELDS = [
    "plan", "phase", "n", "B", "C", "accesses", "misses", "compulsory", "conflict",
    "correct", "seconds_local",
]
FORMULAS = ["thm1", "thm2", "thm3", "thm4", "thm5", "thm6",
            "cor1", "cor2", "cor3a", "cor3b", "seq"]
VARIANTS = ["inplace", "outofplace", "sequences", "sort-trace"]
MODEL_TAG_NAMES = {"SRC", "COUNT", "DATA", "DEST", "SEQ"}
_FORMULA_VARIANT = {
    "thm1": "inplace", "thm2": "inplace", "thm3": "inplace", "thm4": "outofplace",
    "thm5": "outofplace", "thm6": "sort-trace", "cor1": "inplace", "cor2": "inplace",
    "cor3a": "outofplace", "cor3b": "outofplace", "seq": "sequences",
}


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


# ---------------------------------------------------------------------------
# experiment description


@dataclass
class ExperimentSpec:
    """Everything a run depends on; ``to_json`` round-trips through ``from_json``."""

    command: str
    B: int
    C: int
    dist: str = "uniform"
    k: int | None = None
    n: int = 0
    seeds: list = field(default_factory=lambda: [0])
    out: str | None = None
    flags: dict = field(default_factory=dict)

    @property
    def geom(self) -> CacheGeometry:
        return CacheGeometry(self.B, self.C)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls(**json.loads(text))


def parse_seeds(text: str) -> list[int]:
    """``"30"`` means seeds 0..29; ``"3,7,11"`` is an explicit list."""
    text = text.strip()
    try:
        if "," in text:
            seeds = [int(s) for s in text.split(",") if s.strip()]
        else:
            seeds = list(range(int(text)))
    except ValueError as exc:
        raise UsageError(f"bad --seeds {text!r}") from exc
    if not seeds or any(s < 0 for s in seeds):
        raise UsageError("--seeds needs a positive count or a list of unsigned seeds")
    return seeds


def make_distribution(dist: str, k: int | None, g: int | None = None, K: int | None = None,
                      theta: float | None = None) -> ClassDistribution:
    if dist in ("uniform", "geometric"):
        if k is None:
            raise UsageError(f"--dist {dist} needs -k")
        return uniform(k) if dist == "uniform" else geometric(k)
    if dist == "float-model":
        if g is None or K is None:
            raise UsageError("--dist float-model needs -g and -K")
        return ExponentDistribution(g, K, theta).to_class_distribution()
    if dist.startswith("file:"):
        path = Path(dist[5:])
        try:
            probs = np.loadtxt(path, dtype=np.float64, ndmin=1, delimiter=None)
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from exc
        try:
            return ClassDistribution(probs, name=f"file:{path.stem}")
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from exc
    raise UsageError(f"unknown distribution {dist!r}")


def _dist_label(dist: str) -> str:
    return f"file:{Path(dist[5:]).stem}" if dist.startswith("file:") else dist


# ---------------------------------------------------------------------------
# argument handling


def _common(p: argparse.ArgumentParser, dist: bool = True) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), default="paper-L2",
                   help="geometry preset (default paper-L2: B=8, C=8192)")
    p.add_argument("-B", type=int, help="block size in words (overrides preset)")
    p.add_argument("-C", type=int, help="number of cache blocks (overrides preset)")
    p.add_argument("-n", type=int, default=1_000_000, help="rounds or keys")
    p.add_argument("--out", help="output CSV path")
    if dist:
        p.add_argument("--dist", default="uniform",
                       help="uniform | geometric | float-model | file:PATH (one probability per line)")
        p.add_argument("-k", type=int, help="number of classes")
        p.add_argument("--uniform-k", type=int, help="shorthand for --dist uniform -k K")
        p.add_argument("--geometric-k", type=int, help="shorthand for --dist geometric -k K")
        p.add_argument("-g", type=int, help="exponent groups of the float model")
        p.add_argument("-K", type=int, help="buckets per exponent group")
        p.add_argument("--theta", type=float, help="float cut-off below which keys skip the radix passes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distcache", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run access processes on the cache simulator")
    _common(s)
    s.add_argument("--variant", choices=VARIANTS, default="inplace")
    s.add_argument("--seeds", default="1", help="seed count N (seeds 0..N-1) or comma list")
    s.add_argument("--jobs", type=int, default=1, help="worker processes for the seed sweep")

    p = sub.add_parser("predict", help="evaluate miss formulas")
    _common(p)
    p.add_argument("--formula", default="cor1",
                   help="comma list from " + ",".join(FORMULAS))
    p.add_argument("--variant", choices=VARIANTS[:3],
                   help="report the row under this variant (thm3 also bounds out-of-place pointers)")
    p.add_argument("--samples", type=int, default=10_000, help="streams for thm1/thm4")
    p.add_argument("--eps", type=float, default=1e-9, help="series truncation for thm1/thm4")
    p.add_argument("--seeds", default="1", help="the first seed drives thm1/thm4")
    p.add_argument("--show-terms", action="store_true", help="print every summand to stderr")

    c = sub.add_parser("compare", help="join simulation and prediction CSVs")
    c.add_argument("simulation", help="CSV from simulate")
    c.add_argument("prediction", nargs="+", help="CSV(s) from predict")
    c.add_argument("--out", help="output CSV path")

    b = sub.add_parser("sortbench", help="tuned vs naive float sort on the cache simulator")
    _common(b, dist=False)
    b.add_argument("--keys", help="key file from genkeys (otherwise keys are generated)")
    b.add_argument("--fmt", choices=["float32", "float64"], default="float32")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--theta", type=float)
    b.add_argument("--timing", action="store_true",
                   help="add local wall-clock seconds (not reproducible across machines)")

    gk = sub.add_parser("genkeys", help="write uniform [0,1) floats to a key file")
    gk.add_argument("-n", type=int, default=1_000_000)
    gk.add_argument("--fmt", choices=["float32", "float64"], default="float32")
    gk.add_argument("--seed", type=int, default=0)
    gk.add_argument("--out", required=True)
    return ap


def _geometry(args) -> CacheGeometry:
    base = PRESETS[args.preset]
    try:
        return CacheGeometry(args.B or base.block_size, args.C or base.num_blocks)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _resolve_dist(args) -> tuple[str, int | None]:
    dist, k = args.dist, args.k
    if args.uniform_k is not None:
        dist, k = "uniform", args.uniform_k
    if args.geometric_k is not None:
        dist, k = "geometric", args.geometric_k
    return dist, k


def spec_from_args(args) -> ExperimentSpec:
    geom = _geometry(args)
    dist, k = _resolve_dist(args)
    if args.n < 0:
        raise UsageError("-n must be >= 0")
    flags = {a: getattr(args, a) for a in
             ("variant", "g", "K", "theta", "formula", "samples", "eps", "show_terms")
             if getattr(args, a, None) is not None}
    return ExperimentSpec(args.command, geom.block_size, geom.num_blocks, dist, k, args.n,
                          parse_seeds(args.seeds), args.out, flags)


def _open_out(out: str | None, command: str):
    if out is None and os.environ.get(OUT_ENV):
        d = Path(os.environ[OUT_ENV])
        d.mkdir(parents=True, exist_ok=True)
        out = str(d / f"{command}.csv")
    if out is None:
        return sys.stdout, False
    return open(out, "w", newline=""), True


def _write_csv(rows: list[dict], fields: list[str], out: str | None, command: str) -> None:
    fh, close = _open_out(out, command)
    try:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({f: _fmt(r.get(f)) for f in fields})
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# simulate


def _sort_trace_plan(spec: ExperimentSpec):
    geom = spec.geom
    plan = auto_plan(max(spec.n, 16), FLOAT32, geom, spec.flags.get("theta"))
    K = spec.flags.get("K")
    if K is not None:
        if K < 1 or K & (K - 1):
            raise UsageError("-K must be a power of two")
        plan = dataclasses.replace(plan, m_prime=K.bit_length() - 1)
    return plan


def _simulate_one(spec: ExperimentSpec, seed: int) -> list[dict]:
    geom = spec.geom
    if spec.flags.get("variant") == "sort-trace":
        plan = _sort_trace_plan(spec)
        data = uniform_floats(spec.n, FLOAT32, rng=seed)
        rep = trace_first_pass(data, FLOAT32, plan, geom)
        rows = []
        for tag in (Tag.COUNT, Tag.DATA, Tag.OTHER):
            s = rep.stats[tag]
            rows.append(dict(
                variant="sort-trace", k=plan.g * plan.K, B=geom.block_size, C=geom.num_blocks,
                n=spec.n, seed=seed, tag=tag.name, accesses=s.accesses, misses=s.misses,
                compulsory=s.compulsory_misses, conflict=s.conflict_misses,
                dist="float-model", rounds=rep.keys,
                rate_per_round=s.misses / rep.keys if rep.keys else 0.0,
            ))
        return rows
    dist = make_distribution(spec.dist, spec.k, spec.flags.get("g"), spec.flags.get("K"),
                             spec.flags.get("theta"))
    variant = spec.flags.get("variant", "inplace")
    k_label = dist.k
    if variant != "sequences":
        dist = dist.padded_to(geom.block_size)
    try:
        params = ProcessParams(dist, spec.n, geom, seed, variant)
        rep = run_process(params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = rep.csv_rows()
    for r in rows:
        r["k"] = k_label
        r["dist"] = _dist_label(spec.dist)
    return rows


def cmd_simulate(spec: ExperimentSpec, jobs: int = 1) -> list[dict]:
    """One row per (seed, tag), ordered by seed whatever the worker count."""
    if jobs > 1 and len(spec.seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_simulate_one, [spec] * len(spec.seeds), spec.seeds))
    else:
        parts = [_simulate_one(spec, s) for s in spec.seeds]
    return [r for part in parts for r in part]


# ---------------------------------------------------------------------------
# predict


def _predict_one(formula: str, spec: ExperimentSpec, show_terms) -> dict:
    geom = spec.geom
    B, C = geom.block_size, geom.num_blocks
    variant = _FORMULA_VARIANT[formula]
    if spec.flags.get("variant") and formula == "thm3":
        variant = spec.flags["variant"]
    g, K = spec.flags.get("g"), spec.flags.get("K")
    row = dict(formula=formula, variant=variant, dist=_dist_label(spec.dist), k=spec.k,
               B=B, C=C, n=spec.n, g=g, K=K, status="ok", note="")
    try:
        if formula == "thm6":
            if g is None or K is None:
                raise UsageError("thm6 needs -g and -K")
            rep = msb_radix_report(geom, g, K, spec.n)
            row.update(dist="float-model", k=g * K)
        elif formula.startswith("cor") or (formula == "seq" and spec.dist == "uniform"):
            if spec.dist != "uniform":
                raise UsageError(f"{formula} is a uniform-distribution closed form")
            if spec.k is None:
                raise UsageError(f"{formula} needs -k")
            rep = uniform_report(formula, spec.k, geom, spec.n)
        else:
            dist = make_distribution(spec.dist, spec.k, g, K, spec.flags.get("theta"))
            row["k"] = dist.k
            if formula == "seq":
                rep = upper_sequences(dist, geom, spec.n)
            else:
                ctx = OccupancyContext(geom, dist)
                if formula in ("thm1", "thm4"):
                    fn = exact_inplace if formula == "thm1" else exact_outofplace
                    rep = fn(ctx, spec.n, samples=spec.flags.get("samples", 10_000),
                             eps=spec.flags.get("eps", 1e-9), seed=spec.seeds[0])
                else:
                    rep = {"thm2": upper_inplace, "thm3": lower_inplace,
                           "thm5": upper_outofplace}[formula](ctx, spec.n)
    except BoundInapplicable as exc:
        row.update(status="inapplicable", note=str(exc))
        return row
    except ValueError as exc:
        row.update(status="error", note=str(exc))
        return row
    if show_terms is not None:
        print(rep.table(), file=show_terms)
        for name, v in rep.terms.items():
            print(f"    term {name:<16} {v:.9g}", file=show_terms)
    if rep.exact_estimate is not None:
        row.update(exact_rate_per_round=rep.exact_estimate.mean,
                   exact_ci99_halfwidth=rep.exact_estimate.ci_halfwidth,
                   upper_additive_misses=rep.upper_additive)
    else:
        row.update(lower_rate_per_round=rep.lower_rate, upper_rate_per_round=rep.upper_rate,
                   lower_total_misses=rep.lower_total, upper_total_misses=rep.upper_total)
        if rep.upper_rate is not None:
            row["upper_additive_misses"] = rep.upper_additive
    row["note"] = "; ".join(rep.caveats + (["clamped"] if rep.clamped else []))
    return row


def cmd_predict(spec: ExperimentSpec, show_terms=None) -> list[dict]:
    formulas = [f.strip() for f in spec.flags.get("formula", "cor1").split(",") if f.strip()]
    bad = [f for f in formulas if f not in FORMULAS]
    if bad:
        raise UsageError(f"unknown formula(s) {', '.join(bad)}; choose from {', '.join(FORMULAS)}")
    return [_predict_one(f, spec, show_terms) for f in formulas]


# ---------------------------------------------------------------------------
# compare

_KEY = ("variant", "dist", "k", "B", "C", "n")


def _read_csv(path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _num(s: str):
    return float(s) if s not in ("", None) else None


def cmd_compare(sim_rows: list[dict], pred_rows: list[dict]) -> tuple[list[dict], bool]:
    """Sandwich verdict per parameter point. Returns ``(rows, all_pass)``.

    A point passes when ``lower - 3se <= mean <= upper + 3se + additive/rounds``
    for the tightest lower and upper bound supplied. Exact estimates are
    reported alongside but do not decide the verdict.
    """
    missing = [f for f in _KEY + ("seed", "tag", "misses", "rounds") if sim_rows and f not in sim_rows[0]]
    if missing:
        raise UsageError(f"simulation CSV lacks columns {missing}")
    per_seed: dict[tuple, dict[str, float]] = {}
    rounds: dict[tuple, list[float]] = {}
    for r in sim_rows:
        if r["tag"] not in MODEL_TAG_NAMES:
            continue
        key = tuple(r[f] for f in _KEY)
        seeds = per_seed.setdefault(key, {})
        nr = float(r["rounds"])
        seeds[r["seed"]] = seeds.get(r["seed"], 0.0) + (float(r["misses"]) / nr if nr else 0.0)
        rounds.setdefault(key, []).append(nr)

    preds: dict[tuple, list[dict]] = {}
    for r in pred_rows:
        if r.get("status", "ok") != "ok":
            continue
        preds.setdefault(tuple(r[f] for f in _KEY), []).append(r)

    if set(per_seed) != set(preds):
        only_sim = sorted(set(per_seed) - set(preds))
        only_pred = sorted(set(preds) - set(per_seed))
        raise UsageError(
            "parameter mismatch between simulation and prediction: "
            f"simulation only {only_sim}, prediction only {only_pred} "
            f"(key columns {', '.join(_KEY)})"
        )

    out, ok_all = [], True
    for key in sorted(per_seed, key=lambda t: (t[0], t[1], int(t[2]), int(t[3]), int(t[4]), int(t[5]))):
        vals = np.array(list(per_seed[key].values()))
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        r_min = min(rounds[key]) or 1.0
        lows, ups, exacts = [], [], []
        for p in preds[key]:
            lo, up = _num(p.get("lower_rate_per_round")), _num(p.get("upper_rate_per_round"))
            add = _num(p.get("upper_additive_misses")) or 0.0
            if lo is not None:
                lows.append(lo)
            if up is not None:
                ups.append((up, add / r_min))
            ex = _num(p.get("exact_rate_per_round"))
            if ex is not None:
                exacts.append((ex, _num(p.get("exact_ci99_halfwidth")) or 0.0))
        lower = max(lows) if lows else None
        upper, slack = min(ups) if ups else (None, 0.0)
        lower_ok = lower is None or mean >= lower - 3 * se
        upper_ok = upper is None or mean <= upper + 3 * se + slack
        exact_ok = None
        if exacts:
            ex, ci = exacts[0]
            exact_ok = abs(mean - ex) <= 0.02 * abs(ex) or abs(mean - ex) <= ci + 2.576 * se
        verdict = "PASS" if lower_ok and upper_ok else "FAIL"
        ok_all &= verdict == "PASS"
        out.append(dict(
            zip(_KEY, key), seeds=vals.size, mean_rate_per_round=mean, stderr=se,
            lower_rate_per_round=lower, exact_rate_per_round=exacts[0][0] if exacts else None,
            upper_rate_per_round=upper, upper_slack_per_round=slack,
            lower_ok=lower_ok, upper_ok=upper_ok,
            exact_agrees="" if exact_ok is None else exact_ok, verdict=verdict,
        ))
    return out, ok_all


# ---------------------------------------------------------------------------
# sortbench / genkeys


def _fmt_of(name: str):
    return FLOAT32 if name == "float32" else FLOAT64


def cmd_sortbench(data: np.ndarray, fmt, geom: CacheGeometry, theta=None,
                  timing: bool = False) -> tuple[list[dict], bool]:
    """Tuned and naive plans on the same keys; ``(rows, all_sorted)``."""
    n = data.size
    oracle = np.sort(data, kind="stable")
    plans = {"tuned": auto_plan(max(n, 16), fmt, geom, theta), "naive": naive_plan(n, fmt)}
    rows, all_sorted = [], True
    for name, plan in plans.items():
        t0 = time.perf_counter()
        out, stats = simulate_sort_misses(data, fmt, plan, geom)
        secs = time.perf_counter() - t0
        correct = bool(np.array_equal(out, oracle))
        all_sorted &= correct
        for phase in PHASES:
            s = stats[phase].total()
            rows.append(dict(plan=name, phase=phase, n=n, B=geom.block_size, C=geom.num_blocks,
                             accesses=s.accesses, misses=s.misses,
                             compulsory=s.compulsory_misses, conflict=s.conflict_misses,
                             correct=correct))
        total = sum((stats[p] for p in PHASES), MissStats()).total()
        rows.append(dict(plan=name, phase="total", n=n, B=geom.block_size, C=geom.num_blocks,
                         accesses=total.accesses, misses=total.misses,
                         compulsory=total.compulsory_misses, conflict=total.conflict_misses,
                         correct=correct, seconds_local=secs if timing else None))
    return rows, all_sorted


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract here is 1
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"distcache {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KeyFileError, OSError) as exc:
        print(f"distcache {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(args) -> int:
    if args.command == "simulate":
        spec = spec_from_args(args)
        if spec.flags.get("variant") != "sort-trace" and spec.k is None and spec.dist != "float-model" \
                and not spec.dist.startswith("file:"):
            raise UsageError("simulate needs -k, --uniform-k or --geometric-k")
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        rows = cmd_simulate(spec, args.jobs)
        _write_csv(rows, CSV_FIELDS, spec.out, "simulate")
        return EXIT_OK

    if args.command == "predict":
        spec = spec_from_args(args)
        rows = cmd_predict(spec, sys.stderr if args.show_terms else None)
        _write_csv(rows, PRED_FIELDS, spec.out, "predict")
        return EXIT_OK

    if args.command == "compare":
        sim = _read_csv(args.simulation)
        pred = [r for p in args.prediction for r in _read_csv(p)]
        rows, ok = cmd_compare(sim, pred)
        _write_csv(rows, COMPARE_FIELDS, args.out, "compare")
        for r in rows:
            print(f"{r['verdict']} {r['variant']} {r['dist']} k={r['k']} B={r['B']} C={r['C']} "
                  f"n={r['n']}: mean {_fmt(r['mean_rate_per_round'])} +/- {_fmt(r['stderr'])}",
                  file=sys.stderr)
        return EXIT_OK if ok else EXIT_FAIL

    if args.command == "sortbench":
        geom = _geometry(args)
        if args.keys:
            data, fmt = read_keys(args.keys)
        else:
            fmt = _fmt_of(args.fmt)
            data = uniform_floats(args.n, fmt, rng=args.seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rows, ok = cmd_sortbench(data, fmt, geom, args.theta, args.timing)
        _write_csv(rows, SORT_FIELDS, args.out, "sortbench")
        tot = {r["plan"]: r["misses"] for r in rows if r["phase"] == "total"}
        print(f"correct={str(ok).lower()} tuned_misses={tot['tuned']} naive_misses={tot['naive']}",
              file=sys.stderr)
        if not ok:
            print("distcache sortbench: error: output not sorted", file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK

    if args.command == "genkeys":
        if args.n < 0:
            raise UsageError("-n must be >= 0")
        fmt = _fmt_of(args.fmt)
        write_keys(args.out, uniform_floats(args.n, fmt, rng=args.seed), fmt)
        return EXIT_OK
    raise UsageError(f"unknown command {args.command}")  # argparse prevents this


if __name__ == "__main__":
    sys.exit(main())
