"""Expected cache misses of the access processes, exact and bounded.

Rates are per round. Totals add the first-touch allowance on top of
``n * rate``. Every public evaluator returns a :class:`BoundReport` whose
``terms`` dict holds the individual summands for debugging.

Conventions:

* classes are 0-based and ``k`` includes any zero-probability padding;
* ratios of the form ``x*y/(x+y)`` with ``x = y = 0`` count as 0;
* first-touch terms that come from a per-class count use the number of
  classes with nonzero probability.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .cache_sim import CacheGeometry
from .distributions import ClassDistribution

__all__ = [
    "BoundInapplicable",
    "OccupancyContext",
    "ExactEstimate",
    "BoundReport",
    "f_conflict",
    "g_countload",
    "exact_inplace",
    "exact_outofplace",
    "upper_inplace",
    "lower_inplace",
    "upper_outofplace",
    "upper_sequences",
    "p_source",
    "cor1_rate",
    "cor2_rate",
    "cor3a_rate",
    "cor3b_rate",
    "seq_cor_rate",
    "uniform_report",
    "msb_radix_rate",
    "msb_radix_bound",
    "StrictMisses",
    "TradeOff",
    "KChoice",
    "choose_k",
]

Z99 = 2.5758293035489004


class BoundInapplicable(ValueError):
    """A bound's precondition does not hold for the given parameters."""


# ---------------------------------------------------------------------------
# occupancy machinery


def f_conflict(x: int, geom: CacheGeometry) -> float:
    """Chance that ``x`` consecutive fresh words of one sequence miss a fixed cache block."""
    if x < 0:
        raise ValueError("x must be >= 0")
    B, bc = geom.block_size, geom.words
    if x == 0:
        return 1.0
    if x <= bc - B + 1:
        return 1.0 - (x + B - 1) / bc
    return 0.0


def g_countload(m, geom: CacheGeometry) -> float:
    """Fraction of the cache covered by count blocks touched under access vector ``m``."""
    m = np.asarray(m)
    B = geom.block_size
    if m.ndim != 1 or m.size % B:
        raise ValueError(f"length {m.size} is not a multiple of B={B}")
    touched = np.count_nonzero(m.reshape(-1, B).sum(axis=1) > 0)
    return touched / geom.num_blocks


class OccupancyContext:
    """Geometry plus a class distribution padded so that ``B | k``."""

    def __init__(self, geom: CacheGeometry, dist: ClassDistribution):
        self.geom = geom
        self.dist = dist.padded_to(geom.block_size)
        self.p = self.dist.probs
        self.P = self.dist.block_probs(geom.block_size)

    @property
    def k(self) -> int:
        return self.dist.k

    @property
    def k_active(self) -> int:
        return self.dist.k_active

    def a(self, i: int) -> np.ndarray:
        """Access law of the other pointers between two accesses to pointer ``i``."""
        out = self.p.copy()
        out[i] = 0.0
        # normalise by what is left; 1 - p_i can round to a spurious 1e-16
        s = out.sum()
        return out / s if s > 0 else out

    def b(self, i: int) -> np.ndarray:
        """Access law of the pointers between two accesses to count block ``i``."""
        B = self.geom.block_size
        out = self.p.copy()
        out[i * B:(i + 1) * B] = 0.0
        s = out.sum()
        return out / s if s > 0 else out


# ---------------------------------------------------------------------------
# reports


@dataclass
class ExactEstimate:
    mean: float
    ci_halfwidth: float
    samples: int
    truncation: float = 0.0


@dataclass
class BoundReport:
    formula: str
    variant: str
    n: int
    lower_rate: float | None = None
    upper_rate: float | None = None
    lower_additive: float = 0.0
    upper_additive: float = 0.0
    components: dict = field(default_factory=dict)
    exact_estimate: ExactEstimate | None = None
    terms: dict = field(default_factory=dict)
    clamped: bool = False
    caveats: list = field(default_factory=list)

    @property
    def lower_total(self) -> float | None:
        if self.lower_rate is None:
            return None
        return self.n * self.lower_rate + self.lower_additive

    @property
    def upper_total(self) -> float | None:
        if self.upper_rate is None:
            return None
        return self.n * self.upper_rate + self.upper_additive

    def table(self) -> str:
        rows = [f"{self.formula} ({self.variant}), n={self.n}"]
        for label, v in (("lower rate", self.lower_rate), ("upper rate", self.upper_rate),
                         ("lower total", self.lower_total), ("upper total", self.upper_total)):
            if v is not None:
                rows.append(f"  {label:<12} {v:.9g}")
        for name, v in self.components.items():
            rows.append(f"  {name:<12} {v:.9g}")
        if self.exact_estimate is not None:
            e = self.exact_estimate
            rows.append(f"  exact        {e.mean:.9g} +/- {e.ci_halfwidth:.3g} (99%)")
        if self.clamped:
            rows.append("  (clamped to [0, 1])")
        for c in self.caveats:
            rows.append(f"  note: {c}")
        return "\n".join(rows)


def _clamp(components: dict) -> tuple[dict, bool]:
    out, hit = {}, False
    for k, v in components.items():
        c = min(1.0, max(0.0, v))
        hit |= c != v
        out[k] = c
    return out, hit


def _pair_sum(x: np.ndarray, y: np.ndarray) -> float:
    """``sum_ij x_i y_j / (x_i + y_j)`` with 0/0 taken as 0."""
    num = np.outer(x, y)
    den = np.add.outer(x, y)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return float(r.sum())


# ---------------------------------------------------------------------------
# closed-form upper and lower bounds


def p_source(geom: CacheGeometry) -> float:
    """Per-round miss chance of the sequential source read."""
    B, C = geom.block_size, geom.num_blocks
    return 1.0 / B + (B - 1) / B * (1.0 - (1.0 - 1.0 / C) ** 2)


def upper_inplace(ctx: OccupancyContext, n: int) -> BoundReport:
    B, C = ctx.geom.block_size, ctx.geom.num_blocks
    k = ctx.k_active
    s_pP = _pair_sum(ctx.p, ctx.P)
    s_pp = _pair_sum(ctx.p, ctx.p)
    s_Pp = _pair_sum(ctx.P, ctx.p)
    terms = {
        "pd.seq": 1.0 / B,
        "pd.first": k / (B * C),
        "pd.count_blocks": (B - 1) / (B * C) * s_pP,
        "pd.pointers": (B - 1) / (B * C) * (B - 1) / B * s_pp,
        "pc.first": k / (B * B * C),
        "pc.pointers": (B - 1) / (B * C) * s_Pp,
    }
    pd = sum(v for t, v in terms.items() if t.startswith("pd."))
    pc = sum(v for t, v in terms.items() if t.startswith("pc."))
    comps, clamped = _clamp({"p_d": pd, "p_c": pc})
    return BoundReport(
        "thm2", "inplace", n,
        upper_rate=comps["p_d"] + comps["p_c"],
        upper_additive=k * (1 + 1 / B),
        components=comps, terms=terms, clamped=clamped,
    )


def upper_outofplace(ctx: OccupancyContext, n: int) -> BoundReport:
    B, C = ctx.geom.block_size, ctx.geom.num_blocks
    k = ctx.k_active
    s_pP = _pair_sum(ctx.p, ctx.P)
    s_pp = _pair_sum(ctx.p, ctx.p)
    s_Pp = _pair_sum(ctx.P, ctx.p)
    terms = {
        "pd.seq": 1.0 / B,
        "pd.first": 2 * (B - 1) * k / (B * B * C),
        "pd.count_blocks": (B - 1) / (B * C) * s_pP,
        "pd.pointers": (B - 1) ** 2 / (B * B * C) * (1 + s_pp),
        "pc.first": 2 * k / (B * B * C),
        "pc.pointers": (B - 1) / (B * C) * (1 + s_Pp),
        "ps": p_source(ctx.geom),
    }
    pd = sum(v for t, v in terms.items() if t.startswith("pd."))
    pc = sum(v for t, v in terms.items() if t.startswith("pc."))
    comps, clamped = _clamp({"p_d": pd, "p_c": pc, "p_s": terms["ps"]})
    return BoundReport(
        "thm5", "outofplace", n,
        upper_rate=comps["p_d"] + comps["p_c"] + comps["p_s"],
        upper_additive=k * (1 + 1 / B) + 1,
        components=comps, terms=terms, clamped=clamped,
    )


def upper_sequences(ctx_or_dist, geom: CacheGeometry | None = None, n: int = 1) -> BoundReport:
    """Upper bound for ``k`` interleaved sequences (no count array, no padding)."""
    if isinstance(ctx_or_dist, OccupancyContext):
        dist, geom = ctx_or_dist.dist, ctx_or_dist.geom
    else:
        dist = ctx_or_dist
        if geom is None:
            raise TypeError("geom is required with a bare distribution")
    B, C = geom.block_size, geom.num_blocks
    p = dist.active
    k = p.size
    terms = {
        "seq": 1.0 / B,
        "first": k * (B - 1) / (B * B * C),
        "pointers": (B - 1) ** 2 / (B * B * C) * _pair_sum(p, p),
    }
    comps, clamped = _clamp({"p_d": sum(terms.values())})
    return BoundReport(
        "seq", "sequences", n, upper_rate=comps["p_d"], upper_additive=k,
        components=comps, terms=terms, clamped=clamped,
    )


def lower_inplace(ctx: OccupancyContext, n: int) -> BoundReport:
    """Lower bound on the pointer misses; needs every active ``p_i >= 1/C``.

    Terms of order ``e^-B`` are dropped and listed as a caveat.
    """
    B, C = ctx.geom.block_size, ctx.geom.num_blocks
    p = ctx.dist.active
    k = p.size
    if np.any(p < 1.0 / C * (1 - 1e-12)):
        raise BoundInapplicable(
            f"lower bound needs every p_i >= 1/C = {1.0 / C:.6g}; min p_i = {p.min():.6g}"
        )
    if k > 1024:
        raise BoundInapplicable("triple sum limited to k <= 1024")
    pi = p[:, None]
    pj = p[None, :]
    s_sq = float((pi * pi / (pi + pj)).sum())
    s_mix = float((p * (pi * (1 - pi - pj) / (pi + pj) ** 2).sum(axis=1)).sum())
    # triple sum, one i at a time to keep memory at O(k^2)
    jl_sum = np.add.outer(p, p) - np.outer(p, p)
    s_tri = float(sum(p[i] * p[i] * (1.0 / (p[i] + jl_sum)).sum() for i in range(k)))
    terms = {
        "seq": 1.0 / B,
        "k(2C-k)/2C^2": k * (2 * C - k) / (2 * C * C),
        "k(k-3C)/2BC^2": k * (k - 3 * C) / (2 * B * C * C),
        "-1/2BC": -1.0 / (2 * B * C),
        "-k/2B^2C": -k / (2 * B * B * C),
        "square_sum": (B * (k - C) + 2 * C - 3 * k) / (B * C * C) * s_sq,
        "mixed_sum": (B - 1) ** 2 / (B ** 3 * C * C) * s_mix,
        "triple_sum": -(B - 1) ** 2 / (B ** 3 * C * C) * (B - 1) / 2 * s_tri,
    }
    comps, clamped = _clamp({"p_d": sum(terms.values())})
    return BoundReport(
        "thm3", "inplace", n, lower_rate=comps["p_d"], lower_additive=k,
        components=comps, terms=terms, clamped=clamped,
        caveats=["terms of order exp(-B) omitted"],
    )


# Uniform closed forms ------------------------------------------------------


def cor1_rate(k: int, B: int, C: int) -> float:
    return 1 / B + k * (B + 5) / (2 * B * C) + k / (B * B * C)


def cor2_rate(k: int, B: int, C: int) -> float:
    return (
        1 / B + k / (2 * C) - k * k / (B * C * C) - (k + 1) / (2 * B * C) - k / (2 * B * B * C)
        + (B - 1) ** 2 / (12 * B ** 3 * C * C) * (k * k * (5 - 2 * B) - 7 * k + 2)
    )


def cor3a_rate(k: int, B: int, C: int) -> float:
    """Out-of-place uniform bound in the form printed as the result."""
    return 1 / B + k * (B + 3) / (2 * B * C) + k / (B * B * C) + k / (B * C)


def cor3b_rate(k: int, B: int, C: int) -> float:
    """Out-of-place uniform bound in the form reached by the derivation (includes the source)."""
    return 2 / B + k * (B + 7) / (2 * B * C) + 2 * k / (B * B * C) + 2 / C


def seq_cor_rate(k: int, B: int, C: int) -> float:
    return 1 / B + k * (B + 3) / (2 * B * C)


_ACCESSES = {"inplace": 2, "outofplace": 3, "sequences": 1}

_UNIFORM = {
    # formula: (rate fn, variant, side, additive(k, B))
    "cor1": (cor1_rate, "inplace", "upper", lambda k, B: k * (1 + 1 / B)),
    "cor2": (cor2_rate, "inplace", "lower", lambda k, B: k),
    "cor3a": (cor3a_rate, "outofplace", "upper", lambda k, B: k * (1 + 1 / B)),
    "cor3b": (cor3b_rate, "outofplace", "upper", lambda k, B: k * (1 + 1 / B) + 1),
    "seq": (seq_cor_rate, "sequences", "upper", lambda k, B: k),
}


def uniform_report(formula: str, k: int, geom: CacheGeometry, n: int) -> BoundReport:
    """Evaluate one of the uniform-distribution corollaries."""
    fn, variant, side, add = _UNIFORM[formula]
    B, C = geom.block_size, geom.num_blocks
    raw = fn(k, B, C)
    # a round makes 1, 2 or 3 accesses, which caps the per-round rate
    rate = min(float(_ACCESSES[variant]), max(0.0, raw))
    rep = BoundReport(formula, variant, n, terms={"rate": raw}, clamped=rate != raw)
    if side == "upper":
        rep.upper_rate, rep.upper_additive = rate, add(k, B)
    else:
        rep.lower_rate, rep.lower_additive = rate, add(k, B)
    if formula == "cor2" and k > C:
        rep.caveats.append("k > C: the underlying lower bound does not apply")
    return rep


# ---------------------------------------------------------------------------
# exact expectation by sequential multinomial streams


@njit(cache=True)
def _stream_kernel(cdf, classes, p_self, n_streams, seed, B, bc, n_blocks_c,
                   use_g, extra_f, eps, cap, k):
    """Estimate ``sum_m p (1-p)^m E[h(m)]`` for one stratum.

    ``cdf``/``classes`` give the law of the other accesses. ``h`` is the
    product of conflict factors over the pointers touched so far, times
    ``1 - touched_count_blocks/C`` when ``use_g``, times ``f(m+1)`` when
    ``extra_f``. Returns (mean, sample variance, max truncation tail).
    """
    np.random.seed(seed)
    q = 1.0 - p_self
    lim = bc - B + 1
    counts = np.zeros(k, dtype=np.int64)
    touched = np.zeros(k // B + 1, dtype=np.uint8)
    total = 0.0
    total2 = 0.0
    max_tail = 0.0
    n_other = cdf.shape[0]
    for s in range(n_streams):
        counts[:] = 0
        touched[:] = 0
        n_touched = 0
        prod = 1.0
        w = p_self  # p (1-p)^m
        tail_w = q  # (1-p)^(m+1)
        acc = 0.0
        m = 0
        while True:
            # value of h at the current m
            v = prod
            if use_g:
                v *= 1.0 - n_touched / n_blocks_c
            if extra_f:
                x = m + 1
                v *= (1.0 - (x + B - 1) / bc) if x <= lim else 0.0
            acc += w * v
            if v == 0.0 or n_other == 0:
                break
            tail = tail_w * v
            if tail <= eps or m + 1 >= cap:
                acc += 0.5 * tail
                if tail > max_tail:
                    max_tail = tail
                break
            # draw the next other access
            u = np.random.random()
            lo = 0
            hi = n_other - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if cdf[mid] > u:
                    hi = mid
                else:
                    lo = mid + 1
            j = classes[lo]
            c = counts[j]
            old = (1.0 - (c + B - 1) / bc) if (c > 0 and c <= lim) else (1.0 if c == 0 else 0.0)
            c += 1
            counts[j] = c
            new = (1.0 - (c + B - 1) / bc) if c <= lim else 0.0
            if new == 0.0:
                prod = 0.0
            else:
                prod = prod / old * new
            if use_g:
                blk = j // B
                if touched[blk] == 0:
                    touched[blk] = 1
                    n_touched += 1
            w *= q
            tail_w *= q
            m += 1
        total += acc
        total2 += acc * acc
    mean = total / n_streams
    var = (total2 / n_streams - mean * mean) * n_streams / max(n_streams - 1, 1)
    return mean, max(var, 0.0), max_tail


def _stratum_cdf(weights: np.ndarray):
    idx = np.flatnonzero(weights > 0)
    if idx.size == 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    c = np.cumsum(weights[idx])
    c /= c[-1]
    c[-1] = 1.0 + 1e-12  # u in [0,1) never falls past the last entry
    return c, idx.astype(np.int64)


def _class_key(ctx: OccupancyContext, i: int):
    B = ctx.geom.block_size
    blocks = ctx.p.reshape(-1, B)
    own = i // B
    others = sorted(tuple(sorted(np.round(b, 15))) for r, b in enumerate(blocks) if r != own)
    rest = list(np.round(blocks[own], 15))
    rest.remove(np.round(ctx.p[i], 15))
    return (round(float(ctx.p[i]), 15), tuple(sorted(rest)), tuple(others))


def _block_key(ctx: OccupancyContext, i: int):
    B = ctx.geom.block_size
    blocks = ctx.p.reshape(-1, B)
    others = sorted(tuple(sorted(np.round(b, 15))) for r, b in enumerate(blocks) if r != i)
    return (tuple(sorted(np.round(blocks[i], 15))), tuple(others))


def _estimate(ctx: OccupancyContext, n: int, samples: int, eps: float, seed: int,
              out_of_place: bool):
    """Return ``(p_d, p_c, ci_halfwidth, total_streams, truncation)``."""
    geom = ctx.geom
    B, C, bc, k = geom.block_size, geom.num_blocks, geom.words, ctx.k
    p, P = ctx.p, ctx.P
    var_sum = 0.0
    trunc = 0.0
    streams = 0
    skipped = 0.0

    def cap_for(q):
        return int(min(1_000_000, math.ceil(math.log(1 / eps) / max(q, 1.0 / max(n, 1)))))

    # pointer strata
    groups: dict = {}
    for i in range(k):
        if p[i] <= 0:
            continue
        groups.setdefault(_class_key(ctx, i), []).append(i)
    pmax = p.max()
    pd_sum = 0.0
    for gi, (key, members) in enumerate(sorted(groups.items())):
        i = members[0]
        weight = (B - 1) / B * p[i] * len(members)
        if p[i] < eps:
            pd_sum += weight * 0.5
            skipped += weight * 0.5
            continue
        S = max(256, math.ceil(samples * p[i] / pmax))
        cdf, cls = _stratum_cdf(ctx.a(i))
        mean, var, tail = _stream_kernel(
            cdf, cls, float(p[i]), S, (seed * 1_000_003 + 2 * gi) % (2**32), B, bc, C,
            True, out_of_place, eps, cap_for(p[i]), k,
        )
        pd_sum += weight * (1.0 - mean)
        var_sum += weight * weight * var / S
        trunc += weight * 0.5 * tail
        streams += S
    p_d = 1.0 / B + pd_sum

    # count-block strata
    bgroups: dict = {}
    for i in range(P.size):
        if P[i] <= 0:
            continue
        bgroups.setdefault(_block_key(ctx, i), []).append(i)
    Pmax = P.max()
    pc_sum = 0.0
    for gi, (key, members) in enumerate(sorted(bgroups.items())):
        i = members[0]
        weight = P[i] * len(members)
        if P[i] < eps:
            pc_sum += weight * 0.5
            skipped += weight * 0.5
            continue
        S = max(256, math.ceil(samples * P[i] / Pmax))
        cdf, cls = _stratum_cdf(ctx.b(i))
        mean, var, tail = _stream_kernel(
            cdf, cls, float(P[i]), S, (seed * 1_000_003 + 2 * gi + 1) % (2**32), B, bc, C,
            False, out_of_place, eps, cap_for(P[i]), k,
        )
        pc_sum += weight * (1.0 - mean)
        var_sum += weight * weight * var / S
        trunc += weight * 0.5 * tail
        streams += S
    ci = Z99 * math.sqrt(var_sum) + trunc + skipped
    return p_d, pc_sum, ci, streams, trunc + skipped


def _check_exact_pre(ctx: OccupancyContext):
    if not 2 <= ctx.k <= ctx.geom.words:
        raise ValueError(f"k={ctx.k} outside [2, B*C]")


def exact_inplace(ctx: OccupancyContext, n: int, samples: int = 10_000,
                  eps: float = 1e-9, seed: int = 0) -> BoundReport:
    """Monte-Carlo evaluation of the exact in-place expectation.

    The returned ``exact_estimate.ci_halfwidth`` is a 99% half-width that also
    covers series truncation.
    """
    _check_exact_pre(ctx)
    p_d, p_c, ci, streams, trunc = _estimate(ctx, n, samples, eps, seed, False)
    rate = p_d + p_c
    B = ctx.geom.block_size
    return BoundReport(
        "thm1", "inplace", n,
        lower_rate=rate, upper_rate=rate, upper_additive=ctx.k_active * (1 + 1 / B),
        components={"p_d": p_d, "p_c": p_c},
        exact_estimate=ExactEstimate(rate, ci, streams, trunc),
        terms={"p_d": p_d, "p_c": p_c},
    )


def exact_outofplace(ctx: OccupancyContext, n: int, samples: int = 10_000,
                     eps: float = 1e-9, seed: int = 0) -> BoundReport:
    _check_exact_pre(ctx)
    p_d, p_c, ci, streams, trunc = _estimate(ctx, n, samples, eps, seed, True)
    p_s = p_source(ctx.geom)
    rate = p_d + p_c + p_s
    B = ctx.geom.block_size
    return BoundReport(
        "thm4", "outofplace", n,
        lower_rate=rate, upper_rate=rate, upper_additive=ctx.k_active * (1 + 1 / B) + 1,
        components={"p_d": p_d, "p_c": p_c, "p_s": p_s},
        exact_estimate=ExactEstimate(rate, ci, streams, trunc),
        terms={"p_d": p_d, "p_c": p_c, "p_s": p_s},
    )


# ---------------------------------------------------------------------------
# first radix pass over floats


def _check_radix_pre(geom: CacheGeometry, g: int, K: int):
    for name, v in (("g", g), ("K", K)):
        if v < 1 or v & (v - 1):
            raise BoundInapplicable(f"{name}={v} must be a power of two >= 1")
    if g * K > geom.words:
        raise BoundInapplicable(f"g*K={g * K} exceeds B*C={geom.words}")
    if K > geom.num_blocks:
        raise BoundInapplicable(f"K={K} exceeds C={geom.num_blocks}")


def msb_radix_rate(geom: CacheGeometry, g: int, K: int) -> float:
    _check_radix_pre(geom, g, K)
    B, C = geom.block_size, geom.num_blocks
    inner = 2.3 * B + 2 * math.log2(B) + math.log2(C) - math.log2(K) + 0.7
    return 1 / B + (2 * K / (B * C)) * inner


def msb_radix_bound(geom: CacheGeometry, g: int, K: int, n: int) -> float:
    """Upper bound on misses of the first radix pass: ``g`` groups of ``K`` pointers."""
    return n * msb_radix_rate(geom, g, K) + g * K * (1 + 1 / geom.block_size)


def msb_radix_report(geom: CacheGeometry, g: int, K: int, n: int) -> BoundReport:
    rate = msb_radix_rate(geom, g, K)
    B, C = geom.block_size, geom.num_blocks
    terms = {
        "seq": 1 / B,
        "2.3B": 2 * K / (B * C) * 2.3 * B,
        "2log2B": 2 * K / (B * C) * 2 * math.log2(B),
        "log2C": 2 * K / (B * C) * math.log2(C),
        "-log2K": -2 * K / (B * C) * math.log2(K),
        "0.7": 2 * K / (B * C) * 0.7,
    }
    return BoundReport("thm6", "sort-trace", n, upper_rate=rate,
                       upper_additive=g * K * (1 + 1 / B), terms=terms)


# ---------------------------------------------------------------------------
# radix selection


@dataclass(frozen=True)
class StrictMisses:
    """Keep count plus permute misses per key within ``(2 + eps)/B``."""

    eps: float = 0.5


@dataclass(frozen=True)
class TradeOff:
    """Minimize ``passes * (miss_penalty * miss_rate + per_key_work)``."""

    miss_penalty: float = 30.0
    per_key_work: float = 1.0
    threshold: int = 8


@dataclass(frozen=True)
class KChoice:
    k: int
    feasible: bool
    predicted_rate: float
    g: int = 1
    K: int = 1
    cost: float | None = None


def _pow2floor(x: float) -> int:
    return 1 << max(0, int(math.floor(math.log2(x)))) if x >= 1 else 1


def passes(n: float, k: int, threshold: int = 8) -> int:
    """Radix passes until subproblems average ``threshold`` keys."""
    if n <= threshold or k < 2:
        return 0 if n <= threshold else 1
    return max(1, math.ceil(math.log(n / threshold) / math.log(k) - 1e-12))


def _uniform_pass_rate(geom: CacheGeometry, k: int) -> float:
    # count phase reads the keys once (1/B) plus the in-place permute
    return 1 / geom.block_size + cor1_rate(k, geom.block_size, geom.num_blocks)


def _float_pass_rate(geom: CacheGeometry, g: int, K: int) -> float:
    return 1 / geom.block_size + msb_radix_rate(geom, g, K)


def choose_k(geom: CacheGeometry, n: int, criterion=None, dist_kind: str = "uniform",
             g: int = 1, max_k: int = 1 << 16, max_K_bits: int | None = None) -> KChoice:
    """Pick a radix from the miss predictions.

    For ``dist_kind="uniform"`` the result is the class count ``k`` of one
    pass. For ``"float"`` it is the number ``K`` of buckets per exponent
    group in the first pass over ``g`` groups; ``k = g*K``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if criterion is None:
        criterion = TradeOff()
    B, C = geom.block_size, geom.num_blocks
    cap = min(_pow2floor(max(n / 8, 1)), max_k)

    if dist_kind == "uniform":
        lo = max(2, B)
        cands = [1 << b for b in range(1, 64) if lo <= (1 << b) <= min(geom.words, cap)]
        rate = lambda k: _uniform_pass_rate(geom, k)
        make = lambda k, r, feas, cost=None: KChoice(k, feas, r, 1, k, cost)
        fallback = B
    elif dist_kind == "float":
        kmax = min(geom.words // g, C)
        if max_K_bits is not None:
            kmax = min(kmax, 1 << max_K_bits)
        cands = [1 << b for b in range(0, 64) if (1 << b) <= kmax]
        rate = lambda K: _float_pass_rate(geom, g, K)
        make = lambda K, r, feas, cost=None: KChoice(g * K, feas, r, g, K, cost)
        fallback = 1
    else:
        raise ValueError(f"unknown dist_kind {dist_kind!r}")
    if not cands:
        warnings.warn("no admissible radix; using the minimum", RuntimeWarning, stacklevel=2)
        return make(fallback, rate(fallback) if dist_kind == "float" else _uniform_pass_rate(geom, fallback), False)

    if isinstance(criterion, StrictMisses):
        limit = (2 + criterion.eps) / B
        ok = [c for c in cands if rate(c) <= limit]
        if not ok:
            warnings.warn("no radix meets the miss target", RuntimeWarning, stacklevel=2)
            return make(fallback, rate(fallback), False)
        best = max(ok)
        return make(best, rate(best), True)

    if isinstance(criterion, TradeOff):
        pen, work, thr = criterion.miss_penalty, criterion.per_key_work, criterion.threshold

        def cost_uniform(k, size):
            return passes(size, k, thr) * (pen * _uniform_pass_rate(geom, k) + work)

        if dist_kind == "uniform":
            scored = [(cost_uniform(k, n), k) for k in cands]
        else:
            sub = [1 << b for b in range(1, 64) if max(2, B) <= (1 << b) <= geom.words]

            def cost_float(K):
                # the largest group holds about half the keys, split over K buckets
                rest = n / (2 * K)
                tail = min((cost_uniform(k, rest) for k in sub), default=0.0)
                return pen * rate(K) + work + tail

            scored = [(cost_float(K), K) for K in cands]
        cost, best = min(scored, key=lambda t: (t[0], -t[1]))
        return make(best, rate(best), True, cost)

    raise TypeError(f"unknown criterion {criterion!r}")
