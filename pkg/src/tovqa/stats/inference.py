"""Reliability and group-difference tests used to validate the study data:
Cronbach's alpha, Shapiro-Wilk, one-way ANOVA with Tukey HSD, Kruskal-Wallis,
Mann-Whitney with Holm correction, Cliff's delta and Welch's t.

All p-values are two-sided and computed from tovqa.stats.special.
"""

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import special


@dataclass(frozen=True)
class TestResult:
    name: str
    value: float
    df: Optional[Union[float, Tuple[float, ...]]] = None
    p_value: Optional[float] = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")

    def to_dict(self) -> dict:
        d = {"statistic": self.name, "value": self.value}
        if self.df is not None:
            d["df"] = list(self.df) if isinstance(self.df, tuple) else self.df
        if self.p_value is not None:
            d["p_value"] = self.p_value
        if self.detail:
            d["detail"] = self.detail
        return d


def _rank_with_ties(values: np.ndarray) -> np.ndarray:
    """Average ranks, 1-based."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def cronbach_alpha(item_matrix) -> TestResult:
    """Internal consistency over a participants x items matrix.

    Rows with any missing cell (NaN) are dropped (listwise deletion).
    """
    m = np.asarray(item_matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("item matrix must be 2-D (participants x items)")
    m = m[~np.isnan(m).any(axis=1)]
    n, k = m.shape
    if k < 2:
        raise ValueError(f"need >= 2 items, got {k}")
    if n < 2:
        raise ValueError(f"need >= 2 complete participants, got {n}")
    item_vars = m.var(axis=0, ddof=1)
    total_var = m.sum(axis=1).var(ddof=1)
    if total_var == 0.0:
        raise ValueError("zero total variance: alpha undefined")
    alpha = k / (k - 1.0) * (1.0 - item_vars.sum() / total_var)
    return TestResult("alpha", float(alpha), detail={"n_participants": n, "n_items": k})


# Royston (AS R94) polynomial coefficients for the W weights and p-value.
_SW_C1 = (-2.706056, 4.434685, -2.071190, -0.147981, 0.221157)
_SW_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981)


def _sw_poly(coeffs, u):
    acc = 0.0
    for c in coeffs:
        acc = acc * u + c
    return acc * u  # constant term (c_n) added by the caller


def shapiro_wilk(sample) -> TestResult:
    """Shapiro-Wilk normality test, Royston approximation, 3 <= n <= 5000."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = len(x)
    if not 3 <= n <= 5000:
        raise ValueError(f"sample size must lie in [3, 5000], got {n}")
    if x[0] == x[-1]:
        raise ValueError("zero variance sample")

    m = np.array(
        [special.normal_ppf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    )
    msq = float(m @ m)
    c = m / math.sqrt(msq)
    a = np.empty(n)
    if n == 3:
        a[0], a[1], a[2] = -math.sqrt(0.5), 0.0, math.sqrt(0.5)
    else:
        u = 1.0 / math.sqrt(n)
        an = _sw_poly(_SW_C1, u) + c[-1]
        if n > 5:
            an1 = _sw_poly(_SW_C2, u) + c[-2]
            phi = (msq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
                1.0 - 2.0 * an ** 2 - 2.0 * an1 ** 2
            )
            a[2:-2] = m[2:-2] / math.sqrt(phi)
            a[-1], a[-2] = an, an1
            a[0], a[1] = -an, -an1
        else:
            phi = (msq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * an ** 2)
            a[1:-1] = m[1:-1] / math.sqrt(phi)
            a[-1] = an
            a[0] = -an
    w_num = float(a @ x) ** 2
    w_den = float(np.sum((x - x.mean()) ** 2))
    w = w_num / w_den

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
    elif n <= 11:
        g = -2.273 + 0.459 * n
        mu = 0.5440 - 0.39978 * n + 0.025054 * n ** 2 - 0.0006714 * n ** 3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n ** 2 - 0.0020322 * n ** 3)
        if w >= 1.0 - 1e-12 or g - math.log(1.0 - w) <= 0:
            p = 1.0
        else:
            z = (-math.log(g - math.log(1.0 - w)) - mu) / sigma
            p = special.normal_sf(z)
    else:
        ln = math.log(n)
        mu = -1.5861 - 0.31082 * ln - 0.083751 * ln ** 2 + 0.0038915 * ln ** 3
        sigma = math.exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln ** 2)
        if w >= 1.0 - 1e-12:
            p = 1.0
        else:
            z = (math.log(1.0 - w) - mu) / sigma
            p = special.normal_sf(z)
    return TestResult("W", float(w), df=float(n), p_value=float(p))


def _group_arrays(groups) -> List[np.ndarray]:
    gs = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(gs) < 2:
        raise ValueError(f"need >= 2 groups, got {len(gs)}")
    for g in gs:
        if len(g) == 0:
            raise ValueError("empty group")
    return gs


def anova_oneway(groups) -> TestResult:
    """One-way fixed-effects ANOVA."""
    gs = _group_arrays(groups)
    if any(len(g) < 2 for g in gs):
        raise ValueError("every group needs >= 2 values")
    k = len(gs)
    n_total = sum(len(g) for g in gs)
    grand = sum(g.sum() for g in gs) / n_total
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in gs)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in gs)
    df1, df2 = k - 1, n_total - k
    if ss_within == 0.0:
        raise ValueError("zero within-group variance in all groups")
    f = (ss_between / df1) / (ss_within / df2)
    return TestResult(
        "F", float(f), df=(float(df1), float(df2)), p_value=special.f_sf(f, df1, df2)
    )


def tukey_hsd(groups) -> List[TestResult]:
    """All pairwise comparisons via the studentized range (Tukey-Kramer for
    unequal group sizes)."""
    gs = _group_arrays(groups)
    if any(len(g) < 2 for g in gs):
        raise ValueError("every group needs >= 2 values")
    k = len(gs)
    n_total = sum(len(g) for g in gs)
    df_w = n_total - k
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in gs)
    if ss_within == 0.0:
        raise ValueError("zero within-group variance in all groups")
    ms_within = ss_within / df_w
    out = []
    for i, j in itertools.combinations(range(k), 2):
        nh = 2.0 / (1.0 / len(gs[i]) + 1.0 / len(gs[j]))
        q = abs(gs[i].mean() - gs[j].mean()) / math.sqrt(ms_within / nh)
        p = 1.0 if q == 0.0 else special.studentized_range_sf(q, k, df_w)
        out.append(
            TestResult("q", float(q), df=float(df_w), p_value=p, detail={"pair": (i, j)})
        )
    return out


def kruskal_wallis(groups) -> TestResult:
    """Rank-based H test with tie correction."""
    gs = _group_arrays(groups)
    n_total = sum(len(g) for g in gs)
    if n_total < 5:
        raise ValueError(f"need total n >= 5, got {n_total}")
    pooled = np.concatenate(gs)
    ranks = _rank_with_ties(pooled)
    tie_counts = Counter(pooled.tolist()).values()
    tie_term = sum(t ** 3 - t for t in tie_counts)
    correction = 1.0 - tie_term / (n_total ** 3 - n_total)
    if correction == 0.0:
        raise ValueError("all values identical: H undefined")
    h = 0.0
    offset = 0
    for g in gs:
        r = ranks[offset : offset + len(g)]
        h += r.sum() ** 2 / len(g)
        offset += len(g)
    h = (12.0 / (n_total * (n_total + 1.0))) * h - 3.0 * (n_total + 1.0)
    h /= correction
    df = len(gs) - 1
    return TestResult("H", float(h), df=float(df), p_value=special.chi2_sf(h, df))


def _u_statistics(a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    pooled = np.concatenate([a, b])
    ranks = _rank_with_ties(pooled)
    ra = ranks[: len(a)].sum()
    ua = ra - len(a) * (len(a) + 1) / 2.0
    return ua, len(a) * len(b) - ua


def _mw_exact_p(a: np.ndarray, b: np.ndarray, u_obs: float) -> float:
    """P(min(U_a, U_b) <= u_obs) over all group assignments of the pooled
    values. Exact, tie-aware."""
    pooled = np.concatenate([a, b])
    n, na = len(pooled), len(a)
    hits = 0
    total = 0
    for idx in itertools.combinations(range(n), na):
        mask = np.zeros(n, dtype=bool)
        mask[list(idx)] = True
        ua, ub = _u_statistics(pooled[mask], pooled[~mask])
        total += 1
        if min(ua, ub) <= u_obs + 1e-12:
            hits += 1
    return hits / total


def mann_whitney(a, b, method: str = "auto") -> TestResult:
    """Two-sided Mann-Whitney U; exact enumeration for small samples, else
    tie-corrected normal approximation with continuity correction."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    ua, ub = _u_statistics(a, b)
    u = min(ua, ub)
    n = len(a) + len(b)
    if method == "auto":
        method = "exact" if n <= 12 else "normal"
    if method == "exact":
        p = _mw_exact_p(a, b, u)
    elif method == "normal":
        na, nb = len(a), len(b)
        mu = na * nb / 2.0
        tie_counts = Counter(np.concatenate([a, b]).tolist()).values()
        tie_term = sum(t ** 3 - t for t in tie_counts)
        var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
        if var <= 0.0:
            p = 1.0
        else:
            z = (u - mu + 0.5) / math.sqrt(var)
            p = min(2.0 * special.normal_cdf(z), 1.0)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TestResult("U", float(u), p_value=float(p), detail={"method": method})


def holm_adjust(p_values: Sequence[float]) -> List[float]:
    """Step-down Holm correction; output order matches input order."""
    ps = list(map(float, p_values))
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value out of range: {p}")
    m = len(ps)
    order = sorted(range(m), key=lambda i: ps[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, min(1.0, (m - rank) * ps[idx]))
        adjusted[idx] = running
    return adjusted


def cliffs_delta(a, b) -> TestResult:
    """Dominance effect size: (#{a_i > b_j} - #{a_i < b_j}) / (n_a * n_b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    gt = int((a[:, None] > b[None, :]).sum())
    lt = int((a[:, None] < b[None, :]).sum())
    delta = (gt - lt) / (len(a) * len(b))
    return TestResult("delta", float(delta))


def welch_t(a, b) -> TestResult:
    """Welch's unequal-variance t-test with Welch-Satterthwaite df."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs >= 2 values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    sa, sb = va / len(a), vb / len(b)
    se2 = sa + sb
    if se2 == 0.0:
        raise ValueError("zero variance in both samples")
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 ** 2 / (
        (sa ** 2 / (len(a) - 1.0) if sa else 0.0)
        + (sb ** 2 / (len(b) - 1.0) if sb else 0.0)
    )
    return TestResult(
        "t", float(t), df=float(df), p_value=special.t_sf_two_sided(t, df)
    )
