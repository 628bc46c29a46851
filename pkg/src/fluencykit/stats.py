"""Reliability and evaluation statistics.

Everything here is self-contained: rank tests, correlations, internal
consistency, and the chi-square / F / t tail probabilities they need, the
latter via the usual series and continued-fraction evaluations of the
regularized incomplete gamma and beta functions (absolute error well below
1e-10).  No statistics package is required at run time; scipy is used only as
an independent oracle in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np


class UndefinedStatisticError(ValueError):
    """A statistic is undefined for this input (e.g. zero variance)."""


# --------------------------------------------------------------------------
# special functions

_TINY = 1e-300
_EPS = 1e-16


def _gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if x < 0 or a <= 0:
        raise ValueError("gamma_q needs a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        # lower series converges fast here
        term = 1.0 / a
        total = term
        k = a
        for _ in range(1000):
            k += 1.0
            term *= x / k
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        p = total * math.exp(-x + a * math.log(x) - math.lgamma(a))
        return 1.0 - p
    # upper continued fraction (modified Lentz)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _beta_cf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, 1000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def _beta_inc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def chi2_sf(x: float, df: int) -> float:
    """P(X > x) for a chi-square variable with df degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if x <= 0:
        return 1.0
    return _gamma_q(df / 2.0, x / 2.0)


def f_sf(f: float, df1: int, df2: int) -> float:
    """P(F > f) for an F variable with (df1, df2) degrees of freedom."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if f <= 0:
        return 1.0
    return _beta_inc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def t_sf(t: float, df: float) -> float:
    """One-sided P(T > t) for Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    half = 0.5 * _beta_inc(df / 2.0, 0.5, df / (df + t * t))
    return half if t >= 0 else 1.0 - half


# --------------------------------------------------------------------------
# descriptive statistics and tests


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties receiving the average of their positions."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise ValueError("inputs must have equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedStatisticError("correlation undefined for constant input")
    return float(dx @ dy) / (sx * sy)


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks (tie-aware)."""
    if len(x) != len(y):
        raise ValueError("inputs must have equal length")
    return pearson_r(average_ranks(list(x)), average_ranks(list(y)))


def spearman_test(x: Sequence[float], y: Sequence[float], tails: int = 2) -> tuple[float, float]:
    """(rho, p) using the t approximation; tails is 1 or 2.

    The one-tailed p tests association in the direction of the observed rho.
    """
    if tails not in (1, 2):
        raise ValueError("tails must be 1 or 2")
    rho = spearman_rho(x, y)
    n = len(x)
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = abs(rho) * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = t_sf(t, n - 2)
    return rho, (p if tails == 1 else 2.0 * p)


def cronbach_alpha(items) -> float:
    """Internal consistency of an items x observations matrix (ddof=1)."""
    m = np.asarray(items, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 2:
        raise ValueError("need a 2-D matrix with >= 2 items and >= 2 observations")
    k = m.shape[0]
    item_vars = m.var(axis=1, ddof=1)
    total_var = m.sum(axis=0).var(ddof=1)
    if total_var == 0.0:
        raise UndefinedStatisticError("alpha undefined: total score has zero variance")
    return float(k / (k - 1.0) * (1.0 - item_vars.sum() / total_var))


def rmse(actual: Sequence[float], predicted: Sequence[float]) -> float:
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape or a.size == 0:
        raise ValueError("inputs must be non-empty and the same length")
    d = a - p
    return math.sqrt(float(d @ d) / a.size)


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Rank-based H with tie correction and its chi-square p-value."""
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise ValueError("need >= 2 nonempty groups")
    pooled = [float(v) for g in groups for v in g]
    n_total = len(pooled)
    ranks = average_ranks(pooled)
    if all(v == pooled[0] for v in pooled):
        return 0.0, 1.0
    h = 0.0
    pos = 0
    for g in groups:
        gr = ranks[pos:pos + len(g)]
        pos += len(g)
        mean_rank = sum(gr) / len(gr)
        h += len(gr) * (mean_rank - (n_total + 1) / 2.0) ** 2
    h *= 12.0 / (n_total * (n_total + 1))
    # tie correction
    counts: dict[float, int] = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    correction = 1.0 - sum(t ** 3 - t for t in counts.values()) / (n_total ** 3 - n_total)
    h /= correction
    return h, chi2_sf(h, len(groups) - 1)


def friedman(scores) -> tuple[float, float]:
    """Within-subject rank test over a subjects x conditions matrix.

    Uses the tie-general form chi2 = (k-1) * sum_j (R_j - n(k+1)/2)^2 /
    sum_ij (r_ij - (k+1)/2)^2, which reduces to the classic statistic when no
    ties occur; all-tied rows simply contribute nothing.
    """
    m = np.asarray(scores, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 2:
        raise ValueError("need >= 2 subjects and >= 2 conditions")
    n, k = m.shape
    ranks = np.array([average_ranks(list(row)) for row in m])
    col_sums = ranks.sum(axis=0)
    centered = ranks - (k + 1) / 2.0
    denom = float((centered ** 2).sum())
    if denom == 0.0:
        return 0.0, 1.0
    num = float(((col_sums - n * (k + 1) / 2.0) ** 2).sum())
    chi2 = (k - 1) * num / denom
    return chi2, chi2_sf(chi2, k - 1)


def partial_f_test(r2_small: float, p_small: int, r2_big: float, p_big: int,
                   n: int) -> tuple[float, float]:
    """F test for the R-squared gain of a nested model extension."""
    if p_big <= p_small:
        raise ValueError("the big model must add predictors")
    if n <= p_big + 1:
        raise ValueError("too few observations for the big model")
    if r2_big < r2_small:
        raise ValueError("nested models cannot lose R-squared")
    if r2_big >= 1.0:
        raise UndefinedStatisticError("R-squared of 1 leaves no residual variance")
    q = p_big - p_small
    f = ((r2_big - r2_small) / q) / ((1.0 - r2_big) / (n - p_big - 1))
    return f, f_sf(f, q, n - p_big - 1)


# --------------------------------------------------------------------------
# reference ratings


@dataclass(frozen=True)
class RatingRecord:
    rater_id: str
    stimulus_id: str
    pass_number: int
    rating: int
    timestamp: str = ""

    def __post_init__(self):
        if self.pass_number not in (1, 2):
            raise ValueError(f"pass must be 1 or 2, got {self.pass_number}")
        if self.rating not in (1, 2, 3, 4, 5):
            raise ValueError(f"rating must be an integer in 1..5, got {self.rating}")


@dataclass(frozen=True)
class ReferenceRating:
    stimulus_id: str
    value: float


def build_reference_ratings(records: Sequence[RatingRecord],
                            allow_single_pass: bool = False
                            ) -> tuple[list[ReferenceRating], dict]:
    """Fold raw rating records into reference ratings plus a reliability report.

    Each rater's two passes are averaged per stimulus; the reference is the
    mean of those pass-means across raters.  The report carries intra-rater
    consistency (pass-1 vs pass-2 Spearman and alpha), pairwise inter-rater
    Spearman, the overall alpha, and a Kruskal-Wallis comparison of the
    raters' distributions.  Spearman p-values are one-tailed.
    """
    if not records:
        raise ValueError("no rating records")
    by_rater: dict[str, dict[str, dict[int, int]]] = {}
    seen = set()
    for rec in records:
        key = (rec.rater_id, rec.stimulus_id, rec.pass_number)
        if key in seen:
            raise ValueError(f"duplicate rating for {key}")
        seen.add(key)
        by_rater.setdefault(rec.rater_id, {}).setdefault(rec.stimulus_id, {})[rec.pass_number] = rec.rating

    raters = sorted(by_rater)
    stimuli = sorted({s for per in by_rater.values() for s in per})
    for rater in raters:
        missing = [s for s in stimuli if s not in by_rater[rater]]
        if missing:
            raise ValueError(f"rater {rater} has no ratings for stimuli {missing}")
        if not allow_single_pass:
            incomplete = [s for s, p in by_rater[rater].items() if set(p) != {1, 2}]
            if incomplete:
                raise ValueError(
                    f"rater {rater} is missing a pass for stimuli {sorted(incomplete)}; "
                    "use allow_single_pass to accept single-pass data")

    def _maybe(func, *args):
        try:
            return func(*args)
        except UndefinedStatisticError:
            return None

    intra = []
    pass_means = {}
    for rater in raters:
        per = by_rater[rater]
        both = [s for s in stimuli if set(per[s]) == {1, 2}]
        first = [per[s][1] for s in both]
        second = [per[s][2] for s in both]
        entry = {"rater_id": rater, "n_stimuli": len(stimuli),
                 "n_double_rated": len(both),
                 "spearman_rho": None, "spearman_p_one_tailed": None,
                 "cronbach_alpha": None}
        if len(both) >= 3:
            pair = _maybe(spearman_test, first, second, 1)
            if pair is not None:
                entry["spearman_rho"], entry["spearman_p_one_tailed"] = pair
            entry["cronbach_alpha"] = _maybe(cronbach_alpha, [first, second])
        intra.append(entry)
        pass_means[rater] = [sum(per[s].values()) / len(per[s]) for s in stimuli]

    pairs = []
    for ra, rb in combinations(raters, 2):
        res = None
        if len(stimuli) >= 3:
            res = _maybe(spearman_test, pass_means[ra], pass_means[rb], 1)
        pairs.append({"rater_a": ra, "rater_b": rb,
                      "spearman_rho": res[0] if res else None,
                      "spearman_p_one_tailed": res[1] if res else None})

    overall_alpha = None
    kw = None
    if len(raters) >= 2:
        if len(stimuli) >= 2:
            overall_alpha = _maybe(cronbach_alpha, [pass_means[r] for r in raters])
        h, p = kruskal_wallis([pass_means[r] for r in raters])
        kw = {"H": h, "df": len(raters) - 1, "p": p}

    reference = [
        ReferenceRating(s, sum(pass_means[r][i] for r in raters) / len(raters))
        for i, s in enumerate(stimuli)
    ]
    report = {
        "n_raters": len(raters),
        "n_stimuli": len(stimuli),
        "intra_rater": intra,
        "inter_rater": {"pairs": pairs, "cronbach_alpha": overall_alpha,
                        "kruskal_wallis": kw},
    }
    return reference, report
