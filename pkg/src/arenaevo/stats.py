"""Statistical tests used by analyses: Welch t, one-way ANOVA, two-sample
K-S, Bonferroni adjustment, t-based confidence intervals, and Wilson
proportion intervals.

The test logic (statistics, degrees of freedom, ECDFs, the asymptotic
Kolmogorov survival series) is implemented here; only the classic t and F
distribution functions come from scipy.special.  K-S p-values use the
asymptotic distribution at the effective size sqrt(nm/(n+m)); on heavily
tied integer data this is an approximation, which is acceptable here
because the compared samples share the tie structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import fdtrc, stdtr, stdtrit


@dataclass(frozen=True)
class StatResult:
    test_name: str
    statistic: float
    df: float | tuple[float, float] | None
    p_value: float
    degenerate: bool = False


def welch_t(sample_a: Sequence[float], sample_b: Sequence[float]) -> StatResult:
    """Welch's unequal-variance t test, two-sided."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least two values")
    va = a.var(ddof=1) / len(a)
    vb = b.var(ddof=1) / len(b)
    if va + vb == 0.0:
        return StatResult("welch_t", math.nan, None, math.nan, degenerate=True)
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    p = 2.0 * float(stdtr(df, -abs(t)))
    return StatResult("welch_t", float(t), float(df), min(p, 1.0))


def anova_oneway(groups: Sequence[Sequence[float]]) -> StatResult:
    """One-way fixed-effects ANOVA: F with (k-1, N-k) degrees of freedom."""
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if any(len(g) < 2 for g in arrays):
        raise ValueError("each group needs at least two values")
    n_total = sum(len(g) for g in arrays)
    grand = sum(g.sum() for g in arrays) / n_total
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in arrays)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in arrays)
    df_between = len(arrays) - 1
    df_within = n_total - len(arrays)
    if ss_within == 0.0:
        if ss_between == 0.0:
            return StatResult(
                "anova_oneway", math.nan, (df_between, df_within), math.nan, degenerate=True
            )
        return StatResult("anova_oneway", math.inf, (df_between, df_within), 0.0)
    f = (ss_between / df_between) / (ss_within / df_within)
    p = float(fdtrc(df_between, df_within, f))
    return StatResult("anova_oneway", float(f), (df_between, df_within), p)


def kolmogorov_sf(x: float) -> float:
    """Survival function of the asymptotic Kolmogorov distribution.

    Two-branch series evaluation: the theta-transformed CDF series for
    small x, the direct alternating survival series otherwise.  Absolute
    error is far below 1e-12 over the whole range.
    """
    if x <= 0.0:
        return 1.0
    if x < 1.18:
        y = math.exp(-math.pi * math.pi / (8.0 * x * x))
        cdf = math.sqrt(2.0 * math.pi) / x * (y + y**9 + y**25 + y**49)
        return max(0.0, 1.0 - cdf)
    y = math.exp(-2.0 * x * x)
    return max(0.0, 2.0 * (y - y**4 + y**9 - y**16))


def ks_two_sample(sample_a: Sequence[float], sample_b: Sequence[float]) -> StatResult:
    """Two-sided two-sample Kolmogorov-Smirnov test.

    D is the supremum ECDF gap evaluated at every observed point (ties are
    handled by right-continuous ECDFs), and p comes from the asymptotic
    distribution at sqrt(nm/(n+m)).
    """
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("samples must be non-empty")
    points = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, points, side="right") / len(a)
    cdf_b = np.searchsorted(b, points, side="right") / len(b)
    d = float(np.abs(cdf_a - cdf_b).max())
    en = math.sqrt(len(a) * len(b) / (len(a) + len(b)))
    return StatResult("ks_two_sample", d, None, kolmogorov_sf(en * d))


def bonferroni(p_values: Iterable[float], m: int) -> list[float]:
    """Adjust p-values for m tests: min(1, p * m)."""
    ps = list(p_values)
    if m < len(ps):
        raise ValueError("m must be at least the number of tests")
    return [min(1.0, p * m) for p in ps]


def mean_ci95(values: Sequence[float]) -> tuple[float, float, float]:
    """Mean with the t-based 95% confidence interval: mean +/- t * sd/sqrt(n)."""
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two values")
    mean = float(x.mean())
    half = float(stdtrit(len(x) - 1, 0.975)) * float(x.std(ddof=1)) / math.sqrt(len(x))
    return mean, mean - half, mean + half


_WILSON_Z = 1.959963984540054  # Phi^-1(0.975)


def wilson_interval(successes: int, total: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if total < 1 or not 0 <= successes <= total:
        raise ValueError("need 0 <= successes <= total with total >= 1")
    z2 = _WILSON_Z * _WILSON_Z
    p = successes / total
    denom = 1.0 + z2 / total
    center = (p + z2 / (2.0 * total)) / denom
    half = (
        _WILSON_Z
        * math.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total))
        / denom
    )
    # The score interval closes exactly at the boundaries.
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == total else min(1.0, center + half)
    return low, high
