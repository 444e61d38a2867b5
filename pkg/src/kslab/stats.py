"""Self-contained statistics used by the Monte Carlo analysis.

Nothing here depends on packages beyond numpy: the normal CDF comes from
erf, chi-square tail probabilities from the regularized incomplete gamma
function, and the Anderson-Darling and two-sample Kolmogorov-Smirnov
critical values from published tables (noted inline).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MomentSummary",
    "moments",
    "normal_cdf",
    "AndersonDarlingResult",
    "anderson_darling_normal",
    "KsTwoSampleResult",
    "ks_two_sample",
    "gammainc_lower",
    "chi_square_pvalue",
    "chi_square_gof",
    "total_variation",
]


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@dataclass
class MomentSummary:
    n: int
    mean: float
    variance: float  # unbiased
    skewness: float
    excess_kurtosis: float


def moments(samples) -> MomentSummary:
    """Mean, unbiased variance, and moment estimators of skewness and
    excess kurtosis.  Degenerate (constant) samples are rejected."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 8:
        raise ValueError("need at least 8 samples")
    mean = float(x.mean())
    d = x - mean
    m2 = float((d * d).mean())
    if m2 == 0.0:
        raise ValueError("degenerate sample: zero variance")
    m3 = float((d ** 3).mean())
    m4 = float((d ** 4).mean())
    return MomentSummary(
        n=n,
        mean=mean,
        variance=float(x.var(ddof=1)),
        skewness=m3 / m2 ** 1.5,
        excess_kurtosis=m4 / (m2 * m2) - 3.0,
    )


# A^2* critical values for normality with estimated mean and variance
# (Stephens' table, as reproduced in D'Agostino & Stephens 1986, ch. 4).
AD_CRITICAL = {0.10: 0.631, 0.05: 0.752, 0.025: 0.873, 0.01: 1.035}


@dataclass
class AndersonDarlingResult:
    n: int
    a2: float
    a2_adjusted: float  # small-sample adjustment A^2 (1 + 0.75/n + 2.25/n^2)

    def rejects(self, level: float = 0.01) -> bool:
        return self.a2_adjusted > AD_CRITICAL[level]


def anderson_darling_normal(samples) -> AndersonDarlingResult:
    """Anderson-Darling statistic against the normal with estimated
    parameters (the composite-hypothesis case)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 8:
        raise ValueError("need at least 8 samples")
    mu = x.mean()
    sd = x.std(ddof=1)
    if sd == 0.0:
        raise ValueError("degenerate sample: zero variance")
    z = (x - mu) / sd
    cdf = 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))
    eps = 1e-300
    cdf = np.clip(cdf, eps, 1.0 - 1e-16)
    i = np.arange(1, n + 1)
    a2 = -n - np.mean((2 * i - 1) * (np.log(cdf) + np.log1p(-cdf[::-1])))
    adj = a2 * (1.0 + 0.75 / n + 2.25 / (n * n))
    return AndersonDarlingResult(n=n, a2=float(a2), a2_adjusted=float(adj))


# c(alpha) coefficients for the two-sample Kolmogorov-Smirnov rejection
# threshold c(alpha) * sqrt((n1+n2)/(n1 n2)) (Smirnov's asymptotic law).
KS2_COEF = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628}


@dataclass
class KsTwoSampleResult:
    n1: int
    n2: int
    statistic: float

    def threshold(self, level: float = 0.01) -> float:
        return KS2_COEF[level] * math.sqrt((self.n1 + self.n2) / (self.n1 * self.n2))

    def rejects(self, level: float = 0.01) -> bool:
        return self.statistic > self.threshold(level)


def ks_two_sample(a, b) -> KsTwoSampleResult:
    """Two-sample Kolmogorov-Smirnov statistic (ties allowed)."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.union1d(a, b)
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return KsTwoSampleResult(n1=a.size, n2=b.size,
                             statistic=float(np.abs(cdf_a - cdf_b).max()))


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), by series for x < a+1
    and by Lentz continued fraction otherwise."""
    if x < 0 or a <= 0:
        raise ValueError("need x >= 0 and a > 0")
    if x == 0.0:
        return 0.0
    lg = math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        k = a
        for _ in range(500):
            k += 1.0
            term *= x / k
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return total * math.exp(-x + a * math.log(x) - lg)
    # continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    q = math.exp(-x + a * math.log(x) - lg) * h
    return 1.0 - q


def chi_square_pvalue(stat: float, df: int) -> float:
    """Upper tail probability of the chi-square distribution."""
    if df < 1:
        raise ValueError("df must be >= 1")
    return 1.0 - gammainc_lower(df / 2.0, stat / 2.0)


def chi_square_gof(counts, probs) -> tuple[float, int, float]:
    """Pearson goodness-of-fit: (statistic, df, p-value) for observed counts
    against cell probabilities; cells with zero probability must be empty."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if counts.shape != probs.shape:
        raise ValueError("counts and probs must have the same shape")
    total = counts.sum()
    expected = probs * total
    if np.any((expected == 0) & (counts > 0)):
        raise ValueError("observed count in a zero-probability cell")
    mask = expected > 0
    stat = float((((counts - expected) ** 2)[mask] / expected[mask]).sum())
    df = int(mask.sum()) - 1
    return stat, df, chi_square_pvalue(stat, df)


def total_variation(p, q) -> float:
    """Total variation distance between two probability vectors on the same
    support (shorter one is zero-padded)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    size = max(p.size, q.size)
    pp = np.zeros(size)
    qq = np.zeros(size)
    pp[: p.size] = p
    qq[: q.size] = q
    return 0.5 * float(np.abs(pp - qq).sum())
