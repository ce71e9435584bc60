"""By-item statistics: within-item confidence intervals and sign-flip tests.

Two tools, both operating on per-item values so that item identity is the
pairing unit:

* :func:`within_item_ci` computes per-condition means with the
  Masson/Loftus adjustment: every cell is shifted by (grand mean - item
  mean), which removes between-item variance before the t-based interval
  is formed.

* :func:`paired_permutation` runs a two-sided sign-flip permutation test of
  mean(diffs) against zero.  All 2^n sign assignments are enumerated when
  that is no more work than the requested sample count (the p-value is then
  an exact ratio); otherwise assignments are sampled with a counter-based
  Philox generator and the add-one correction keeps p strictly positive.
  This test is the package's substitute for mixed-effects regression: it
  tests the same within-item null without a regression stack, and reports
  flag the substitution.

Student-t quantiles come from an in-package evaluation of the regularized
incomplete beta function (continued-fraction expansion, bisection inverse;
absolute error well below 1e-6 for df >= 1), so confidence intervals are
reproducible without a statistics dependency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .metrics import MetricResult

MIXED_EFFECTS_NOTE = (
    "p_perm is a paired sign-flip permutation test on by-item differences, "
    "substituting for mixed-effects regression")


# ---------------------------------------------------------------------------
# Student-t quantile (no external statistics dependency)

def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz method)."""
    max_iter, eps, tiny = 300, 3e-14, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def _reg_inc_beta(a: float, b: float, x: float) -> float:
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


def t_cdf(t: float, df: float) -> float:
    if df <= 0:
        raise ValidationError("t distribution needs df > 0")
    if t == 0.0:
        return 0.5
    tail = 0.5 * _reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def t_quantile(p: float, df: float) -> float:
    """Inverse CDF of Student's t via bisection on :func:`t_cdf`."""
    if not 0.0 < p < 1.0:
        raise ValidationError("quantile probability must be in (0, 1)")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p:
        hi *= 2.0
        if hi > 1e300:
            raise ValidationError("t quantile out of range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Within-item confidence intervals

@dataclass(frozen=True)
class ConditionMatrix:
    """Complete items x conditions table of per-item values (bits)."""

    item_ids: tuple[int, ...]
    conditions: tuple[str, ...]
    values: np.ndarray  # shape (n_items, n_conditions)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.item_ids), len(self.conditions)):
            raise ValidationError("matrix shape does not match labels")
        if not np.all(np.isfinite(v)):
            raise ValidationError("matrix has missing or non-finite cells")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_metrics(cls, metrics: Sequence[MetricResult]) -> "ConditionMatrix":
        """Stack per-item metric values; items must agree across metrics."""
        if not metrics:
            raise ValidationError("no metrics given")
        ids = sorted(metrics[0].per_item)
        for m in metrics[1:]:
            if sorted(m.per_item) != ids:
                raise ValidationError(
                    f"metric {m.contrast_name!r} covers different items")
        values = np.array([[m.per_item[i] for m in metrics] for i in ids])
        return cls(tuple(ids), tuple(m.contrast_name for m in metrics), values)


@dataclass(frozen=True)
class IntervalEstimate:
    level: float
    means: dict[str, float]
    lower: dict[str, float]
    upper: dict[str, float]

    def interval(self, condition: str) -> tuple[float, float, float]:
        return (self.means[condition], self.lower[condition], self.upper[condition])


def adjust_within_item(values: np.ndarray) -> np.ndarray:
    """Masson/Loftus adjustment: cell - item mean + grand mean."""
    item_means = values.mean(axis=1, keepdims=True)
    grand = values.mean()
    return values - item_means + grand


def within_item_ci(matrix: ConditionMatrix, level: float = 0.95) -> IntervalEstimate:
    """Per-condition means with within-item-adjusted t confidence intervals."""
    if not 0.0 < level < 1.0:
        raise ValidationError("confidence level must be in (0, 1)")
    n = len(matrix.item_ids)
    if n < 2:
        raise ValidationError("within-item CI needs at least 2 items")
    adjusted = adjust_within_item(matrix.values)
    tq = t_quantile((1.0 + level) / 2.0, n - 1)
    means, lower, upper = {}, {}, {}
    for j, cond in enumerate(matrix.conditions):
        col = adjusted[:, j]
        m = float(col.mean())
        half = tq * float(col.std(ddof=1)) / math.sqrt(n)
        means[cond] = m
        lower[cond] = m - half
        upper[cond] = m + half
    return IntervalEstimate(level, means, lower, upper)


# ---------------------------------------------------------------------------
# Paired sign-flip permutation test

@dataclass(frozen=True)
class PermutationResult:
    observed: float
    p_value: float
    n_permutations: int
    rng_seed: int
    exhaustive: bool


def paired_permutation(diffs: Sequence[float], n_perm: int = 10000,
                       rng_seed: int = 0) -> PermutationResult:
    """Two-sided sign-flip test of mean(diffs) against zero."""
    d = np.asarray(list(diffs), dtype=float)
    n = len(d)
    if n == 0:
        raise ValidationError("permutation test needs at least one difference")
    if n_perm < 1:
        raise ValidationError("n_perm must be >= 1")

    exhaustive = n <= 62 and 2 ** n <= n_perm
    if exhaustive:
        total = 2 ** n
        # Bit j of the assignment index selects the sign of diffs[j].
        idx = np.arange(total, dtype=np.uint64)
        signs = np.empty((total, n), dtype=float)
        for j in range(n):
            signs[:, j] = np.where((idx >> np.uint64(j)) & np.uint64(1), -1.0, 1.0)
        stats = signs @ d / n
        observed = float(stats[0])  # the all-positive assignment
        count = int(np.count_nonzero(np.abs(stats) >= abs(observed)))
        p = count / total
        return PermutationResult(observed, p, total, rng_seed, True)

    rng = np.random.Generator(np.random.Philox(rng_seed))
    signs = rng.integers(0, 2, size=(n_perm, n)).astype(float) * 2.0 - 1.0
    observed = float(np.ones(n) @ d / n)
    stats = signs @ d / n
    count = int(np.count_nonzero(np.abs(stats) >= abs(observed)))
    p = (1 + count) / (1 + n_perm)
    return PermutationResult(observed, p, n_perm, rng_seed, False)


# ---------------------------------------------------------------------------
# Report rows

@dataclass(frozen=True)
class ReportRow:
    metric: str
    condition_set: str
    mean_bits: float
    ci_low: float | None
    ci_high: float | None
    p_perm: float
    n_items: int
    backend: str = ""
    suite: str = ""

    HEADER = ("metric", "condition_set", "mean_bits", "ci_low", "ci_high",
              "p_perm", "n_items", "backend", "suite")

    def as_tsv(self) -> str:
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return format(x, ".9g")
            return str(x)

        return "\t".join(fmt(v) for v in (
            self.metric, self.condition_set, self.mean_bits, self.ci_low,
            self.ci_high, self.p_perm, self.n_items, self.backend, self.suite))


def summarize(metric: MetricResult, ci_level: float = 0.95,
              n_perm: int = 10000, rng_seed: int = 0,
              condition_set: str = "", backend: str = "",
              suite: str = "") -> ReportRow:
    """Mean effect, t confidence interval, and permutation p against zero.

    The per-item metric values are already within-item differences, so the
    plain t interval over items is the right CI here; a single-item metric
    gets a flagged (empty) interval.
    """
    if metric.n_items == 0:
        raise ValidationError(f"metric {metric.contrast_name!r} has no items")
    values = np.asarray(metric.values(), dtype=float)
    n = len(values)
    mean = float(values.mean())
    if n >= 2:
        half = t_quantile((1.0 + ci_level) / 2.0, n - 1) \
            * float(values.std(ddof=1)) / math.sqrt(n)
        ci_low, ci_high = mean - half, mean + half
    else:
        ci_low = ci_high = None  # CI undefined for a single item
    perm = paired_permutation(values, n_perm=n_perm, rng_seed=rng_seed)
    return ReportRow(metric.contrast_name, condition_set, mean, ci_low, ci_high,
                     perm.p_value, n, backend, suite)
