"""Paired significance testing and summary statistics for method comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

# Largest n for which the exact null distribution is computed in auto mode;
# 2^20 sign assignments reduce to a tiny integer convolution.
EXACT_MODE_MAX_N = 20


@dataclass(frozen=True)
class PairedSample:
    """Per-case metric values of two methods, aligned case by case."""

    values_a: tuple[float, ...]
    values_b: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(x) for x in self.values_a)
        b = tuple(float(x) for x in self.values_b)
        if len(a) != len(b) or len(a) == 0:
            raise ValueError("paired samples must have equal nonzero length")
        object.__setattr__(self, "values_a", a)
        object.__setattr__(self, "values_b", b)


@dataclass(frozen=True)
class SummaryQuartiles:
    q25: float
    median: float
    q75: float

    def __post_init__(self):
        if not (self.q25 <= self.median <= self.q75):
            raise ValueError("quartiles out of order")


def _signed_rank_statistic(diffs: np.ndarray) -> tuple[float, np.ndarray]:
    """(W+, ranks of |d|) after dropping zero differences (Wilcoxon's rule)."""
    d = diffs[diffs != 0.0]
    if d.size == 0:
        raise ValueError("all paired differences are zero")
    ranks = rankdata(np.abs(d))  # mid-ranks for ties
    w_plus = float(ranks[d > 0].sum())
    return w_plus, ranks


def _exact_p_two_sided(w_plus: float, ranks: np.ndarray) -> float:
    """Two-sided exact p over the 2^n equiprobable sign assignments.

    Ranks are multiples of 0.5 (mid-rank ties), so doubling them makes the
    statistic integral; the distribution of the doubled W+ is built by
    convolution, which counts exactly the same assignments as literal
    enumeration.
    """
    doubled = np.rint(ranks * 2).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r] if r > 0 else counts
        counts = counts + shifted if r > 0 else counts * 2
    n_assignments = 2.0 ** len(doubled)
    w2 = int(round(w_plus * 2))
    p_le = counts[: w2 + 1].sum() / n_assignments
    p_ge = counts[w2:].sum() / n_assignments
    return min(1.0, 2.0 * min(p_le, p_ge))


def _approx_p_two_sided(w_plus: float, ranks: np.ndarray) -> float:
    """Normal approximation with continuity and tie corrections."""
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts)).sum()) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if var <= 0:
        raise ValueError("degenerate variance (all differences tied to one rank)")
    delta = abs(w_plus - mean)
    z = max(delta - 0.5, 0.0) / math.sqrt(var)
    return math.erfc(z / math.sqrt(2.0))


def wilcoxon_signed_rank(sample: PairedSample, mode: str = "auto") -> float:
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are dropped; ties in |difference| get mid-ranks. In
    ``auto`` mode the exact null distribution (all 2^n sign assignments) is
    used for n <= 20 and the continuity/tie-corrected normal approximation
    beyond that.
    """
    if mode not in ("exact", "approx", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    diffs = np.asarray(sample.values_a, dtype=np.float64) - np.asarray(sample.values_b, dtype=np.float64)
    w_plus, ranks = _signed_rank_statistic(diffs)
    if mode == "exact" or (mode == "auto" and ranks.size <= EXACT_MODE_MAX_N):
        return _exact_p_two_sided(w_plus, ranks)
    return _approx_p_two_sided(w_plus, ranks)


def bonferroni(alpha: float, n_comparisons: int) -> float:
    """Family-wise corrected significance level alpha / n."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    if n_comparisons < 1:
        raise ValueError("n_comparisons must be >= 1")
    return alpha / n_comparisons


def quartiles(values) -> SummaryQuartiles:
    """25th/50th/75th percentiles by linear interpolation of the sorted values."""
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        raise ValueError("quartiles of an empty list")
    q25, med, q75 = np.percentile(vals, [25.0, 50.0, 75.0], method="linear")
    return SummaryQuartiles(float(q25), float(med), float(q75))


@dataclass(frozen=True)
class SignificanceRow:
    metric: str
    method_a: str
    method_b: str
    n_pairs: int
    p_value: float
    significant: bool


def significance_report(
    metric_tables: dict[str, dict[str, dict[str, float]]],
    alpha: float = 0.05,
    n_comparisons: int | None = None,
) -> list[SignificanceRow]:
    """Pairwise Wilcoxon tests across methods for each metric.

    ``metric_tables[metric][method]`` maps case id -> value; all methods of
    one metric must cover exactly the same case ids. A comparison is flagged
    significant iff p < alpha / n_comparisons (strict). Pairs with no nonzero
    difference are reported with p = 1 (no evidence of a difference).
    """
    if n_comparisons is None:
        n_methods = max((len(m) for m in metric_tables.values()), default=0)
        n_comparisons = max(1, n_methods * (n_methods - 1) // 2)
    alpha_adj = bonferroni(alpha, n_comparisons)
    rows: list[SignificanceRow] = []
    for metric in sorted(metric_tables):
        methods = metric_tables[metric]
        names = sorted(methods)
        for i, name_a in enumerate(names):
            for name_b in names[i + 1 :]:
                table_a, table_b = methods[name_a], methods[name_b]
                if set(table_a) != set(table_b):
                    raise ValueError(
                        f"case ids of {name_a!r} and {name_b!r} are misaligned for {metric!r}"
                    )
                ids = sorted(table_a)
                sample = PairedSample(
                    tuple(table_a[c] for c in ids), tuple(table_b[c] for c in ids)
                )
                try:
                    p = wilcoxon_signed_rank(sample, mode="auto")
                except ValueError:
                    p = 1.0
                rows.append(
                    SignificanceRow(metric, name_a, name_b, len(ids), p, p < alpha_adj)
                )
    return rows
