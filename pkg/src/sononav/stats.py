"""Statistical procedures for the alignment evaluation.

Provides the two-sample Welch t-test, the paired t-test, the TOST
equivalence test (two one-sided tests against an equivalence interval),
a bisection search for the least symmetric equivalence interval, and
grouped mean/sd summaries.

The Student t CDF is computed from the regularized incomplete beta
function via Lentz's continued fraction; the implementation targets
absolute precision 1e-12 over the tested range and carries no
statistics-package dependency.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class DegenerateVarianceError(ValueError):
    """Samples carry no variance where the test requires some."""


class NonBracketableError(ValueError):
    """No equivalence interval up to 10x the data range reaches equivalence."""


class UnknownGroupKeyError(KeyError):
    """A grouping or value column is missing from the input rows."""


@dataclass(frozen=True)
class Sample:
    """A labelled sequence of finite observations."""

    values: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sample must not be empty")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return sum(self.values) / self.n

    @property
    def variance(self) -> float:
        """Sample variance (ddof=1); zero for a single observation."""
        if self.n < 2:
            return 0.0
        m = self.mean
        return sum((v - m) ** 2 for v in self.values) / (self.n - 1)


def _as_sample(values, label="") -> Sample:
    return values if isinstance(values, Sample) else Sample(tuple(values), label)


# ---------------------------------------------------------------------------
# t distribution
# ---------------------------------------------------------------------------

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's algorithm)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not (a > 0 and b > 0):
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    half_tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x)
    return half_tail if t < 0 else 1.0 - half_tail


def t_sf(t: float, df: float) -> float:
    """Upper tail P(T >= t)."""
    return t_cdf(-t, df)


# ---------------------------------------------------------------------------
# tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float


def _welch_parts(a: Sample, b: Sample) -> tuple[float, float, float]:
    """(mean difference, standard error, Welch-Satterthwaite df)."""
    va_n = a.variance / a.n
    vb_n = b.variance / b.n
    if va_n + vb_n == 0.0:
        raise DegenerateVarianceError("both samples have zero variance")
    se = math.sqrt(va_n + vb_n)
    df = (va_n + vb_n) ** 2 / (
        (va_n ** 2 / (a.n - 1) if va_n else 0.0)
        + (vb_n ** 2 / (b.n - 1) if vb_n else 0.0))
    return a.mean - b.mean, se, df


def _pooled_parts(a: Sample, b: Sample) -> tuple[float, float, float]:
    df = a.n + b.n - 2
    sp2 = ((a.n - 1) * a.variance + (b.n - 1) * b.variance) / df
    if sp2 == 0.0:
        raise DegenerateVarianceError("both samples have zero variance")
    se = math.sqrt(sp2 * (1.0 / a.n + 1.0 / b.n))
    return a.mean - b.mean, se, float(df)


def welch_t(a, b) -> TTestResult:
    """Two-sample t-test with unequal variances (Welch).

    Returns the statistic, the Welch-Satterthwaite degrees of freedom,
    and the two-sided p-value.
    """
    a = _as_sample(a, "a")
    b = _as_sample(b, "b")
    if a.n < 2 or b.n < 2:
        raise ValueError("welch_t needs n >= 2 per sample")
    diff, se, df = _welch_parts(a, b)
    t = diff / se
    return TTestResult(t, df, 2.0 * t_sf(abs(t), df))


def paired_t(before, after) -> TTestResult:
    """One-sample t-test on pairwise differences (before - after)."""
    before = _as_sample(before, "before")
    after = _as_sample(after, "after")
    if before.n != after.n:
        raise ValueError(
            f"paired samples must have equal length ({before.n} != {after.n})")
    if before.n < 2:
        raise ValueError("paired_t needs n >= 2")
    diffs = [x - y for x, y in zip(before.values, after.values)]
    n = len(diffs)
    mean = sum(diffs) / n
    var = sum((v - mean) ** 2 for v in diffs) / (n - 1)
    df = n - 1
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, float(df), 1.0)  # identical pairs
        raise DegenerateVarianceError(
            "constant nonzero differences: t statistic undefined")
    t = mean / math.sqrt(var / n)
    return TTestResult(t, float(df), 2.0 * t_sf(abs(t), df))


@dataclass(frozen=True)
class TostResult:
    """Outcome of the two one-sided tests against (-delta_lower, +delta_upper)."""

    delta_lower: float
    delta_upper: float
    p_lower: float
    p_upper: float
    equivalent: bool
    t_lower: float
    t_upper: float
    df: float


def tost(a, b, ei: tuple[float, float], alpha: float = 0.05,
         pooled: bool = False) -> TostResult:
    """Equivalence test for two independent samples.

    ei = (delta_lower, delta_upper), both positive: the equivalence
    interval is (-delta_lower, +delta_upper) around zero difference. The
    two one-sided hypotheses diff <= -delta_lower and diff >= +delta_upper
    are tested with Welch statistics (pooled variance optional); the
    samples are equivalent at level alpha iff both are rejected.
    """
    delta_lower, delta_upper = ei
    if delta_lower <= 0 or delta_upper <= 0:
        raise ValueError("equivalence interval bounds must be positive")
    a = _as_sample(a, "a")
    b = _as_sample(b, "b")
    if a.n < 2 or b.n < 2:
        raise ValueError("tost needs n >= 2 per sample")
    diff, se, df = _pooled_parts(a, b) if pooled else _welch_parts(a, b)
    t_lower = (diff + delta_lower) / se
    t_upper = (diff - delta_upper) / se
    p_lower = t_sf(t_lower, df)     # reject H0: diff <= -delta_lower for large t
    p_upper = t_cdf(t_upper, df)    # reject H0: diff >= +delta_upper for small t
    return TostResult(delta_lower, delta_upper, p_lower, p_upper,
                      max(p_lower, p_upper) < alpha, t_lower, t_upper, df)


def least_equivalence_interval(a, b, alpha: float = 0.05,
                               pooled: bool = False) -> float:
    """Smallest symmetric delta making tost(a, b, (delta, delta)) equivalent.

    Found by bisection to 1e-6 of the search scale (the combined data
    range). Raises NonBracketableError when even delta = 10x the range is
    not equivalent.
    """
    a = _as_sample(a, "a")
    b = _as_sample(b, "b")
    scale = (max(max(a.values), max(b.values))
             - min(min(a.values), min(b.values)))
    if scale <= 0.0:
        scale = max(abs(v) for v in a.values + b.values) or 1.0
    hi = 10.0 * scale
    if not tost(a, b, (hi, hi), alpha, pooled).equivalent:
        raise NonBracketableError(
            f"not equivalent even at delta = {hi:.6g} (10x data range)")
    lo = 0.0
    tol = 1e-6 * scale
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if tost(a, b, (mid, mid), alpha, pooled).equivalent:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# grouped summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryTable:
    """Stable-format grouped mean/sd table."""

    group_keys: tuple[str, ...]
    value_keys: tuple[str, ...]
    rows: tuple[dict, ...]

    @property
    def columns(self) -> list[str]:
        cols = list(self.group_keys) + ["n"]
        for key in self.value_keys:
            cols += [f"{key}_mean", f"{key}_sd"]
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row[k] for k in self.columns})
        return buf.getvalue()

    def to_text(self) -> str:
        widths = {c: len(c) for c in self.columns}
        rendered = []
        for row in self.rows:
            cells = {}
            for c in self.columns:
                v = row[c]
                cells[c] = f"{v:.4f}" if isinstance(v, float) else str(v)
                widths[c] = max(widths[c], len(cells[c]))
            rendered.append(cells)
        lines = ["  ".join(c.ljust(widths[c]) for c in self.columns)]
        for cells in rendered:
            lines.append("  ".join(cells[c].ljust(widths[c]) for c in self.columns))
        return "\n".join(lines) + "\n"


def summarize(rows: Iterable[dict], group_keys: Sequence[str],
              value_keys: Sequence[str],
              pairs: Sequence[tuple[str, str]] = (),
              exclude_key: str | None = None) -> SummaryTable:
    """Mean and sd of each value column per group.

    `pairs` adds derived columns "<a>_minus_<b>" holding the row-wise
    difference of two existing columns (pairwise error subtraction).
    `exclude_key` names a flag column: rows where it is truthy are left
    out of every statistic (the exclusion policy itself is the caller's).
    Raises UnknownGroupKeyError when any referenced column is missing;
    single-observation groups report sd = 0.
    """
    rows = [dict(r) for r in rows]
    if not rows:
        raise ValueError("summarize needs at least one row")
    referenced = list(group_keys) + list(value_keys) + [k for p in pairs for k in p]
    if exclude_key is not None:
        referenced.append(exclude_key)
    for key in referenced:
        for row in rows:
            if key not in row:
                raise UnknownGroupKeyError(key)
    if exclude_key is not None:
        rows = [r for r in rows if not r[exclude_key]]
        if not rows:
            raise ValueError("all rows excluded")
    for col_a, col_b in pairs:
        for row in rows:
            row[f"{col_a}_minus_{col_b}"] = float(row[col_a]) - float(row[col_b])
    all_values = tuple(value_keys) + tuple(
        f"{a}_minus_{b}" for a, b in pairs)

    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in group_keys), []).append(row)

    out_rows = []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        members = groups[key]
        out = dict(zip(group_keys, key))
        out["n"] = len(members)
        for value_key in all_values:
            values = [float(m[value_key]) for m in members]
            mean = sum(values) / len(values)
            if len(values) > 1:
                sd = math.sqrt(sum((v - mean) ** 2 for v in values)
                               / (len(values) - 1))
            else:
                sd = 0.0
            out[f"{value_key}_mean"] = mean
            out[f"{value_key}_sd"] = sd
        out_rows.append(out)
    return SummaryTable(tuple(group_keys), all_values, tuple(out_rows))
