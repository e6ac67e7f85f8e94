"""Summary statistics and t-tests over per-segment Kα series."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations

from .core import ConfigError, DCAError
from .segmentation import SegmentReport, k_alpha_series

BETACF_TOL = 1e-15
BETACF_MAX_ITER = 10_000
_TINY = 1e-300


class InsufficientDataError(DCAError):
    pass


# ---------------------------------------------------------------------------
# t distribution
# ---------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
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
        if abs(delta - 1.0) < BETACF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float, complement: float | None = None) -> float:
    """Regularized incomplete beta I_x(a, b).

    ``complement`` may pass ``1 - x`` computed without cancellation.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    y = 1.0 - x if complement is None else complement
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def t_sf(t: float, df: float) -> float:
    """Upper tail P(T > t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    t2 = t * t
    # P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    two_tail = betainc_regularized(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2))
    return 0.5 * two_tail if t > 0 else 1.0 - 0.5 * two_tail


def t_cdf(t: float, df: float) -> float:
    return t_sf(-t, df)


# ---------------------------------------------------------------------------
# Summaries and tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    antigen_type: str | None
    segment_size: int | None
    min: float
    mean: float
    max: float
    stdev: float
    n_segments: int


def _mean(x: Sequence[float]) -> float:
    # the division can land one ulp outside [min, max]; clamping keeps a
    # constant series' mean exact, so its variance is exactly zero
    return min(max(math.fsum(x) / len(x), min(x)), max(x))


def _sample_var(x: Sequence[float], mean: float) -> float:
    return math.fsum((v - mean) ** 2 for v in x) / (len(x) - 1)


def summarize(series: Sequence[float], antigen_type: str | None = None,
              segment_size: int | None = None) -> SummaryRow:
    """Min/mean/max and sample stdev; a single value reports stdev 0."""
    if len(series) == 0:
        raise InsufficientDataError("cannot summarize an empty series")
    mean = _mean(series)
    stdev = math.sqrt(_sample_var(series, mean)) if len(series) > 1 else 0.0
    return SummaryRow(antigen_type, segment_size, min(series), mean, max(series), stdev, len(series))


@dataclass(frozen=True)
class TTestResult:
    kind: str
    statistic: float
    degrees_of_freedom: float
    p_value: float
    alpha: float = 0.05
    direction: str | None = None

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha!r}")


def welch_two_sided(a: Sequence[float], b: Sequence[float], alpha: float = 0.05,
                    equal_var: bool = False) -> TTestResult:
    """Two-sample two-sided t-test; Welch's by default, pooled with ``equal_var``."""
    _check_alpha(alpha)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise InsufficientDataError(f"two-sample t-test needs >= 2 values per sample, got {na} and {nb}")
    ma, mb = _mean(a), _mean(b)
    va, vb = _sample_var(a, ma), _sample_var(b, mb)
    diff = ma - mb
    if equal_var:
        df = na + nb - 2.0
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        se2 = pooled * (1.0 / na + 1.0 / nb)
    else:
        qa, qb = va / na, vb / nb
        se2 = qa + qb
        df = se2 * se2 / (qa * qa / (na - 1) + qb * qb / (nb - 1)) if se2 > 0 else na + nb - 2.0
    if se2 == 0.0:
        t = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        p = 1.0 if diff == 0 else 0.0
    else:
        t = diff / math.sqrt(se2)
        p = min(1.0, 2.0 * t_sf(abs(t), df))
    return TTestResult("two_sample_two_sided", t, df, p, alpha)


def one_sample_one_sided(x: Sequence[float], true_mean: float, direction: str,
                         alpha: float = 0.05) -> TTestResult:
    """One-sample t-test of mean(x) against ``true_mean`` in one tail.

    ``direction="greater"`` tests H1: mean > true_mean; ``"less"`` the reverse.
    """
    _check_alpha(alpha)
    if direction not in ("greater", "less"):
        raise ConfigError(f"direction must be 'greater' or 'less', got {direction!r}")
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"one-sample t-test needs >= 2 values, got {n}")
    m = _mean(x)
    s = math.sqrt(_sample_var(x, m))
    diff = m - true_mean
    df = n - 1.0
    if s == 0.0:
        t = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    else:
        t = diff / (s / math.sqrt(n))
    if t == 0.0:
        p = 0.5
    else:
        p = t_sf(t, df) if direction == "greater" else t_cdf(t, df)
    return TTestResult("one_sample_one_sided", t, df, p, alpha, direction)


# ---------------------------------------------------------------------------
# Comparison grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestPlan:
    __test__ = False

    antigen_types: tuple[str, ...]
    directions: Mapping[str, str]
    alpha: float = 0.05
    equal_var: bool = False


@dataclass(frozen=True)
class PairwiseCell:
    antigen_type: str
    size_a: int | None
    size_b: int | None
    result: TTestResult | None
    note: str = ""


@dataclass(frozen=True)
class BaselineCell:
    antigen_type: str
    segment_size: int | None
    true_mean: float
    result: TTestResult | None
    note: str = ""


@dataclass
class ComparisonTable:
    mode: str | None
    sizes: list[int | None]
    plan: TestPlan
    baseline_means: dict[str, float]
    pairwise: list[PairwiseCell] = field(default_factory=list)
    versus_baseline: list[BaselineCell] = field(default_factory=list)

    def pairwise_for(self, antigen_type: str) -> list[PairwiseCell]:
        """Cells of one type in ``combinations(range(len(sizes)), 2)`` order."""
        return [c for c in self.pairwise if c.antigen_type == antigen_type]

    def baseline_for(self, antigen_type: str) -> list[BaselineCell]:
        return [c for c in self.versus_baseline if c.antigen_type == antigen_type]


def compare_runs(segmented: Mapping[int, Sequence[SegmentReport]]
                 | Sequence[tuple[int | None, Sequence[SegmentReport]]],
                 baseline: SegmentReport, plan: TestPlan, mode: str | None = None) -> ComparisonTable:
    """Pairwise two-sided tests between runs, one-sided tests against the baseline Kα.

    ``segmented`` maps segment size to that run's reports (taken in size
    order), or is an explicit ordered list of ``(size, reports)`` pairs, which
    may repeat a size. Cells without enough data carry ``result=None`` and a
    note instead of raising.
    """
    _check_alpha(plan.alpha)
    missing = [ag for ag in plan.antigen_types if ag not in baseline.scores]
    if missing:
        raise ConfigError(f"baseline report has no Kα for: {', '.join(missing)}")
    undirected = [ag for ag in plan.antigen_types if ag not in plan.directions]
    if undirected:
        raise ConfigError(f"no one-sided test direction given for: {', '.join(undirected)} "
                          "(use --direction type=greater|less)")

    runs = sorted(segmented.items()) if isinstance(segmented, Mapping) else list(segmented)
    sizes = [size for size, _ in runs]
    table = ComparisonTable(
        mode, sizes, plan, {ag: baseline.scores[ag].k_alpha for ag in plan.antigen_types}
    )
    for ag in plan.antigen_types:
        series = [k_alpha_series(reports, ag) for _, reports in runs]
        for i, j in combinations(range(len(runs)), 2):
            try:
                res = welch_two_sided(series[i], series[j], plan.alpha, plan.equal_var)
                table.pairwise.append(PairwiseCell(ag, sizes[i], sizes[j], res))
            except InsufficientDataError as exc:
                table.pairwise.append(PairwiseCell(ag, sizes[i], sizes[j], None, str(exc)))
        mu0 = table.baseline_means[ag]
        for size, x in zip(sizes, series):
            try:
                res = one_sample_one_sided(x, mu0, plan.directions[ag], plan.alpha)
                table.versus_baseline.append(BaselineCell(ag, size, mu0, res))
            except InsufficientDataError as exc:
                table.versus_baseline.append(BaselineCell(ag, size, mu0, None, str(exc)))
    return table
