"""CHSH composite statistics and exact counting audits.

Sign convention, used by every gamma in this module and stamped into CLI
reports: the product entering a composite is

    q = a_outcome * (-b_outcome)

i.e. the correlation of the two A-side variables (the second station
physically reports B = -A).  With this convention the four-block composite

    gamma = q_AB + q_AC + q_DB - q_DC

averages toward +2*sqrt(2) for singlet statistics at the standard optimal
angles (a=0, b=45, d=90, c=-45 degrees in one plane), while data generated on
one common probability space is pinned to gamma = +/-2 and mean(gamma) <= 2.

All tallies are exact integer arithmetic; the one division producing a mean
happens last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import PAIR_LABELS, TrialRecord

SIGN_CONVENTION_NOTE = (
    "gamma products are A-side correlations: q = -(a_outcome*b_outcome); "
    "the station-2 outcome is the B variable with B = -A"
)

GAMMA_DOMAIN = frozenset((-4, -2, 0, 2, 4))


class CorruptedDataError(ValueError):
    """A gamma value outside {0, +/-2, +/-4} reached the tally."""


class ModelViolationError(ValueError):
    """Data that claims a common probability space produced gamma != +/-2."""


def a_side_product(a_outcome: int, b_outcome: int) -> int:
    """Correlation product of the two A-side variables for one trial."""
    return -(a_outcome * b_outcome)


@dataclass(frozen=True)
class QuadrupleStats:
    """Occurrence counts of the gamma values -4, -2, 0, +2, +4."""

    n_minus4: int
    n_minus2: int
    n_zero: int
    n_plus2: int
    n_plus4: int

    def __post_init__(self) -> None:
        for n in (self.n_minus4, self.n_minus2, self.n_zero, self.n_plus2, self.n_plus4):
            if n < 0:
                raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.n_minus4 + self.n_minus2 + self.n_zero + self.n_plus2 + self.n_plus4

    @classmethod
    def from_gammas(cls, gammas: Iterable[int]) -> "QuadrupleStats":
        counts = {-4: 0, -2: 0, 0: 0, 2: 0, 4: 0}
        for g in gammas:
            if g not in GAMMA_DOMAIN:
                raise CorruptedDataError(f"gamma value {g!r} outside {{0, +/-2, +/-4}}")
            counts[g] += 1
        return cls(counts[-4], counts[-2], counts[0], counts[2], counts[4])


@dataclass(frozen=True)
class GammaReport:
    """Mean, excess over 2 and the exact plus-four counting bound.

    mean equals (-4*n_minus4 - 2*n_minus2 + 2*n_plus2 + 4*n_plus4) / J with
    the numerator kept as one integer; required_plus4 is J*(mean-2)/2, the
    minimum number of +4 composites any data with this mean must contain.
    """

    stats: QuadrupleStats
    gamma_total: int
    mean: float
    excess: float
    required_plus4: float
    counting_bound_ok: bool


def gamma_report(gammas: Sequence[int]) -> GammaReport:
    """Tally gamma values and derive the mean two ways, requiring exact agreement."""
    if len(gammas) == 0:
        raise ValueError("at least one gamma value is required")
    stats = QuadrupleStats.from_gammas(gammas)
    decomposed = (
        -4 * stats.n_minus4 - 2 * stats.n_minus2 + 2 * stats.n_plus2 + 4 * stats.n_plus4
    )
    direct = sum(gammas)
    assert direct == decomposed, "count decomposition must reproduce the direct sum"
    j = stats.total
    mean = decomposed / j
    # 2*n_plus4 >= gamma_total - 2*J is the counting bound in pure integers.
    ok = decomposed <= 2 * j or 2 * stats.n_plus4 >= decomposed - 2 * j
    return GammaReport(
        stats=stats,
        gamma_total=decomposed,
        mean=mean,
        excess=mean - 2.0,
        required_plus4=(decomposed - 2 * j) / 2,
        counting_bound_ok=ok,
    )


@dataclass(frozen=True)
class CountingBoundAudit:
    """Verdict of the exact plus-four counting bound for one report.

    When the mean does not exceed 2 the bound is vacuous and the audit says
    so; otherwise it checks n_plus4 >= J*(mean-2)/2 in integer arithmetic.
    """

    applicable: bool
    required_plus4: float
    observed_plus4: int
    slack: float
    passed: bool


def counting_bound_audit(report: GammaReport) -> CountingBoundAudit:
    j = report.stats.total
    applicable = report.gamma_total > 2 * j
    passed = (not applicable) or 2 * report.stats.n_plus4 >= report.gamma_total - 2 * j
    return CountingBoundAudit(
        applicable=applicable,
        required_plus4=report.required_plus4,
        observed_plus4=report.stats.n_plus4,
        slack=report.stats.n_plus4 - report.required_plus4,
        passed=passed,
    )


def products_by_block(records: Iterable[TrialRecord]) -> dict[str, list[int]]:
    """A-side products of each record, grouped by pair label in input order."""
    out: dict[str, list[int]] = {label: [] for label in PAIR_LABELS}
    for rec in records:
        out[rec.pair.label].append(a_side_product(rec.a_outcome, rec.b_outcome))
    return out


def gamma_from_products(
    q_ab: Sequence[int], q_ac: Sequence[int], q_db: Sequence[int], q_dc: Sequence[int]
) -> list[int]:
    """Composite values from four equal-length product sequences.

    The k-th composite pairs the k-th product of each block; any fixed
    bijection between blocks yields the same mean, sequential pairing keeps
    the values reproducible.
    """
    j = len(q_ab)
    if j == 0:
        raise ValueError("blocks must contain at least one trial")
    if not (len(q_ac) == len(q_db) == len(q_dc) == j):
        raise ValueError(
            "blocks must contain the same number of trials, got "
            f"{(j, len(q_ac), len(q_db), len(q_dc))}"
        )
    return [q_ab[k] + q_ac[k] + q_db[k] - q_dc[k] for k in range(j)]


def gamma_from_trials(records: Sequence[TrialRecord]) -> list[int]:
    """Composite values of four-block trial data (per-pair or instrument runs).

    Every value lies in {0, +/-2, +/-4}: the four products come from four
    distinct entangled pairs, so no algebraic identity restricts them.
    """
    blocks = products_by_block(records)
    return gamma_from_products(blocks["AB"], blocks["AC"], blocks["DB"], blocks["DC"])


def gamma_common(records: Sequence) -> tuple[list[int], GammaReport]:
    """Composites of data claiming a single common probability space.

    Accepts the quadruple records of run_common_space, or raw TrialRecords
    which are then grouped exactly like gamma_from_trials.  Every composite
    must equal +/-2; any other value proves the input did not come from one
    common space and raises ModelViolationError.  The returned mean is <= 2
    exactly.
    """
    if len(records) == 0:
        raise ValueError("at least one record is required")
    if isinstance(records[0], TrialRecord):
        gammas = gamma_from_trials(records)
    else:
        gammas = [r.prod_ab + r.prod_ac + r.prod_db - r.prod_dc for r in records]
    for g in gammas:
        if g != 2 and g != -2:
            raise ModelViolationError(
                f"gamma = {g} cannot arise from functions on one common probability space"
            )
    report = gamma_report(gammas)
    assert report.stats.n_minus4 == report.stats.n_plus4 == report.stats.n_zero == 0
    assert report.gamma_total <= 2 * report.stats.total
    return gammas, report


@dataclass(frozen=True)
class PairStat:
    """Empirical summary of one setting pair's trials."""

    count: int
    station_mean: float
    a_side_mean: float
    std_error: float


def _stat(count: int, station_sum: int) -> PairStat:
    mean = station_sum / count
    se = math.sqrt(max(0.0, 1.0 - mean * mean) / count)
    return PairStat(count=count, station_mean=mean, a_side_mean=-mean, std_error=se)


def pair_statistics(records: Iterable[TrialRecord]) -> dict[str, PairStat]:
    """Per-pair empirical product means with binomial standard errors."""
    counts = {label: 0 for label in PAIR_LABELS}
    sums = {label: 0 for label in PAIR_LABELS}
    for rec in records:
        counts[rec.pair.label] += 1
        sums[rec.pair.label] += rec.a_outcome * rec.b_outcome
    return {
        label: _stat(counts[label], sums[label])
        for label in PAIR_LABELS
        if counts[label] > 0
    }


def empirical_station_table(records: Iterable[TrialRecord]) -> np.ndarray:
    """2x2 relative frequencies of (a_outcome, b_outcome); index 0 means -1."""
    counts = np.zeros((2, 2))
    n = 0
    for rec in records:
        counts[(rec.a_outcome + 1) // 2, (rec.b_outcome + 1) // 2] += 1
        n += 1
    if n == 0:
        raise ValueError("at least one record is required")
    return counts / n


def pair_statistics_from_quadruples(records: Sequence) -> dict[str, PairStat]:
    """Per-pair summaries of common-space quadruples (station products)."""
    if len(records) == 0:
        return {}
    n = len(records)
    station_sums = {
        "AB": -sum(r.prod_ab for r in records),
        "AC": -sum(r.prod_ac for r in records),
        "DB": -sum(r.prod_db for r in records),
        "DC": -sum(r.prod_dc for r in records),
    }
    return {label: _stat(n, station_sums[label]) for label in PAIR_LABELS}
