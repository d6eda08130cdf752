"""Shared domain types for two-station spin-pair experiments.

Outcomes are signed integers (never booleans) so that every downstream
product and tally is exact integer arithmetic; analyzer settings are unit
vectors in R^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

UNIT_NORM_TOL = 1e-12

# The four CHSH setting pairs: station 1 measures along a or d, station 2
# along b or c.  Block order is fixed everywhere: AB, AC, DB, DC.
PAIR_LABELS = ("AB", "AC", "DB", "DC")
BLOCK_INDEX = {label: i for i, label in enumerate(PAIR_LABELS)}

MODE_PER_PAIR = "per-pair"
MODE_COMMON_SPACE = "common-space"
MODE_INSTRUMENT = "instrument"
MODES = (MODE_PER_PAIR, MODE_COMMON_SPACE, MODE_INSTRUMENT)


class InvalidPlanError(ValueError):
    """Raised when an experiment plan violates its invariants."""


def check_outcome(value: int) -> int:
    """Validate a single measurement outcome; must be -1 or +1."""
    if value != 1 and value != -1:
        raise ValueError(f"outcome must be -1 or +1, got {value!r}")
    return value


@dataclass(frozen=True)
class SettingVector:
    """Unit vector in R^3 identifying an analyzer orientation."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm) or abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"setting vector must have unit norm, |v| = {norm!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


def make_setting(theta_deg: float, phi_deg: float = 0.0) -> SettingVector:
    """Unit vector at polar angle theta and azimuth phi, both in degrees.

    The CLI exposes theta only (planar settings, phi = 0); CHSH optima are
    coplanar, so one plane suffices there.
    """
    if not (math.isfinite(theta_deg) and math.isfinite(phi_deg)):
        raise ValueError("setting angles must be finite")
    theta = math.radians(theta_deg)
    phi = math.radians(phi_deg)
    return SettingVector(
        math.sin(theta) * math.cos(phi),
        math.sin(theta) * math.sin(phi),
        math.cos(theta),
    )


def dot(a: SettingVector, b: SettingVector) -> float:
    """Inner product of two settings.

    Rounding overshoot beyond [-1, 1] is clamped, but only when it is within
    UNIT_NORM_TOL.  The expression is symmetric term by term, so
    dot(a, b) == dot(b, a) holds exactly in floating point.
    """
    d = a.x * b.x + a.y * b.y + a.z * b.z
    if abs(d) > 1.0 and abs(d) - 1.0 <= UNIT_NORM_TOL:
        d = 1.0 if d > 0.0 else -1.0
    return d


@dataclass(frozen=True)
class SettingPairId:
    """One of the four CHSH setting pairs together with its two analyzers."""

    label: str
    station1_setting: SettingVector
    station2_setting: SettingVector

    def __post_init__(self) -> None:
        if self.label not in PAIR_LABELS:
            raise ValueError(f"pair label must be one of {PAIR_LABELS}, got {self.label!r}")

    @property
    def block(self) -> int:
        """Index of this pair's trial block, 0..3."""
        return BLOCK_INDEX[self.label]


@dataclass(frozen=True, slots=True)
class TrialRecord:
    """One entangled-pair measurement event.

    In per-pair and instrument modes the time indices are strictly increasing
    within a block and the four blocks occupy disjoint ranges
    [0,J), [J,2J), [2J,3J), [3J,4J).
    """

    trial_index: int
    pair: SettingPairId
    time_index: int
    a_outcome: int
    b_outcome: int

    def __post_init__(self) -> None:
        if self.trial_index < 0 or self.time_index < 0:
            raise ValueError("trial_index and time_index must be non-negative")
        check_outcome(self.a_outcome)
        check_outcome(self.b_outcome)


@dataclass(frozen=True)
class ExperimentPlan:
    """Settings, per-pair trial count, seed and generation mode for one run."""

    a: SettingVector
    b: SettingVector
    c: SettingVector
    d: SettingVector
    trials_per_pair: int
    seed: int
    mode: str

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise InvalidPlanError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.trials_per_pair < 1:
            raise InvalidPlanError("trials_per_pair must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidPlanError("seed must fit an unsigned 64-bit integer")

    def setting_pairs(self) -> tuple[SettingPairId, ...]:
        """The four CHSH pairs (a,b), (a,c), (d,b), (d,c) in block order."""
        return (
            SettingPairId("AB", self.a, self.b),
            SettingPairId("AC", self.a, self.c),
            SettingPairId("DB", self.d, self.b),
            SettingPairId("DC", self.d, self.c),
        )
