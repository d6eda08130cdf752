"""Trial generators for the competing measurement models.

Three data-generating processes share one plan type:

* ``run_per_pair``: each of the four setting pairs gets its own random
  substream and its own disjoint block of measurement times; nothing ties
  the four blocks together beyond the plan.  This is the operational
  reading of "a separate probability space per setting pair".
* ``run_common_space``: one hidden unit vector per trial drives all four
  outcome functions deterministically (sign model), i.e. everything is
  defined on a single sample space.  Every composite built from such a
  quadruple is forced to +/-2.
* ``run_instrument``: station-local, setting- and time-indexed instrument
  variates plus a per-trial source variate available to both stations;
  reproduces the quantum pair law for every setting pair while each random
  input is local to one station or to the source.  The functional form is
  one admissible choice, not a claim about the physics.

Substream scheme: every stream is a PCG64 generator seeded from
``SeedSequence([seed, domain, ...key])`` and the k-th variate position of a
stream belongs to a fixed (block, trial) slot, so generation order and
thread count cannot change any outcome.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .chsh import a_side_product
from .consistency import ProcessFamily
from .core import (
    MODE_COMMON_SPACE,
    MODE_INSTRUMENT,
    MODE_PER_PAIR,
    ExperimentPlan,
    InvalidPlanError,
    SettingPairId,
    SettingVector,
    TrialRecord,
    UNIT_NORM_TOL,
    check_outcome,
    dot,
)

_DOMAIN_PAIR = 0
_DOMAIN_COMMON = 1
_DOMAIN_INSTRUMENT = 2
_DOMAIN_SOURCE = 3

# Opaque backward-light-cone tag for station 1's instrument draws.
STATION1_CONTEXT = 1

_SETTING_IDS = {"a": 0, "b": 1, "c": 2, "d": 3}
_STATION1_SETTING = {"AB": "a", "AC": "a", "DB": "d", "DC": "d"}


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def _require_mode(plan: ExperimentPlan, mode: str) -> None:
    if plan.mode != mode:
        raise InvalidPlanError(f"plan mode is {plan.mode!r}, expected {mode!r}")


@dataclass(frozen=True)
class HiddenState:
    """Realized hidden variable of one entangled pair: a unit 3-vector."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm) or abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"hidden state must have unit norm, |v| = {norm!r}")


def sign_outcome(setting: SettingVector, state: HiddenState) -> int:
    """Deterministic common-space response sign(setting . state); ties go to +1."""
    s = setting.x * state.x + setting.y * state.y + setting.z * state.z
    return 1 if s >= 0.0 else -1


@dataclass(frozen=True)
class InstrumentContext:
    """Names one station-1 instrument draw: which setting, which time slot.

    (setting_label, time_index) identifies the draw uniquely; context_seed
    stands in for whatever else the station's backward light cone contributes.
    """

    setting_label: str
    time_index: int
    context_seed: int = STATION1_CONTEXT


def instrument_parameter(seed: int, ctx: InstrumentContext, trials_per_pair: int) -> float:
    """Uniform variate consumed for one (setting, time) instrument slot.

    Station-1 setting "a" serves times [0, 2J), setting "d" serves [2J, 4J);
    the draw is the (time - first_time)-th variate of that setting's stream.
    Exists so tests can pin individual draws of run_instrument; the bulk path
    slices the same streams.
    """
    if ctx.setting_label not in ("a", "d"):
        raise ValueError(f"station-1 setting must be 'a' or 'd', got {ctx.setting_label!r}")
    first = 0 if ctx.setting_label == "a" else 2 * trials_per_pair
    ordinal = ctx.time_index - first
    if not 0 <= ordinal < 2 * trials_per_pair:
        raise ValueError(f"time {ctx.time_index} is not scheduled for setting {ctx.setting_label!r}")
    rng = _stream(seed, _DOMAIN_INSTRUMENT, 1, _SETTING_IDS[ctx.setting_label], ctx.context_seed)
    return float(rng.random(ordinal + 1)[-1])


@dataclass(frozen=True, slots=True)
class QuadrupleRecord:
    """Common-space quadruple: four station outcomes and the four products.

    Products use the A-side convention of the chsh module, so
    prod_ab == a_a * (-b_b) and likewise for the other three; the four
    products of one record always satisfy prod_ab*prod_ac*prod_db*prod_dc == 1,
    which is what pins the composite to +/-2.
    """

    trial_index: int
    a_a: int
    a_d: int
    b_b: int
    b_c: int
    prod_ab: int
    prod_ac: int
    prod_db: int
    prod_dc: int

    def __post_init__(self) -> None:
        if self.trial_index < 0:
            raise ValueError("trial_index must be non-negative")
        for v in (self.a_a, self.a_d, self.b_b, self.b_c):
            check_outcome(v)
        expected = (
            a_side_product(self.a_a, self.b_b),
            a_side_product(self.a_a, self.b_c),
            a_side_product(self.a_d, self.b_b),
            a_side_product(self.a_d, self.b_c),
        )
        if (self.prod_ab, self.prod_ac, self.prod_db, self.prod_dc) != expected:
            raise ValueError("products must match the stored outcomes")


def _over_blocks(fn: Callable[[SettingPairId], list], pairs, max_workers: int) -> list:
    if max_workers <= 1:
        return [fn(p) for p in pairs]
    with ThreadPoolExecutor(max_workers=min(max_workers, len(pairs))) as pool:
        return list(pool.map(fn, pairs))


def _pair_block(plan: ExperimentPlan, pair: SettingPairId) -> list[TrialRecord]:
    j = plan.trials_per_pair
    rng = _stream(plan.seed, _DOMAIN_PAIR, pair.block)
    d = dot(pair.station1_setting, pair.station2_setting)
    u_sign = rng.random(j)
    u_flip = rng.random(j)
    a = np.where(u_sign < 0.5, 1, -1)
    b = np.where(u_flip < 0.5 * (1.0 + d), -a, a)
    base = pair.block * j
    return [
        TrialRecord(base + k, pair, base + k, av, bv)
        for k, (av, bv) in enumerate(zip(a.tolist(), b.tolist()))
    ]


def run_per_pair(plan: ExperimentPlan, max_workers: int = 1) -> list[TrialRecord]:
    """4J trials, J per setting pair, each pair on its own substream.

    Per trial the station-1 outcome is a fair sign and the station-2 outcome
    mirrors it (b = -a) with probability (1 + a.b)/2, which reproduces the
    singlet joint pair law of that pair in the station convention.
    """
    _require_mode(plan, MODE_PER_PAIR)
    blocks = _over_blocks(lambda p: _pair_block(plan, p), plan.setting_pairs(), max_workers)
    return [rec for block in blocks for rec in block]


def run_common_space(plan: ExperimentPlan) -> list[QuadrupleRecord]:
    """J quadruples evaluated from one hidden unit vector per trial.

    The hidden vector is uniform on the sphere (cosine of the polar angle
    uniform on [-1, 1]); outcomes are the deterministic sign model
    A_x = sign(x . lambda) with B_y = -A_y.  All four products of a record
    share the same lambda, so every composite is +/-2 by algebra.
    """
    _require_mode(plan, MODE_COMMON_SPACE)
    j = plan.trials_per_pair
    rng = _stream(plan.seed, _DOMAIN_COMMON)
    cos_t = rng.uniform(-1.0, 1.0, j)
    phi = rng.uniform(0.0, 2.0 * math.pi, j)
    sin_t = np.sqrt(1.0 - cos_t * cos_t)
    lam = np.column_stack((sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t))
    side = {}
    for name in ("a", "b", "c", "d"):
        v = getattr(plan, name)
        side[name] = np.where(lam @ np.array(v.as_tuple()) >= 0.0, 1, -1)
    a_a = side["a"].tolist()
    a_b = side["b"].tolist()
    a_c = side["c"].tolist()
    a_d = side["d"].tolist()
    return [
        QuadrupleRecord(
            trial_index=k,
            a_a=a_a[k],
            a_d=a_d[k],
            b_b=-a_b[k],
            b_c=-a_c[k],
            prod_ab=a_a[k] * a_b[k],
            prod_ac=a_a[k] * a_c[k],
            prod_db=a_d[k] * a_b[k],
            prod_dc=a_d[k] * a_c[k],
        )
        for k in range(j)
    ]


def run_instrument(plan: ExperimentPlan, max_workers: int = 1) -> list[TrialRecord]:
    """4J trials driven by station-local instrument variates.

    Station 1's variate for the (setting, time) slot decides A = +/-1 alone;
    the per-trial source variate, available in both backward light cones,
    decides whether station 2 mirrors it (B = -A) with probability
    (1 + a.b)/2.  The empirical pair table of every block converges to the
    singlet joint pair law of its settings.
    """
    _require_mode(plan, MODE_INSTRUMENT)
    j = plan.trials_per_pair
    station1 = {}
    for label in ("a", "d"):
        rng = _stream(plan.seed, _DOMAIN_INSTRUMENT, 1, _SETTING_IDS[label], STATION1_CONTEXT)
        station1[label] = rng.random(2 * j)

    def block(pair: SettingPairId) -> list[TrialRecord]:
        d = dot(pair.station1_setting, pair.station2_setting)
        setting = _STATION1_SETTING[pair.label]
        base = pair.block * j
        first = 0 if setting == "a" else 2 * j
        u1 = station1[setting][base - first : base - first + j]
        src = _stream(plan.seed, _DOMAIN_SOURCE, pair.block).random(j)
        a = np.where(u1 < 0.5, 1, -1)
        b = np.where(src < 0.5 * (1.0 + d), -a, a)
        return [
            TrialRecord(base + k, pair, base + k, av, bv)
            for k, (av, bv) in enumerate(zip(a.tolist(), b.tolist()))
        ]

    blocks = _over_blocks(block, plan.setting_pairs(), max_workers)
    return [rec for blk in blocks for rec in blk]


def degenerate_exclusive_family(
    setting_one: SettingVector, setting_two: SettingVector, times: Sequence[int]
) -> ProcessFamily:
    """All-zero joint tables of the vector process pairing two mutually
    exclusive station-1 settings with their station-2 partners.

    Two different settings cannot be in place at one station at the same
    time, so every joint event of the combined four-component process is
    impossible and every table is identically zero.  The Kolmogorov checker
    must reject this family: zero total mass violates normalization.
    """
    if setting_one.as_tuple() == setting_two.as_tuple():
        raise ValueError("the two station-1 settings must differ")
    time_tuple = tuple(int(t) for t in times)
    if not time_tuple:
        raise ValueError("at least one time index is required")
    tables = {(t,): np.zeros(16) for t in time_tuple}
    return ProcessFamily(
        dimension=4,
        component_names=("A1", "A2", "B2", "B3"),
        times=time_tuple,
        tables=tables,
    )


def same_setting_quadruple(records: Sequence[TrialRecord]) -> list[int]:
    """Counterfactual composite from one setting pair only.

    Four copies of the same product give 4*q, so the value set is {-4, +4};
    the mean over records is four times the mean product.
    """
    if len(records) == 0:
        raise ValueError("at least one record is required")
    pair0 = records[0].pair
    for rec in records:
        if rec.pair != pair0:
            raise ValueError("records must all share one setting pair")
    return [4 * a_side_product(r.a_outcome, r.b_outcome) for r in records]
