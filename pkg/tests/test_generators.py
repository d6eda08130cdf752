import math
import random

import numpy as np
import pytest

from bellsim.chsh import a_side_product, empirical_station_table, pair_statistics
from bellsim.consistency import check_kolmogorov
from bellsim.core import ExperimentPlan, InvalidPlanError, make_setting
from bellsim.generators import (
    HiddenState,
    InstrumentContext,
    QuadrupleRecord,
    degenerate_exclusive_family,
    instrument_parameter,
    run_common_space,
    run_instrument,
    run_per_pair,
    same_setting_quadruple,
    sign_outcome,
)
from bellsim.quantum import joint_pair_distribution

OPTIMAL = dict(a=make_setting(0), b=make_setting(45), c=make_setting(-45), d=make_setting(90))


def plan_for(mode, J=1000, seed=1, **angles):
    base = dict(OPTIMAL)
    base.update(angles)
    return ExperimentPlan(**base, trials_per_pair=J, seed=seed, mode=mode)


# --- per-pair -------------------------------------------------------------

def test_per_pair_same_setting_anticorrelation():
    same = make_setting(25.0)
    plan = plan_for("per-pair", J=500, a=same, b=same, c=same, d=same)
    for rec in run_per_pair(plan):
        assert rec.a_outcome == -rec.b_outcome


def test_per_pair_orthogonal_mean_near_zero():
    j = 20000
    plan = plan_for("per-pair", J=j, a=make_setting(0), b=make_setting(90),
                    c=make_setting(90), d=make_setting(0))
    stats = pair_statistics(run_per_pair(plan))
    for label in ("AB", "AC", "DB", "DC"):
        assert abs(stats[label].a_side_mean) < 4 / math.sqrt(j)


def test_per_pair_block_structure():
    j = 50
    plan = plan_for("per-pair", J=j, seed=8)
    records = run_per_pair(plan)
    assert len(records) == 4 * j
    times = {label: [] for label in ("AB", "AC", "DB", "DC")}
    for rec in records:
        times[rec.pair.label].append(rec.time_index)
    ranges = [times["AB"], times["AC"], times["DB"], times["DC"]]
    for block, ts in enumerate(ranges):
        assert ts == list(range(block * j, (block + 1) * j))
    all_times = [t for ts in ranges for t in ts]
    assert len(set(all_times)) == len(all_times)


def test_per_pair_deterministic_and_thread_invariant():
    plan = plan_for("per-pair", J=400, seed=77)
    first = run_per_pair(plan)
    again = run_per_pair(plan)
    threaded = run_per_pair(plan, max_workers=4)
    assert first == again == threaded


def test_per_pair_wrong_mode_rejected():
    plan = plan_for("common-space", J=10)
    with pytest.raises(InvalidPlanError):
        run_per_pair(plan)


def test_per_pair_table_converges_to_quantum_law():
    j = 100000
    plan = plan_for("per-pair", J=j, seed=3)
    records = run_per_pair(plan)
    by_label = {label: [] for label in ("AB", "AC", "DB", "DC")}
    for rec in records:
        by_label[rec.pair.label].append(rec)
    for pid in plan.setting_pairs():
        expected = joint_pair_distribution(pid.station1_setting, pid.station2_setting).station_array()
        got = empirical_station_table(by_label[pid.label])
        assert np.max(np.abs(got - expected)) < 5 / math.sqrt(j)


# --- common space ----------------------------------------------------------

def test_sign_outcome_aligned_and_ties():
    z = make_setting(0)
    assert sign_outcome(z, HiddenState(0.0, 0.0, 1.0)) == 1
    assert sign_outcome(z, HiddenState(0.0, 0.0, -1.0)) == -1
    # orthogonal hidden state: tie resolves to +1
    assert sign_outcome(z, HiddenState(1.0, 0.0, 0.0)) == 1


def test_common_space_gamma_identity_per_record():
    plan = plan_for("common-space", J=2000, seed=5, b=make_setting(30), c=make_setting(-60),
                    d=make_setting(100))
    for rec in run_common_space(plan):
        gamma = rec.prod_ab + rec.prod_ac + rec.prod_db - rec.prod_dc
        assert gamma in (-2, 2)
        assert rec.prod_ab == a_side_product(rec.a_a, rec.b_b)
        assert rec.prod_dc == a_side_product(rec.a_d, rec.b_c)


def test_common_space_station_expectation_matches_sphere_integral():
    j = 100000
    theta_b = 72.0
    plan = plan_for("common-space", J=j, seed=21, b=make_setting(theta_b))
    records = run_common_space(plan)
    mean_ab = sum(r.a_a * r.b_b for r in records) / j
    expected = -(1 - 2 * math.radians(theta_b) / math.pi)
    assert abs(mean_ab - expected) < 4 / math.sqrt(j)


def test_sign_model_closed_form_against_independent_sampler():
    # Same integral, different generator and a scalar code path.
    rng = random.Random(2024)
    theta = 72.0
    a = make_setting(0)
    b = make_setting(theta)
    n = 40000
    total = 0
    for _ in range(n):
        cos_t = rng.uniform(-1.0, 1.0)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        sin_t = math.sqrt(1.0 - cos_t * cos_t)
        lam = HiddenState(sin_t * math.cos(phi), sin_t * math.sin(phi), cos_t)
        total += sign_outcome(a, lam) * (-sign_outcome(b, lam))
    expected = -(1 - 2 * math.radians(theta) / math.pi)
    assert abs(total / n - expected) < 4 / math.sqrt(n)


def test_common_space_conditional_factorization():
    # Outcomes are deterministic given the hidden state, so the conditional
    # joint law is a point mass and factorizes into its marginals exactly.
    rng = random.Random(6)
    a = make_setting(20)
    b = make_setting(130)
    for _ in range(50):
        cos_t = rng.uniform(-1.0, 1.0)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        sin_t = math.sqrt(1.0 - cos_t * cos_t)
        lam = HiddenState(sin_t * math.cos(phi), sin_t * math.sin(phi), cos_t)
        a_out = sign_outcome(a, lam)
        b_out = -sign_outcome(b, lam)
        joint = np.zeros((2, 2))
        joint[(a_out + 1) // 2, (b_out + 1) // 2] = 1.0
        p1 = joint.sum(axis=1)
        p2 = joint.sum(axis=0)
        assert np.array_equal(joint, np.outer(p1, p2))


def test_common_space_deterministic():
    plan = plan_for("common-space", J=300, seed=44)
    assert run_common_space(plan) == run_common_space(plan)


# --- instrument ------------------------------------------------------------

def test_instrument_same_setting_anticorrelation():
    same = make_setting(10.0)
    plan = plan_for("instrument", J=400, a=same, b=same, c=same, d=same)
    for rec in run_instrument(plan):
        assert rec.a_outcome == -rec.b_outcome


def test_instrument_station_marginals_unbiased():
    j = 20000
    plan = plan_for("instrument", J=j, seed=13)
    records = run_instrument(plan)
    mean_a = sum(r.a_outcome for r in records) / len(records)
    mean_b = sum(r.b_outcome for r in records) / len(records)
    assert abs(mean_a) < 4 / math.sqrt(4 * j)
    assert abs(mean_b) < 4 / math.sqrt(4 * j)


def test_instrument_table_converges_to_quantum_law():
    j = 100000
    plan = plan_for("instrument", J=j, seed=19)
    records = run_instrument(plan)
    by_label = {label: [] for label in ("AB", "AC", "DB", "DC")}
    for rec in records:
        by_label[rec.pair.label].append(rec)
    for pid in plan.setting_pairs():
        expected = joint_pair_distribution(pid.station1_setting, pid.station2_setting).station_array()
        got = empirical_station_table(by_label[pid.label])
        assert np.max(np.abs(got - expected)) < 5 / math.sqrt(j)
    # station-local randomness still reproduces the full CHSH value
    from bellsim.chsh import gamma_from_trials, gamma_report

    report = gamma_report(gamma_from_trials(records))
    assert abs(report.mean - 2 * math.sqrt(2)) < 0.05


def test_instrument_draws_match_context_helper():
    j = 60
    plan = plan_for("instrument", J=j, seed=99)
    records = run_instrument(plan)
    # block AB uses setting "a" at times [0, J); block DC uses "d" at [3J, 4J)
    for rec in records[:5]:
        u = instrument_parameter(plan.seed, InstrumentContext("a", rec.time_index), j)
        assert rec.a_outcome == (1 if u < 0.5 else -1)
    for rec in records[3 * j : 3 * j + 5]:
        u = instrument_parameter(plan.seed, InstrumentContext("d", rec.time_index), j)
        assert rec.a_outcome == (1 if u < 0.5 else -1)
    with pytest.raises(ValueError):
        instrument_parameter(plan.seed, InstrumentContext("b", 0), j)
    with pytest.raises(ValueError):
        instrument_parameter(plan.seed, InstrumentContext("a", 2 * j), j)


def test_instrument_deterministic_and_thread_invariant():
    plan = plan_for("instrument", J=250, seed=55)
    assert run_instrument(plan) == run_instrument(plan, max_workers=3)


# --- degenerate family and counterfactual quadruples -----------------------

def test_degenerate_family_single_time():
    fam = degenerate_exclusive_family(make_setting(0), make_setting(90), [7])
    assert set(fam.tables.keys()) == {(7,)}
    assert fam.tables[(7,)].shape == (16,)
    assert not fam.tables[(7,)].any()


def test_degenerate_family_three_times_rejected_by_checker():
    fam = degenerate_exclusive_family(make_setting(0), make_setting(90), [0, 1, 2])
    assert len(fam.tables) == 3
    report = check_kolmogorov(fam)
    assert not report.consistent
    assert {v.condition for v in report.violations} == {"normalization"}


def test_degenerate_family_argument_errors():
    with pytest.raises(ValueError):
        degenerate_exclusive_family(make_setting(0), make_setting(90), [])
    s = make_setting(30)
    with pytest.raises(ValueError):
        degenerate_exclusive_family(s, s, [0])


def test_same_setting_quadruple_values():
    plan = plan_for("per-pair", J=200, seed=14)
    records = run_per_pair(plan)
    ab = [r for r in records if r.pair.label == "AB"]
    gammas = same_setting_quadruple(ab)
    assert set(gammas) <= {-4, 4}
    mean_product = sum(a_side_product(r.a_outcome, r.b_outcome) for r in ab) / len(ab)
    assert sum(gammas) / len(gammas) == pytest.approx(4 * mean_product)
    for rec, gamma in zip(ab, gammas):
        expected = 4 if a_side_product(rec.a_outcome, rec.b_outcome) == 1 else -4
        assert gamma == expected


def test_same_setting_quadruple_rejects_mixed_pairs():
    plan = plan_for("per-pair", J=5, seed=14)
    records = run_per_pair(plan)
    with pytest.raises(ValueError):
        same_setting_quadruple(records)
    with pytest.raises(ValueError):
        same_setting_quadruple([])


def test_quadruple_record_consistency_enforced():
    with pytest.raises(ValueError):
        QuadrupleRecord(0, a_a=1, a_d=1, b_b=1, b_c=1, prod_ab=1, prod_ac=-1, prod_db=-1, prod_dc=-1)
    with pytest.raises(ValueError):
        QuadrupleRecord(0, a_a=2, a_d=1, b_b=1, b_c=1, prod_ab=-1, prod_ac=-1, prod_db=-1, prod_dc=-1)


def test_hidden_state_must_be_unit():
    with pytest.raises(ValueError):
        HiddenState(1.0, 1.0, 1.0)
