import math
import random

import numpy as np
import pytest

from bellsim.core import SettingVector, dot, make_setting
from bellsim.quantum import (
    PairDistribution,
    joint_pair_distribution,
    pair_expectation_aa,
    pair_expectation_station,
    singlet_tensor_expectation,
)


def random_setting(rng: random.Random) -> SettingVector:
    v = (rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
    norm = math.sqrt(sum(x * x for x in v))
    return SettingVector(v[0] / norm, v[1] / norm, v[2] / norm)


def test_pair_expectation_same_setting():
    a = make_setting(17.0, 123.0)
    assert pair_expectation_aa(a, a) == pytest.approx(1.0, abs=1e-12)
    assert pair_expectation_station(a, a) == pytest.approx(-1.0, abs=1e-12)


def test_pair_expectation_orthogonal():
    assert pair_expectation_aa(make_setting(0), make_setting(90)) == pytest.approx(0.0, abs=1e-12)


def test_pair_expectation_45():
    val = pair_expectation_aa(make_setting(0), make_setting(45))
    assert val == pytest.approx(math.cos(math.radians(45)), abs=1e-12)


def test_joint_distribution_perfect_correlation():
    a = make_setting(30.0)
    dist = joint_pair_distribution(a, a)
    assert dist.p_mm == pytest.approx(0.5, abs=1e-12)
    assert dist.p_pp == pytest.approx(0.5, abs=1e-12)
    assert dist.p_mp == pytest.approx(0.0, abs=1e-12)
    assert dist.p_pm == pytest.approx(0.0, abs=1e-12)


def test_joint_distribution_orthogonal():
    dist = joint_pair_distribution(make_setting(0), make_setting(90))
    for cell in (dist.p_mm, dist.p_mp, dist.p_pm, dist.p_pp):
        assert cell == pytest.approx(0.25, abs=1e-12)


def test_joint_distribution_45():
    dist = joint_pair_distribution(make_setting(0), make_setting(45))
    d = math.cos(math.radians(45))
    assert dist.p_mm == pytest.approx((1 + d) / 4, abs=1e-15)
    assert dist.p_mp == pytest.approx((1 - d) / 4, abs=1e-15)
    # frozen digits from evaluating (1 +/- sqrt(2)/2) / 4
    assert dist.p_mm == pytest.approx(0.4267766952966369, abs=1e-12)
    assert dist.p_mp == pytest.approx(0.0732233047033631, abs=1e-12)


def test_station_array_flips_second_outcome():
    dist = joint_pair_distribution(make_setting(0), make_setting(45))
    station = dist.station_array()
    assert station[0, 0] == dist.prob(-1, +1)
    assert station[0, 1] == dist.prob(-1, -1)
    assert station[1, 0] == dist.prob(+1, +1)
    assert station[1, 1] == dist.prob(+1, -1)


def test_pair_distribution_invariants_enforced():
    with pytest.raises(ValueError):
        PairDistribution(0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        PairDistribution(0.7, -0.2, 0.2, 0.3)
    with pytest.raises(ValueError):
        PairDistribution(0.4, 0.2, 0.2, 0.2)  # sums to 1 but marginals are biased


def test_tensor_expectation_trivial_cases():
    z = make_setting(0)
    x = make_setting(90)
    assert singlet_tensor_expectation(z, z) == pytest.approx(-1.0, abs=1e-12)
    assert singlet_tensor_expectation(z, x) == pytest.approx(0.0, abs=1e-12)
    b = make_setting(45)
    assert singlet_tensor_expectation(z, b) == pytest.approx(-math.sqrt(2) / 2, abs=1e-9)


def test_tensor_oracle_agrees_with_closed_form():
    rng = random.Random(7)
    for _ in range(200):
        a = random_setting(rng)
        b = random_setting(rng)
        assert abs(singlet_tensor_expectation(a, b) + pair_expectation_aa(a, b)) < 1e-9


def test_table_properties_over_random_settings():
    rng = random.Random(99)
    for _ in range(200):
        a = random_setting(rng)
        b = random_setting(rng)
        dist = joint_pair_distribution(a, b)
        arr = dist.as_array()
        assert np.all(arr >= 0.0)
        assert abs(arr.sum() - 1.0) <= 1e-12
        assert abs(dist.marginal_first()[0] - 0.5) <= 1e-12
        assert abs(dist.marginal_second()[0] - 0.5) <= 1e-12
        assert abs(dist.product_expectation() - dot(a, b)) <= 1e-12
