"""Closed-form singlet-state predictions for one setting pair.

Two sign conventions appear throughout the package and are both exposed here
to keep every call site explicit.  The joint law of the two A-side variables
(A1, A2) of a setting pair has product expectation a.b; the physical second
station reports B = -A, so station products average to -a.b.

An independent tensor-algebra route (explicit singlet state and 2x2 spin
matrices) cross-checks the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SettingVector, dot

PROB_TOL = 1e-12

_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# (|01> - |10>) / sqrt(2) in the basis |00>, |01>, |10>, |11>
_SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class PairDistribution:
    """2x2 joint law of the A-side variables of one setting pair.

    Cell p_st is P(A1 = s, A2 = t) with m meaning -1 and p meaning +1.
    Both single-variable marginals are uniform and the cells sum to one;
    violations beyond PROB_TOL are rejected at construction.
    """

    p_mm: float
    p_mp: float
    p_pm: float
    p_pp: float

    def __post_init__(self) -> None:
        for p in (self.p_mm, self.p_mp, self.p_pm, self.p_pp):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"cell probability out of [0, 1]: {p!r}")
        total = self.p_mm + self.p_mp + self.p_pm + self.p_pp
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"cells must sum to 1, got {total!r}")
        if (
            abs(self.p_mm + self.p_mp - 0.5) > PROB_TOL
            or abs(self.p_mm + self.p_pm - 0.5) > PROB_TOL
        ):
            raise ValueError("single-variable marginals must both be (1/2, 1/2)")

    def prob(self, first: int, second: int) -> float:
        """P(A1 = first, A2 = second) for outcomes in {-1, +1}."""
        i = 0 if first < 0 else 1
        j = 0 if second < 0 else 1
        return self.as_array()[i, j]

    def as_array(self) -> np.ndarray:
        """2x2 array indexed [first, second], index 0 meaning outcome -1."""
        return np.array([[self.p_mm, self.p_mp], [self.p_pm, self.p_pp]])

    def station_array(self) -> np.ndarray:
        """Joint law of the station outcomes (A, B) with B = -A2.

        Entry [i, j] is P(a_outcome = s_i, b_outcome = s_j); flipping the
        second variable swaps the columns of as_array().
        """
        return np.array([[self.p_mp, self.p_mm], [self.p_pp, self.p_pm]])

    def product_expectation(self) -> float:
        """Expectation of A1 * A2 over this table."""
        return self.p_mm - self.p_mp - self.p_pm + self.p_pp

    def marginal_first(self) -> tuple[float, float]:
        return (self.p_mm + self.p_mp, self.p_pm + self.p_pp)

    def marginal_second(self) -> tuple[float, float]:
        return (self.p_mm + self.p_pm, self.p_mp + self.p_pp)


def pair_expectation_aa(a: SettingVector, b: SettingVector) -> float:
    """Quantum expectation of the A-side product A1 * A2: equal to a.b."""
    return dot(a, b)


def pair_expectation_station(a: SettingVector, b: SettingVector) -> float:
    """Quantum expectation of the station product A * B: equal to -a.b."""
    return -dot(a, b)


def joint_pair_distribution(a: SettingVector, b: SettingVector) -> PairDistribution:
    """The singlet joint pair measure for settings a, b.

    Equal-sign cells carry (1 + a.b)/4 and opposite-sign cells (1 - a.b)/4,
    so the product expectation over the table is exactly a.b and both
    marginals are uniform.
    """
    d = min(1.0, max(-1.0, dot(a, b)))
    same = 0.25 * (1.0 + d)
    diff = 0.25 * (1.0 - d)
    return PairDistribution(p_mm=same, p_mp=diff, p_pm=diff, p_pp=same)


def _spin_matrix(v: SettingVector) -> np.ndarray:
    return v.x * _SIGMA_X + v.y * _SIGMA_Y + v.z * _SIGMA_Z


def singlet_tensor_expectation(a: SettingVector, b: SettingVector) -> float:
    """<psi| sigma_a (x) sigma_b |psi> for the two-spin singlet state.

    Computed from the explicit 4-component state and 2x2 spin matrices, so it
    is an independent oracle for pair_expectation_aa; the result equals -a.b
    (note the sign: the A-side product expectation is its negation).
    """
    op = np.kron(_spin_matrix(a), _spin_matrix(b))
    val = _SINGLET.conj() @ (op @ _SINGLET)
    if abs(val.imag) >= 1e-12:
        raise ArithmeticError(f"expectation must be real, imaginary part {val.imag!r}")
    return float(val.real)
