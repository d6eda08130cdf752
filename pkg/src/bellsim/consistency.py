"""The marginal problem, Vorob'ev cyclicity and Kolmogorov consistency.

Three related questions live here:

1. ``check_kolmogorov``: does a family of joint tables of a time-indexed
   +/-1 vector process satisfy the consistency conditions (normalization,
   non-negativity, marginalization coherence, permutation symmetry)?
2. ``joint_feasibility`` / ``deterministic_vertex_oracle``: do prescribed
   joint tables on subsets of +/-1 variables extend to one joint law on a
   common space?  The first solves the linear program over the 2^n atom
   probabilities (HiGHS); the second independently decides membership in
   the convex hull of the 2^n deterministic sign assignments with an exact
   rational simplex.  Infeasibility always comes back with a violated
   linear functional; CHSH facets are screened before falling back to a
   dual certificate.
3. ``vorobev_cyclicity``: Graham reduction of the subset collection.
   Acyclic (decomposable) collections admit a joint extension for any
   consistent projections, so constraints of the CHSH kind can only bind
   on cyclic collections.

The scenario file grammar consumed by the CLI is documented at
``read_scenario``.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from ._ratlp import solve_min
from .core import SettingVector
from .quantum import joint_pair_distribution

NORMALIZATION_TOL = 1e-9
WITNESS_TOL = 1e-7
CERT_MARGIN = 1e-7

MAX_VARIABLES = 16
MAX_ORACLE_VARIABLES = 10

ACYCLIC = "acyclic"
CYCLIC = "cyclic"


class SizeLimitError(ValueError):
    """The scenario exceeds the supported variable count."""


class MarginalMismatchError(ValueError):
    """Two prescribed tables disagree on their overlap (a precondition
    failure, distinct from infeasibility of the extension)."""


class ScenarioFormatError(ValueError):
    """A scenario file does not follow the documented grammar."""


# ---------------------------------------------------------------------------
# Kolmogorov consistency of a process family
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProcessFamily:
    """Joint tables of a +/-1 vector process at queried time tuples.

    ``tables`` maps a tuple of time indices (t1, ..., tm) to an array of
    shape ``(2**dimension,) * m``; axis i enumerates the joint outcome of
    all components at time ti, lexicographic with -1 before +1 and the
    first component most significant.
    """

    dimension: int
    component_names: tuple[str, ...]
    times: tuple[int, ...]
    tables: dict[tuple[int, ...], np.ndarray]


@dataclass(frozen=True)
class ConsistencyViolation:
    condition: str
    times: tuple[int, ...]
    detail: str


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    violations: tuple[ConsistencyViolation, ...]


def _validate_family(family: ProcessFamily) -> None:
    if not 1 <= family.dimension <= 4:
        raise ValueError(f"process dimension must be 1..4, got {family.dimension}")
    if len(family.component_names) != family.dimension:
        raise ValueError("one component name per dimension is required")
    if not family.times:
        raise ValueError("at least one time index is required")
    size = 1 << family.dimension
    for key, table in family.tables.items():
        if not key:
            raise ValueError("table keys must name at least one time")
        if len(set(key)) != len(key):
            raise ValueError(f"table key {key} repeats a time index")
        for t in key:
            if t not in family.times:
                raise ValueError(f"table key {key} uses undeclared time {t}")
        arr = np.asarray(table, dtype=float)
        if arr.shape != (size,) * len(key):
            raise ValueError(
                f"table for times {key} must have shape {(size,) * len(key)}, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"table for times {key} contains non-finite entries")


def check_kolmogorov(family: ProcessFamily, tol: float = NORMALIZATION_TOL) -> ConsistencyReport:
    """Check the consistency conditions of a joint-probability family.

    Conditions: (1) every table has total mass one, (2) every entry is
    non-negative, (3) summing a longer-time table over one time reproduces
    the shorter table when the family prescribes it, (4) tables given for
    permuted time tuples agree after permuting axes.  Malformed input
    raises ValueError; violations are reported, not raised.
    """
    _validate_family(family)
    violations: list[ConsistencyViolation] = []
    keys = sorted(family.tables.keys(), key=lambda k: (len(k), k))
    tables = {key: np.asarray(family.tables[key], dtype=float) for key in keys}

    for key in keys:
        table = tables[key]
        mass = float(table.sum())
        if abs(mass - 1.0) > tol:
            violations.append(
                ConsistencyViolation("normalization", key, f"total mass {mass:.6g} != 1")
            )
        low = float(table.min())
        if low < -tol:
            violations.append(
                ConsistencyViolation("non-negativity", key, f"smallest entry {low:.6g} < 0")
            )

    for key in keys:
        if len(key) < 2:
            continue
        for pos in range(len(key)):
            reduced = key[:pos] + key[pos + 1 :]
            if reduced not in tables:
                continue
            summed = tables[key].sum(axis=pos)
            dev = float(np.max(np.abs(summed - tables[reduced])))
            if dev > tol:
                violations.append(
                    ConsistencyViolation(
                        "marginalization",
                        key,
                        f"summing out time {key[pos]} misses the table for {reduced} by {dev:.3g}",
                    )
                )

    for key_a, key_b in itertools.combinations(keys, 2):
        if len(key_a) != len(key_b) or sorted(key_a) != sorted(key_b):
            continue
        perm = tuple(key_a.index(t) for t in key_b)
        dev = float(np.max(np.abs(tables[key_a].transpose(perm) - tables[key_b])))
        if dev > tol:
            violations.append(
                ConsistencyViolation(
                    "symmetry",
                    key_b,
                    f"permuting the table for {key_a} misses the table for {key_b} by {dev:.3g}",
                )
            )

    return ConsistencyReport(consistent=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# Marginal scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MarginalConstraint:
    """A prescribed joint table over a subset of the scenario's variables.

    The table has shape (2,)*k with axis order following ``variables`` and
    index 0 meaning outcome -1 (lexicographic order, -1 before +1).
    """

    variables: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        names = tuple(self.variables)
        arr = np.asarray(self.table, dtype=float).reshape((2,) * len(names))
        arr.setflags(write=False)
        object.__setattr__(self, "variables", names)
        object.__setattr__(self, "table", arr)


@dataclass(frozen=True, eq=False)
class MarginalScenario:
    """Named +/-1 variables plus prescribed joint tables on subsets."""

    variables: tuple[str, ...]
    constraints: tuple[MarginalConstraint, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        _validate_scenario(self)

    def subsets(self) -> list[tuple[str, ...]]:
        return [c.variables for c in self.constraints]


def make_scenario(
    variables: Sequence[str], constraints: Iterable[tuple[Sequence[str], object]]
) -> MarginalScenario:
    """Build a scenario from (subset, table) pairs; tables may be flat."""
    built = tuple(
        MarginalConstraint(tuple(names), np.asarray(table, dtype=float))
        for names, table in constraints
    )
    return MarginalScenario(tuple(variables), built)


def _project(table: np.ndarray, table_vars: Sequence[str], target_vars: Sequence[str]) -> np.ndarray:
    """Marginal of ``table`` onto ``target_vars``, axes in target order."""
    drop = tuple(i for i, v in enumerate(table_vars) if v not in target_vars)
    out = table.sum(axis=drop) if drop else table
    kept = [v for v in table_vars if v in target_vars]
    perm = tuple(kept.index(v) for v in target_vars)
    return out.transpose(perm)


def _validate_scenario(scenario: MarginalScenario) -> None:
    names = scenario.variables
    if not names:
        raise ValueError("a scenario needs at least one variable")
    if len(names) > MAX_VARIABLES:
        raise SizeLimitError(f"at most {MAX_VARIABLES} variables are supported, got {len(names)}")
    if len(set(names)) != len(names):
        raise ValueError("variable names must be unique")
    for name in names:
        if not name or any(ch.isspace() for ch in name) or "#" in name or ":" in name:
            raise ValueError(f"invalid variable name {name!r}")
    if not scenario.constraints:
        raise ValueError("a scenario needs at least one constraint")
    declared = set(names)
    for c in scenario.constraints:
        if not c.variables:
            raise ValueError("constraint subsets must be non-empty")
        if len(set(c.variables)) != len(c.variables):
            raise ValueError(f"constraint subset {c.variables} repeats a variable")
        unknown = [v for v in c.variables if v not in declared]
        if unknown:
            raise ValueError(f"constraint uses undeclared variables {unknown}")
        if not np.all(np.isfinite(c.table)):
            raise ValueError(f"constraint over {c.variables} has non-finite entries")
        if float(c.table.min()) < -NORMALIZATION_TOL:
            raise ValueError(
                f"constraint over {c.variables} has negative entry {float(c.table.min()):.3g}"
            )
        mass = float(c.table.sum())
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"constraint over {c.variables} sums to {mass!r}, expected 1")
    for ca, cb in itertools.combinations(scenario.constraints, 2):
        shared = tuple(v for v in names if v in ca.variables and v in cb.variables)
        if not shared:
            continue
        dev = float(
            np.max(np.abs(_project(ca.table, ca.variables, shared) - _project(cb.table, cb.variables, shared)))
        )
        if dev > NORMALIZATION_TOL:
            raise MarginalMismatchError(
                f"constraints over {ca.variables} and {cb.variables} disagree on "
                f"{shared}: max deviation {dev:.3g}"
            )


# ---------------------------------------------------------------------------
# Feasibility of a joint extension
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InfeasibilityCertificate:
    """Linear functional on the prescribed tables whose value exceeds its
    maximum over all joint laws (equivalently over the deterministic sign
    assignments), proving that no joint extension exists.

    ``coefficients`` holds one array per scenario constraint, shaped like
    its table; value = sum(coeff * table) + constant, and bound is the
    maximum of the same functional over all assignments.
    """

    coefficients: tuple[np.ndarray, ...]
    constant: float
    value: float
    bound: float
    label: str


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    """Outcome of a joint-extension decision.

    Feasible results carry a witness joint law over the 2^n atoms
    (lexicographic order, -1 before +1, first variable most significant);
    infeasible results carry a separating certificate whose value exceeds
    its bound by more than CERT_MARGIN.
    """

    feasible: bool
    witness: np.ndarray | None
    certificate: InfeasibilityCertificate | None
    method: str = "lp"

    def __post_init__(self) -> None:
        if self.feasible:
            if self.witness is None:
                raise ValueError("feasible results need a witness")
        else:
            if self.certificate is None:
                raise ValueError("infeasible results need a certificate")
            margin = self.certificate.value - self.certificate.bound
            if not margin > CERT_MARGIN:
                raise ValueError(f"certificate margin {margin!r} is not above {CERT_MARGIN}")


def _subset_atom_index(variables: Sequence[str], subset: Sequence[str]) -> np.ndarray:
    """For every atom, the flat index of its restriction to ``subset``."""
    n = len(variables)
    atoms = np.arange(1 << n, dtype=np.int64)
    idx = np.zeros(1 << n, dtype=np.int64)
    k = len(subset)
    for rank, name in enumerate(subset):
        pos = variables.index(name)
        bit = (atoms >> (n - 1 - pos)) & 1
        idx |= bit << (k - 1 - rank)
    return idx


def _atom_system(scenario: MarginalScenario) -> tuple[np.ndarray, np.ndarray]:
    """Equality system over atom probabilities: normalization row first,
    then one row per (constraint, outcome) entry."""
    n = len(scenario.variables)
    natoms = 1 << n
    rows = [np.ones(natoms)]
    rhs = [1.0]
    for c in scenario.constraints:
        idx = _subset_atom_index(scenario.variables, c.variables)
        flat = c.table.reshape(-1)
        for e in range(flat.size):
            rows.append((idx == e).astype(float))
            rhs.append(float(flat[e]))
    return np.array(rows), np.array(rhs)


def witness_marginal(
    witness: np.ndarray, variables: Sequence[str], subset: Sequence[str]
) -> np.ndarray:
    """Marginal table of an atom vector on ``subset`` (axes in subset order)."""
    idx = _subset_atom_index(variables, subset)
    k = len(subset)
    return np.bincount(idx, weights=witness, minlength=1 << k).reshape((2,) * k)


def witness_deviation(scenario: MarginalScenario, witness: np.ndarray) -> float:
    """Largest absolute gap between a witness's marginals and the tables."""
    dev = abs(float(witness.sum()) - 1.0)
    for c in scenario.constraints:
        got = witness_marginal(witness, scenario.variables, c.variables)
        dev = max(dev, float(np.max(np.abs(got - c.table))))
    return dev


def certificate_value(scenario: MarginalScenario, cert: InfeasibilityCertificate) -> float:
    return float(
        sum(float((coeff * c.table).sum()) for coeff, c in zip(cert.coefficients, scenario.constraints))
        + cert.constant
    )


def certificate_bound(scenario: MarginalScenario, cert: InfeasibilityCertificate) -> float:
    """Maximum of the certificate functional over deterministic assignments."""
    n = len(scenario.variables)
    totals = np.full(1 << n, cert.constant)
    for coeff, c in zip(cert.coefficients, scenario.constraints):
        idx = _subset_atom_index(scenario.variables, c.variables)
        totals += np.asarray(coeff, dtype=float).reshape(-1)[idx]
    return float(totals.max())


def verify_certificate(
    scenario: MarginalScenario, cert: InfeasibilityCertificate, margin: float = CERT_MARGIN
) -> bool:
    """Recompute value and bound from scratch and check the separation."""
    value = certificate_value(scenario, cert)
    bound = certificate_bound(scenario, cert)
    return (
        abs(value - cert.value) <= 1e-9
        and abs(bound - cert.bound) <= 1e-9
        and value - bound > margin
    )


def _pair_expectation(c: MarginalConstraint) -> float:
    t = c.table
    return float(t[0, 0] - t[0, 1] - t[1, 0] + t[1, 1])


def _chsh_cycles(scenario: MarginalScenario) -> list[tuple[int, int, int, int]]:
    """Index quadruples of pair constraints forming a four-cycle."""
    pair_idx = [i for i, c in enumerate(scenario.constraints) if len(c.variables) == 2]
    cycles = []
    for combo in itertools.combinations(pair_idx, 4):
        edges = [frozenset(scenario.constraints[i].variables) for i in combo]
        if len(set(edges)) != 4:
            continue
        degree = Counter(v for e in edges for v in e)
        if len(degree) == 4 and all(d == 2 for d in degree.values()):
            cycles.append(combo)
    return cycles


def _best_chsh_certificate(scenario: MarginalScenario) -> InfeasibilityCertificate | None:
    """Screen every four-cycle of pair constraints against the 8 CHSH facets."""
    sign_cell = np.array([[1.0, -1.0], [-1.0, 1.0]])
    best = None
    for combo in _chsh_cycles(scenario):
        exps = [_pair_expectation(scenario.constraints[i]) for i in combo]
        for minus_at in range(4):
            for overall in (1.0, -1.0):
                signs = [overall * (-1.0 if k == minus_at else 1.0) for k in range(4)]
                value = sum(s * e for s, e in zip(signs, exps))
                if value <= 2.0 + CERT_MARGIN:
                    continue
                if best is not None and value <= best.value:
                    continue
                coeffs = [np.zeros_like(np.asarray(c.table)) for c in scenario.constraints]
                for s, i in zip(signs, combo):
                    coeffs[i] = s * sign_cell
                cert = InfeasibilityCertificate(
                    coefficients=tuple(coeffs),
                    constant=0.0,
                    value=value,
                    bound=0.0,
                    label="chsh-facet",
                )
                bound = certificate_bound(scenario, cert)
                best = InfeasibilityCertificate(
                    coefficients=cert.coefficients,
                    constant=0.0,
                    value=value,
                    bound=bound,
                    label="chsh-facet",
                )
    return best


def _farkas_certificate(
    scenario: MarginalScenario, system: np.ndarray, rhs: np.ndarray
) -> InfeasibilityCertificate | None:
    """Dual search: maximize rhs.y with system^T y <= 0 and |y| <= 1."""
    res = linprog(
        c=-rhs,
        A_ub=system.T,
        b_ub=np.zeros(system.shape[1]),
        bounds=(-1.0, 1.0),
        method="highs",
    )
    if res.status != 0:
        return None
    y = res.x
    value = float(rhs @ y)
    if value <= 1e-9:
        return None
    bound = float((system.T @ y).max())
    coeffs = []
    row = 1
    for c in scenario.constraints:
        size = c.table.size
        coeffs.append(np.array(y[row : row + size]).reshape(c.table.shape))
        row += size
    return InfeasibilityCertificate(
        coefficients=tuple(coeffs),
        constant=float(y[0]),
        value=value,
        bound=bound,
        label="farkas-dual",
    )


def joint_feasibility(scenario: MarginalScenario) -> FeasibilityResult:
    """Decide whether the prescribed tables extend to one joint law.

    Linear program over the 2^n atom probabilities (HiGHS).  Infeasible
    scenarios come back with a violated functional: the 8 CHSH facet
    combinations of every four-cycle are screened first, then a bounded
    dual search.  Verdicts whose certificate margin is inside CERT_MARGIN
    are re-decided by the exact vertex oracle when the size permits.
    """
    n = len(scenario.variables)
    if n > MAX_VARIABLES:
        raise SizeLimitError(f"at most {MAX_VARIABLES} variables are supported, got {n}")
    system, rhs = _atom_system(scenario)
    res = linprog(
        c=np.zeros(system.shape[1]),
        A_eq=system,
        b_eq=rhs,
        bounds=(0.0, None),
        method="highs",
    )
    if res.status == 0:
        witness = np.clip(res.x, 0.0, None)
        dev = witness_deviation(scenario, witness)
        if dev > WITNESS_TOL:
            raise RuntimeError(f"solver witness misses the tables by {dev:.3g}")
        return FeasibilityResult(True, witness, None, method="lp")
    if res.status != 2:
        raise RuntimeError(f"linear program solver failed: {res.message}")
    cert = _best_chsh_certificate(scenario) or _farkas_certificate(scenario, system, rhs)
    if (cert is None or cert.value - cert.bound <= CERT_MARGIN) and n <= MAX_ORACLE_VARIABLES:
        return deterministic_vertex_oracle(scenario)
    if cert is None or cert.value - cert.bound <= CERT_MARGIN:
        raise RuntimeError("infeasible by LP but no separating certificate was found")
    return FeasibilityResult(False, None, cert, method="lp")


def deterministic_vertex_oracle(scenario: MarginalScenario) -> FeasibilityResult:
    """Brute-force feasibility oracle over deterministic sign assignments.

    The prescribed tables extend to a joint law iff their concatenation lies
    in the convex hull of the 2^n assignment-induced tables.  Membership is
    decided by an exact rational simplex minimizing the L1 gap; gaps at or
    below WITNESS_TOL count as feasible, absorbing the float rounding of the
    prescribed tables.  Infeasibility returns the exact dual functional.
    """
    n = len(scenario.variables)
    if n > MAX_ORACLE_VARIABLES:
        raise SizeLimitError(
            f"the vertex oracle supports at most {MAX_ORACLE_VARIABLES} variables, got {n}"
        )
    natoms = 1 << n
    memberships: list[np.ndarray] = []
    rhs_entries: list[Fraction] = []
    for c in scenario.constraints:
        idx = _subset_atom_index(scenario.variables, c.variables)
        flat = c.table.reshape(-1)
        for e in range(flat.size):
            memberships.append(idx == e)
            rhs_entries.append(Fraction(float(flat[e])))
    m = len(rhs_entries)

    rows: list[list[Fraction]] = []
    for r in range(m):
        row = [Fraction(1) if memberships[r][s] else Fraction(0) for s in range(natoms)]
        row += [Fraction(1) if i == r else Fraction(0) for i in range(m)]
        row += [Fraction(-1) if i == r else Fraction(0) for i in range(m)]
        rows.append(row)
    rows.append([Fraction(1)] * natoms + [Fraction(0)] * (2 * m))
    rhs = rhs_entries + [Fraction(1)]
    cost = [Fraction(0)] * natoms + [Fraction(1)] * (2 * m)

    z, gap, duals = solve_min(cost, rows, rhs)
    if gap <= Fraction(1, 10**7):
        witness = np.array([float(z[s]) for s in range(natoms)])
        return FeasibilityResult(True, witness, None, method="vertex-oracle")

    # The optimal duals give an exact separating functional: dual feasibility
    # caps it at zero on every assignment while its value on the prescribed
    # tables equals the positive gap.
    dual_value = sum(y * b for y, b in zip(duals, rhs))
    assert dual_value == gap, "strong duality must hold exactly"
    constant = duals[m]
    bound = None
    for s in range(natoms):
        tot = constant
        for r in range(m):
            if memberships[r][s]:
                tot += duals[r]
        if bound is None or tot > bound:
            bound = tot
    coeffs = []
    row = 0
    for c in scenario.constraints:
        size = c.table.size
        coeffs.append(
            np.array([float(duals[row + e]) for e in range(size)]).reshape(c.table.shape)
        )
        row += size
    cert = InfeasibilityCertificate(
        coefficients=tuple(coeffs),
        constant=float(constant),
        value=float(dual_value),
        bound=float(bound),
        label="exact-dual",
    )
    return FeasibilityResult(False, None, cert, method="vertex-oracle")


# ---------------------------------------------------------------------------
# Cyclicity
# ---------------------------------------------------------------------------

def vorobev_cyclicity(
    subsets: Iterable[Iterable[str]], variables: Iterable[str] | None = None
) -> str:
    """Classify a subset collection by Graham reduction.

    Repeatedly delete variables occurring in exactly one subset, then delete
    subsets contained in another subset; the collection is acyclic
    (decomposable) iff the reduction empties it.  Acyclic collections admit
    a joint extension for any consistent projections.
    """
    sets = [set(s) for s in subsets]
    if not sets or any(not s for s in sets):
        raise ValueError("subsets must be non-empty")
    if variables is not None:
        declared = set(variables)
        unknown = sorted(set().union(*sets) - declared)
        if unknown:
            raise ValueError(f"subsets use undeclared variables {unknown}")
    changed = True
    while changed and sets:
        changed = False
        counts = Counter(v for s in sets for v in s)
        for s in sets:
            lone = {v for v in s if counts[v] == 1}
            if lone:
                s -= lone
                changed = True
        sets = [s for s in sets if s]
        kept: list[set[str]] = []
        for i, s in enumerate(sets):
            absorbed = any(
                j != i and s <= sets[j] and (s != sets[j] or j < i)
                for j in range(len(sets))
            )
            if absorbed:
                changed = True
            else:
                kept.append(s)
        sets = kept
    return ACYCLIC if not sets else CYCLIC


def chsh_facet_value(e_ab: float, e_ac: float, e_db: float, e_dc: float) -> float:
    """The four-pair combination e_ab + e_ac + e_db - e_dc.

    Values above 2 certify that no joint law reproduces all four pair
    expectations (quantum statistics reach 2*sqrt(2), the algebraic maximum
    is 4).
    """
    for e in (e_ab, e_ac, e_db, e_dc):
        if not -1.0 - 1e-9 <= e <= 1.0 + 1e-9:
            raise ValueError(f"pair expectations must lie in [-1, 1], got {e!r}")
    return e_ab + e_ac + e_db - e_dc


# ---------------------------------------------------------------------------
# Quantum scenario builders
# ---------------------------------------------------------------------------

def quantum_pair_scenario(
    a: SettingVector, b: SettingVector, names: tuple[str, str] = ("A1", "A2")
) -> MarginalScenario:
    """Single-pair scenario carrying the singlet joint pair measure.

    One setting pair always extends (the subset collection is trivially
    acyclic), so this scenario is feasible for every choice of settings.
    """
    table = joint_pair_distribution(a, b).as_array()
    return make_scenario(names, [(names, table)])


def quantum_chsh_scenario(
    a: SettingVector,
    b: SettingVector,
    c: SettingVector,
    d: SettingVector,
    names: tuple[str, str, str, str] = ("Aa", "Ad", "Ab", "Ac"),
) -> MarginalScenario:
    """Four-cycle scenario with the quantum pair measures of the CHSH pairs.

    Variables are the four A-side functions (station 2's physical outcome is
    the sign flip of its A variable); the subsets pair station-1 settings
    {a, d} with station-2 settings {b, c}, forming the cyclic CHSH square.
    """
    name_a, name_d, name_b, name_c = names
    pairs = [
        ((name_a, name_b), joint_pair_distribution(a, b)),
        ((name_a, name_c), joint_pair_distribution(a, c)),
        ((name_d, name_b), joint_pair_distribution(d, b)),
        ((name_d, name_c), joint_pair_distribution(d, c)),
    ]
    return make_scenario(names, [(subset, dist.as_array()) for subset, dist in pairs])


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

def write_scenario(path: str, scenario: MarginalScenario, comment: str | None = None) -> None:
    """Write a scenario in the text format consumed by ``read_scenario``."""
    lines = []
    if comment:
        for part in comment.splitlines():
            lines.append(f"# {part}")
        lines.append("")
    lines.append("variables: " + " ".join(scenario.variables))
    for c in scenario.constraints:
        lines.append("")
        lines.append("constraint: " + " ".join(c.variables))
        lines.append(" ".join(repr(float(v)) for v in c.table.reshape(-1)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_scenario(path: str) -> MarginalScenario:
    """Parse a scenario file.

    Grammar (one directive per line, ``#`` starts a comment, blank lines are
    ignored):

        variables: <name> <name> ...
        constraint: <name> <name> ...
        <2^k probabilities, whitespace separated, may span lines>

    The first directive must be ``variables:``; each ``constraint:`` names a
    subset of them and is followed by its joint table in lexicographic
    outcome order (-1 before +1, first named variable most significant).
    Structural problems raise ScenarioFormatError with the line number;
    semantic problems (normalization, overlap disagreements) surface as
    ValueError / MarginalMismatchError from the scenario constructor.
    """
    variables: list[str] | None = None
    constraints: list[tuple[tuple[str, ...], list[float]]] = []
    pending: tuple[tuple[str, ...], list[float], int] | None = None

    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = fh.readlines()

    for lineno, raw in enumerate(raw_lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("variables:"):
            if variables is not None:
                raise ScenarioFormatError(f"line {lineno}: duplicate variables directive")
            if pending is not None:
                raise ScenarioFormatError(f"line {lineno}: variables directive inside a constraint")
            variables = line[len("variables:") :].split()
            if not variables:
                raise ScenarioFormatError(f"line {lineno}: variables directive names no variables")
            continue
        if line.startswith("constraint:"):
            if variables is None:
                raise ScenarioFormatError(f"line {lineno}: constraint before the variables directive")
            if pending is not None:
                names, values, want = pending
                raise ScenarioFormatError(
                    f"line {lineno}: constraint over {names} has {len(values)} of {want} entries"
                )
            names = tuple(line[len("constraint:") :].split())
            if not names:
                raise ScenarioFormatError(f"line {lineno}: constraint names no variables")
            pending = (names, [], 1 << len(names))
            continue
        if pending is None:
            raise ScenarioFormatError(f"line {lineno}: unexpected content {line!r}")
        names, values, want = pending
        for token in line.split():
            try:
                values.append(float(token))
            except ValueError:
                raise ScenarioFormatError(f"line {lineno}: not a probability: {token!r}") from None
        if len(values) > want:
            raise ScenarioFormatError(
                f"line {lineno}: constraint over {names} has more than {want} entries"
            )
        if len(values) == want:
            constraints.append((names, values))
            pending = None

    if variables is None:
        raise ScenarioFormatError("line 1: missing variables directive")
    if pending is not None:
        names, values, want = pending
        raise ScenarioFormatError(
            f"end of file: constraint over {names} has {len(values)} of {want} entries"
        )
    if not constraints:
        raise ScenarioFormatError("end of file: no constraints")
    return make_scenario(variables, constraints)
