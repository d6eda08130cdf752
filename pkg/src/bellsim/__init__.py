"""Simulator and verifier for two-station spin-pair experiments.

Modules:
    core         shared domain types (settings, trial records, plans)
    quantum      closed-form singlet pair statistics plus a tensor cross-check
    generators   trial generators: per-pair, common-space and instrument models
    chsh         CHSH composite statistics and exact counting audits
    consistency  marginal problem, Vorob'ev cyclicity, Kolmogorov consistency
    cli          batch command line front end
"""

__version__ = "0.1.0"

from .chsh import (
    CorruptedDataError,
    CountingBoundAudit,
    GammaReport,
    ModelViolationError,
    QuadrupleStats,
    a_side_product,
    counting_bound_audit,
    gamma_common,
    gamma_from_trials,
    gamma_report,
)
from .consistency import (
    ConsistencyReport,
    FeasibilityResult,
    InfeasibilityCertificate,
    MarginalMismatchError,
    MarginalScenario,
    ProcessFamily,
    ScenarioFormatError,
    SizeLimitError,
    check_kolmogorov,
    chsh_facet_value,
    deterministic_vertex_oracle,
    joint_feasibility,
    make_scenario,
    quantum_chsh_scenario,
    quantum_pair_scenario,
    read_scenario,
    vorobev_cyclicity,
    write_scenario,
)
from .core import (
    ExperimentPlan,
    InvalidPlanError,
    SettingPairId,
    SettingVector,
    TrialRecord,
    dot,
    make_setting,
)
from .generators import (
    HiddenState,
    InstrumentContext,
    QuadrupleRecord,
    degenerate_exclusive_family,
    run_common_space,
    run_instrument,
    run_per_pair,
    same_setting_quadruple,
    sign_outcome,
)
from .quantum import (
    PairDistribution,
    joint_pair_distribution,
    pair_expectation_aa,
    pair_expectation_station,
    singlet_tensor_expectation,
)
