"""Monte Carlo engine for bias from missing pregnancy outcomes.

Generates pregnancy cohorts with counterfactual outcomes under both
treatment arms, injects configurable outcome missingness, builds three
analytic samples, and quantifies the bias of standardized risk estimates
(including nonparametric bounds) against the counterfactual truth.
"""

__version__ = "1.0.0"

from .config import (
    MISSINGNESS_SPECS,
    TREATMENT_EFFECTS,
    CoefficientSchedules,
    ConfigurationError,
    MiscarriageEffect,
    MissingnessSpec,
    PreeclampsiaEffect,
    RunConfig,
    ScenarioSpec,
    TreatmentEffectSpec,
    build_scenario_matrix,
    default_schedules,
    load_schedules,
)
from .dgp import Cohort, expected_outcome_probs, generate_cohort
from .estimators import (
    BiasRecord,
    BoundsSet,
    EffectEstimate,
    EstimationError,
    TruthRecord,
    aalen_johansen_cif,
    bias,
    bounds,
    estimate_primary,
    truth,
)
from .missingness import ObservedCohort, apply_missingness, calibrate
from .runner import RunResult, run_matrix, write_outputs
from .samples import AnalyticSample, SampleKind, build_analytic_sample
from .verify import gating_failures, run_verification

__all__ = [
    "AnalyticSample", "BiasRecord", "BoundsSet", "CoefficientSchedules",
    "Cohort", "ConfigurationError", "EffectEstimate", "EstimationError",
    "MISSINGNESS_SPECS", "MiscarriageEffect", "MissingnessSpec",
    "ObservedCohort", "PreeclampsiaEffect", "RunConfig", "RunResult",
    "SampleKind", "ScenarioSpec", "TREATMENT_EFFECTS", "TreatmentEffectSpec",
    "TruthRecord", "aalen_johansen_cif", "apply_missingness", "bias",
    "bounds", "build_analytic_sample", "build_scenario_matrix", "calibrate",
    "default_schedules", "estimate_primary", "expected_outcome_probs",
    "gating_failures", "generate_cohort", "load_schedules", "run_matrix",
    "run_verification", "truth", "write_outputs",
]
