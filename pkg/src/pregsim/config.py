"""Scenario matrix, coefficient schedules, and shared probability algebra.

The simulation is indexed in weeks from conception. Cohort entry (the index
prenatal encounter) is at conception week 7 (week 9 from last menstrual
period, LMP). Events generated at week ``t`` are observed at ``t + 1``;
reported gestational ages add 2 weeks to convert conception weeks to LMP
weeks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np
import yaml

# Week layout (conception indexing).
FIRST_WEEK = 7            # cohort entry / index encounter
LAST_WEEK = 40            # continuation probability forced to 0
PE_FIRST_WEEK = 17        # preeclampsia possible from this week
LB_FIRST_WEEK = 21        # live birth possible from this week
FD_COVARIATE_CUTOFF = 16  # covariate terms on fetal death apply for t < 16
ENC_FIRST_WEEK = 8        # post-index encounters drawn weekly from here
LMP_OFFSET = 2            # LMP week = conception week + 2
OBSERVATION_LAG = 1       # events at t are observed at t + 1

N_WEEKS = LAST_WEEK - FIRST_WEEK + 1        # 34
N_PE_WEEKS = LAST_WEEK - PE_FIRST_WEEK + 1  # 24
N_ENC_WEEKS = LAST_WEEK - ENC_FIRST_WEEK + 1  # 33

# A fetal death is classified as a miscarriage when observed before 20 weeks
# LMP: event week t, observed t + 1, LMP t + 3, so t <= 16.
MISCARRIAGE_LAST_EVENT_WEEK = 16


class ConfigurationError(ValueError):
    """Invalid schedule or run configuration."""


class MiscarriageEffect(str, enum.Enum):
    DECREASE = "decrease"
    NULL = "null"
    INCREASE = "increase"


class PreeclampsiaEffect(str, enum.Enum):
    DECREASE = "decrease"
    NULL = "null"


# Log-risk-ratios for fetal death under treatment, by severity (low,
# moderate, high), one triple per direction of the miscarriage effect.
MISCARRIAGE_EFFECT_COEFS = {
    MiscarriageEffect.DECREASE: (math.log(0.1), math.log(0.5), math.log(0.8)),
    MiscarriageEffect.NULL: (0.0, 0.0, 0.0),
    MiscarriageEffect.INCREASE: (math.log(5.0), math.log(2.0), math.log(1.1)),
}

# Log-odds-ratios for preeclampsia under treatment, by severity.
PREECLAMPSIA_EFFECT_COEFS = {
    PreeclampsiaEffect.DECREASE: (math.log(0.2), math.log(0.5), math.log(0.8)),
    PreeclampsiaEffect.NULL: (0.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class TreatmentEffectSpec:
    """Direction and coefficients of the treatment effect for one scenario."""

    miscarriage: MiscarriageEffect
    preeclampsia: PreeclampsiaEffect

    @property
    def beta_treatment(self):
        """(beta3, beta4, beta5): log-RR on fetal death by severity."""
        return MISCARRIAGE_EFFECT_COEFS[self.miscarriage]

    @property
    def gamma_treatment(self):
        """(gamma3, gamma4, gamma5): log-OR on preeclampsia by severity."""
        return PREECLAMPSIA_EFFECT_COEFS[self.preeclampsia]

    @property
    def label(self):
        return f"miscarriage-{self.miscarriage.value}_pe-{self.preeclampsia.value}"


TREATMENT_EFFECTS = tuple(
    TreatmentEffectSpec(m, p)
    for m in MiscarriageEffect
    for p in PreeclampsiaEffect
)


@dataclass(frozen=True)
class MissingnessSpec:
    """Target missingness among non-initiators for one study-sample design.

    ``target_measured_pct`` drives the severity/rurality (MAR) mechanism,
    ``target_miscarriage_pct`` the unobserved-miscarriage (MNAR) mechanism.
    """

    target_measured_pct: float
    target_miscarriage_pct: float
    miscarriage_inflation: float = 4.9
    followup_weeks_for_conversion: int = 34

    def __post_init__(self):
        total = self.target_measured_pct + self.target_miscarriage_pct
        if not (0.0 <= self.target_measured_pct < 1.0):
            raise ConfigurationError(f"measured target out of range: {self.target_measured_pct}")
        if not (0.0 <= self.target_miscarriage_pct < 1.0):
            raise ConfigurationError(f"miscarriage target out of range: {self.target_miscarriage_pct}")
        if total >= 1.0:
            raise ConfigurationError(f"total missingness target too large: {total}")

    @property
    def total_target(self):
        return self.target_measured_pct + self.target_miscarriage_pct

    @property
    def miscarriage_marginal(self):
        """Marginal probability fed to the miscarriage balancing intercept.

        The target percentage is inflated because only miscarried pregnancies
        are eligible for this mechanism; clamped just below 1.
        """
        return min(self.target_miscarriage_pct * self.miscarriage_inflation, 0.999)

    @property
    def label(self):
        return (f"measured-{self.target_measured_pct:g}"
                f"_miscarriage-{self.target_miscarriage_pct:g}")


# The six study-sample designs: 5% and 20% total missingness, split between
# the measured and miscarriage mechanisms as (all MNAR, 50/50, all MAR).
MISSINGNESS_SPECS = (
    MissingnessSpec(0.00, 0.05),
    MissingnessSpec(0.025, 0.025),
    MissingnessSpec(0.05, 0.00),
    MissingnessSpec(0.00, 0.20),
    MissingnessSpec(0.10, 0.10),
    MissingnessSpec(0.20, 0.00),
)


def _week_map_to_array(mapping, first, last, name):
    """Convert {week: value} to a dense float array over [first, last]."""
    weeks = sorted(int(w) for w in mapping)
    expected = list(range(first, last + 1))
    if weeks != expected:
        raise ConfigurationError(
            f"{name}: expected weeks {first}..{last}, got {weeks[:3]}..{weeks[-3:]}")
    return np.array([float(mapping[w]) for w in expected])


@dataclass
class CoefficientSchedules:
    """Baseline weekly schedules plus all model coefficients.

    Weekly arrays are indexed by conception week minus :data:`FIRST_WEEK`.
    Baseline (``*_base``) values refer to untreated, low-severity, non-rural
    pregnancies. The published coefficients carry their exact values as
    defaults; the weekly baselines are configuration inputs because the
    original study did not publish them.
    """

    fd_base: np.ndarray        # weekly fetal-death probability, weeks 7..40
    pe_base: np.ndarray        # weekly preeclampsia probability, weeks 17..40
    lb_prob: np.ndarray        # weekly live-birth probability, weeks 7..40 (0 before 21)
    enc_base: np.ndarray       # weekly encounter probability, weeks 8..40

    # Fetal death: log-RRs for moderate/high severity and rurality.
    beta1: float = math.log(2.0)
    beta2: float = math.log(3.0)
    beta6: float = math.log(1.5)
    # Preeclampsia: log-ORs for moderate/high severity and rurality.
    gamma1: float = math.log(1.5)
    gamma2: float = math.log(2.0)
    gamma6: float = math.log(2.0)
    # Preeclampsia-induced fetal death: log-RR versus the baseline hazard.
    alpha0: float = math.log(2.5)
    # Encounters: log-RRs for moderate/high severity.
    lambda1: float = math.log(1.2)
    lambda2: float = math.log(1.4)
    # Measured missingness: log-ORs per severity step and for rurality.
    alpha1: float = math.log(2.5)
    alpha2: float = math.log(1.05)
    # Miscarriage missingness: log-OR per gestational week (must be < 0).
    delta1: float = -math.log(1.25)

    source: str = "default"

    def validate(self):
        """Check every implied weekly probability; raise naming the offender."""
        for name, arr, n in (("fetal_death_weekly", self.fd_base, N_WEEKS),
                             ("preeclampsia_weekly", self.pe_base, N_PE_WEEKS),
                             ("live_birth_weekly", self.lb_prob, N_WEEKS),
                             ("encounter_weekly", self.enc_base, N_ENC_WEEKS)):
            if arr.shape != (n,):
                raise ConfigurationError(f"{name}: expected {n} weekly values, got {arr.shape}")
            if np.any((arr < 0) | (arr > 1)):
                week = int(np.argmax((arr < 0) | (arr > 1)))
                raise ConfigurationError(f"{name}: probability out of [0, 1] at entry {week}")
        if np.any(self.lb_prob[:LB_FIRST_WEEK - FIRST_WEEK] != 0):
            raise ConfigurationError("live_birth_weekly: nonzero before week "
                                     f"{LB_FIRST_WEEK}")
        # Week 40 forces the pregnancy to end: no continuation probability.
        # Snap away file-format rounding, reject anything larger.
        final = self.lb_prob[-1] + self.fd_base[-1]
        if abs(final - 1.0) > 1e-9:
            raise ConfigurationError(
                f"week {LAST_WEEK}: live birth + fetal death must equal 1, got {final}")
        self.lb_prob[-1] = 1.0 - self.fd_base[-1]
        if np.any(self.fd_base + self.lb_prob > 1 + 1e-12):
            week = FIRST_WEEK + int(np.argmax(self.fd_base + self.lb_prob > 1 + 1e-12))
            raise ConfigurationError(f"week {week}: fetal death + live birth exceeds 1")
        # The fetal-death model is an exp link; make sure no covariate or
        # treatment combination in any scenario pushes a weekly probability
        # above 1 while the covariate terms apply (t < 16).
        max_trt = max(max(c) for c in MISCARRIAGE_EFFECT_COEFS.values())
        worst = math.exp(max(self.beta1, self.beta2, 0.0) + max(max_trt, 0.0)
                         + max(self.beta6, 0.0))
        early = self.fd_base[:FD_COVARIATE_CUTOFF - FIRST_WEEK]
        if np.any(early * worst > 1):
            week = FIRST_WEEK + int(np.argmax(early * worst > 1))
            raise ConfigurationError(
                f"fetal_death_weekly: week {week} times worst-case multiplier "
                f"{worst:.3f} exceeds 1")
        if self.delta1 >= 0:
            raise ConfigurationError("delta1 must be negative (later miscarriages "
                                     "are less likely to be missing)")
        return self

    def week_index(self, week):
        return week - FIRST_WEEK

    @classmethod
    def from_mapping(cls, doc, source="mapping"):
        coef = doc.get("coefficients", {})
        known = {"lambda1", "lambda2", "alpha1", "alpha2", "delta1"}
        bad = set(coef) - known
        if bad:
            raise ConfigurationError(f"unknown coefficient overrides: {sorted(bad)}")
        lb = {int(w): float(p) for w, p in doc["live_birth_weekly"].items()}
        lb_full = {w: lb.get(w, 0.0) for w in range(FIRST_WEEK, LAST_WEEK + 1)}
        sched = cls(
            fd_base=_week_map_to_array(doc["fetal_death_weekly"], FIRST_WEEK,
                                       LAST_WEEK, "fetal_death_weekly"),
            pe_base=_week_map_to_array(doc["preeclampsia_weekly"], PE_FIRST_WEEK,
                                       LAST_WEEK, "preeclampsia_weekly"),
            lb_prob=_week_map_to_array(lb_full, FIRST_WEEK, LAST_WEEK,
                                       "live_birth_weekly"),
            enc_base=_week_map_to_array(doc["encounter_weekly"], ENC_FIRST_WEEK,
                                        LAST_WEEK, "encounter_weekly"),
            source=source,
            **{k: float(v) for k, v in coef.items()},
        )
        return sched.validate()


def load_schedules(path):
    """Load and validate a schedule file (YAML, see data/default_schedules.yaml)."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: not a mapping")
    try:
        return CoefficientSchedules.from_mapping(doc, source=str(path))
    except KeyError as exc:
        raise ConfigurationError(f"{path}: missing section {exc}") from exc


def default_schedules():
    """The packaged default schedules (calibrated, see README)."""
    ref = resources.files("pregsim").joinpath("data/default_schedules.yaml")
    doc = yaml.safe_load(ref.read_text())
    return CoefficientSchedules.from_mapping(doc, source="packaged default")


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the 6x6 treatment-effect by missingness grid."""

    id: int                      # stable identifier, 1..36
    te_index: int                # 0..5 into TREATMENT_EFFECTS
    miss_index: int              # 0..5 into MISSINGNESS_SPECS
    treatment_effect: TreatmentEffectSpec
    missingness: MissingnessSpec

    @property
    def label(self):
        return f"{self.treatment_effect.label}__{self.missingness.label}"


def build_scenario_matrix(schedules):
    """All 36 scenarios: 6 treatment effects crossed with 6 missingness specs."""
    schedules.validate()
    out = []
    for ti, te in enumerate(TREATMENT_EFFECTS):
        for mi, ms in enumerate(MISSINGNESS_SPECS):
            out.append(ScenarioSpec(id=ti * 6 + mi + 1, te_index=ti,
                                    miss_index=mi, treatment_effect=te,
                                    missingness=ms))
    return out


def weekly_from_marginal(p_marginal, n_weeks):
    """Constant weekly probability whose n-week complement product hits the marginal.

    Solves ``1 - (1 - p_week) ** n_weeks == p_marginal``.
    """
    if not 0.0 <= p_marginal < 1.0:
        raise ConfigurationError(f"marginal probability out of [0, 1): {p_marginal}")
    if n_weeks < 1:
        raise ConfigurationError(f"n_weeks must be >= 1: {n_weeks}")
    return 1.0 - (1.0 - p_marginal) ** (1.0 / n_weeks)


def balancing_intercept(p_marginal):
    """Logistic intercept whose expit recovers the marginal probability."""
    if not 0.0 < p_marginal < 1.0:
        raise ConfigurationError(
            f"balancing intercept needs 0 < p < 1, got {p_marginal}")
    return -math.log(1.0 / p_marginal - 1.0)


def expit(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


@dataclass
class RunConfig:
    """Settings for one batch run of the scenario matrix."""

    n_pregnancies: int = 200_000
    master_seed: int = 20250103
    scenario_filter: list[int] | None = None
    output_dir: str = "pregsim-out"
    replicate_id: int = 0
    threads: int = 1
    config_path: str | None = None
    out_format: str = "csv"
    dump_cohort: bool = False

    def __post_init__(self):
        if self.n_pregnancies < 1:
            raise ConfigurationError("n_pregnancies must be >= 1")
        if self.scenario_filter is not None:
            bad = [s for s in self.scenario_filter if not 1 <= s <= 36]
            if bad:
                raise ConfigurationError(f"scenario ids out of 1..36: {bad}")
        if self.out_format not in ("csv", "json"):
            raise ConfigurationError(f"unknown output format: {self.out_format}")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")

    def validate(self):
        self.__post_init__()
        return self

    def with_(self, **kw):
        return replace(self, **kw)
