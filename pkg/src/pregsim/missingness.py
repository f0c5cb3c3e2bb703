"""Missing-outcome injection: target population -> study sample.

Two mechanisms, both calibrated with balancing intercepts so that a
covariate-centered pregnancy hits the configured marginal probability:

* measured (severity / rurality): a weekly logistic fires from week 8 on;
  the first firing strictly before the observed outcome week censors the
  pregnancy at its most recent encounter at or before that week;
* miscarriage: pregnancies whose observed outcome is a miscarriage get one
  logistic draw, with probability decreasing in gestational age at loss;
  if it fires the pregnancy is censored at its last encounter before the
  miscarriage.

The measured mechanism takes precedence when both would apply. Both arms
are subjected to the same coefficient values; targets refer to
non-initiators, so realized initiator missingness floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _rng
from .config import (
    ENC_FIRST_WEEK,
    FIRST_WEEK,
    LAST_WEEK,
    MissingnessSpec,
    balancing_intercept,
    expit,
    weekly_from_marginal,
)
from .dgp import Cohort

CAUSE_NONE = 0
CAUSE_MEASURED = 1
CAUSE_MISCARRIAGE = 2
CAUSE_LABELS = {CAUSE_NONE: "none", CAUSE_MEASURED: "measured",
                CAUSE_MISCARRIAGE: "miscarriage"}

# Weekly measured-missingness draws run over weeks 8..41 (34 weeks: the
# follow-up window used for the marginal-to-weekly conversion).
N_MISS_WEEKS = 34


class ContractError(RuntimeError):
    pass


@dataclass
class MissingnessModelParams:
    """Calibrated logistic parameters for both mechanisms."""

    measured_weekly_marginal: float
    measured_intercept: float       # includes the -a1*E(s) - a2*E(r) centering
    miscarriage_marginal: float
    miscarriage_intercept: float    # includes the -d1*E(g) centering
    e_severity: float               # mean severity among non-initiators
    e_rural: float                  # rural share among non-initiators
    e_ga_miscarriage: float         # mean event week among miscarriages
    alpha1: float
    alpha2: float
    delta1: float

    @property
    def measured_enabled(self):
        return self.measured_weekly_marginal > 0.0

    @property
    def miscarriage_enabled(self):
        return self.miscarriage_marginal > 0.0

    def measured_weekly_prob(self, severity, rural):
        if not self.measured_enabled:
            return np.zeros_like(np.asarray(severity, dtype=float))
        return expit(self.measured_intercept + self.alpha1 * np.asarray(severity)
                     + self.alpha2 * np.asarray(rural, dtype=float))

    def miscarriage_prob(self, ga_week):
        if not self.miscarriage_enabled:
            return np.zeros_like(np.asarray(ga_week, dtype=float))
        return expit(self.miscarriage_intercept
                     + self.delta1 * np.asarray(ga_week, dtype=float))


def calibrate(sched, spec: MissingnessSpec, cohort: Cohort):
    """Balancing-intercept calibration against the generated cohort.

    Centering statistics come from the cohort itself: mean severity and
    rural share among non-initiators, and mean gestational week at loss
    among observed-arm miscarriages.
    """
    noninit = ~cohort.treated
    e_s = float(cohort.severity[noninit].mean()) if noninit.any() else 1.0
    e_r = float(cohort.rural[noninit].mean()) if noninit.any() else 0.3
    mis = cohort.observed_miscarriage
    e_g = float(cohort.observed_end_week[mis].mean()) if mis.any() else 10.0

    if spec.target_measured_pct > 0:
        weekly = weekly_from_marginal(spec.target_measured_pct,
                                      spec.followup_weeks_for_conversion)
        m_int = (balancing_intercept(weekly)
                 - sched.alpha1 * e_s - sched.alpha2 * e_r)
    else:
        weekly, m_int = 0.0, float("-inf")

    marg = spec.miscarriage_marginal
    if spec.target_miscarriage_pct > 0:
        mc_int = balancing_intercept(marg) - sched.delta1 * e_g
    else:
        marg, mc_int = 0.0, float("-inf")

    return MissingnessModelParams(
        measured_weekly_marginal=weekly, measured_intercept=m_int,
        miscarriage_marginal=marg, miscarriage_intercept=mc_int,
        e_severity=e_s, e_rural=e_r, e_ga_miscarriage=e_g,
        alpha1=sched.alpha1, alpha2=sched.alpha2, delta1=sched.delta1)


def measured_missing_week(params, severity, rural, rng):
    """First week (8..41) the measured mechanism fires, or None."""
    if not params.measured_enabled:
        return None
    p = float(params.measured_weekly_prob(severity, rural))
    fired = np.nonzero(rng.random(N_MISS_WEEKS) < p)[0]
    return int(ENC_FIRST_WEEK + fired[0]) if fired.size else None


def miscarriage_missing(params, ga_at_miscarriage, rng):
    """Whether a miscarried pregnancy has its outcome unobserved."""
    if not FIRST_WEEK <= ga_at_miscarriage <= 16:
        raise ContractError(
            f"miscarriage mechanism called with event week {ga_at_miscarriage}")
    if not params.miscarriage_enabled:
        return False
    return bool(rng.random() < float(params.miscarriage_prob(ga_at_miscarriage)))


@dataclass
class ObservedCohort:
    """Study sample: the cohort plus per-pregnancy censoring state."""

    cohort: Cohort
    censored: np.ndarray      # bool
    cause: np.ndarray         # CAUSE_* codes
    censor_week: np.ndarray   # conception week of last usable encounter

    @property
    def n(self):
        return self.cohort.n

    @property
    def observed_has_pe(self):
        """Prenatal preeclampsia observed (outcome seen and PE occurred)."""
        return ~self.censored & self.cohort.observed_has_pe


def apply_missingness(cohort, spec, params, master_seed, te_index, replicate=0):
    """Inject missing outcomes; returns the study sample.

    Uniform draws are keyed by (seed, treatment effect, replicate) only, so
    designs with nested targets (5% versus 20%) produce nested missing
    sets on a shared cohort.
    """
    n = cohort.n
    censored = np.zeros(n, dtype=bool)
    cause = np.zeros(n, dtype=np.uint8)
    censor_week = np.zeros(n, dtype=np.int16)
    fire_week = np.full(n, np.iinfo(np.int32).max, dtype=np.int32)

    end_week = cohort.observed_end_week
    miscarriage = cohort.observed_miscarriage

    for lo, hi in _rng.chunk_bounds(n):
        sl = slice(lo, hi)
        ew = end_week[sl]

        if params.measured_enabled:
            u = _rng.uniforms(master_seed, te_index, replicate,
                              _rng.MISS_MEASURED, lo, hi, N_MISS_WEEKS)
            p = params.measured_weekly_prob(cohort.severity[sl],
                                            cohort.rural[sl])
            hits = u < p[:, None]
            any_hit = hits.any(axis=1)
            fire_week[sl][any_hit] = (ENC_FIRST_WEEK
                                      + hits.argmax(axis=1)[any_hit])

        # Measured: a firing at or before the week the pregnancy ends makes
        # the end event (observed the following week) unobservable.
        meas = fire_week[sl] <= ew

        mnar = np.zeros(hi - lo, dtype=bool)
        if params.miscarriage_enabled:
            u1 = _rng.uniforms(master_seed, te_index, replicate,
                               _rng.MISS_MISCARRIAGE, lo, hi)
            mnar = miscarriage[sl] & (u1 < params.miscarriage_prob(ew))
        mnar &= ~meas

        censored[sl] = meas | mnar
        cause[sl][meas] = CAUSE_MEASURED
        cause[sl][mnar] = CAUSE_MISCARRIAGE

    # Censoring week: last encounter at or before the missingness week
    # (measured) or the miscarriage event week (miscarriage). The week-7
    # index encounter is certain, so a valid week always exists.
    idx = np.nonzero(censored)[0]
    if idx.size:
        cutoff = np.where(cause[idx] == CAUSE_MEASURED,
                          fire_week[idx], end_week[idx])
        weeks = np.arange(FIRST_WEEK, LAST_WEEK + 1)
        eligible = cohort.encounters[idx] & (weeks[None, :] <= cutoff[:, None])
        censor_week[idx] = np.where(eligible, weeks[None, :],
                                    0).max(axis=1).astype(np.int16)

    return ObservedCohort(cohort, censored, cause, censor_week)


def study_sample_report(obs: ObservedCohort):
    """Descriptive rows by arm: missingness causes, severity, true outcomes."""
    rows = []
    c = obs.cohort
    miscarriage = c.observed_miscarriage
    stillbirth = c.observed_end_fd & ~miscarriage
    for arm, mask in (("initiator", c.treated), ("non-initiator", ~c.treated)):
        total = int(mask.sum())
        row = {"arm": arm, "pregnancies": total}
        for code, label in ((CAUSE_MEASURED, "missing_measured"),
                            (CAUSE_MISCARRIAGE, "missing_miscarriage")):
            row[label] = int((mask & (obs.cause == code)).sum())
        for s, label in enumerate(("severity_low", "severity_moderate",
                                   "severity_high")):
            row[label] = int((mask & (c.severity == s)).sum())
        row["true_preeclampsia"] = int((mask & c.observed_has_pe).sum())
        row["true_miscarriage"] = int((mask & miscarriage).sum())
        row["true_stillbirth"] = int((mask & stillbirth).sum())
        row["true_live_birth"] = int((mask & ~c.observed_end_fd).sum())
        rows.append(row)
    return rows
