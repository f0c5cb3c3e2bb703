"""Standardized risk estimation, bounds, truth, and bias.

Estimands are per-arm risks of prenatal preeclampsia, standardized over
the six severity-by-rurality strata with the analytic sample's own joint
covariate distribution (arms pooled). Deliveries and outcomes samples use
stratified proportions; the pregnancies sample uses a stratified
Aalen-Johansen cumulative incidence to handle censoring as a competing
risk problem (any non-preeclampsia end of pregnancy competes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dgp import Cohort, TREATED, UNTREATED
from .samples import AnalyticSample, N_STRATA, SampleKind

# Analysis time scale: pregnancy end at conception week w maps to time
# w - 6 (weeks since entry at week 7, observed one week later); censoring
# at encounter week w maps to w - 7, with the week-7 index encounter
# nudged to a small positive time so it stays on the positive axis while
# preceding every event time.
EVENT_TIME_OFFSET = 6
CENSOR_TIME_OFFSET = 7
ZERO_CENSOR_TIME = 0.0001

STATUS_CENSORED = 0
STATUS_EVENT = 1       # prenatal preeclampsia
STATUS_COMPETING = 2   # any other end of pregnancy


class EstimationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EffectEstimate:
    sample: str
    risk_treated: float
    risk_untreated: float

    @property
    def rd(self):
        return self.risk_treated - self.risk_untreated

    @property
    def rr(self):
        return self.risk_treated / self.risk_untreated


@dataclass(frozen=True)
class TruthRecord:
    risk_treated: float
    risk_untreated: float

    @property
    def rd(self):
        return self.risk_treated - self.risk_untreated

    @property
    def rr(self):
        return self.risk_treated / self.risk_untreated


@dataclass(frozen=True)
class BiasRecord:
    """Estimate minus truth: risks and RD in percentage points, RR on log scale."""

    bias_risk_treated: float
    bias_risk_untreated: float
    bias_rd: float
    bias_log_rr: float


@dataclass(frozen=True)
class BoundsSet:
    """Standardized risks under the four extreme imputations of censored
    pregnancies (every censored pregnancy an event; only censored
    initiators; only censored non-initiators; none)."""

    all_event: EffectEstimate
    treated_only_event: EffectEstimate
    untreated_only_event: EffectEstimate
    none_event: EffectEstimate

    def as_dict(self):
        return {"all_event": self.all_event,
                "treated_only_event": self.treated_only_event,
                "untreated_only_event": self.untreated_only_event,
                "none_event": self.none_event}

    def risk_bounds(self, arm):
        risks = [getattr(e, "risk_treated" if arm == TREATED
                         else "risk_untreated")
                 for e in self.as_dict().values()]
        return min(risks), max(risks)


def stratum_risks_proportion(strata, treated, event, extra_event=None):
    """Per-arm, per-stratum event proportions; (2, 6) array.

    ``extra_event`` optionally marks pregnancies counted as events on top
    of ``event`` (used by the bound imputations). Raises if any arm-stratum
    cell is empty, naming the cell.
    """
    ev = event if extra_event is None else (event | extra_event)
    risks = np.empty((2, N_STRATA))
    for arm, arm_mask in ((UNTREATED, ~treated), (TREATED, treated)):
        for s in range(N_STRATA):
            cell = arm_mask & (strata == s)
            m = int(cell.sum())
            if m == 0:
                raise EstimationError(
                    f"empty stratum: arm={arm} severity={s // 2} rural={s % 2}")
            risks[arm, s] = ev[cell].mean()
    return risks


def standardize(stratum_risks, weights):
    """Weighted average of per-stratum risks; returns (risk0, risk1)."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (N_STRATA,) or not math.isclose(w.sum(), 1.0,
                                                  abs_tol=1e-9):
        raise EstimationError("standardization weights must be 6 values summing to 1")
    r = np.asarray(stratum_risks, dtype=float) @ w
    return float(r[UNTREATED]), float(r[TREATED])


def aalen_johansen_cif(times, status):
    """Cumulative incidence of cause 1 at the end of follow-up.

    ``times`` are positive analysis times; ``status`` is 0 censored,
    1 event of interest, 2 competing event. At tied times, events are
    processed before censorings.
    """
    times = np.asarray(times, dtype=float)
    status = np.asarray(status)
    if times.size == 0:
        raise EstimationError("empty risk set")
    if np.any(times <= 0):
        raise EstimationError("analysis times must be positive")

    surv = 1.0
    cif = 0.0
    n_at_risk = times.size
    for t in np.unique(times):
        at_t = times == t
        d_event = int((at_t & (status == STATUS_EVENT)).sum())
        d_comp = int((at_t & (status == STATUS_COMPETING)).sum())
        d_all = d_event + d_comp
        if d_all:
            cif += surv * d_event / n_at_risk
            surv *= 1.0 - d_all / n_at_risk
        n_at_risk -= int(at_t.sum())
    return cif


def _analysis_times(sample: AnalyticSample):
    obs = sample.obs
    members = sample.members
    end_week = obs.cohort.observed_end_week[members]
    censored = obs.censored[members]

    times = np.where(censored,
                     obs.censor_week[members] - CENSOR_TIME_OFFSET,
                     end_week - EVENT_TIME_OFFSET).astype(float)
    times[censored & (times == 0.0)] = ZERO_CENSOR_TIME

    status = np.full(members.size, STATUS_COMPETING, dtype=np.int8)
    status[obs.observed_has_pe[members]] = STATUS_EVENT
    status[censored] = STATUS_CENSORED
    return times, status


def estimate_primary(sample: AnalyticSample):
    """Standardized per-arm preeclampsia risks for one analytic sample."""
    treated = sample.treated
    strata = sample.strata
    if sample.kind in (SampleKind.DELIVERIES, SampleKind.OUTCOMES):
        pe = sample.obs.observed_has_pe[sample.members]
        risks = stratum_risks_proportion(strata, treated, pe)
    else:
        times, status = _analysis_times(sample)
        risks = np.empty((2, N_STRATA))
        for arm, arm_mask in ((UNTREATED, ~treated), (TREATED, treated)):
            for s in range(N_STRATA):
                cell = arm_mask & (strata == s)
                if not cell.any():
                    raise EstimationError(
                        f"empty stratum: arm={arm} severity={s // 2} rural={s % 2}")
                risks[arm, s] = aalen_johansen_cif(times[cell], status[cell])
    r0, r1 = standardize(risks, sample.weights)
    return EffectEstimate(sample.kind.value, risk_treated=r1, risk_untreated=r0)


def bounds(sample: AnalyticSample):
    """Four-imputation bounds; requires the pregnancies sample."""
    if sample.kind is not SampleKind.PREGNANCIES:
        raise EstimationError("bounds are defined on the pregnancies sample")
    treated = sample.treated
    strata = sample.strata
    pe = sample.obs.observed_has_pe[sample.members]
    censored = sample.obs.censored[sample.members]

    def est(label, impute_mask):
        risks = stratum_risks_proportion(strata, treated, pe,
                                         extra_event=impute_mask)
        r0, r1 = standardize(risks, sample.weights)
        return EffectEstimate(label, risk_treated=r1, risk_untreated=r0)

    none = np.zeros_like(censored)
    return BoundsSet(
        all_event=est("bound_all_event", censored),
        treated_only_event=est("bound_treated_only_event", censored & treated),
        untreated_only_event=est("bound_untreated_only_event",
                                 censored & ~treated),
        none_event=est("bound_none_event", none))


def truth(cohort: Cohort):
    """Counterfactual per-arm preeclampsia risks over every pregnancy."""
    has_pe = cohort.pe_week >= 0
    return TruthRecord(risk_treated=float(has_pe[TREATED].mean()),
                       risk_untreated=float(has_pe[UNTREATED].mean()))


def bias(estimate, true: TruthRecord):
    if (estimate.risk_untreated <= 0 or estimate.risk_treated <= 0
            or true.risk_untreated <= 0 or true.risk_treated <= 0):
        raise EstimationError("risk ratio must be positive to take logs")
    return BiasRecord(
        bias_risk_treated=100.0 * (estimate.risk_treated - true.risk_treated),
        bias_risk_untreated=100.0 * (estimate.risk_untreated
                                     - true.risk_untreated),
        bias_rd=100.0 * (estimate.rd - true.rd),
        bias_log_rr=math.log(estimate.rr) - math.log(true.rr))
