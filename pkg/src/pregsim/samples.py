"""Analytic samples drawn from the study sample.

Three nested samples, each with its own standardization weights (the
joint severity-by-rurality distribution of the sample itself, arms
pooled):

* pregnancies: every pregnancy, censored or not (competing-risks
  estimation handles the censoring);
* outcomes: pregnancies whose end was observed;
* deliveries: observed ends that were not miscarriages.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .missingness import ObservedCohort

N_STRATA = 6  # severity (3) x rural (2)


class SampleError(RuntimeError):
    pass


class SampleKind(enum.Enum):
    DELIVERIES = "deliveries"
    OUTCOMES = "outcomes"
    PREGNANCIES = "pregnancies"


def stratum_index(severity, rural):
    """Cell index 0..5 for (severity, rural)."""
    return np.asarray(severity, dtype=np.intp) * 2 + np.asarray(rural,
                                                                dtype=np.intp)


@dataclass
class AnalyticSample:
    kind: SampleKind
    obs: ObservedCohort
    members: np.ndarray   # pregnancy indices, ascending
    weights: np.ndarray   # (6,) standardization weights, sum to 1

    @property
    def n(self):
        return self.members.size

    @property
    def strata(self):
        c = self.obs.cohort
        return stratum_index(c.severity[self.members], c.rural[self.members])

    @property
    def treated(self):
        return self.obs.cohort.treated[self.members]


def membership_mask(obs: ObservedCohort, kind: SampleKind):
    if kind is SampleKind.PREGNANCIES:
        return np.ones(obs.n, dtype=bool)
    uncensored = ~obs.censored
    if kind is SampleKind.OUTCOMES:
        return uncensored
    if kind is SampleKind.DELIVERIES:
        return uncensored & ~obs.cohort.observed_miscarriage
    raise SampleError(f"unknown sample kind {kind!r}")


def build_analytic_sample(obs: ObservedCohort, kind: SampleKind):
    members = np.nonzero(membership_mask(obs, kind))[0]
    if not members.size:
        raise SampleError(f"analytic sample {kind.value!r} is empty")
    c = obs.cohort
    counts = np.bincount(stratum_index(c.severity[members], c.rural[members]),
                         minlength=N_STRATA)
    return AnalyticSample(kind, obs, members, counts / counts.sum())


def analytic_sample_report(sample: AnalyticSample):
    """Descriptive row: size and observed preeclampsia events by arm."""
    treated = sample.treated
    pe = sample.obs.observed_has_pe[sample.members]
    return {
        "sample": sample.kind.value,
        "pregnancies": int(sample.n),
        "initiators": int(treated.sum()),
        "non_initiators": int((~treated).sum()),
        "pe_initiators": int((pe & treated).sum()),
        "pe_non_initiators": int((pe & ~treated).sum()),
    }
