"""Target-population generation: covariates, treatment, potential outcomes.

Each pregnancy gets a full potential trajectory under both treatment arms
(initiation at the index encounter versus no initiation) plus a prenatal
encounter schedule. Both arms consume the same uniform draw per (pregnancy,
week, event type), i.e. common random numbers, so the true risk contrast is
computed with minimal Monte Carlo noise.

Weekly event models (conception weeks, events observed the week after):

* fetal death: exp-link, covariate and treatment terms apply only before
  week 16, baseline-only afterwards;
* live birth: baseline weekly probability from week 21, shared by all
  covariate groups, forced to close out the pregnancy at week 40;
* preeclampsia: logit-link from week 17; a preeclampsia event at or before
  the first natural pregnancy end overrides it, and the pregnancy then ends
  the same week with fetal death probability 2.5x the baseline hazard;
* encounters: exp-link weekly probability by severity, week 7 certain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _rng
from .config import (
    ENC_FIRST_WEEK,
    FD_COVARIATE_CUTOFF,
    FIRST_WEEK,
    LAST_WEEK,
    MISCARRIAGE_LAST_EVENT_WEEK,
    N_ENC_WEEKS,
    N_PE_WEEKS,
    N_WEEKS,
    PE_FIRST_WEEK,
    CoefficientSchedules,
    ScenarioSpec,
    TreatmentEffectSpec,
    expit,
)

SEVERITY_PROBS = (1 / 3, 1 / 3, 1 / 3)
P_RURAL = 0.30
# P(initiate | severity): confounding by indication.
P_TREAT_BY_SEVERITY = (0.25, 0.50, 0.75)

UNTREATED, TREATED = 0, 1


class DomainError(ValueError):
    """Argument outside the model's week range."""


# ---------------------------------------------------------------------------
# Weekly probability models


def miscarriage_prob(week, severity, rural, treated, te: TreatmentEffectSpec,
                     sched: CoefficientSchedules):
    """Weekly fetal-death probability at a conception week.

    Covariate and treatment multipliers apply only for weeks < 16; from week
    16 on the baseline hazard is used for everyone. Clamped to [0, 1].
    """
    if not FIRST_WEEK <= week <= LAST_WEEK:
        raise DomainError(f"week {week} outside {FIRST_WEEK}..{LAST_WEEK}")
    base = sched.fd_base[week - FIRST_WEEK]
    if week >= FD_COVARIATE_CUTOFF:
        return float(base)
    log_p = np.log(base)
    if severity == 1:
        log_p += sched.beta1
    elif severity == 2:
        log_p += sched.beta2
    if treated:
        log_p += te.beta_treatment[severity]
    if rural:
        log_p += sched.beta6
    return float(min(np.exp(log_p), 1.0))


def preeclampsia_prob(week, severity, rural, treated, te: TreatmentEffectSpec,
                      sched: CoefficientSchedules):
    """Weekly preeclampsia probability; zero before week 17."""
    if week < FIRST_WEEK:
        raise DomainError(f"week {week} before cohort entry")
    if week < PE_FIRST_WEEK or week > LAST_WEEK:
        return 0.0
    base = sched.pe_base[week - PE_FIRST_WEEK]
    logit = np.log(base / (1.0 - base))
    if severity == 1:
        logit += sched.gamma1
    elif severity == 2:
        logit += sched.gamma2
    if treated:
        logit += te.gamma_treatment[severity]
    if rural:
        logit += sched.gamma6
    return float(expit(logit))


def pe_induced_fd_prob(week, sched: CoefficientSchedules):
    """Probability that a preeclampsia-induced pregnancy end is a fetal death.

    Multiplies the baseline (covariate-free) fetal-death hazard by
    exp(alpha0); clamped to 1.
    """
    if not PE_FIRST_WEEK <= week <= LAST_WEEK + 1:
        raise DomainError(f"week {week} outside preeclampsia window")
    base = sched.fd_base[min(week, LAST_WEEK) - FIRST_WEEK]
    return float(min(np.exp(np.log(base) + sched.alpha0), 1.0))


# ---------------------------------------------------------------------------
# Probability lookup tables (severity x rural x arm x week)


def _fd_table(te, sched):
    tab = np.empty((3, 2, 2, N_WEEKS))
    for s in range(3):
        for r in range(2):
            for a in range(2):
                tab[s, r, a] = [
                    miscarriage_prob(w, s, bool(r), bool(a), te, sched)
                    for w in range(FIRST_WEEK, LAST_WEEK + 1)
                ]
    return tab


def _pe_table(te, sched):
    tab = np.empty((3, 2, 2, N_PE_WEEKS))
    for s in range(3):
        for r in range(2):
            for a in range(2):
                tab[s, r, a] = [
                    preeclampsia_prob(w, s, bool(r), bool(a), te, sched)
                    for w in range(PE_FIRST_WEEK, LAST_WEEK + 1)
                ]
    return tab


def _pe_fd_table(sched):
    return np.array([pe_induced_fd_prob(w, sched)
                     for w in range(PE_FIRST_WEEK, LAST_WEEK + 1)])


def _enc_table(sched):
    """min(1, exp(lambda0 + severity term)) per severity, weeks 8..40."""
    mult = np.array([1.0, np.exp(sched.lambda1), np.exp(sched.lambda2)])
    raw = mult[:, None] * sched.enc_base[None, :]
    return np.minimum(raw, 1.0), int(np.sum(raw > 1.0))


# ---------------------------------------------------------------------------
# Scalar operations (single pregnancy; the vectorized cohort path below is
# the production route, these are the unit-testable building blocks)


@dataclass
class PotentialTrajectory:
    """Resolved pregnancy course under one treatment arm."""

    arm: int                      # UNTREATED or TREATED
    pregnancy_end_week: int       # conception week of the end event
    end_is_fetal_death: bool
    preeclampsia_week: int | None
    pe_induced: bool

    @property
    def is_miscarriage(self):
        return (self.end_is_fetal_death
                and self.pregnancy_end_week <= MISCARRIAGE_LAST_EVENT_WEEK)

    @property
    def observed_lmp_week(self):
        """Gestational age (LMP weeks) when the end event is observed."""
        return self.pregnancy_end_week + 3


def draw_baseline(rng):
    """Severity (0/1/2), rurality, and confounded treatment assignment."""
    u = rng.random(3)
    severity = int(np.digitize(u[0], (1 / 3, 2 / 3)))
    rural = bool(u[1] < P_RURAL)
    treated = bool(u[2] < P_TREAT_BY_SEVERITY[severity])
    return severity, rural, treated


def simulate_arm_trajectory(severity, rural, arm, te, sched, rng):
    """Walk one arm week by week and resolve the final outcome.

    Scans for the first natural pregnancy end and the first preeclampsia
    event; a preeclampsia event at or before the first natural end wins and
    the pregnancy ends that week via the preeclampsia-induced draw.
    """
    nat_week, nat_fd = None, None
    pe_week, pe_fd = None, None
    for w in range(FIRST_WEEK, LAST_WEEK + 1):
        p_fd = miscarriage_prob(w, severity, rural, arm == TREATED, te, sched)
        p_lb = sched.lb_prob[w - FIRST_WEEK]
        u = rng.random()
        if nat_week is None:
            if u < p_fd:
                nat_week, nat_fd = w, True
            elif u < p_fd + p_lb:
                nat_week, nat_fd = w, False
        p_pe = preeclampsia_prob(w, severity, rural, arm == TREATED, te, sched)
        if p_pe > 0:
            u_pe = rng.random()
            u_ind = rng.random()
            if pe_week is None and u_pe < p_pe:
                pe_week = w
                pe_fd = u_ind < pe_induced_fd_prob(w, sched)
        if nat_week is not None or pe_week is not None:
            break
    if pe_week is not None and (nat_week is None or pe_week <= nat_week):
        return PotentialTrajectory(arm, pe_week, pe_fd, pe_week, True)
    return PotentialTrajectory(arm, nat_week, nat_fd, None, False)


def generate_encounters(severity, sched, rng):
    """Sorted conception weeks with a prenatal encounter; week 7 is certain."""
    tab, _ = _enc_table(sched)
    u = rng.random(N_ENC_WEEKS)
    weeks = [FIRST_WEEK]
    weeks += [ENC_FIRST_WEEK + i for i in np.nonzero(u < tab[severity])[0]]
    return weeks


# ---------------------------------------------------------------------------
# Exact outcome distribution (forward recursion, no Monte Carlo)


def expected_outcome_probs(severity, rural, arm, te, sched):
    """Exact end-of-followup outcome probabilities for one covariate cell.

    Returns a dict with miscarriage / stillbirth / live_birth /
    preeclampsia probabilities implied by the weekly models. Serves as the
    analytic oracle for the simulated trajectories and as the calibration
    target function for schedule fitting.
    """
    pe_fd = _pe_fd_table(sched)
    surviving = 1.0
    out = {"miscarriage": 0.0, "stillbirth": 0.0, "live_birth": 0.0,
           "preeclampsia": 0.0}
    for w in range(FIRST_WEEK, LAST_WEEK + 1):
        p_pe = preeclampsia_prob(w, severity, rural, arm == TREATED, te, sched)
        p_fd = miscarriage_prob(w, severity, rural, arm == TREATED, te, sched)
        p_lb = sched.lb_prob[w - FIRST_WEEK]
        if p_pe > 0:
            hit = surviving * p_pe
            out["preeclampsia"] += hit
            r = pe_fd[w - PE_FIRST_WEEK]
            out["stillbirth"] += hit * r          # w >= 17: never a miscarriage
            out["live_birth"] += hit * (1.0 - r)
            surviving *= 1.0 - p_pe
        nat_end = surviving * (p_fd + p_lb)
        if w <= MISCARRIAGE_LAST_EVENT_WEEK:
            out["miscarriage"] += surviving * p_fd
        else:
            out["stillbirth"] += surviving * p_fd
        out["live_birth"] += surviving * p_lb
        surviving -= nat_end
    assert surviving < 1e-12
    return out


# ---------------------------------------------------------------------------
# Cohort generation (vectorized, chunked, order-independent)


@dataclass
class Cohort:
    """Structure-of-arrays target population.

    Per-arm arrays have shape (2, n) indexed by UNTREATED / TREATED.
    ``pe_week`` is -1 where no prenatal preeclampsia occurred. ``encounters``
    is a boolean matrix over conception weeks 7..40 (column 0 = week 7).
    """

    severity: np.ndarray
    rural: np.ndarray
    treated: np.ndarray
    end_week: np.ndarray
    end_fd: np.ndarray
    pe_week: np.ndarray
    pe_induced: np.ndarray
    encounters: np.ndarray
    clamped_cells: int = 0

    @property
    def n(self):
        return self.severity.shape[0]

    @property
    def observed_arm(self):
        return self.treated.astype(np.intp)

    def _observed(self, per_arm):
        return per_arm[self.observed_arm, np.arange(self.n)]

    @property
    def observed_end_week(self):
        return self._observed(self.end_week)

    @property
    def observed_end_fd(self):
        return self._observed(self.end_fd)

    @property
    def observed_pe_week(self):
        return self._observed(self.pe_week)

    @property
    def observed_has_pe(self):
        return self.observed_pe_week >= 0

    @property
    def observed_miscarriage(self):
        return self.observed_end_fd & (self.observed_end_week
                                       <= MISCARRIAGE_LAST_EVENT_WEEK)

    def miscarriage_mask(self, arm):
        return self.end_fd[arm] & (self.end_week[arm]
                                   <= MISCARRIAGE_LAST_EVENT_WEEK)

    def last_encounter_at_or_before(self, cutoff_weeks):
        """Most recent encounter week <= cutoff, per pregnancy (>= week 7)."""
        weeks = np.arange(FIRST_WEEK, LAST_WEEK + 1)
        eligible = self.encounters & (weeks[None, :] <= np.asarray(cutoff_weeks)[:, None])
        return np.where(eligible, weeks[None, :], 0).max(axis=1).astype(np.int16)


def _resolve_arm(u_preg, u_pe, u_pei, fd_p, pe_p, lb_p, pe_fd_p):
    """Vectorized version of :func:`simulate_arm_trajectory` for one arm."""
    m = u_preg.shape[0]
    rows = np.arange(m)
    end_mask = u_preg < fd_p + lb_p[None, :]
    nat_idx = end_mask.argmax(axis=1)            # week 40 always ends
    nat_week = FIRST_WEEK + nat_idx
    nat_fd = u_preg[rows, nat_idx] < fd_p[rows, nat_idx]
    pe_mask = u_pe < pe_p
    pe_any = pe_mask.any(axis=1)
    pe_idx = pe_mask.argmax(axis=1)
    pe_week = PE_FIRST_WEEK + pe_idx
    hit = pe_any & (pe_week <= nat_week)
    end_week = np.where(hit, pe_week, nat_week).astype(np.int16)
    end_fd = np.where(hit, u_pei[rows, pe_idx] < pe_fd_p[pe_idx], nat_fd)
    pe_week_out = np.where(hit, pe_week, -1).astype(np.int16)
    return end_week, end_fd, pe_week_out, hit


def generate_cohort(run, scenario: ScenarioSpec | int, sched: CoefficientSchedules,
                    n=None):
    """Generate the full target population for one treatment-effect setting.

    Deterministic given (master_seed, treatment effect, replicate_id); the
    six missingness designs that share a treatment effect therefore share
    one cohort, which also makes the true effect invariant across them.
    """
    te_index = scenario.te_index if isinstance(scenario, ScenarioSpec) else int(scenario)
    from .config import TREATMENT_EFFECTS
    te = TREATMENT_EFFECTS[te_index]
    n = run.n_pregnancies if n is None else n
    seed, rep = run.master_seed, run.replicate_id

    fd_raw = _fd_table(te, sched)
    pe_tab = _pe_table(te, sched)
    pe_fd_raw = np.exp(np.log(sched.fd_base[PE_FIRST_WEEK - FIRST_WEEK:])
                       + sched.alpha0)
    enc_tab, enc_clamped = _enc_table(sched)
    clamped = enc_clamped + int(np.sum(fd_raw > 1)) + int(np.sum(pe_fd_raw > 1))
    fd_tab = np.minimum(fd_raw, 1.0)
    pe_fd_tab = np.minimum(pe_fd_raw, 1.0)

    severity = np.empty(n, dtype=np.int8)
    rural = np.empty(n, dtype=bool)
    treated = np.empty(n, dtype=bool)
    end_week = np.empty((2, n), dtype=np.int16)
    end_fd = np.empty((2, n), dtype=bool)
    pe_week = np.empty((2, n), dtype=np.int16)
    pe_induced = np.empty((2, n), dtype=bool)
    encounters = np.empty((n, N_WEEKS), dtype=bool)
    treat_p = np.asarray(P_TREAT_BY_SEVERITY)

    for lo, hi in _rng.chunk_bounds(n):
        sl = slice(lo, hi)
        u_base = _rng.uniforms(seed, te_index, rep, _rng.BASELINE, lo, hi, 3)
        sev = np.digitize(u_base[:, 0], (1 / 3, 2 / 3)).astype(np.int8)
        rur = u_base[:, 1] < P_RURAL
        severity[sl] = sev
        rural[sl] = rur
        treated[sl] = u_base[:, 2] < treat_p[sev]

        u_preg = _rng.uniforms(seed, te_index, rep, _rng.PREGNANCY, lo, hi, N_WEEKS)
        u_pe = _rng.uniforms(seed, te_index, rep, _rng.PREECLAMPSIA, lo, hi, N_PE_WEEKS)
        u_pei = _rng.uniforms(seed, te_index, rep, _rng.PE_OUTCOME, lo, hi, N_PE_WEEKS)
        ri = rur.astype(np.intp)
        for arm in (UNTREATED, TREATED):
            ew, efd, pw, hit = _resolve_arm(
                u_preg, u_pe, u_pei,
                fd_tab[sev, ri, arm], pe_tab[sev, ri, arm],
                sched.lb_prob, pe_fd_tab)
            end_week[arm, sl] = ew
            end_fd[arm, sl] = efd
            pe_week[arm, sl] = pw
            pe_induced[arm, sl] = hit

        u_enc = _rng.uniforms(seed, te_index, rep, _rng.ENCOUNTERS, lo, hi, N_ENC_WEEKS)
        encounters[sl, 0] = True
        encounters[sl, 1:] = u_enc < enc_tab[sev]

    return Cohort(severity, rural, treated, end_week, end_fd, pe_week,
                  pe_induced, encounters, clamped_cells=clamped)


def cohort_dump_rows(cohort):
    """Per-pregnancy debug rows (id, covariates, both arms, encounters)."""
    weeks = np.arange(FIRST_WEEK, LAST_WEEK + 1)
    for i in range(cohort.n):
        enc = ";".join(str(w) for w in weeks[cohort.encounters[i]])
        yield {
            "id": i,
            "severity": int(cohort.severity[i]),
            "rural": int(cohort.rural[i]),
            "treated": int(cohort.treated[i]),
            "untreated_end_week": int(cohort.end_week[0, i]),
            "untreated_fetal_death": int(cohort.end_fd[0, i]),
            "untreated_pe_week": int(cohort.pe_week[0, i]),
            "treated_end_week": int(cohort.end_week[1, i]),
            "treated_fetal_death": int(cohort.end_fd[1, i]),
            "treated_pe_week": int(cohort.pe_week[1, i]),
            "encounter_weeks": enc,
        }
