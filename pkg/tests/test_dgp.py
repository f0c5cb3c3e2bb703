import math

import numpy as np
import pytest

import pregsim
from pregsim.config import TREATMENT_EFFECTS
from pregsim.dgp import (
    DomainError,
    TREATED,
    UNTREATED,
    expected_outcome_probs,
    miscarriage_prob,
    pe_induced_fd_prob,
    preeclampsia_prob,
)

TE_NULL = TREATMENT_EFFECTS[3]       # no effect on either outcome
TE_INC = TREATMENT_EFFECTS[5]        # increases miscarriage, no PE effect


class TestWeeklyModels:
    def test_no_preeclampsia_before_week_17(self, sched):
        for week in range(7, 17):
            assert preeclampsia_prob(week, 2, True, TREATED, TE_NULL, sched) == 0.0

    def test_fetal_death_covariates_stop_at_week_16(self, sched):
        base = sched.fd_base[16 - 7]
        assert miscarriage_prob(16, 2, True, TREATED, TE_INC, sched) == pytest.approx(base)
        assert miscarriage_prob(15, 0, False, UNTREATED, TE_NULL, sched) == pytest.approx(
            sched.fd_base[15 - 7])

    def test_severity_and_rural_multipliers(self, sched):
        base = sched.fd_base[10 - 7]
        assert miscarriage_prob(10, 1, False, UNTREATED, TE_NULL, sched) == pytest.approx(2 * base)
        assert miscarriage_prob(10, 2, False, UNTREATED, TE_NULL, sched) == pytest.approx(3 * base)
        assert miscarriage_prob(10, 0, True, UNTREATED, TE_NULL, sched) == pytest.approx(1.5 * base)

    def test_treatment_multiplier_five_for_low_severity(self, sched):
        base = sched.fd_base[9 - 7]
        assert miscarriage_prob(9, 0, False, TREATED, TE_INC, sched) == pytest.approx(5 * base)

    def test_pe_induced_multiplier(self, sched):
        for week in (17, 25, 40):
            expected = min(1.0, 2.5 * sched.fd_base[week - 7])
            assert pe_induced_fd_prob(week, sched) == pytest.approx(expected)

    def test_week_domain_errors(self, sched):
        with pytest.raises(DomainError):
            miscarriage_prob(6, 0, False, UNTREATED, TE_NULL, sched)
        with pytest.raises(DomainError):
            preeclampsia_prob(6, 0, False, UNTREATED, TE_NULL, sched)
        assert preeclampsia_prob(41, 0, False, UNTREATED, TE_NULL, sched) == 0.0


class TestExpectedOutcomeProbs:
    def test_outcome_kinds_partition(self, sched):
        for s in range(3):
            for arm in (UNTREATED, TREATED):
                p = expected_outcome_probs(s, False, arm, TE_INC, sched)
                total = p["miscarriage"] + p["stillbirth"] + p["live_birth"]
                assert total == pytest.approx(1.0, abs=1e-12)
                assert 0 <= p["preeclampsia"] <= 1

    def test_miscarriage_monotone_in_severity(self, sched):
        risks = [expected_outcome_probs(s, False, UNTREATED, TE_NULL, sched)["miscarriage"]
                 for s in range(3)]
        assert risks[0] < risks[1] < risks[2]

    def test_rural_increases_miscarriage(self, sched):
        lo = expected_outcome_probs(1, False, UNTREATED, TE_NULL, sched)["miscarriage"]
        hi = expected_outcome_probs(1, True, UNTREATED, TE_NULL, sched)["miscarriage"]
        assert hi > lo

    def test_null_effect_arms_identical(self, sched):
        pt = expected_outcome_probs(1, True, TREATED, TE_NULL, sched)
        pu = expected_outcome_probs(1, True, UNTREATED, TE_NULL, sched)
        assert pt == pytest.approx(pu)


class TestCohort:
    def test_empirical_frequencies_match_recursion(self, run_small, sched, cohort_small):
        """Simulated outcome frequencies agree with the exact forward recursion."""
        c = cohort_small
        for s in (0, 2):
            for arm in (UNTREATED, TREATED):
                mask = (c.severity == s) & ~c.rural
                n = int(mask.sum())
                expected = expected_outcome_probs(s, False, arm, TE_NULL, sched)
                mis = float(c.miscarriage_mask(arm)[mask].mean())
                pe = float((c.pe_week[arm][mask] >= 0).mean())
                tol = 4 * math.sqrt(0.25 / n)
                assert mis == pytest.approx(expected["miscarriage"], abs=tol)
                assert pe == pytest.approx(expected["preeclampsia"], abs=tol)

    def test_confounding_monotone(self, cohort_small):
        p_treat = [float(cohort_small.treated[cohort_small.severity == s].mean())
                   for s in range(3)]
        assert p_treat[0] < p_treat[1] < p_treat[2]
        assert p_treat == pytest.approx([0.25, 0.50, 0.75], abs=0.03)

    def test_rural_share(self, cohort_small):
        assert float(cohort_small.rural.mean()) == pytest.approx(0.30, abs=0.02)

    def test_no_pe_induced_miscarriage(self, run_small, sched):
        c = pregsim.generate_cohort(run_small, 5, sched)
        for arm in (UNTREATED, TREATED):
            induced = c.pe_induced[arm]
            # earliest possible induced end: week 17, observed at LMP week 20
            assert (c.end_week[arm][induced] + 3).min() >= 20
            mis = c.miscarriage_mask(arm)
            assert not (mis & induced).any()

    def test_pe_week_equals_end_week_when_pe(self, cohort_small):
        for arm in (UNTREATED, TREATED):
            has = cohort_small.pe_week[arm] >= 0
            assert np.array_equal(cohort_small.pe_week[arm][has],
                                  cohort_small.end_week[arm][has])

    def test_end_weeks_in_range(self, cohort_small):
        for arm in (UNTREATED, TREATED):
            assert cohort_small.end_week[arm].min() >= 7
            assert cohort_small.end_week[arm].max() <= 40

    def test_week7_encounter_certain(self, cohort_small):
        assert cohort_small.encounters[:, 0].all()

    def test_determinism_and_prefix_stability(self, run_small, sched):
        a = pregsim.generate_cohort(run_small, 3, sched, n=1_000)
        b = pregsim.generate_cohort(run_small, 3, sched, n=2_000)
        assert np.array_equal(a.severity, b.severity[:1_000])
        assert np.array_equal(a.end_week, b.end_week[:, :1_000])
        assert np.array_equal(a.encounters, b.encounters[:1_000])
        again = pregsim.generate_cohort(run_small, 3, sched, n=1_000)
        assert np.array_equal(a.end_week, again.end_week)
        assert np.array_equal(a.pe_week, again.pe_week)

    def test_truth_invariant_across_missingness(self, run_small, sched):
        """The cohort depends only on the treatment effect, so every
        missingness design sees the same truth."""
        from pregsim.estimators import truth

        t1 = truth(pregsim.generate_cohort(run_small, 5, sched, n=5_000))
        t2 = truth(pregsim.generate_cohort(run_small, 5, sched, n=5_000))
        assert t1 == t2
