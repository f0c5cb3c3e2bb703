import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import pregsim
from pregsim.config import MISSINGNESS_SPECS
from pregsim.estimators import (
    EffectEstimate,
    EstimationError,
    TruthRecord,
    aalen_johansen_cif,
    bias,
    bounds,
    estimate_primary,
    standardize,
    stratum_risks_proportion,
    truth,
)
from pregsim.missingness import apply_missingness, calibrate
from pregsim.samples import SampleKind, build_analytic_sample, stratum_index


class TestAalenJohansen:
    def test_hand_checked_example(self):
        """times {3:event, 2:competing, 1:censored, 4:event, 5:competing}.

        Walk: censor at 1 (n 5->4); competing at 2 (S 3/4); event at 3
        (CIF += 3/4 * 1/3 = 1/4, S 1/2); event at 4 (CIF += 1/2 * 1/2
        = 1/4); competing at 5. CIF = 1/2.
        """
        assert aalen_johansen_cif([3, 2, 1, 4, 5], [1, 2, 0, 1, 2]) == pytest.approx(0.5)

    def test_events_precede_censorings_at_ties(self):
        # the pregnancy censored at t=1 is still at risk for the t=1 event
        assert aalen_johansen_cif([1, 1], [1, 0]) == pytest.approx(0.5)

    def test_no_events(self):
        assert aalen_johansen_cif([1, 2, 3], [0, 0, 0]) == 0.0

    def test_errors(self):
        with pytest.raises(EstimationError):
            aalen_johansen_cif([], [])
        with pytest.raises(EstimationError):
            aalen_johansen_cif([0.0, 1.0], [1, 1])

    @given(st.lists(st.tuples(st.integers(1, 20), st.integers(0, 2)),
                    min_size=1, max_size=40))
    def test_censor_free_equals_proportion(self, data):
        times = [t for t, _ in data]
        status = [1 + (s % 2) for _, s in data]  # no censoring
        cif = aalen_johansen_cif(times, status)
        assert cif == pytest.approx(np.mean(np.array(status) == 1), abs=1e-12)

    @given(st.lists(st.tuples(st.integers(1, 20), st.integers(0, 2)),
                    min_size=1, max_size=40))
    def test_cause_cifs_sum_to_all_cause_risk(self, data):
        times = np.array([t for t, _ in data], dtype=float)
        status = np.array([s for _, s in data])
        c1 = aalen_johansen_cif(times, status)
        swapped = status.copy()
        swapped[status == 1], swapped[status == 2] = 2, 1
        c2 = aalen_johansen_cif(times, swapped)
        both = np.where(status == 0, 0, 1)
        c_all = aalen_johansen_cif(times, both)
        assert c1 + c2 == pytest.approx(c_all, abs=1e-9)
        assert 0.0 <= c1 <= 1.0


class TestStandardization:
    def test_weighted_sum(self):
        risks = np.array([[0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
                          [0.2, 0.3, 0.4, 0.5, 0.6, 0.7]])
        w = np.array([0.5, 0.1, 0.1, 0.1, 0.1, 0.1])
        r0, r1 = standardize(risks, w)
        assert r0 == pytest.approx(0.1 * 0.5 + 0.1 * (0.2 + 0.3 + 0.4 + 0.5 + 0.6))
        assert r1 == pytest.approx(r0 + 0.1)

    def test_bad_weights(self):
        risks = np.zeros((2, 6))
        with pytest.raises(EstimationError):
            standardize(risks, np.full(6, 0.5))
        with pytest.raises(EstimationError):
            standardize(risks, np.full(5, 0.2))

    def test_empty_stratum_named(self):
        strata = np.zeros(10, dtype=int)
        treated = np.arange(10) < 5
        event = np.zeros(10, dtype=bool)
        with pytest.raises(EstimationError, match="severity=0 rural=1"):
            stratum_risks_proportion(strata, treated, event)


class TestBias:
    def test_rd_example(self):
        est = EffectEstimate("outcomes", risk_treated=0.375, risk_untreated=0.376)
        true = TruthRecord(risk_treated=0.270, risk_untreated=0.375)
        b = bias(est, true)
        assert b.bias_rd == pytest.approx(10.4, abs=1e-9)
        assert b.bias_risk_treated == pytest.approx(10.5, abs=1e-9)
        assert b.bias_risk_untreated == pytest.approx(0.1, abs=1e-9)

    def test_log_rr_example(self):
        est = EffectEstimate("outcomes", risk_treated=0.38, risk_untreated=1.0)
        true = TruthRecord(risk_treated=0.51, risk_untreated=1.0)
        assert bias(est, true).bias_log_rr == pytest.approx(
            math.log(0.38) - math.log(0.51))

    def test_zero_risk_rejected(self):
        est = EffectEstimate("outcomes", risk_treated=0.0, risk_untreated=0.5)
        true = TruthRecord(risk_treated=0.3, risk_untreated=0.3)
        with pytest.raises(EstimationError):
            bias(est, true)


@pytest.fixture(scope="module")
def desk(run_small, sched):
    """5,000-pregnancy cohort with 10%+10% missingness applied."""
    run = run_small.with_(n_pregnancies=5_000)
    cohort = pregsim.generate_cohort(run, 3, sched)
    spec = MISSINGNESS_SPECS[4]
    obs = apply_missingness(cohort, spec, calibrate(sched, spec, cohort),
                            run.master_seed, 3)
    return cohort, obs


class TestEstimatesAndBounds:
    def test_censor_free_samples_agree(self, run_small, sched):
        from pregsim.config import MissingnessSpec

        run = run_small.with_(n_pregnancies=5_000)
        cohort = pregsim.generate_cohort(run, 3, sched)
        spec = MissingnessSpec(0.0, 0.0)
        obs = apply_missingness(cohort, spec, calibrate(sched, spec, cohort),
                                run.master_seed, 3)
        ests = {k: estimate_primary(build_analytic_sample(obs, k))
                for k in (SampleKind.OUTCOMES, SampleKind.PREGNANCIES)}
        a, b_ = ests[SampleKind.OUTCOMES], ests[SampleKind.PREGNANCIES]
        assert a.risk_treated == pytest.approx(b_.risk_treated, abs=1e-12)
        assert a.risk_untreated == pytest.approx(b_.risk_untreated, abs=1e-12)

    def test_standardization_matches_brute_force(self, desk):
        cohort, obs = desk
        sample = build_analytic_sample(obs, SampleKind.OUTCOMES)
        est = estimate_primary(sample)
        strata = stratum_index(cohort.severity, cohort.rural)
        pe = obs.observed_has_pe
        for arm_val, got in ((True, est.risk_treated), (False, est.risk_untreated)):
            total = 0.0
            for s in range(6):
                num = den = 0
                for i in sample.members:
                    if bool(cohort.treated[i]) is arm_val and strata[i] == s:
                        den += 1
                        num += int(pe[i])
                total += sample.weights[s] * num / den
            assert got == pytest.approx(total, abs=1e-12)

    def test_bounds_match_brute_force_imputation(self, desk):
        cohort, obs = desk
        sample = build_analytic_sample(obs, SampleKind.PREGNANCIES)
        b = bounds(sample)
        strata = stratum_index(cohort.severity, cohort.rural)
        pe = obs.observed_has_pe

        def brute(rule):
            out = {}
            for arm_val in (False, True):
                total = 0.0
                for s in range(6):
                    num = den = 0
                    for i in sample.members:
                        if bool(cohort.treated[i]) is arm_val and strata[i] == s:
                            den += 1
                            if pe[i] or (obs.censored[i] and rule(i)):
                                num += 1
                    total += sample.weights[s] * num / den
                out[arm_val] = total
            return out

        for est, rule in ((b.all_event, lambda i: True),
                          (b.none_event, lambda i: False),
                          (b.treated_only_event, lambda i: bool(cohort.treated[i])),
                          (b.untreated_only_event, lambda i: not cohort.treated[i])):
            ref = brute(rule)
            assert est.risk_treated == pytest.approx(ref[True], abs=1e-12)
            assert est.risk_untreated == pytest.approx(ref[False], abs=1e-12)

    def test_bound_ordering(self, desk):
        _, obs = desk
        b = bounds(build_analytic_sample(obs, SampleKind.PREGNANCIES))
        assert b.all_event.risk_treated >= b.none_event.risk_treated
        assert b.all_event.risk_untreated >= b.none_event.risk_untreated

    def test_bounds_require_pregnancies_sample(self, desk):
        _, obs = desk
        with pytest.raises(EstimationError):
            bounds(build_analytic_sample(obs, SampleKind.OUTCOMES))

    def test_truth_uses_both_arms(self, desk):
        cohort, _ = desk
        t = truth(cohort)
        assert t.risk_treated == pytest.approx(
            float((cohort.pe_week[1] >= 0).mean()))
        assert t.risk_untreated == pytest.approx(
            float((cohort.pe_week[0] >= 0).mean()))
