import pytest
from hypothesis import given, strategies as st

from pregsim.config import (
    MISSINGNESS_SPECS,
    TREATMENT_EFFECTS,
    ConfigurationError,
    MiscarriageEffect,
    MissingnessSpec,
    PreeclampsiaEffect,
    RunConfig,
    balancing_intercept,
    build_scenario_matrix,
    expit,
    load_schedules,
    weekly_from_marginal,
)


class TestScenarioMatrix:
    def test_exactly_36_unique(self, sched):
        specs = build_scenario_matrix(sched)
        assert len(specs) == 36
        assert sorted(s.id for s in specs) == list(range(1, 37))
        pairs = {(s.te_index, s.miss_index) for s in specs}
        assert pairs == {(t, m) for t in range(6) for m in range(6)}

    def test_one_null_null_with_20pct_miscarriage(self, sched):
        hits = [s for s in build_scenario_matrix(sched)
                if s.treatment_effect.miscarriage is MiscarriageEffect.NULL
                and s.treatment_effect.preeclampsia is PreeclampsiaEffect.NULL
                and s.missingness.target_measured_pct == 0
                and s.missingness.target_miscarriage_pct == 0.20]
        assert len(hits) == 1

    def test_increase_miscarriage_covers_12(self, sched):
        hits = [s for s in build_scenario_matrix(sched)
                if s.treatment_effect.miscarriage is MiscarriageEffect.INCREASE]
        assert len(hits) == 12

    def test_null_null_coefficients_zero(self):
        te = TREATMENT_EFFECTS[3]
        assert te.miscarriage is MiscarriageEffect.NULL
        assert te.preeclampsia is PreeclampsiaEffect.NULL
        assert te.beta_treatment == (0.0, 0.0, 0.0)
        assert te.gamma_treatment == (0.0, 0.0, 0.0)

    def test_missingness_designs(self):
        totals = sorted(round(m.total_target, 3) for m in MISSINGNESS_SPECS)
        assert totals == [0.05] * 3 + [0.20] * 3


class TestConversions:
    def test_weekly_from_marginal_frozen_values(self):
        assert weekly_from_marginal(0.20, 34) == pytest.approx(0.006542, abs=5e-7)
        assert weekly_from_marginal(0.05, 34) == pytest.approx(0.0015075, abs=5e-7)

    def test_balancing_intercept_frozen_value(self):
        assert balancing_intercept(0.98) == pytest.approx(3.8918, abs=5e-5)

    def test_marginal_inflation(self):
        assert MissingnessSpec(0.0, 0.20).miscarriage_marginal == pytest.approx(0.98)
        # inflation clamps just below 1 for extreme configurations
        assert MissingnessSpec(0.0, 0.25).miscarriage_marginal == 0.999

    def test_domain_errors(self):
        with pytest.raises(ConfigurationError):
            weekly_from_marginal(1.0, 34)
        with pytest.raises(ConfigurationError):
            weekly_from_marginal(-0.1, 34)
        with pytest.raises(ConfigurationError):
            balancing_intercept(0.0)

    @given(st.floats(1e-9, 1 - 1e-9))
    def test_balancing_round_trip(self, p):
        assert expit(balancing_intercept(p)) == pytest.approx(p, rel=1e-9)

    @given(st.floats(1e-6, 0.999), st.floats(1e-6, 0.999))
    def test_weekly_monotone_in_marginal(self, a, b):
        lo, hi = sorted((a, b))
        assert weekly_from_marginal(lo, 34) <= weekly_from_marginal(hi, 34)

    @given(st.floats(1e-6, 0.999), st.integers(1, 60), st.integers(1, 60))
    def test_weekly_decreasing_in_weeks(self, p, n1, n2):
        lo, hi = sorted((n1, n2))
        assert weekly_from_marginal(p, hi) <= weekly_from_marginal(p, lo)

    @given(st.floats(1e-6, 0.999), st.integers(1, 60))
    def test_weekly_round_trip(self, p, n):
        w = weekly_from_marginal(p, n)
        assert 1 - (1 - w) ** n == pytest.approx(p, rel=1e-9, abs=1e-12)


class TestSchedules:
    def test_default_schedules_load_and_validate(self, sched):
        assert sched.fd_base.shape == (34,)
        assert sched.pe_base.shape == (24,)
        assert sched.lb_prob[-1] + sched.fd_base[-1] == 1.0
        assert sched.delta1 < 0

    def test_schedule_file_round_trip(self, tmp_path, sched):
        import importlib.resources as resources

        text = resources.files("pregsim").joinpath(
            "data/default_schedules.yaml").read_text()
        path = tmp_path / "sched.yaml"
        path.write_text(text.replace("lambda1: 0.182321556794",
                                     "lambda1: 0.25"))
        loaded = load_schedules(path)
        assert loaded.lambda1 == 0.25
        assert loaded.fd_base == pytest.approx(sched.fd_base)

    def test_invalid_week40_rejected(self, tmp_path):
        import importlib.resources as resources

        text = resources.files("pregsim").joinpath(
            "data/default_schedules.yaml").read_text()
        path = tmp_path / "sched.yaml"
        assert "delta1: -0.223143551314" in text
        path.write_text(text.replace("delta1: -0.223143551314", "delta1: 0.1"))
        with pytest.raises(ConfigurationError):
            load_schedules(path)


class TestRunConfig:
    def test_defaults_valid(self):
        run = RunConfig()
        assert run.n_pregnancies == 200_000
        assert run.validate() is run

    def test_rejections(self):
        with pytest.raises(ConfigurationError):
            RunConfig(n_pregnancies=0)
        with pytest.raises(ConfigurationError):
            RunConfig(scenario_filter=[0, 5])
        with pytest.raises(ConfigurationError):
            RunConfig(out_format="xml")
        with pytest.raises(ConfigurationError):
            RunConfig(threads=0)
