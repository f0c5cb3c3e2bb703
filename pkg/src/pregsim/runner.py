"""Batch execution of the scenario matrix and on-disk outputs.

One run evaluates the configured scenarios (all 36 by default). Each
treatment effect's cohort is generated once and shared by its six
missingness designs. Per scenario the run produces seven result rows:
the three analytic-sample estimates plus the four bound imputations,
each with bias against the counterfactual truth from the same cohort.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import json
import pathlib
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import (RunConfig, ScenarioSpec, build_scenario_matrix,
                     default_schedules, load_schedules)
from .dgp import cohort_dump_rows, generate_cohort
from .estimators import (EstimationError, bias, bounds, estimate_primary,
                         truth)
from .missingness import apply_missingness, calibrate, study_sample_report
from .samples import SampleKind, analytic_sample_report, build_analytic_sample

RESULT_FIELDS = ("scenario", "treatment_effect", "missingness", "estimator",
                 "risk_treated", "risk_untreated", "rd", "rr",
                 "true_risk_treated", "true_risk_untreated", "true_rd",
                 "true_rr", "bias_risk_treated", "bias_risk_untreated",
                 "bias_rd", "bias_log_rr")


@dataclass
class ScenarioResult:
    scenario: ScenarioSpec
    rows: list = field(default_factory=list)
    study_rows: list = field(default_factory=list)
    sample_rows: list = field(default_factory=list)
    error: str | None = None
    seconds: float = 0.0


@dataclass
class RunResult:
    config: RunConfig
    scenarios: list           # ScenarioResult, in scenario-id order
    clamped_cells: int
    seconds: float

    @property
    def failed(self):
        return [s for s in self.scenarios if s.error]

    def result_rows(self):
        for s in self.scenarios:
            yield from s.rows


def _resolve_schedules(run: RunConfig):
    if run.config_path:
        return load_schedules(run.config_path)
    return default_schedules()


def evaluate_scenario(run, scenario, sched, cohort):
    """All estimates, bounds, and biases for one scenario."""
    t0 = time.perf_counter()
    res = ScenarioResult(scenario)
    params = calibrate(sched, scenario.missingness, cohort)
    obs = apply_missingness(cohort, scenario.missingness, params,
                            run.master_seed, scenario.te_index,
                            run.replicate_id)
    true = truth(cohort)

    def row(est):
        b = bias(est, true)
        return {
            "scenario": scenario.id,
            "treatment_effect": scenario.treatment_effect.label,
            "missingness": scenario.missingness.label,
            "estimator": est.sample,
            "risk_treated": est.risk_treated,
            "risk_untreated": est.risk_untreated,
            "rd": est.rd, "rr": est.rr,
            "true_risk_treated": true.risk_treated,
            "true_risk_untreated": true.risk_untreated,
            "true_rd": true.rd, "true_rr": true.rr,
            "bias_risk_treated": b.bias_risk_treated,
            "bias_risk_untreated": b.bias_risk_untreated,
            "bias_rd": b.bias_rd, "bias_log_rr": b.bias_log_rr,
        }

    for r in study_sample_report(obs):
        res.study_rows.append({"scenario": scenario.id, **r})

    preg_sample = None
    for kind in (SampleKind.DELIVERIES, SampleKind.OUTCOMES,
                 SampleKind.PREGNANCIES):
        sample = build_analytic_sample(obs, kind)
        if kind is SampleKind.PREGNANCIES:
            preg_sample = sample
        res.sample_rows.append({"scenario": scenario.id,
                                **analytic_sample_report(sample)})
        res.rows.append(row(estimate_primary(sample)))
    for est in bounds(preg_sample).as_dict().values():
        res.rows.append(row(est))
    res.seconds = time.perf_counter() - t0
    return res


def run_matrix(run: RunConfig, sched=None):
    """Execute the configured scenarios; deterministic for any thread count."""
    run.validate()
    t0 = time.perf_counter()
    sched = (sched or _resolve_schedules(run)).validate()
    scenarios = build_scenario_matrix(sched)
    if run.scenario_filter is not None:
        wanted = set(run.scenario_filter)
        unknown = wanted - {s.id for s in scenarios}
        if unknown:
            raise EstimationError(f"unknown scenario ids: {sorted(unknown)}")
        scenarios = [s for s in scenarios if s.id in wanted]

    cohorts = {}
    clamped = 0
    for ti in sorted({s.te_index for s in scenarios}):
        cohorts[ti] = generate_cohort(run, ti, sched)
        clamped += cohorts[ti].clamped_cells

    def work(scenario):
        try:
            return evaluate_scenario(run, scenario, sched,
                                     cohorts[scenario.te_index])
        except (EstimationError, ValueError) as exc:
            res = ScenarioResult(scenario)
            res.error = f"{type(exc).__name__}: {exc}"
            return res

    if run.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(run.threads) as pool:
            results = list(pool.map(work, scenarios))
    else:
        results = [work(s) for s in scenarios]
    results.sort(key=lambda r: r.scenario.id)
    return RunResult(run, results, clamped, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Output files


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return value


def _write_table(path, rows, fields, out_format):
    rows = list(rows)
    if out_format == "json":
        path = path.with_suffix(".json")
        data = [{k: (float(f"{v:.6g}") if isinstance(v, float) else v)
                 for k, v in r.items()} for r in rows]
        path.write_text(json.dumps(data, indent=1) + "\n")
    else:
        path = path.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
    return path


def _config_digest(run: RunConfig, sched):
    payload = json.dumps({
        "n": run.n_pregnancies, "seed": run.master_seed,
        "replicate": run.replicate_id,
        "scenarios": run.scenario_filter,
        "schedules": {
            "fd": sched.fd_base.tolist(), "pe": sched.pe_base.tolist(),
            "lb": sched.lb_prob.tolist(), "enc": sched.enc_base.tolist(),
            "coefs": [sched.beta1, sched.beta2, sched.beta6, sched.gamma1,
                      sched.gamma2, sched.gamma6, sched.alpha0, sched.alpha1,
                      sched.alpha2, sched.delta1, sched.lambda1,
                      sched.lambda2],
        }}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def write_outputs(result: RunResult, sched=None):
    """Write result, descriptive, and manifest files; returns the paths."""
    run = result.config
    sched = (sched or _resolve_schedules(run)).validate()
    out = pathlib.Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = run.out_format

    paths = [
        _write_table(out / "results", result.result_rows(), RESULT_FIELDS, fmt)]

    study = [r for s in result.scenarios for r in s.study_rows]
    if study:
        paths.append(_write_table(out / "study_samples", study,
                                  list(study[0]), fmt))
    samples = [r for s in result.scenarios for r in s.sample_rows]
    if samples:
        paths.append(_write_table(out / "analytic_samples", samples,
                                  list(samples[0]), fmt))

    manifest = {
        "version": __version__,
        "numpy_version": np.__version__,
        "config_sha256": _config_digest(run, sched),
        "master_seed": run.master_seed,
        "replicate_id": run.replicate_id,
        "n_pregnancies": run.n_pregnancies,
        "threads": run.threads,
        "scenario_ids": [s.scenario.id for s in result.scenarios],
        "failed_scenarios": {s.scenario.id: s.error for s in result.failed},
        "clamped_probability_cells": result.clamped_cells,
        "seconds_total": round(result.seconds, 3),
        "seconds_by_scenario": {s.scenario.id: round(s.seconds, 3)
                                for s in result.scenarios},
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=1) + "\n")
    paths.append(mpath)

    if run.dump_cohort:
        dpath = out / "cohort_dump.csv"
        cohort = generate_cohort(run, 0, sched)
        with open(dpath, "w", newline="") as fh:
            w = None
            for row in cohort_dump_rows(cohort):
                if w is None:
                    w = csv.DictWriter(fh, fieldnames=list(row))
                    w.writeheader()
                w.writerow(row)
        paths.append(dpath)
    return paths
