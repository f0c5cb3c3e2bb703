"""Recalibrate the default weekly baseline schedules.

The weekly baselines (fetal death, preeclampsia, live birth, encounters) are
configuration inputs. This script fits the three free levels of the shipped
parametric shapes so that, under the null/null treatment effect, the
untreated outcome distribution among non-initiators hits the calibration
targets (miscarriage 18%, stillbirth 1%, live birth 81%, preeclampsia
37.4%), then writes src/pregsim/data/default_schedules.yaml.

Run from the repository root:

    python demos/05_recalibrate_schedules.py

Requires scipy (root finding); the installed package itself does not.
"""

import pathlib
import sys

import numpy as np
from scipy import optimize

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pregsim import config, dgp
from pregsim.config import (FIRST_WEEK, LAST_WEEK, PE_FIRST_WEEK, LB_FIRST_WEEK,
                            ENC_FIRST_WEEK, CoefficientSchedules)

TARGETS = {"miscarriage": 0.18, "stillbirth": 0.01, "preeclampsia": 0.374}

# Severity distribution among non-initiators: P(untreated | s) = .75/.50/.25
# over a uniform severity mix, normalized.
NONINIT_SEVERITY = np.array([0.75, 0.50, 0.25]) / 1.5
RURAL = np.array([0.70, 0.30])

EARLY_DECAY = 0.25       # weekly log-decay of the early fetal-death hazard
PE_WEEKLY_SLOPE = 0.10   # log-odds increase of preeclampsia per week

# Live-birth weekly probabilities, conception weeks 21..39 (week 40 closes
# out with everything that is not a fetal death). Preterm tail ramping into
# the term peak around LMP weeks 39-42.
LB_RAMP = [0.001, 0.001, 0.002, 0.002, 0.003, 0.004, 0.005, 0.007, 0.010,
           0.014, 0.020, 0.030, 0.050, 0.090, 0.160, 0.280, 0.450, 0.650,
           0.850]


def build_schedules(a, b, c):
    weeks = np.arange(FIRST_WEEK, LAST_WEEK + 1)
    fd = np.where(weeks < 17, a * np.exp(-EARLY_DECAY * (weeks - FIRST_WEEK)), b)
    pe_weeks = np.arange(PE_FIRST_WEEK, LAST_WEEK + 1)
    pe = 1.0 / (1.0 + np.exp(-(c + PE_WEEKLY_SLOPE * (pe_weeks - PE_FIRST_WEEK))))
    lb = np.zeros_like(fd)
    lb[LB_FIRST_WEEK - FIRST_WEEK:-1] = LB_RAMP
    lb[-1] = 1.0 - b
    enc = np.concatenate([np.full(20, 0.25), np.full(8, 0.50), np.full(5, 0.70)])
    return CoefficientSchedules(fd_base=fd, pe_base=pe, lb_prob=lb, enc_base=enc)


def noninitiator_mix(sched, te, arm):
    total = {k: 0.0 for k in ("miscarriage", "stillbirth", "live_birth",
                              "preeclampsia")}
    for s, ws in enumerate(NONINIT_SEVERITY):
        for r, wr in enumerate(RURAL):
            probs = dgp.expected_outcome_probs(s, bool(r), arm, te, sched)
            for k in total:
                total[k] += ws * wr * probs[k]
    return total


def population_risk(sched, te, arm):
    """Counterfactual preeclampsia risk, uniform severity mix (whole cohort)."""
    risk = 0.0
    for s in range(3):
        for r, wr in enumerate(RURAL):
            risk += (1 / 3) * wr * dgp.expected_outcome_probs(
                s, bool(r), arm, te, sched)["preeclampsia"]
    return risk


def residuals(x):
    sched = build_schedules(np.exp(x[0]), np.exp(x[1]), x[2])
    te = config.TREATMENT_EFFECTS[config.TREATMENT_EFFECTS.index(
        config.TreatmentEffectSpec(config.MiscarriageEffect.NULL,
                                   config.PreeclampsiaEffect.NULL))]
    mix = noninitiator_mix(sched, te, dgp.UNTREATED)
    return [mix["miscarriage"] - TARGETS["miscarriage"],
            mix["stillbirth"] - TARGETS["stillbirth"],
            mix["preeclampsia"] - TARGETS["preeclampsia"]]


def main():
    sol = optimize.root(residuals, x0=[np.log(0.025), np.log(0.0004), -3.5],
                        method="hybr", tol=1e-12)
    if not sol.success:
        raise SystemExit(f"calibration failed: {sol.message}")
    a, b = np.exp(sol.x[0]), np.exp(sol.x[1])
    c = sol.x[2]
    sched = build_schedules(a, b, c).validate()

    null_te = config.TreatmentEffectSpec(config.MiscarriageEffect.NULL,
                                         config.PreeclampsiaEffect.NULL)
    mix = noninitiator_mix(sched, null_te, dgp.UNTREATED)
    print(f"fitted: early fd level {a:.6g}, late fd {b:.6g}, pe logit {c:.6g}")
    print("non-initiator outcome mix:",
          {k: round(v, 4) for k, v in mix.items()})
    for te in config.TREATMENT_EFFECTS:
        r1 = population_risk(sched, te, dgp.TREATED)
        r0 = population_risk(sched, te, dgp.UNTREATED)
        print(f"  {te.label:45s} true risks {100*r1:5.1f}% / {100*r0:5.1f}%  "
              f"RD {100*(r1-r0):+6.1f}  RR {r1/r0:.2f}")

    out = pathlib.Path(__file__).resolve().parents[1] / "src/pregsim/data/default_schedules.yaml"
    lines = [
        "# Default weekly baseline schedules (version 1).",
        "#",
        "# Weeks are counted from conception; LMP gestational age is week + 2.",
        "# Baseline values refer to untreated, low-severity, non-rural",
        "# pregnancies. These values were fitted by demos/05_recalibrate_schedules.py",
        "# so that the untreated non-initiator mix reproduces the calibration",
        "# targets (miscarriage 18%, stillbirth 1%, live birth 81%,",
        "# preeclampsia 37.4%). Replace this file via --config to use other",
        "# schedules; all structural acceptance checks are schedule-independent.",
        "schema_version: 1",
        "",
        "# Log-odds / log-RR coefficients whose magnitudes are free inputs.",
        "coefficients:",
        f"  lambda1: {np.log(1.2):.12g}   # encounter log-RR, moderate severity",
        f"  lambda2: {np.log(1.4):.12g}   # encounter log-RR, high severity",
        f"  alpha1: {np.log(2.5):.12g}    # measured-missingness log-OR per severity step",
        f"  alpha2: {np.log(1.05):.12g}   # measured-missingness log-OR, rural",
        f"  delta1: {-np.log(1.25):.12g}  # miscarriage-missingness log-OR per week",
        "",
        "# Weekly probability of fetal death (baseline), conception weeks 7-40.",
        "fetal_death_weekly:",
    ]
    for i, w in enumerate(range(FIRST_WEEK, LAST_WEEK + 1)):
        lines.append(f"  {w}: {sched.fd_base[i]:.10g}")
    lines += ["", "# Weekly probability of preeclampsia (baseline), weeks 17-40.",
              "preeclampsia_weekly:"]
    for i, w in enumerate(range(PE_FIRST_WEEK, LAST_WEEK + 1)):
        lines.append(f"  {w}: {sched.pe_base[i]:.10g}")
    lines += ["", "# Weekly probability of live birth (all groups), weeks 21-40.",
              "# Week 40 closes every remaining pregnancy: live birth",
              "# probability there is 1 minus the fetal-death probability.",
              "live_birth_weekly:"]
    for i, w in enumerate(range(FIRST_WEEK, LAST_WEEK + 1)):
        if w >= LB_FIRST_WEEK:
            lines.append(f"  {w}: {sched.lb_prob[i]:.10g}")
    lines += ["", "# Weekly probability of a prenatal encounter (baseline), weeks 8-40.",
              "# The week-7 index encounter is certain and not listed.",
              "encounter_weekly:"]
    for i, w in enumerate(range(ENC_FIRST_WEEK, LAST_WEEK + 1)):
        lines.append(f"  {w}: {sched.enc_base[i]:.10g}")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
