"""Show the two missingness mechanisms and their balancing-intercept
calibration.

Outcome missingness (censoring) among non-initiators is driven by two
mechanisms:

* ``measured``  -- weekly loss to follow-up depending on severity and
  rurality (covariates that also drive the outcome: missing at random
  given what the analyst measures);
* ``miscarriage`` -- a one-shot chance that an early fetal loss is never
  recorded, stronger at earlier gestational ages (missing not at random:
  the outcome itself drives the missingness).

Each mechanism's intercept is solved so that, at the covariate means of
the eligible group, the per-draw probability matches the requested
marginal exactly.

Run from the repository root:

    python demos/02_missingness_mechanisms.py
"""

import numpy as np

import pregsim
from pregsim.config import MISSINGNESS_SPECS, weekly_from_marginal
from pregsim.missingness import CAUSE_MEASURED, CAUSE_MISCARRIAGE

run = pregsim.RunConfig(n_pregnancies=200_000)
sched = pregsim.default_schedules()
te_index = 3  # null/null treatment effect
cohort = pregsim.generate_cohort(run, te_index, sched)

print("the six missingness designs (targets among non-initiators)")
for i, spec in enumerate(MISSINGNESS_SPECS):
    print(f"  design {i}: measured {100 * spec.target_measured_pct:>4.1f}%  "
          f"miscarriage {100 * spec.target_miscarriage_pct:>4.1f}%  "
          f"(total {100 * spec.total_target:.0f}%)")
print()

spec = MISSINGNESS_SPECS[4]  # 10% + 10%
params = pregsim.calibrate(sched, spec, cohort)

print(f"calibration for design 4 ({spec.label})")
weekly = weekly_from_marginal(spec.target_measured_pct, 34)
print(f"  34-week marginal {100 * spec.target_measured_pct:.0f}% -> "
      f"weekly probability {weekly:.6f}")
print(f"  covariate means among non-initiators: "
      f"E[severity] = {params.e_severity:.4f}, E[rural] = {params.e_rural:.4f}")
print(f"  weekly prob at those means: "
      f"{float(params.measured_weekly_prob(params.e_severity, params.e_rural)):.6f}"
      f"  (balancing identity)")
print(f"  miscarriage marginal {100 * spec.miscarriage_marginal:.0f}% "
      f"(target x{spec.miscarriage_inflation:g}, only miscarriages eligible)")
print(f"  mean gestational age at miscarriage: {params.e_ga_miscarriage:.3f} "
      f"conception weeks")
print(f"  one-shot prob at that mean: "
      f"{float(params.miscarriage_prob(params.e_ga_miscarriage)):.4f}")
print()

print("per-draw probabilities rise with severity/rurality and fall with")
print("gestational age at loss:")
for s in range(3):
    p = float(params.measured_weekly_prob(s, False))
    pr = float(params.measured_weekly_prob(s, True))
    print(f"  measured weekly, severity {s}: {p:.6f} (non-rural) "
          f"{pr:.6f} (rural)")
for w in (7, 10, 13, 16):
    print(f"  miscarriage one-shot, loss at week {w}: "
          f"{float(params.miscarriage_prob(w)):.4f}")
print()

obs = pregsim.apply_missingness(cohort, spec, params, run.master_seed, te_index)
noninit = ~cohort.treated
print(f"applied to the cohort (non-initiators, n = {noninit.sum():,})")
print(f"  censored by measured mechanism   : "
      f"{100 * (obs.cause[noninit] == CAUSE_MEASURED).mean():.2f}%")
print(f"  censored by miscarriage mechanism: "
      f"{100 * (obs.cause[noninit] == CAUSE_MISCARRIAGE).mean():.2f}%")
mis = cohort.observed_miscarriage & noninit
print(f"  miscarriages with unrecorded outcome: "
      f"{100 * obs.censored[mis].mean():.1f}% of {mis.sum():,}")
print()
print("note: a measured-mechanism firing only censors when it lands before")
print("the outcome is observed, so early pregnancy losses truncate the")
print("exposure window and pull the realized measured share below target.")
print()

# Censoring is anchored to real encounters: the censor week is always the
# last prenatal visit at or before the firing week.
idx = np.nonzero(obs.censored)[0]
assert obs.cohort.encounters[idx, obs.censor_week[idx] - 7].all()
print("every censor week coincides with an actual prenatal encounter and")
print("precedes the week the outcome would have been observed.")
print()

for row in pregsim.missingness.study_sample_report(obs):
    print(f"  {row['arm']:<14} pregnancies {row['pregnancies']:>7,}  "
          f"missing: measured {row['missing_measured']:>5,} / "
          f"miscarriage {row['missing_miscarriage']:>5,}")
