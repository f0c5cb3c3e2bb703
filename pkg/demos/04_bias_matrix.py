"""Run a slice of the scenario matrix and tabulate bias by design.

Evaluates all six missingness designs for two treatment effects -- the
null/null reference and the miscarriage-increase/preeclampsia-null case
where selection bias masks a real harm -- then prints the risk-difference
bias (percentage points) for each analytic sample, plus the bound widths.

Uses a reduced cohort size so the demo runs in seconds; rerun with the
library default (200,000) for production-scale numbers.

Run from the repository root:

    python demos/04_bias_matrix.py
"""

import pregsim
from pregsim.config import MISSINGNESS_SPECS, TREATMENT_EFFECTS

run = pregsim.RunConfig(n_pregnancies=100_000, threads=4,
                        scenario_filter=[19, 20, 21, 22, 23, 24,
                                         31, 32, 33, 34, 35, 36])
sched = pregsim.default_schedules()
result = pregsim.run_matrix(run, sched)
assert not result.failed, [s.error for s in result.scenarios if s.error]

rows = {}
for s in result.scenarios:
    for r in s.rows:
        rows[(s.scenario.te_index, s.scenario.miss_index, r["estimator"])] = r

for ti in (3, 5):
    te = TREATMENT_EFFECTS[ti]
    any_row = rows[(ti, 0, "pregnancies")]
    print(f"treatment effect: {te.label}")
    print(f"  true RD {100 * any_row['true_rd']:+.2f} points, "
          f"true RR {any_row['true_rr']:.3f}")
    print(f"  {'design':<33}{'deliveries':>11}{'outcomes':>10}"
          f"{'pregnancies':>12}")
    for mi, spec in enumerate(MISSINGNESS_SPECS):
        vals = [rows[(ti, mi, est)]["bias_rd"]
                for est in ("deliveries", "outcomes", "pregnancies")]
        print(f"  {spec.label:<33}"
              + "".join(f"{v:>+10.2f} " for v in vals))
    print()

print("reading the table: bias is (estimated - true) risk difference in")
print("percentage points. Measured-only designs leave the pregnancies")
print("sample nearly unbiased; miscarriage-driven designs bias every")
print("sample, and the worst-sample bias does not shrink when total")
print("missingness rises from 5% to 20%.")
print()

print("bound widths (risk envelope, percentage points, treated arm):")
for ti in (3, 5):
    for mi in (2, 5):  # measured-only designs, 5% and 20%
        lo = min(rows[(ti, mi, f"bound_{b}")]["risk_treated"]
                 for b in ("all_event", "treated_only_event",
                           "untreated_only_event", "none_event"))
        hi = max(rows[(ti, mi, f"bound_{b}")]["risk_treated"]
                 for b in ("all_event", "treated_only_event",
                           "untreated_only_event", "none_event"))
        print(f"  te {ti}, design {mi} ({MISSINGNESS_SPECS[mi].label:<26}): "
              f"{100 * (hi - lo):5.2f}")
print()
print("widths scale with the amount of missingness: the bounds are honest")
print("about what the data cannot identify.")
