"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 estimation error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigurationError, RunConfig, default_schedules, load_schedules
from .estimators import EstimationError


def build_parser():
    p = argparse.ArgumentParser(
        prog="pregsim",
        description="Simulate bias from missing pregnancy outcomes across a "
                    "treatment-effect by missingness scenario matrix.")
    p.add_argument("--config", metavar="PATH",
                   help="YAML schedule/coefficient file "
                        "(default: packaged schedules)")
    p.add_argument("--n", type=int, default=RunConfig.n_pregnancies,
                   help="pregnancies per cohort (default %(default)s)")
    p.add_argument("--seed", type=int, default=RunConfig.master_seed,
                   help="master seed (default %(default)s)")
    p.add_argument("--scenarios", metavar="IDS",
                   help="comma-separated scenario ids (1-36), "
                        "ranges allowed (e.g. 1,4,7-12)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads; results are identical for any value")
    p.add_argument("--out", metavar="DIR", default="pregsim-out",
                   help="output directory (default %(default)s)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="output table format (default %(default)s)")
    p.add_argument("--dump-cohort", action="store_true",
                   help="also write a per-pregnancy dump of the null-effect "
                        "cohort")
    p.add_argument("--verify", action="store_true",
                   help="run the verification checks after the batch "
                        "(small runs skip the sampling-based checks)")
    return p


def parse_scenarios(text):
    if text is None:
        return None
    ids = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, _, hi = part.partition("-")
            ids.extend(range(int(lo), int(hi) + 1))
        else:
            ids.append(int(part))
    if not ids:
        raise ConfigurationError(f"no scenario ids in {text!r}")
    return sorted(set(ids))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run = RunConfig(
            n_pregnancies=args.n, master_seed=args.seed,
            scenario_filter=parse_scenarios(args.scenarios),
            output_dir=args.out, threads=args.threads,
            config_path=args.config, out_format=args.format,
            dump_cohort=args.dump_cohort)
        run.validate()
        sched = (load_schedules(args.config) if args.config
                 else default_schedules()).validate()
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    from .runner import run_matrix, write_outputs  # deferred: heavy import

    try:
        result = run_matrix(run, sched)
        paths = write_outputs(result, sched)
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(f"wrote {p}")
    if result.failed:
        for s in result.failed:
            print(f"scenario {s.scenario.id} failed: {s.error}",
                  file=sys.stderr)
        return 2

    if args.verify:
        from .verify import gating_failures, run_verification

        checks = run_verification(run, sched, result)
        for c in checks:
            print(c.line)
        if gating_failures(checks):
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
