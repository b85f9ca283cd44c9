"""Command-line interface.

Subcommands: run (execute a plan), analyze (emit analysis tables), replay
(regenerate one trial), sample (sequence-space sampler), sweep (rate
sweeps).  Exit codes: 0 success, 1 usage error, 2 data error, 3 stuck-trial
budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .evolution import (
    StuckTrialError,
    TrialConfig,
    run_parameter_sweep,
)
from .experiments import (
    ANALYSIS_KINDS,
    PROFILES,
    DataError,
    analyze,
    load_plan,
    replay,
    run,
)
from .sampling import sample_solution_counts
from .stats import anova_oneway


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise UsageError(message)


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _write_rows(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([("%.9g" % v) if isinstance(v, float) else v for v in row])


def _load_plan_with_overrides(args) -> "ExperimentPlan":
    plan = load_plan(args.plan)
    if getattr(args, "profile", None):
        plan = replace(plan, **PROFILES[args.profile])
    if getattr(args, "out", None):
        plan = replace(plan, output_dir=args.out)
    return plan


def _cmd_run(args) -> None:
    plan = _load_plan_with_overrides(args)
    summary = run(plan, workers=args.workers)
    print(
        f"{summary['cells_run']} of {summary['cells_total']} cells run "
        f"({summary['restarts']} restarts) -> {plan.output_dir}"
    )


def _cmd_analyze(args) -> None:
    plan = _load_plan_with_overrides(args)
    out = analyze(
        plan,
        args.kind,
        args.table,
        samples_csv=args.samples,
        generations=_csv_ints(args.generations) if args.generations else None,
        reps=args.reps,
        layouts=args.layouts,
        rounds=args.rounds,
        horizon=args.horizon,
    )
    print(f"wrote {out}")


def _cmd_replay(args) -> None:
    plan = _load_plan_with_overrides(args)
    trace: list[str] | None = [] if args.trace else None
    record = replay(plan, args.condition, args.trial, trace=trace)
    if args.trace:
        Path(args.trace).write_text("\n".join(trace) + "\n")
    last = record.rows[-1]
    print(
        f"{args.condition}/{args.trial}: bootstrap {record.bootstrap_generations} generations, "
        f"{record.restarts} restarts, final gene count {last.gene_count}"
    )


def _cmd_sample(args) -> None:
    condition = TrialConfig(
        attack_kind=args.attack_kind,
        start_scheme=args.start_scheme,
        friendly_fire=args.friendly_fire == "ff",
        origin=args.origin,
        metric_stride=0,
    )
    rows = sample_solution_counts(
        condition,
        _csv_ints(args.gene_counts),
        np.random.default_rng(args.seed),
        samples_per_count=args.samples,
        threshold=args.threshold,
    )
    columns = list(rows[0].keys())
    _write_rows(Path(args.table), columns, [[r[c] for c in columns] for r in rows])
    print(f"wrote {args.table}")


def _cmd_sweep(args) -> None:
    base = TrialConfig(regime=args.regime, metric_stride=0)
    rows = run_parameter_sweep(args.kind, base, trials=args.trials, master_seed=args.seed)
    columns = ["kind", "rate", "horizon", "trial", "gene_count", "restarts"]
    _write_rows(Path(args.table), columns, [[r[c] for c in columns] for r in rows])
    groups: dict[tuple, list[int]] = {}
    for row in rows:
        groups.setdefault((row["rate"], row["horizon"]), []).append(row["gene_count"])
    result = anova_oneway(list(groups.values()))
    print(f"wrote {args.table}")
    print(f"ANOVA across cells: F={result.statistic:.4g} p={result.p_value:.4g}")


def build_parser() -> _Parser:
    parser = _Parser(prog="arenaevo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute all pending cells of a plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", help="override the plan's output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analyze", help="emit one analysis table")
    p.add_argument("--plan", required=True)
    p.add_argument("--kind", required=True, choices=ANALYSIS_KINDS)
    p.add_argument("--table", required=True, help="output CSV path")
    p.add_argument("--out", help="override the plan's output directory")
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--samples", help="sampler or sweep CSV input")
    p.add_argument("--generations", help="comma-separated checkpoint subset")
    p.add_argument("--reps", type=int, default=64)
    p.add_argument("--layouts", type=int, default=32)
    p.add_argument("--rounds", type=int, default=32)
    p.add_argument("--horizon", type=int, default=64)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("replay", help="regenerate one trial from its seed")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", help="override the plan's output directory")
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--condition", required=True)
    p.add_argument("--trial", type=int, required=True)
    p.add_argument("--trace", help="write the final genome's session trace here")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("sample", help="sample sequence space per gene count")
    p.add_argument("--attack-kind", default="ranged", choices=("melee", "ranged"))
    p.add_argument("--start-scheme", default="same", choices=("same", "corners", "random"))
    p.add_argument("--friendly-fire", default="safe", choices=("ff", "safe"))
    p.add_argument("--origin", default="duplication", choices=("duplication", "de_novo"))
    p.add_argument("--gene-counts", default="1,2,3,4,5,6")
    p.add_argument("--samples", type=int, default=65536)
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--table", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("sweep", help="gene-event or point-rate sweep")
    p.add_argument("--kind", required=True, choices=("gene_event_rate", "point_rate"))
    p.add_argument("--regime", default="ZFEL", choices=("CNE", "ZFEL"))
    p.add_argument("--trials", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--table", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except StuckTrialError as exc:
        print(f"stuck trial: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
