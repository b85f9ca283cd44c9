"""Experiment orchestration: condition-matrix plans, seeded parallel runs,
persistence, resumption, and analysis tables.

A plan's axis cross product defines condition IDs deterministically; every
(condition, trial) cell runs on its own stream derived from the master
seed, so cells complete bit-identically in any order and at any level of
parallelism.  Each cell writes one CSV shard plus a genome-checkpoint
sidecar atomically; the manifest is always recomputed from the shards on
disk and carries no hidden state.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from . import __version__
from .arena import ArenaSetup, default_arena
from .evolution import (
    TrialConfig,
    TrialRecord,
    derive_trial_seed,
    run_trial,
)
from .genome import Genome, genome_from_text, genome_to_text
from .metrics import (
    evolvability,
    plasticity,
    random_opponent_sets,
    robustness,
)
from .stats import anova_oneway, bonferroni, ks_two_sample, mean_ci95, welch_t

PLAN_HEADER = "arenaevo-plan v1"
MANIFEST_FORMAT = "arenaevo-manifest v1"
MANIFEST_NAME = "manifest.json"

CSV_COLUMNS = (
    "condition_id",
    "attack_kind",
    "start_scheme",
    "friendly_fire",
    "origin",
    "regime",
    "trial",
    "generation",
    "score",
    "gene_count",
    "essential_count",
    "mean_lotb",
    "restarts",
)

FACET_COLUMNS = ("attack_kind", "start_scheme", "friendly_fire", "origin")

AXIS_VALUES = {
    "attack_kind": ("melee", "ranged"),
    "start_scheme": ("same", "corners", "random"),
    "friendly_fire": ("ff", "safe"),
    "origin": ("duplication", "de_novo"),
    "regime": ("CNE", "ZFEL"),
}

PROFILES = {
    "desk": {"trials_per_condition": 16, "neutral_generations": 1024, "metric_stride": 8},
    "full": {"trials_per_condition": 64, "neutral_generations": 4096, "metric_stride": 1},
}

ANALYSIS_KINDS = (
    "genes_over_time",
    "lotb_over_time",
    "essential_over_time",
    "gene_count_dist",
    "robustness_by_genes",
    "plasticity_by_genes",
    "evolvability_by_genes",
    "sweeps",
)


class DataError(Exception):
    """Missing, corrupt, or inconsistent on-disk inputs."""


@dataclass(frozen=True)
class ExperimentPlan:
    name: str
    master_seed: int
    attack_kind: tuple[str, ...] = AXIS_VALUES["attack_kind"]
    start_scheme: tuple[str, ...] = AXIS_VALUES["start_scheme"]
    friendly_fire: tuple[str, ...] = AXIS_VALUES["friendly_fire"]
    origin: tuple[str, ...] = AXIS_VALUES["origin"]
    regime: tuple[str, ...] = AXIS_VALUES["regime"]
    trials_per_condition: int = 16
    neutral_generations: int = 1024
    metric_stride: int = 8
    point_rate: float = 0.01
    gene_event_rate: float = 0.01
    viability_threshold: float = 1.0
    output_dir: str = "results"

    def __post_init__(self) -> None:
        for axis in ("attack_kind", "start_scheme", "friendly_fire", "origin", "regime"):
            values = getattr(self, axis)
            bad = [v for v in values if v not in AXIS_VALUES[axis]]
            if bad or not values:
                raise DataError(f"bad {axis} values {bad or values}")

    def condition_ids(self) -> list[str]:
        return [
            f"{a}-{s}-{f}-{o}-{r}"
            for a in self.attack_kind
            for s in self.start_scheme
            for f in self.friendly_fire
            for o in self.origin
            for r in self.regime
        ]

    def cells(self) -> list[tuple[str, int]]:
        return [
            (cid, trial)
            for cid in self.condition_ids()
            for trial in range(self.trials_per_condition)
        ]


def parse_condition_id(condition_id: str) -> dict[str, str]:
    parts = condition_id.split("-")
    if len(parts) != 5:
        raise DataError(f"malformed condition id {condition_id!r}")
    keys = ("attack_kind", "start_scheme", "friendly_fire", "origin", "regime")
    fields = dict(zip(keys, parts))
    for key, value in fields.items():
        if value not in AXIS_VALUES[key]:
            raise DataError(f"bad {key} {value!r} in condition id {condition_id!r}")
    return fields


def condition_config(
    plan: ExperimentPlan,
    condition_id: str,
    trial: int,
    arena: ArenaSetup | None = None,
) -> TrialConfig:
    fields = parse_condition_id(condition_id)
    return TrialConfig(
        attack_kind=fields["attack_kind"],
        start_scheme=fields["start_scheme"],
        friendly_fire=fields["friendly_fire"] == "ff",
        origin=fields["origin"],
        regime=fields["regime"],
        point_rate=plan.point_rate,
        gene_event_rate=plan.gene_event_rate,
        viability_threshold=plan.viability_threshold,
        neutral_generations=plan.neutral_generations,
        metric_stride=plan.metric_stride,
        seed=derive_trial_seed(plan.master_seed, condition_id, trial),
        arena=arena if arena is not None else default_arena(),
    )


# ---------------------------------------------------------------- plan files


_PLAN_KEYS = {
    "name": str,
    "master_seed": int,
    "profile": str,
    "attack_kind": tuple,
    "start_scheme": tuple,
    "friendly_fire": tuple,
    "origin": tuple,
    "regime": tuple,
    "trials_per_condition": int,
    "neutral_generations": int,
    "metric_stride": int,
    "point_rate": float,
    "gene_event_rate": float,
    "viability_threshold": float,
    "output_dir": str,
}


def parse_plan(text: str) -> ExperimentPlan:
    """Parse the flat key-value plan format (versioned header line first;
    later keys override the profile; unknown keys are errors)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != PLAN_HEADER:
        raise DataError(f"plan must start with the header line {PLAN_HEADER!r}")
    values: dict[str, object] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"plan line {lineno}: expected key = value")
        key, _, rhs = (part.strip() for part in line.partition("="))
        if key not in _PLAN_KEYS:
            raise DataError(f"plan line {lineno}: unknown key {key!r}")
        kind = _PLAN_KEYS[key]
        try:
            if kind is tuple:
                values[key] = tuple(v.strip() for v in rhs.split(",") if v.strip())
            elif kind is int:
                values[key] = int(rhs)
            elif kind is float:
                values[key] = float(rhs)
            else:
                values[key] = rhs
        except ValueError as exc:
            raise DataError(f"plan line {lineno}: {exc}") from None
    if "name" not in values or "master_seed" not in values:
        raise DataError("plan needs at least name and master_seed")
    profile = values.pop("profile", None)
    merged: dict[str, object] = {}
    if profile is not None:
        if profile not in PROFILES:
            raise DataError(f"unknown profile {profile!r}")
        merged.update(PROFILES[profile])
    merged.update(values)
    try:
        return ExperimentPlan(**merged)  # type: ignore[arg-type]
    except TypeError as exc:
        raise DataError(str(exc)) from None


def load_plan(path: str | Path) -> ExperimentPlan:
    return parse_plan(Path(path).read_text())


# ---------------------------------------------------------------- shards


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return "%.9g" % value
    return str(value)


def shard_path(output_dir: str | Path, condition_id: str, trial: int) -> Path:
    return Path(output_dir) / condition_id / f"trial_{trial:03d}.csv"


def checkpoint_path(output_dir: str | Path, condition_id: str, trial: int) -> Path:
    return Path(output_dir) / condition_id / f"trial_{trial:03d}.genomes"


def record_to_csv_bytes(condition_id: str, trial: int, record: TrialRecord) -> bytes:
    fields = parse_condition_id(condition_id)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in record.rows:
        writer.writerow(
            [
                condition_id,
                fields["attack_kind"],
                fields["start_scheme"],
                fields["friendly_fire"],
                fields["origin"],
                fields["regime"],
                trial,
                row.generation,
                _fmt(row.score),
                row.gene_count,
                _fmt(row.essential_count),
                _fmt(row.mean_lotb),
                record.restarts,
            ]
        )
    return buf.getvalue().encode()


def checkpoints_to_text(checkpoints: dict[int, Genome]) -> str:
    blocks = []
    for generation in sorted(checkpoints):
        blocks.append(f"> generation {generation}\n{genome_to_text(checkpoints[generation])}")
    return "".join(blocks)


def checkpoints_from_text(text: str) -> dict[int, Genome]:
    out: dict[int, Genome] = {}
    generation = None
    block: list[str] = []
    for line in text.splitlines():
        if line.startswith("> generation "):
            if generation is not None:
                out[generation] = genome_from_text("\n".join(block))
            generation = int(line.split()[-1])
            block = []
        elif line.strip():
            block.append(line)
    if generation is not None:
        out[generation] = genome_from_text("\n".join(block))
    return out


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _run_cell(args: tuple[ExperimentPlan, str, int]) -> tuple[str, int]:
    plan, condition_id, trial = args
    record = run_trial(condition_config(plan, condition_id, trial))
    shard = shard_path(plan.output_dir, condition_id, trial)
    shard.parent.mkdir(parents=True, exist_ok=True)
    # Sidecar first: the shard is the commit point for cell completion.
    _atomic_write(
        checkpoint_path(plan.output_dir, condition_id, trial),
        checkpoints_to_text(record.checkpoints).encode(),
    )
    _atomic_write(shard, record_to_csv_bytes(condition_id, trial, record))
    return f"{condition_id}/{trial}", record.restarts


def _cell_complete(plan: ExperimentPlan, condition_id: str, trial: int) -> bool:
    return (
        shard_path(plan.output_dir, condition_id, trial).exists()
        and checkpoint_path(plan.output_dir, condition_id, trial).exists()
    )


def build_manifest(plan: ExperimentPlan) -> dict:
    """Summarize the completed cells from the shards on disk."""
    cells = {}
    for condition_id, trial in plan.cells():
        if not _cell_complete(plan, condition_id, trial):
            continue
        shard = shard_path(plan.output_dir, condition_id, trial)
        with open(shard, newline="") as fh:
            rows = list(csv.DictReader(fh))
        cells[f"{condition_id}/{trial}"] = {
            "seed": derive_trial_seed(plan.master_seed, condition_id, trial),
            "restarts": int(rows[-1]["restarts"]) if rows else 0,
            "rows": len(rows),
        }
    return {
        "format": MANIFEST_FORMAT,
        "package_version": __version__,
        "plan_name": plan.name,
        "master_seed": plan.master_seed,
        "cells": cells,
    }


def write_manifest(plan: ExperimentPlan) -> Path:
    path = Path(plan.output_dir) / MANIFEST_NAME
    _atomic_write(path, (json.dumps(build_manifest(plan), indent=2, sort_keys=True) + "\n").encode())
    return path


def check_manifest(plan: ExperimentPlan) -> None:
    path = Path(plan.output_dir) / MANIFEST_NAME
    if not path.exists():
        return
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt manifest {path}: {exc}; delete it to rebuild") from None
    if data.get("format") != MANIFEST_FORMAT:
        raise DataError(f"manifest {path} has unknown format {data.get('format')!r}")


def run(plan: ExperimentPlan, workers: int = 1) -> dict:
    """Execute all pending (condition, trial) cells and refresh the manifest.

    Completed cells are skipped, so an interrupted run resumes where it
    stopped and a rerun over a complete result set is a no-op.
    """
    out = Path(plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise DataError(f"output directory {out} is not writable")
    check_manifest(plan)
    pending = [
        (plan, cid, trial) for cid, trial in plan.cells() if not _cell_complete(plan, cid, trial)
    ]
    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, pending))
    else:
        results = [_run_cell(args) for args in pending]
    write_manifest(plan)
    return {
        "cells_total": len(plan.cells()),
        "cells_run": len(results),
        "restarts": sum(r for _, r in results),
    }


def replay(
    plan: ExperimentPlan, condition_id: str, trial: int, trace: list[str] | None = None
) -> TrialRecord:
    """Regenerate one trial bit-identically from its derived seed.

    With ``trace`` a list, also re-runs the final genome's session with the
    engine trace enabled.
    """
    if (condition_id, trial) not in set(plan.cells()):
        raise DataError(f"unknown cell {condition_id}/{trial}")
    config = condition_config(plan, condition_id, trial)
    record = run_trial(config)
    if trace is not None:
        from .arena import run_genome

        run_genome(record.final_genome, config.game_setup(), trace=trace)
    return record


# ---------------------------------------------------------------- analyze


def load_results(plan: ExperimentPlan) -> pd.DataFrame:
    """All shard rows as one frame; errors if nothing is on disk."""
    frames = []
    for condition_id, trial in plan.cells():
        shard = shard_path(plan.output_dir, condition_id, trial)
        if shard.exists():
            frames.append(pd.read_csv(shard))
    if not frames:
        raise DataError(f"no result shards under {plan.output_dir}")
    return pd.concat(frames, ignore_index=True)


def _facet_frame(results: pd.DataFrame, value_column: str) -> pd.DataFrame:
    """Tidy (facet, regime, generation) means and CIs plus the per-facet
    CNE-vs-ZFEL test at the last generation, Bonferroni over the facets."""
    df = results.dropna(subset=[value_column])
    if df.empty:
        raise DataError(f"no {value_column} values recorded in the result set")
    rows = []
    tests = []
    facets = sorted(df.groupby(list(FACET_COLUMNS)).groups)
    for facet in facets:
        sub = df[(df[list(FACET_COLUMNS)] == facet).all(axis=1)]
        for regime in sorted(sub["regime"].unique()):
            per_regime = sub[sub["regime"] == regime]
            for generation, group in per_regime.groupby("generation"):
                values = group[value_column].to_numpy(dtype=float)
                if len(values) >= 2:
                    mean, low, high = mean_ci95(values)
                else:
                    mean = low = high = float(values[0])
                rows.append(
                    dict(zip(FACET_COLUMNS, facet))
                    | {
                        "regime": regime,
                        "generation": int(generation),
                        "mean": mean,
                        "ci_low": low,
                        "ci_high": high,
                        "n": len(values),
                    }
                )
        last = int(sub["generation"].max())
        at_last = sub[sub["generation"] == last]
        cne = at_last[at_last["regime"] == "CNE"][value_column].to_numpy(dtype=float)
        zfel = at_last[at_last["regime"] == "ZFEL"][value_column].to_numpy(dtype=float)
        if len(cne) >= 2 and len(zfel) >= 2:
            tests.append((facet, welch_t(cne, zfel)))
    frame = pd.DataFrame(rows)
    adjusted = bonferroni([t.p_value for _, t in tests], max(len(tests), 1)) if tests else []
    stat_columns = {}
    for (facet, result), p_adj in zip(tests, adjusted):
        stat_columns[facet] = {
            "statistic": result.statistic,
            "df": result.df,
            "p": result.p_value,
            "p_adjusted": p_adj,
            "significant": bool(p_adj < 0.05) if not result.degenerate else False,
        }
    keys = list(zip(*(frame[c] for c in FACET_COLUMNS)))
    for column in ("statistic", "df", "p", "p_adjusted"):
        frame[column] = [stat_columns.get(k, {}).get(column, math.nan) for k in keys]
    frame["significant"] = [stat_columns.get(k, {}).get("significant", False) for k in keys]
    return frame


RESCALE_TOTAL = 1000  # common sample count used only for plotting columns


def _gene_count_dist(results: pd.DataFrame, samples: pd.DataFrame, threshold: float) -> pd.DataFrame:
    samples = samples[samples["threshold"] == threshold]
    if samples.empty:
        raise DataError(f"sampler table has no rows at threshold {threshold}")
    evolved = results[results["regime"] == "CNE"]
    final = evolved[evolved["generation"] == evolved["generation"].max()]
    if final.empty:
        raise DataError("no evolved CNE rows in the result set")
    rows = []
    tests = []
    facets = sorted(final.groupby(list(FACET_COLUMNS)).groups)
    for facet in facets:
        evolved_counts = final[(final[list(FACET_COLUMNS)] == facet).all(axis=1)][
            "gene_count"
        ].to_numpy()
        sampled = samples[(samples[list(FACET_COLUMNS)] == facet).all(axis=1)]
        if sampled.empty or not sampled["qualifying"].sum() or not len(evolved_counts):
            continue
        expanded = np.repeat(sampled["gene_count"].to_numpy(), sampled["qualifying"].to_numpy())
        tests.append((facet, ks_two_sample(expanded, evolved_counts)))
        for k, qualifying in zip(sampled["gene_count"], sampled["qualifying"]):
            rows.append(
                dict(zip(FACET_COLUMNS, facet))
                | {
                    "source": "sampled",
                    "gene_count": int(k),
                    "count": int(qualifying),
                    "rescaled": qualifying / len(expanded) * RESCALE_TOTAL,
                    "threshold": threshold,
                }
            )
        unique, counts = np.unique(evolved_counts, return_counts=True)
        for k, count in zip(unique, counts):
            rows.append(
                dict(zip(FACET_COLUMNS, facet))
                | {
                    "source": "evolved",
                    "gene_count": int(k),
                    "count": int(count),
                    "rescaled": count / len(evolved_counts) * RESCALE_TOTAL,
                    "threshold": threshold,
                }
            )
    if not tests:
        raise DataError("no facet had both sampler and evolved rows")
    frame = pd.DataFrame(rows)
    adjusted = bonferroni([t.p_value for _, t in tests], max(len(tests), 1))
    stats = {
        facet: {"statistic": t.statistic, "p": t.p_value, "p_adjusted": p_adj,
                "significant": bool(p_adj < 0.05)}
        for (facet, t), p_adj in zip(tests, adjusted)
    }
    keys = list(zip(*(frame[c] for c in FACET_COLUMNS)))
    for column in ("statistic", "p", "p_adjusted"):
        frame[column] = [stats.get(k, {}).get(column, math.nan) for k in keys]
    frame["significant"] = [stats.get(k, {}).get("significant", False) for k in keys]
    return frame


def _metric_by_genes(
    plan: ExperimentPlan,
    metric: str,
    generations: Sequence[int] | None,
    reps: int,
    layouts: int,
    rounds: int,
    horizon: int,
) -> pd.DataFrame:
    """Capability metrics over the stored genome checkpoints.

    Shared analysis streams derive from the master seed, so every genome
    is measured with the same mutation draws and opponent layouts.
    """
    layout_rng = np.random.default_rng(
        np.random.SeedSequence(derive_trial_seed(plan.master_seed, "analysis-layouts", 0))
    )
    grid = default_arena().grid
    opponent_sets = random_opponent_sets(layouts, 4, grid, layout_rng)
    rows = []
    for condition_id in plan.condition_ids():
        fields = parse_condition_id(condition_id)
        for trial in range(plan.trials_per_condition):
            path = checkpoint_path(plan.output_dir, condition_id, trial)
            if not path.exists():
                continue
            checkpoints = checkpoints_from_text(path.read_text())
            config = condition_config(plan, condition_id, trial)
            setup = config.game_setup()
            for generation in sorted(checkpoints):
                if generations is not None and generation not in generations:
                    continue
                genome = checkpoints[generation]
                metric_rng = np.random.default_rng(
                    np.random.SeedSequence(
                        derive_trial_seed(
                            plan.master_seed, f"analysis-{metric}-{condition_id}-{generation}", trial
                        )
                    )
                )
                if metric == "robustness":
                    value = robustness(genome, setup, plan.point_rate, metric_rng, reps=reps)
                elif metric == "plasticity":
                    value = plasticity(genome, setup, opponent_sets)
                elif metric == "evolvability":
                    value = evolvability(
                        genome, config, opponent_sets, metric_rng, rounds=rounds, horizon=horizon
                    )
                else:
                    raise ValueError(f"unknown metric {metric!r}")
                rows.append(
                    {
                        "condition_id": condition_id,
                        **fields,
                        "trial": trial,
                        "generation": generation,
                        "gene_count": len(genome),
                        "metric": metric,
                        "value": value,
                    }
                )
    if not rows:
        raise DataError("no genome checkpoints found; run the plan first")
    return pd.DataFrame(rows)


def _sweep_anova(samples: pd.DataFrame) -> pd.DataFrame:
    rows = []
    for kind, sub in samples.groupby("kind"):
        groups = [g["gene_count"].to_numpy(dtype=float) for _, g in sub.groupby(["rate", "horizon"])]
        result = anova_oneway(groups)
        rows.append(
            {
                "kind": kind,
                "groups": len(groups),
                "F": result.statistic,
                "df_between": result.df[0],
                "df_within": result.df[1],
                "p": result.p_value,
            }
        )
    return pd.DataFrame(rows)


def analyze(
    plan: ExperimentPlan,
    kind: str,
    out_path: str | Path,
    samples_csv: str | Path | None = None,
    generations: Sequence[int] | None = None,
    reps: int = 64,
    layouts: int = 32,
    rounds: int = 32,
    horizon: int = 64,
) -> Path:
    """Produce one tidy analysis CSV; see ANALYSIS_KINDS for the menu."""
    if kind not in ANALYSIS_KINDS:
        raise DataError(f"unknown analysis kind {kind!r}; pick from {ANALYSIS_KINDS}")
    if kind in ("gene_count_dist", "sweeps") and samples_csv is None:
        raise DataError(f"analysis {kind!r} needs --samples (the sampler/sweep CSV)")
    if kind == "sweeps":
        frame = _sweep_anova(pd.read_csv(samples_csv))
    elif kind == "gene_count_dist":
        frame = _gene_count_dist(
            load_results(plan), pd.read_csv(samples_csv), plan.viability_threshold
        )
    elif kind in ("genes_over_time", "lotb_over_time", "essential_over_time"):
        column = {
            "genes_over_time": "gene_count",
            "lotb_over_time": "mean_lotb",
            "essential_over_time": "essential_count",
        }[kind]
        frame = _facet_frame(load_results(plan), column)
    else:
        metric = kind.removesuffix("_by_genes")
        frame = _metric_by_genes(plan, metric, generations, reps, layouts, rounds, horizon)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, float_format="%.9g", lineterminator="\n")
    return out
