"""The generational loop: adaptive bootstrap, then neutral evolution.

A trial starts from one random gene and hill-climbs (offspring kept only
at parent score or better, no gene events) until it reaches the arena's
maximum score.  The neutral phase then runs a fixed number of generations
with gene add/remove events enabled, keeping every offspring (ZFEL) or
discarding score-lowering ones (CNE).

All randomness flows through an explicit per-trial stream derived from the
config seed, so trials replay bit-identically in any execution order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .arena import ArenaSetup, GameSetup, default_arena
from .engine import DEFAULT_PLAYER_HEALTH
from .genome import Gene, Genome, apply_gene_events, point_mutate, random_gene
from .metrics import gene_contributions, mean_lotb

CNE = "CNE"
ZFEL = "ZFEL"

# Paired (gene event rate, generation horizon) sweep cells, and the point
# mutation rates compared at a fixed 2**10-generation horizon.
GENE_EVENT_SWEEP = ((0.01, 100), (0.005, 200), (0.001, 1000), (0.0005, 2000), (0.0001, 10000))
POINT_RATE_SWEEP = (0.05, 0.01, 0.005, 0.001, 0.0005)
POINT_RATE_HORIZON = 1024

_MASK64 = (1 << 64) - 1


class StuckGeneration(Exception):
    """No acceptable offspring within the per-generation attempt budget."""


class StuckTrialError(Exception):
    """A trial kept getting stuck through the whole restart budget."""


class Individual(NamedTuple):
    genome: Genome
    score: int | None


@dataclass(frozen=True)
class TrialConfig:
    """The full condition tuple for one evolution trial."""

    attack_kind: str = "ranged"
    start_scheme: str = "same"
    friendly_fire: bool = False
    origin: str = "duplication"
    regime: str = CNE
    point_rate: float = 0.01
    gene_event_rate: float = 0.01
    population_size: int = 1
    neutral_generations: int = 1024
    viability_threshold: float = 1.0
    fixed_gene_count: int | None = None
    seed: int = 0
    arena: ArenaSetup = field(default_factory=default_arena)
    player_health: int = DEFAULT_PLAYER_HEALTH
    gene_length: int = 512
    # metric_stride n: record essential counts and mean LotB every n
    # generations (plus the final one); 0 disables them.  Gene counts and
    # scores are recorded every generation; record_scores=False skips the
    # per-generation scoring sessions under ZFEL, where no acceptance
    # decision needs them.
    metric_stride: int = 1
    record_scores: bool = True
    max_attempts_per_generation: int = 100_000
    max_bootstrap_generations: int = 100_000
    max_restarts: int = 20
    initial_genome: tuple[Gene, ...] | None = None

    def __post_init__(self) -> None:
        if self.regime not in (CNE, ZFEL):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.origin not in ("duplication", "de_novo"):
            raise ValueError(f"unknown origin {self.origin!r}")
        if not 0.0 <= self.point_rate <= 1.0 or not 0.0 <= self.gene_event_rate <= 1.0:
            raise ValueError("rates must be in [0, 1]")
        if not 0.0 < self.viability_threshold <= 1.0:
            raise ValueError("viability threshold must be in (0, 1]")
        if self.population_size < 1 or self.neutral_generations < 0:
            raise ValueError("population size and generations must be sensible")
        if self.fixed_gene_count is not None and self.fixed_gene_count < 1:
            raise ValueError("fixed gene count must be positive")

    def game_setup(self) -> GameSetup:
        return GameSetup(
            arena=self.arena,
            attack_kind=self.attack_kind,
            friendly_fire=self.friendly_fire,
            player_health=self.player_health,
        )


@dataclass(frozen=True)
class GenerationRow:
    generation: int
    score: int | None
    gene_count: int
    essential_count: int | None
    mean_lotb: float | None


@dataclass
class TrialRecord:
    bootstrap_generations: int
    restarts: int
    rows: list[GenerationRow]
    checkpoints: dict[int, Genome]

    @property
    def final_genome(self) -> Genome:
        return self.checkpoints[max(self.checkpoints)]


def derive_trial_seed(master_seed: int, condition_id: str, trial_index: int) -> int:
    """Stable 64-bit per-trial seed, independent of execution order."""
    digest = hashlib.sha256(f"{master_seed}:{condition_id}:{trial_index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def trial_rng(seed: int, restart: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed & _MASK64, restart)))


def _score(genes: Genome, setup: GameSetup) -> int:
    from .arena import score_genome

    return score_genome(genes, setup)


def next_generation(
    population: list[Individual],
    config: TrialConfig,
    rng: np.random.Generator,
    gene_events: bool = True,
    parent_floor_only: bool = False,
) -> list[Individual]:
    """Produce the next population of accepted offspring.

    Each attempt draws a uniform parent, point-mutates every gene, and
    (neutral phase) samples the add/remove events.  CNE keeps an offspring
    whose score is at least min(parent score, threshold * max score); with
    threshold 1.0 that is simply "at least the parent".  ZFEL keeps every
    offspring.  ``parent_floor_only`` forces the pure parent comparison
    used during bootstrap regardless of regime.
    """
    if not population:
        raise ValueError("population must be non-empty")
    setup = config.game_setup()
    floor = config.viability_threshold * setup.max_score
    zfel = config.regime == ZFEL and not parent_floor_only
    offspring: list[Individual] = []
    attempts = 0
    while len(offspring) < config.population_size:
        attempts += 1
        if attempts > config.max_attempts_per_generation:
            raise StuckGeneration(
                f"no acceptable offspring in {config.max_attempts_per_generation} attempts"
            )
        parent = population[int(rng.integers(len(population)))]
        genes: Genome = [
            Gene(point_mutate(g.sequence, config.point_rate, rng), g.start)
            for g in parent.genome
        ]
        if gene_events:
            genes = apply_gene_events(
                genes,
                config.gene_event_rate,
                config.gene_event_rate,
                config.origin,
                config.start_scheme,
                setup.grid_size,
                rng,
            )
        if zfel:
            score = _score(genes, setup) if config.record_scores else None
            offspring.append(Individual(genes, score))
            continue
        score = _score(genes, setup)
        required = parent.score if parent_floor_only else min(parent.score, floor)
        if score >= required:
            offspring.append(Individual(genes, score))
    return offspring


def bootstrap(config: TrialConfig, rng: np.random.Generator) -> tuple[Genome, int]:
    """Hill-climb a single gene to the maximum score.

    Offspring are kept at parent score or better, gene events stay off,
    and the loop ends as soon as some individual reaches the maximum.
    Returns that genome and the number of generations used (0 when the
    starting genome already scores the maximum).
    """
    setup = config.game_setup()
    if config.initial_genome is not None:
        genome: Genome = list(config.initial_genome)
    else:
        genome = [random_gene(config.start_scheme, 0, setup.grid_size, rng, config.gene_length)]
    population = [Individual(genome, _score(genome, setup))]
    target = setup.max_score
    generations = 0
    while True:
        for individual in population:
            if individual.score >= target:
                return individual.genome, generations
        if generations >= config.max_bootstrap_generations:
            raise StuckGeneration(
                f"no maximum-score genome in {config.max_bootstrap_generations} generations"
            )
        population = next_generation(
            population, config, rng, gene_events=False, parent_floor_only=True
        )
        generations += 1


def _forced_additions(
    genome: Genome, k: int, config: TrialConfig, rng: np.random.Generator
) -> Genome:
    # Fixed-gene-count initialization: k-1 unconditional additions through
    # the configured origin method, then gene events stay disabled.
    setup = config.game_setup()
    genes = list(genome)
    while len(genes) < k:
        genes = apply_gene_events(
            genes, 1.0, 0.0, config.origin, config.start_scheme, setup.grid_size, rng
        )
    return genes


def _checkpoint_generations(neutral_generations: int) -> set[int]:
    marks = {0, neutral_generations}
    power = 1
    while power <= neutral_generations:
        marks.add(power)
        power *= 2
    return marks


def run_trial(config: TrialConfig) -> TrialRecord:
    """Run one full trial: bootstrap plus the neutral phase, with restarts.

    A trial that exhausts an attempt budget is restarted from scratch on a
    fresh stream derived from (seed, restart count); the restart total is
    part of the record.  Deterministic given the config.
    """
    restarts = 0
    while True:
        rng = trial_rng(config.seed, restarts)
        try:
            return _run_trial_once(config, rng, restarts)
        except StuckGeneration:
            restarts += 1
            if restarts > config.max_restarts:
                raise StuckTrialError(
                    f"trial stuck after {config.max_restarts} restarts"
                ) from None


def _run_trial_once(
    config: TrialConfig, rng: np.random.Generator, restarts: int
) -> TrialRecord:
    setup = config.game_setup()
    genome, boot_gens = bootstrap(config, rng)
    if config.fixed_gene_count is not None:
        genome = _forced_additions(genome, config.fixed_gene_count, config, rng)
    population = [Individual(genome, _score(genome, setup))]

    marks = _checkpoint_generations(config.neutral_generations)
    rows: list[GenerationRow] = []
    checkpoints: dict[int, Genome] = {}

    def record(generation: int, individual: Individual) -> None:
        essential = lotb_value = None
        due = config.metric_stride > 0 and (
            generation % config.metric_stride == 0
            or generation == config.neutral_generations
        )
        if due:
            contribs = gene_contributions(individual.genome, setup)
            essential = sum(1 for c in contribs if c.essential)
            lotb_value = mean_lotb(contribs)
        rows.append(
            GenerationRow(
                generation,
                individual.score,
                len(individual.genome),
                essential,
                lotb_value,
            )
        )
        if generation in marks:
            checkpoints[generation] = individual.genome

    record(0, population[0])
    gene_events = config.fixed_gene_count is None
    for generation in range(1, config.neutral_generations + 1):
        population = next_generation(population, config, rng, gene_events=gene_events)
        record(generation, population[0])
    return TrialRecord(boot_gens, restarts, rows, checkpoints)


def run_parameter_sweep(
    kind: str,
    base_config: TrialConfig,
    trials: int,
    master_seed: int,
) -> list[dict]:
    """Gene counts over the rate sweep grids, one row per (cell, trial).

    ``gene_event_rate`` runs the paired (rate, horizon) cells; ``point_rate``
    varies the per-site rate at the fixed 2**10-generation horizon.
    """
    if kind == "gene_event_rate":
        cells = [(rate, horizon) for rate, horizon in GENE_EVENT_SWEEP]
    elif kind == "point_rate":
        cells = [(rate, POINT_RATE_HORIZON) for rate in POINT_RATE_SWEEP]
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")
    rows = []
    for rate, horizon in cells:
        for trial in range(trials):
            overrides = {"neutral_generations": horizon, "metric_stride": 0}
            if kind == "gene_event_rate":
                overrides["gene_event_rate"] = rate
            else:
                overrides["point_rate"] = rate
            cfg = replace(
                base_config,
                seed=derive_trial_seed(master_seed, f"sweep-{kind}-{rate}-{horizon}", trial),
                record_scores=False,
                **overrides,
            )
            record = run_trial(cfg)
            rows.append(
                {
                    "kind": kind,
                    "rate": rate,
                    "horizon": horizon,
                    "trial": trial,
                    "gene_count": record.rows[-1].gene_count,
                    "restarts": record.restarts,
                }
            )
    return rows
