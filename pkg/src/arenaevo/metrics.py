"""Per-genome capability measurements.

The LotB ("last on the bus") contribution of a gene is the full-team score
minus the score of the team with that gene's character removed; genes with
a strictly positive contribution are essential.  Removal keeps every other
character's start position and relative priority, and the reduced session
is re-run from scratch.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .arena import GameSetup, score_genome
from .engine import GridConfig, Opponent
from .genome import Gene, Genome, corner_positions, point_mutate


@dataclass(frozen=True)
class GeneContribution:
    gene_index: int
    lotb: int

    @property
    def essential(self) -> bool:
        return self.lotb > 0


def lotb(genome: Genome, gene_index: int, setup: GameSetup) -> int:
    """Score of the full team minus the score of the team without one gene."""
    if not 0 <= gene_index < len(genome):
        raise IndexError(f"gene index {gene_index} out of range")
    full = score_genome(genome, setup)
    reduced = [g for i, g in enumerate(genome) if i != gene_index]
    reduced_score = score_genome(reduced, setup) if reduced else 0
    return full - reduced_score


def gene_contributions(genome: Genome, setup: GameSetup) -> list[GeneContribution]:
    """All LotB contributions with one full-team session shared across genes."""
    full = score_genome(genome, setup)
    out = []
    for i in range(len(genome)):
        reduced = genome[:i] + genome[i + 1 :]
        reduced_score = score_genome(reduced, setup) if reduced else 0
        out.append(GeneContribution(i, full - reduced_score))
    return out


def essential_count(genome: Genome, setup: GameSetup) -> int:
    return sum(1 for c in gene_contributions(genome, setup) if c.essential)


def mean_lotb(contributions: Sequence[GeneContribution]) -> float:
    return sum(c.lotb for c in contributions) / len(contributions)


def robustness(
    genome: Genome,
    setup: GameSetup,
    point_rate: float,
    rng: np.random.Generator,
    reps: int = 64,
) -> float:
    """Mean score over ``reps`` independently point-mutated copies.

    One mutation step per copy at the trial's per-site rate; gene add and
    remove events are not applied.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    total = 0
    for _ in range(reps):
        mutated = [Gene(point_mutate(g.sequence, point_rate, rng), g.start) for g in genome]
        total += score_genome(mutated, setup)
    return total / reps


def random_opponents(
    count: int,
    grid: GridConfig,
    rng: np.random.Generator,
    health: int = 3,
) -> tuple[Opponent, ...]:
    """Uniform opponent placements avoiding the numbered player start
    squares, with uniform fire directions.  Positions may repeat."""
    if count < 1:
        raise ValueError("count must be >= 1")
    forbidden = set(corner_positions(grid.size))
    if grid.size * grid.size <= len(forbidden):
        raise ValueError("grid has no legal opponent squares")
    directions = ("up", "right", "down", "left")
    out = []
    for _ in range(count):
        while True:
            pos = (int(rng.integers(grid.size)), int(rng.integers(grid.size)))
            if pos not in forbidden:
                break
        out.append(Opponent(pos, directions[int(rng.integers(4))], health=health))
    return tuple(out)


def random_opponent_sets(
    n_sets: int,
    count: int,
    grid: GridConfig,
    rng: np.random.Generator,
    health: int = 3,
) -> list[tuple[Opponent, ...]]:
    """A shared batch of opponent layouts, generated once per analysis so
    every genome in the batch is measured against the same environments."""
    return [random_opponents(count, grid, rng, health=health) for _ in range(n_sets)]


def plasticity(
    genome: Genome,
    setup: GameSetup,
    opponent_sets: Sequence[tuple[Opponent, ...]],
) -> float:
    """Mean score across a fixed batch of opponent layouts."""
    if not opponent_sets:
        raise ValueError("need at least one opponent layout")
    total = 0
    for opponents in opponent_sets:
        arena = replace(setup.arena, opponents=tuple(opponents))
        total += score_genome(genome, replace(setup, arena=arena))
    return total / len(opponent_sets)


def evolvability(
    genome: Genome,
    config,
    opponent_sets: Sequence[tuple[Opponent, ...]],
    rng: np.random.Generator,
    rounds: int = 32,
    horizon: int = 64,
) -> float:
    """Mean endpoint plasticity over independent evolutionary lineages.

    Each lineage evolves the genome for ``horizon`` generations under the
    trial's own regime with gene events enabled, then its endpoint is
    scored against the shared opponent layouts.
    """
    from .evolution import Individual, next_generation  # deferred: two-way dependency

    if rounds < 1 or horizon < 0:
        raise ValueError("need rounds >= 1 and horizon >= 0")
    setup = config.game_setup()
    total = 0.0
    for _ in range(rounds):
        population = [Individual(list(genome), score_genome(genome, setup))]
        for _ in range(horizon):
            population = next_generation(population, config, rng, gene_events=True)
        total += plasticity(population[0].genome, setup, opponent_sets)
    return total / rounds
