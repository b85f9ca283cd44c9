"""Default arena layout and the genome-to-session bridge."""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import (
    DEFAULT_PLAYER_HEALTH,
    GridConfig,
    Opponent,
    SessionOutcome,
    compute_max_score,
    run_session,
)
from .genome import Genome, corner_positions

DEFAULT_GRID_SIZE = 8


def default_opponents() -> tuple[Opponent, ...]:
    # Interior ring, each firing along a ring edge or outward; every
    # opponent can be engaged from at least one square outside all fire
    # lanes, so a single well-evolved character can reach the maximum
    # score from corner 1 with zero losses (melee or ranged).
    return (
        Opponent((2, 2), "right"),
        Opponent((5, 2), "down"),
        Opponent((5, 5), "left"),
        Opponent((2, 5), "up"),
    )


@dataclass(frozen=True)
class ArenaSetup:
    grid: GridConfig
    opponents: tuple[Opponent, ...]

    @property
    def max_score(self) -> int:
        return compute_max_score(self.opponents)


def default_arena() -> ArenaSetup:
    return ArenaSetup(GridConfig(DEFAULT_GRID_SIZE), default_opponents())


@dataclass(frozen=True)
class GameSetup:
    """Everything needed to score a genome: arena plus team-wide rules."""

    arena: ArenaSetup = field(default_factory=default_arena)
    attack_kind: str = "ranged"
    friendly_fire: bool = False
    player_health: int = DEFAULT_PLAYER_HEALTH

    @property
    def max_score(self) -> int:
        return self.arena.max_score

    @property
    def grid_size(self) -> int:
        return self.arena.grid.size

    @property
    def start_squares(self) -> tuple[tuple[int, int], ...]:
        return corner_positions(self.arena.grid.size)


def build_team(genome: Genome, setup: GameSetup):
    return [(g.codes, g.start, setup.attack_kind) for g in genome]


def run_genome(genome: Genome, setup: GameSetup, trace: list[str] | None = None) -> SessionOutcome:
    return run_session(
        build_team(genome, setup),
        setup.arena.opponents,
        setup.arena.grid,
        friendly_fire=setup.friendly_fire,
        player_health=setup.player_health,
        trace=trace,
    )


def score_genome(genome: Genome, setup: GameSetup) -> int:
    return run_genome(genome, setup).score
