"""Deterministic grid-combat arena with a neutral-evolution experiment harness."""

__version__ = "0.1.0"

from .arena import ArenaSetup, GameSetup, default_arena, default_opponents
from .engine import (
    Action,
    ConfigurationError,
    GridConfig,
    Opponent,
    SessionOutcome,
    compute_max_score,
    run_session,
    trace_ray,
)
from .genome import (
    DEFAULT_TOKEN_TABLE,
    Gene,
    TokenTable,
    apply_gene_events,
    decode_gene,
    genome_from_text,
    genome_to_text,
    point_mutate,
    random_gene,
    resolve_start,
)

__all__ = [
    "Action",
    "ArenaSetup",
    "ConfigurationError",
    "DEFAULT_TOKEN_TABLE",
    "GameSetup",
    "Gene",
    "GridConfig",
    "Opponent",
    "SessionOutcome",
    "TokenTable",
    "apply_gene_events",
    "compute_max_score",
    "decode_gene",
    "default_arena",
    "default_opponents",
    "genome_from_text",
    "genome_to_text",
    "point_mutate",
    "random_gene",
    "resolve_start",
    "run_session",
    "trace_ray",
    "__version__",
]
