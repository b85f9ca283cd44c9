"""Deterministic grid-combat session engine.

One session: player characters executing fixed action lists and stationary
opponents firing ranged attacks, on an n x n grid with hard boundaries.
Each tick, living players act once in priority order (priority 0 first),
then living opponents fire in configuration order.  Every action is fully
resolved, deaths included, before the next actor moves.  The session ends
the moment one side is depleted, or at the end of the tick in which every
living player has exhausted its action list.

Scoring note: the score is damage dealt to opponents minus total player
health lost (from opponent fire and friendly fire alike).  The maximum is
reached exactly when every opponent dies and no player is ever hit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

CARDINALS = ("up", "right", "down", "left")
DIR_CODE = {"up": 0, "right": 1, "down": 2, "left": 3}
# y grows upward: "up" increases y, "down" decreases it.
DX = (0, 1, 0, -1)
DY = (1, 0, -1, 0)

PLAYER = "player"
OPPONENT = "opponent"
MELEE = "melee"
RANGED = "ranged"

MOVE = "move"
ATTACK = "attack"

OPPONENTS_DEPLETED = "opponents_depleted"
PLAYERS_DEPLETED = "players_depleted"
ACTIONS_EXHAUSTED = "actions_exhausted"

DEFAULT_OPPONENT_HEALTH = 3
DEFAULT_PLAYER_HEALTH = 5

TRACE_HEADER = "# arenaevo session-trace v1"


class ConfigurationError(ValueError):
    """A session was configured with invalid geometry or an empty team."""


@dataclass(frozen=True)
class GridConfig:
    """Square arena geometry plus the tick budget.

    ``max_ticks`` of None means "longest action list in the team", which is
    the natural budget because each living player consumes one action per
    tick.
    """

    size: int
    max_ticks: int | None = None

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ConfigurationError(f"grid size must be >= 2, got {self.size}")
        if self.max_ticks is not None and self.max_ticks < 1:
            raise ConfigurationError("max_ticks must be positive")

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.size and 0 <= y < self.size


@dataclass(frozen=True)
class Opponent:
    """A stationary opponent that fires a ranged attack every tick."""

    position: tuple[int, int]
    fire_direction: str
    health: int = DEFAULT_OPPONENT_HEALTH

    def __post_init__(self) -> None:
        if self.fire_direction not in DIR_CODE:
            raise ConfigurationError(f"bad direction {self.fire_direction!r}")
        if self.health < 1:
            raise ConfigurationError("opponent health must be positive")


OpponentConfig = Sequence[Opponent]


@dataclass(frozen=True)
class Action:
    direction: str
    verb: str  # "move" or "attack"; attacks resolve per the actor's attack kind

    def __post_init__(self) -> None:
        if self.direction not in DIR_CODE:
            raise ConfigurationError(f"bad direction {self.direction!r}")
        if self.verb not in (MOVE, ATTACK):
            raise ConfigurationError(f"bad verb {self.verb!r}")


@dataclass(slots=True)
class Character:
    """Live per-session character state (players and opponents alike)."""

    id: int
    side: str
    attack_kind: str
    x: int
    y: int
    health: int
    priority: int  # lower resolves earlier and is targeted first in a stack
    codes: np.ndarray | None = None  # player action codes: dir + 4*is_attack
    fire_direction: int | None = None  # opponent loop direction
    alive: bool = True

    @property
    def label(self) -> str:
        return f"p{self.id}" if self.side == PLAYER else f"o{self.id}"


@dataclass
class SessionState:
    """Full mid-session state; exposed for ray tests and trace tooling."""

    grid: GridConfig
    friendly_fire: bool
    players: list[Character]
    opponents: list[Character]
    tick: int = 0
    damage_to_opponents: int = 0
    player_health_lost: int = 0
    alive_players: int = 0
    alive_opponents: int = 0

    @property
    def characters(self) -> list[Character]:
        return self.players + self.opponents


@dataclass(frozen=True)
class SessionOutcome:
    score: int
    ticks_elapsed: int
    end_reason: str
    damage_to_opponents: int
    player_health_lost: int
    per_character_final_health: tuple[int, ...]  # players first, then opponents


def encode_actions(actions: Sequence[Action] | np.ndarray) -> np.ndarray:
    """Pack an action list into uint8 codes (direction + 4 if attack)."""
    if isinstance(actions, np.ndarray):
        return actions
    codes = np.empty(len(actions), dtype=np.uint8)
    for i, a in enumerate(actions):
        codes[i] = DIR_CODE[a.direction] + (4 if a.verb == ATTACK else 0)
    return codes


def decode_action_code(code: int) -> Action:
    return Action(CARDINALS[code & 3], ATTACK if code >= 4 else MOVE)


def compute_max_score(opponents: OpponentConfig) -> int:
    """Best possible score: every opponent depleted, zero player losses."""
    return sum(o.health for o in opponents)


def trace_ray(
    state: SessionState,
    origin: tuple[int, int],
    direction: str | int,
    shooter: Character,
) -> Character | None:
    """First character a ray from ``origin`` hits, or None for the boundary.

    Eligibility: opponents never hit other opponents (rays pass through),
    and with friendly fire off a player's rays pass through teammates
    entirely.  Within the first square holding an eligible target the
    lowest ``priority`` value wins.  Squares at the origin itself are never
    hit ("strictly beyond").
    """
    d = DIR_CODE[direction] if isinstance(direction, str) else direction
    return _find_target(state, shooter, origin[0], origin[1], d, melee=False)


def _find_target(
    state: SessionState,
    shooter: Character,
    sx: int,
    sy: int,
    d: int,
    melee: bool,
) -> Character | None:
    dx = DX[d]
    dy = DY[d]
    shooter_is_player = shooter.side == PLAYER
    ff = state.friendly_fire
    best = None
    best_dist = 1 << 30
    best_prio = 1 << 30
    for c in state.players if not shooter_is_player or ff else ():
        if not c.alive or c is shooter:
            continue
        if dx:
            if c.y != sy:
                continue
            dist = (c.x - sx) * dx
        else:
            if c.x != sx:
                continue
            dist = (c.y - sy) * dy
        if dist <= 0 or (melee and dist != 1):
            continue
        if dist < best_dist or (dist == best_dist and c.priority < best_prio):
            best, best_dist, best_prio = c, dist, c.priority
    if shooter_is_player:
        for c in state.opponents:
            if not c.alive:
                continue
            if dx:
                if c.y != sy:
                    continue
                dist = (c.x - sx) * dx
            else:
                if c.x != sx:
                    continue
                dist = (c.y - sy) * dy
            if dist <= 0 or (melee and dist != 1):
                continue
            if dist < best_dist or (dist == best_dist and c.priority < best_prio):
                best, best_dist, best_prio = c, dist, c.priority
    return best


def run_session(
    team: Sequence[tuple[Sequence[Action] | np.ndarray, tuple[int, int], str]],
    opponents: OpponentConfig,
    grid: GridConfig,
    friendly_fire: bool = False,
    player_health: int = DEFAULT_PLAYER_HEALTH,
    trace: list[str] | None = None,
) -> SessionOutcome:
    """Run one full session to termination and return its ledger.

    ``team`` entries are (action list, start position, attack kind).  The
    call is a pure function of its arguments: identical inputs give a
    bit-identical outcome.
    """
    if not team:
        raise ConfigurationError("team must not be empty")
    if player_health < 1:
        raise ConfigurationError("player health must be positive")
    players: list[Character] = []
    for i, (actions, start, kind) in enumerate(team):
        x, y = start
        if not grid.contains(x, y):
            raise ConfigurationError(f"player {i} start {start} is off-grid")
        if kind not in (MELEE, RANGED):
            raise ConfigurationError(f"bad attack kind {kind!r}")
        codes = encode_actions(actions)
        if len(codes) == 0:
            raise ConfigurationError(f"player {i} has an empty action list")
        players.append(
            Character(i, PLAYER, kind, x, y, player_health, i, codes=codes)
        )
    opps: list[Character] = []
    for j, opp in enumerate(opponents):
        x, y = opp.position
        if not grid.contains(x, y):
            raise ConfigurationError(f"opponent {j} position {opp.position} is off-grid")
        opps.append(
            Character(
                j,
                OPPONENT,
                RANGED,
                x,
                y,
                opp.health,
                len(team) + j,
                fire_direction=DIR_CODE[opp.fire_direction],
            )
        )
    state = SessionState(
        grid,
        friendly_fire,
        players,
        opps,
        alive_players=len(players),
        alive_opponents=len(opps),
    )
    if trace is not None:
        trace.append(TRACE_HEADER)

    if state.alive_opponents == 0:
        return _finish(state, 0, OPPONENTS_DEPLETED)

    max_ticks = grid.max_ticks
    if max_ticks is None:
        max_ticks = max(len(p.codes) for p in players)

    size = grid.size
    for t in range(max_ticks):
        state.tick = t + 1
        for p in players:
            if not p.alive or t >= len(p.codes):
                continue
            code = int(p.codes[t])
            d = code & 3
            if code < 4:
                nx = p.x + DX[d]
                ny = p.y + DY[d]
                if 0 <= nx < size and 0 <= ny < size:
                    p.x = nx
                    p.y = ny
                    if trace is not None:
                        trace.append(f"{t + 1} {p.label} move_{CARDINALS[d]} ok")
                elif trace is not None:
                    trace.append(f"{t + 1} {p.label} move_{CARDINALS[d]} blocked")
            else:
                victim = _find_target(state, p, p.x, p.y, d, melee=p.attack_kind == MELEE)
                if victim is not None:
                    _apply_hit(state, victim)
                    if trace is not None:
                        trace.append(
                            f"{t + 1} {p.label} {p.attack_kind}_{CARDINALS[d]}"
                            f" hit {victim.label} {victim.health + 1}->{victim.health}"
                        )
                    if state.alive_opponents == 0:
                        return _finish(state, t + 1, OPPONENTS_DEPLETED)
                    if state.alive_players == 0:
                        return _finish(state, t + 1, PLAYERS_DEPLETED)
                elif trace is not None:
                    trace.append(f"{t + 1} {p.label} {p.attack_kind}_{CARDINALS[d]} miss")
        for o in opps:
            if not o.alive:
                continue
            victim = _find_target(state, o, o.x, o.y, o.fire_direction, melee=False)
            if victim is not None:
                _apply_hit(state, victim)
                if trace is not None:
                    trace.append(
                        f"{t + 1} {o.label} fire_{CARDINALS[o.fire_direction]}"
                        f" hit {victim.label} {victim.health + 1}->{victim.health}"
                    )
                if state.alive_players == 0:
                    return _finish(state, t + 1, PLAYERS_DEPLETED)
            elif trace is not None:
                trace.append(f"{t + 1} {o.label} fire_{CARDINALS[o.fire_direction]} miss")
        done = True
        for p in players:
            if p.alive and len(p.codes) > t + 1:
                done = False
                break
        if done:
            return _finish(state, t + 1, ACTIONS_EXHAUSTED)
    # Tick budget drained: nothing further will ever be resolved.
    return _finish(state, max_ticks, ACTIONS_EXHAUSTED)


def _apply_hit(state: SessionState, victim: Character) -> None:
    victim.health -= 1
    if victim.side == OPPONENT:
        state.damage_to_opponents += 1
        if victim.health == 0:
            victim.alive = False
            state.alive_opponents -= 1
    else:
        state.player_health_lost += 1
        if victim.health == 0:
            victim.alive = False
            state.alive_players -= 1


def _finish(state: SessionState, ticks: int, reason: str) -> SessionOutcome:
    healths = tuple(c.health for c in state.players) + tuple(
        c.health for c in state.opponents
    )
    return SessionOutcome(
        score=state.damage_to_opponents - state.player_health_lost,
        ticks_elapsed=ticks,
        end_reason=reason,
        damage_to_opponents=state.damage_to_opponents,
        player_health_lost=state.player_health_lost,
        per_character_final_health=healths,
    )
