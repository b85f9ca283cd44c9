"""Session engine tests: hand-traced oracles, ray rules, invariants."""

from __future__ import annotations

import numpy as np
import pytest

from arenaevo.engine import (
    ACTIONS_EXHAUSTED,
    CARDINALS,
    DIR_CODE,
    DX,
    DY,
    OPPONENTS_DEPLETED,
    PLAYERS_DEPLETED,
    Action,
    Character,
    ConfigurationError,
    GridConfig,
    Opponent,
    SessionState,
    compute_max_score,
    encode_actions,
    run_session,
    trace_ray,
)

A = Action


def moves(direction, n):
    return [A(direction, "move")] * n


def attacks(direction, n):
    return [A(direction, "attack")] * n


# ---------------------------------------------------------------- sessions


def test_single_shot_kill_hand_trace():
    # Ranged player at (0,0) fires right; opponent at (2,0) with one health
    # dies on tick 1 and the session ends immediately.
    out = run_session(
        [(attacks("right", 1), (0, 0), "ranged")],
        [Opponent((2, 0), "up", health=1)],
        GridConfig(3),
    )
    assert out.end_reason == OPPONENTS_DEPLETED
    assert out.ticks_elapsed == 1
    assert out.damage_to_opponents == 1
    assert out.player_health_lost == 0
    assert out.score == 1
    assert out.per_character_final_health == (5, 0)


def test_moves_only_exhausts_with_zero_score():
    # Opponents fire along row 7; the player never leaves row 0.
    out = run_session(
        [(moves("right", 4) + moves("left", 4), (0, 0), "ranged")],
        [Opponent((0, 7), "right"), Opponent((7, 7), "left")],
        GridConfig(8),
    )
    assert out.end_reason == ACTIONS_EXHAUSTED
    assert out.ticks_elapsed == 8
    assert out.score == 0


def test_friendly_fire_melee_hits_teammate():
    # First player melee-attacks up into the second player's square while
    # the single opponent is unreachable; net score is -1 at exhaustion.
    out = run_session(
        [
            (attacks("up", 1), (0, 0), "melee"),
            (attacks("up", 1), (0, 1), "melee"),
        ],
        [Opponent((4, 4), "up")],
        GridConfig(5),
        friendly_fire=True,
    )
    assert out.end_reason == ACTIONS_EXHAUSTED
    assert out.ticks_elapsed == 1
    assert out.player_health_lost == 1
    assert out.score == -1
    assert out.per_character_final_health[:2] == (5, 4)


def test_safe_mode_ignores_teammates_entirely():
    out = run_session(
        [
            (attacks("up", 1), (0, 0), "melee"),
            (attacks("up", 1), (0, 1), "melee"),
        ],
        [Opponent((4, 4), "up")],
        GridConfig(5),
        friendly_fire=False,
    )
    assert out.player_health_lost == 0
    assert out.score == 0


def test_safe_ray_passes_through_teammate_to_opponent():
    # Teammate on the ray path must be transparent with friendly fire off.
    out = run_session(
        [
            (attacks("right", 3), (0, 3), "ranged"),
            (moves("up", 3), (2, 3), "ranged"),
        ],
        [Opponent((5, 3), "up", health=3)],
        GridConfig(8),
        friendly_fire=False,
    )
    assert out.damage_to_opponents == 3
    assert out.player_health_lost == 0
    assert out.end_reason == OPPONENTS_DEPLETED


def test_friendly_fire_ray_stops_at_teammate():
    out = run_session(
        [
            (attacks("right", 1) + moves("up", 2), (0, 3), "ranged"),
            (moves("up", 3), (2, 3), "ranged"),
        ],
        [Opponent((5, 3), "up", health=3)],
        GridConfig(8),
        friendly_fire=True,
    )
    # Tick 1: p0's ray hits p1 at (2,3); p1 then moves out of the row.
    assert out.player_health_lost >= 1
    assert out.per_character_final_health[1] == 4


def test_opponent_rays_pass_through_opponents():
    # Front opponent sits between the firing opponent and the player.
    out = run_session(
        [(moves("up", 1) + moves("down", 1), (0, 0), "ranged")],
        [Opponent((4, 0), "left", health=3), Opponent((2, 0), "up", health=3)],
        GridConfig(5),
    )
    # Player is hit at (0,0) on tick 2 despite the opponent at (2,0).
    assert out.player_health_lost == 1


def test_opponents_fire_every_tick():
    out = run_session(
        [(moves("up", 1) + moves("down", 1) + moves("up", 1) + moves("down", 1), (0, 0), "ranged")],
        [Opponent((4, 1), "left", health=3)],
        GridConfig(5),
    )
    # The player stands in the lane at (0,1) on ticks 1 and 3, and out of
    # it on ticks 2 and 4: exactly two hits.
    assert out.player_health_lost == 2


def test_player_death_removes_remaining_actions():
    out = run_session(
        [
            (moves("up", 1) + attacks("right", 9), (0, 1), "ranged"),
            (moves("right", 10), (0, 0), "ranged"),
        ],
        [Opponent((4, 2), "left", health=9)],
        GridConfig(5),
        player_health=2,
    )
    # p0 steps into the lane at (0,2) and dies after two ticks there; its
    # remaining attacks stop, so the opponent survives on 9-1=8 health.
    assert out.per_character_final_health[0] == 0
    assert out.per_character_final_health[2] == 8
    assert out.end_reason == ACTIONS_EXHAUSTED


def test_all_players_dead_ends_session():
    out = run_session(
        [(moves("up", 1) + moves("down", 200), (0, 1), "ranged")],
        [Opponent((4, 2), "left", health=50)],
        GridConfig(5),
        player_health=1,
    )
    assert out.end_reason == PLAYERS_DEPLETED
    assert out.ticks_elapsed == 1
    assert out.score == -1


def test_boundary_move_is_noop_and_consumes_action():
    out = run_session(
        [(moves("left", 2), (0, 0), "ranged")],
        [Opponent((2, 2), "up")],
        GridConfig(3),
    )
    assert out.end_reason == ACTIONS_EXHAUSTED
    assert out.ticks_elapsed == 2


def test_melee_on_empty_square_is_noop():
    out = run_session(
        [(attacks("right", 2), (0, 0), "melee")],
        [Opponent((2, 2), "up")],
        GridConfig(3),
    )
    assert out.score == 0
    assert out.ticks_elapsed == 2


def test_melee_only_hits_adjacent():
    out = run_session(
        [(attacks("right", 1), (0, 0), "melee")],
        [Opponent((2, 0), "up", health=1)],
        GridConfig(3),
    )
    assert out.damage_to_opponents == 0


def test_zero_opponents_ends_immediately():
    out = run_session(
        [(moves("up", 3), (0, 0), "ranged")],
        [],
        GridConfig(3),
    )
    assert out.end_reason == OPPONENTS_DEPLETED
    assert out.ticks_elapsed == 0
    assert out.score == 0


def test_max_ticks_caps_session():
    out = run_session(
        [(moves("up", 50), (0, 0), "ranged")],
        [Opponent((2, 2), "up")],
        GridConfig(3, max_ticks=5),
    )
    assert out.ticks_elapsed == 5
    assert out.end_reason == ACTIONS_EXHAUSTED


def test_configuration_errors():
    with pytest.raises(ConfigurationError):
        run_session([], [Opponent((0, 0), "up")], GridConfig(3))
    with pytest.raises(ConfigurationError):
        run_session([(moves("up", 1), (3, 0), "ranged")], [], GridConfig(3))
    with pytest.raises(ConfigurationError):
        run_session([(moves("up", 1), (0, 0), "ranged")], [Opponent((9, 0), "up")], GridConfig(3))
    with pytest.raises(ConfigurationError):
        run_session([([], (0, 0), "ranged")], [], GridConfig(3))
    with pytest.raises(ConfigurationError):
        GridConfig(1)
    with pytest.raises(ConfigurationError):
        Opponent((0, 0), "north")


def test_compute_max_score():
    assert compute_max_score([Opponent((0, 0), "up", health=3)] * 4) == 12
    assert compute_max_score([]) == 0
    assert (
        compute_max_score([Opponent((0, 0), "up", health=1), Opponent((1, 1), "up", health=5)])
        == 6
    )


# ---------------------------------------------------------------- ray rules


def make_state(players, opponents, friendly_fire=False, size=8):
    plist = [
        Character(i, "player", kind, x, y, 5, i, codes=np.zeros(1, dtype=np.uint8))
        for i, (x, y, kind) in enumerate(players)
    ]
    olist = [
        Character(j, "opponent", "ranged", x, y, 3, len(plist) + j, fire_direction=DIR_CODE[d])
        for j, (x, y, d) in enumerate(opponents)
    ]
    return SessionState(
        GridConfig(size),
        friendly_fire,
        plist,
        olist,
        alive_players=len(plist),
        alive_opponents=len(olist),
    )


def test_ray_empty_row_hits_boundary():
    state = make_state([(0, 3, "ranged")], [])
    assert trace_ray(state, (0, 3), "right", state.players[0]) is None


def test_ray_stacked_characters_highest_priority_wins():
    state = make_state([(0, 3, "ranged")], [(4, 3, "up"), (4, 3, "up")], friendly_fire=True)
    hit = trace_ray(state, (0, 3), "right", state.players[0])
    assert hit is state.opponents[0]  # priority 1 beats priority 2


def test_ray_skips_teammate_without_friendly_fire():
    state = make_state([(0, 3, "ranged"), (2, 3, "ranged")], [(5, 3, "up")])
    hit = trace_ray(state, (0, 3), "right", state.players[0])
    assert hit is state.opponents[0]


def test_ray_hits_teammate_with_friendly_fire():
    state = make_state([(0, 3, "ranged"), (2, 3, "ranged")], [(5, 3, "up")], friendly_fire=True)
    hit = trace_ray(state, (0, 3), "right", state.players[0])
    assert hit is state.players[1]


def test_opponent_ray_ignores_opponents():
    state = make_state([(0, 3, "ranged")], [(6, 3, "left"), (3, 3, "up")])
    hit = trace_ray(state, (6, 3), "left", state.opponents[0])
    assert hit is state.players[0]


def test_ray_never_hits_origin_square():
    # Co-located characters are "not strictly beyond" and cannot be hit.
    state = make_state([(2, 2, "ranged"), (2, 2, "ranged")], [(2, 2, "up")], friendly_fire=True)
    for d in CARDINALS:
        hit = trace_ray(state, (2, 2), d, state.players[0])
        assert hit is None


def reference_ray(state, origin, direction, shooter):
    """Independent oracle: walk squares outward, apply the eligibility
    filter per square, pick the lowest priority value among occupants."""
    d = DIR_CODE[direction]
    x, y = origin
    while True:
        x += DX[d]
        y += DY[d]
        if not state.grid.contains(x, y):
            return None
        here = []
        for c in state.characters:
            if not c.alive or c is shooter or (c.x, c.y) != (x, y):
                continue
            if c.side == "opponent" and shooter.side == "opponent":
                continue
            if c.side == "player" and shooter.side == "player" and not state.friendly_fire:
                continue
            here.append(c)
        if here:
            return min(here, key=lambda c: c.priority)


def test_ray_matches_reference_on_random_states():
    rng = np.random.default_rng(42)
    for _ in range(300):
        n_players = int(rng.integers(1, 5))
        n_opps = int(rng.integers(0, 4))
        ff = bool(rng.integers(2))
        players = [(int(rng.integers(6)), int(rng.integers(6)), "ranged") for _ in range(n_players)]
        opps = [
            (int(rng.integers(6)), int(rng.integers(6)), CARDINALS[rng.integers(4)])
            for _ in range(n_opps)
        ]
        state = make_state(players, opps, friendly_fire=ff, size=6)
        shooter = state.characters[int(rng.integers(len(state.characters)))]
        direction = CARDINALS[rng.integers(4)]
        got = trace_ray(state, (shooter.x, shooter.y), direction, shooter)
        want = reference_ray(state, (shooter.x, shooter.y), direction, shooter)
        assert got is want


# ---------------------------------------------------------------- invariants


def random_session_inputs(rng, size=6):
    n_players = int(rng.integers(1, 5))
    n_opps = int(rng.integers(1, 5))
    team = []
    for _ in range(n_players):
        codes = rng.integers(0, 8, size=int(rng.integers(1, 40))).astype(np.uint8)
        start = (int(rng.integers(size)), int(rng.integers(size)))
        kind = "melee" if rng.integers(2) else "ranged"
        team.append((codes, start, kind))
    opps = [
        Opponent(
            (int(rng.integers(size)), int(rng.integers(size))),
            CARDINALS[rng.integers(4)],
            health=int(rng.integers(1, 4)),
        )
        for _ in range(n_opps)
    ]
    ff = bool(rng.integers(2))
    return team, opps, GridConfig(size), ff


def test_determinism_and_conservation_on_random_sessions():
    rng = np.random.default_rng(7)
    for _ in range(400):
        team, opps, grid, ff = random_session_inputs(rng)
        out1 = run_session(team, opps, grid, friendly_fire=ff)
        out2 = run_session(team, opps, grid, friendly_fire=ff)
        assert out1 == out2
        # conservation: ledger equals the health decrements
        opp_start = sum(o.health for o in opps)
        opp_end = sum(out1.per_character_final_health[len(team):])
        assert out1.damage_to_opponents == opp_start - opp_end
        player_end = sum(out1.per_character_final_health[: len(team)])
        assert out1.player_health_lost == 5 * len(team) - player_end
        assert out1.score == out1.damage_to_opponents - out1.player_health_lost
        assert -5 * len(team) <= out1.score <= opp_start
        if out1.score == opp_start:
            assert out1.end_reason == OPPONENTS_DEPLETED
            assert out1.player_health_lost == 0


def test_early_termination_masks_trailing_actions():
    # Appending arbitrary junk after the winning tick cannot change the
    # outcome: the session ends the moment the last opponent dies.
    rng = np.random.default_rng(11)
    base = [(attacks("right", 3), (0, 0), "ranged"), (moves("up", 3), (0, 2), "melee")]
    opps = [Opponent((4, 0), "up", health=3)]
    grid = GridConfig(5)
    ref = run_session(base, opps, grid, friendly_fire=True)
    assert ref.end_reason == OPPONENTS_DEPLETED
    for _ in range(20):
        padded = [
            (
                np.concatenate(
                    [encode_actions(acts), rng.integers(0, 8, size=30).astype(np.uint8)]
                ),
                start,
                kind,
            )
            for (acts, start, kind) in base
        ]
        out = run_session(padded, opps, grid, friendly_fire=True)
        assert out == ref


def test_score_upper_bound_equality_condition():
    out = run_session(
        [(attacks("right", 3), (0, 0), "ranged")],
        [Opponent((2, 0), "up", health=3)],
        GridConfig(3),
    )
    assert out.score == 3 == compute_max_score([Opponent((2, 0), "up", health=3)])
    assert out.end_reason == OPPONENTS_DEPLETED


# ---------------------------------------------------------------- trace


def test_golden_trace():
    trace = []
    run_session(
        [(attacks("right", 1), (0, 0), "ranged")],
        [Opponent((2, 0), "up", health=1)],
        GridConfig(3),
        trace=trace,
    )
    assert trace == [
        "# arenaevo session-trace v1",
        "1 p0 ranged_right hit o0 1->0",
    ]


def test_trace_records_moves_and_misses():
    trace = []
    run_session(
        [(moves("left", 1) + attacks("up", 1), (0, 0), "ranged")],
        [Opponent((2, 2), "down", health=2)],
        GridConfig(3),
        trace=trace,
    )
    assert trace == [
        "# arenaevo session-trace v1",
        "1 p0 move_left blocked",
        "1 o0 fire_down miss",
        "2 p0 ranged_up miss",
        "2 o0 fire_down miss",
    ]
