from fractions import Fraction

import pytest

from shiftgames.fixtures import g_abs, g_abs_document, g_ex1, g_ex1_document, g_loop, g_loop_document
from shiftgames.game import (
    Buchi,
    CoBuchi,
    Discounted,
    EntryParity,
    GameError,
    LongRunAverage,
    RecursiveAbsorbing,
    expected_value,
    load_game,
    normalize,
    pure,
    step_distribution,
    uniform,
)

F = Fraction


def test_load_single_absorbing_state():
    game = load_game(g_abs_document())
    assert game.n_states == 1
    assert game.absorbing == {0}
    assert game.gamma[0] == (F(-1), F(1))


def test_load_one_player_game_has_single_opponent_action():
    game = load_game(g_ex1_document())
    assert game.n_states == 3
    assert game.n_actions[1] == 1


def test_rejects_substochastic_row():
    doc = g_loop_document()
    doc["kernel"][0]["prob"] = "9/10"
    with pytest.raises(GameError, match="kernel row not stochastic"):
        load_game(doc)


def test_rejects_unknown_state_reference():
    doc = g_loop_document()
    doc["kernel"][0]["to"] = "nowhere"
    with pytest.raises(GameError):
        load_game(doc)


def test_absorbing_rows_are_self_loops():
    game = g_loop()
    s = game.index("s*")
    for a1 in range(2):
        for a2 in range(2):
            assert game.kernel.rows[s][a1][a2][s] == 1


def test_shift_invariance_flags():
    for cls in (LongRunAverage, Buchi, CoBuchi, RecursiveAbsorbing):
        assert cls.shift_invariant
    assert not Discounted.shift_invariant
    assert not EntryParity.shift_invariant


def test_absorbing_state_is_point_mass():
    game = g_abs()
    for x1, x2 in [(pure(0, 1), pure(0, 1))]:
        assert step_distribution(game, 0, x1, x2) == (F(1),)


def test_one_player_stay_action_keeps_state():
    game = g_ex1()
    dist = step_distribution(game, 0, pure(0, 2), pure(0, 1))
    assert dist == (F(1), F(0), F(0))


def test_uniform_mix_on_loop_state():
    # bilinear expansion: only (a, L) absorbs, probability 1/4
    game = g_loop()
    dist = step_distribution(game, 0, uniform(2), uniform(2))
    assert dist == (F(0), F(3, 4), F(1, 4))
    assert expected_value(game, [F(0), F(0), F(2)], 0, uniform(2), uniform(2)) == F(1, 2)


def _average_doc(g1, g2):
    return {
        "states": ["1"],
        "actions": {"p1": ["a", "b"], "p2": ["-"]},
        "kernel": [{"from": "1", "a1": "*", "a2": "*", "to": "1", "prob": "1"}],
        "objective": {
            "p1": {"type": "average", "default_stage": "-2",
                   "stage": [{"state": "1", "a1": "a", "value": g1[0]}, {"state": "1", "a1": "b", "value": g1[1]}]},
            "p2": {"type": "average", "default_stage": "1",
                   "stage": [{"state": "1", "a1": "a", "value": g2[0]}, {"state": "1", "a1": "b", "value": g2[1]}]},
        },
    }


def test_normalize_shifts_player_two_up():
    game = normalize(load_game(_average_doc(["-1", "-2"], ["0", "1/2"])), F(1, 10))
    values = {game.stage_payoff(1, 0, a, 0) for a in range(2)}
    assert values <= {F(1), F(3, 2)}


def test_normalize_rounds_down_to_grid():
    game = normalize(load_game(_average_doc(["-123/100", "-2"], ["1", "1"])), F(1, 10))
    assert game.stage_payoff(0, 0, 0, 0) == F(-13, 10)


def test_normalize_leaves_normalized_game_alone():
    game = normalize(g_abs(), F(1, 10))
    assert game.gamma == g_abs().gamma


def test_normalize_rejects_nonpositive_grid():
    with pytest.raises(GameError):
        normalize(g_abs(), 0)
