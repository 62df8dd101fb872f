from fractions import Fraction
import itertools

import numpy as np
import pytest

from shiftgames.fixtures import g_abs, g_bm, g_ex1, g_loop
from shiftgames.game import History, load_game, pure
from shiftgames.values import (
    NotShiftInvariant,
    ValueFunctionProxy,
    candidate_Y,
    delta_maxmin_strategy,
    discounted_value,
    maxmin_values,
    one_shot_value,
    solve_matrix_game,
    solve_matrix_game_exact,
)

F = Fraction


def test_matching_pennies():
    sol = solve_matrix_game([[1, -1], [-1, 1]])
    assert sol.value == pytest.approx(0, abs=1e-9)
    assert sol.row == pytest.approx([0.5, 0.5])
    assert sol.col == pytest.approx([0.5, 0.5])


def test_one_by_one_matrix():
    sol = solve_matrix_game([[F(7, 3)]])
    assert sol.value == pytest.approx(7 / 3)
    assert sol.row == pytest.approx([1])


def test_two_by_two_with_interior_mix():
    # indifference: 3p + (1-p) = 2(1-p)  ->  p = 1/4, value 3/2
    sol = solve_matrix_game([[3, 0], [1, 2]])
    assert sol.value == pytest.approx(1.5)
    assert sol.row == pytest.approx([0.25, 0.75])
    assert solve_matrix_game_exact([[3, 0], [1, 2]])[0] == F(3, 2)


def test_matrix_value_matches_grid_search():
    rng = np.random.default_rng(3)
    grid = np.linspace(0, 1, 2001)
    for _ in range(5):
        m = rng.integers(-3, 4, size=(2, 2)).astype(float)
        guarantee = max(min(p * m[0, j] + (1 - p) * m[1, j] for j in range(2)) for p in grid)
        assert solve_matrix_game(m).value == pytest.approx(guarantee, abs=2e-3)


def test_one_shot_constant_valuation():
    game = g_loop()
    val, _, _ = one_shot_value(game, [F(5, 2)] * 3, 0, 0)
    assert val == pytest.approx(2.5)


def test_one_shot_parity_valuation_prefers_moving():
    game = g_ex1()
    target = game.index("2")

    def entered_even(history, _a1, _a2, t):
        return F(int(t == target and (history.length + 1) % 2 == 0))

    val, mine, _ = one_shot_value(game, entered_even, History.build(game, [0]), 0, exact=True)
    assert val == 1
    assert mine[1] == 1


def test_one_shot_on_loop_matches_brute_force():
    game = g_loop()
    v2 = maxmin_values(game, 1).values
    val, _, _ = one_shot_value(game, v2, 0, 1)
    m = [[sum(p * F(v2[t]) for t, p in enumerate(game.kernel.rows[0][a1][a2])) for a1 in range(2)] for a2 in range(2)]
    grid = [F(k, 200) for k in range(201)]
    brute = max(min(q * m[0][a1] + (1 - q) * m[1][a1] for a1 in range(2)) for q in grid)
    assert val == pytest.approx(float(brute), abs=1e-9)


def _constant_stage_game():
    return load_game({
        "states": ["1"],
        "actions": {"p1": ["-"], "p2": ["-"]},
        "kernel": [{"from": "1", "a1": "*", "a2": "*", "to": "1", "prob": "1"}],
        "objective": {"p1": {"type": "discounted", "lambda": "1/3", "default_stage": "-7/4"},
                      "p2": {"type": "discounted", "lambda": "1/3", "default_stage": "5/4"}},
    })


def test_discounted_single_state_is_stage_payoff():
    game = _constant_stage_game()
    for lam in (0.5, 0.1):
        assert discounted_value(game, 0, lam)[0].values[0] == pytest.approx(-1.75)


@pytest.mark.parametrize("lam", [0.5, 0.9, 0.99])
def test_big_match_discounted_anchor(lam):
    # closed form: value 1/2 for every discount weight, player 1 stops with probability lam/(1+lam)
    vec, (x1, x2) = discounted_value(g_bm(), 0, lam)
    assert vec.values[0] == pytest.approx(0.5, abs=1e-8)
    assert x1[0][0] == pytest.approx(lam / (1 + lam), abs=1e-6)
    assert x2[0] == pytest.approx([0.5, 0.5], abs=1e-6)


def test_absorbing_game_values_equal_gamma():
    assert discounted_value(g_abs(), 0, 0.3)[0].values == pytest.approx((-1,))
    assert maxmin_values(g_abs(), 1).values[0] == 1


def test_big_match_average_value_matches_discounted_trend():
    vec = maxmin_values(g_bm(), 0)
    trend = [discounted_value(g_bm(), 0, 2.0 ** -k)[0].values[0] for k in (6, 8, 10)]
    assert vec.values[0] == pytest.approx(trend[-1], abs=1e-6)
    assert vec.values[0] == pytest.approx(0.5, abs=1e-6)


def test_parity_objective_is_rejected():
    with pytest.raises(NotShiftInvariant, match="objective not shift-invariant"):
        maxmin_values(g_ex1(), 0)


def test_loop_values_exact():
    v1, v2 = maxmin_values(g_loop(), 0), maxmin_values(g_loop(), 1)
    assert v1.exact and v2.exact
    assert v1.fractions() == (F(-2), F(-2), F(-1))
    assert v2.fractions() == (F(1), F(1), F(2))


def test_candidate_y_constant_optimum_is_singleton():
    y = candidate_Y(g_bm(), 1)
    assert y[0] == ((F(1, 2), F(1, 2)),)


def test_candidate_y_contains_limit_of_big_match():
    reps = candidate_Y(g_bm(), 0)[0]
    assert min(float(x[0]) for x in reps) < 0.05


def _switch_game():
    # a repeats a stage payoff of -1; b pays -2 once and then absorbs at -1/2
    return load_game({
        "states": ["1", "t"],
        "actions": {"p1": ["a", "b"], "p2": ["-"]},
        "kernel": [{"from": "1", "a1": "a", "a2": "*", "to": "1", "prob": "1"},
                   {"from": "1", "a1": "b", "a2": "*", "to": "t", "prob": "1"}],
        "absorbing": {"t": {"g1": "-1/2", "g2": "1"}},
        "objective": {
            "p1": {"type": "average", "stage": [{"state": "1", "a1": "a", "value": "-1"},
                                                {"state": "1", "a1": "b", "value": "-2"}]},
            "p2": {"type": "average", "default_stage": "1"},
        },
    })


def test_candidate_y_alternating_optima_give_two_representatives():
    # b is optimal iff -2 lam - (1 - lam)/2 > -1, i.e. lam < 1/3
    game = _switch_game()
    reps = candidate_Y(game, 0, grid=(0.9, 0.1, 0.8, 0.2))[0]
    assert set(reps) == {pure(0, 2), pure(1, 2)}


def test_delta_maxmin_with_constant_proxy_is_any_action():
    game = g_loop()
    strat = delta_maxmin_strategy(game, 0, 0.01, ValueFunctionProxy(0, (F(-2),) * 3, 0.01))
    assert strat.sum(axis=1) == pytest.approx(np.ones(3))


def test_delta_maxmin_matches_discounted_optimum_on_big_match():
    # on the proxy (1/2, 1, 0) the one-shot optimum is pure B, the limit of the discounted mixes
    lam = 2.0 ** -6
    vec, (x1, _) = discounted_value(g_bm(), 0, lam)
    strat = delta_maxmin_strategy(g_bm(), 0, 0.01, ValueFunctionProxy(0, vec.values, 0.01))
    assert strat[0] == pytest.approx([0.0, 1.0], abs=1e-9)
    assert strat[0] == pytest.approx(x1[0], abs=lam)


def test_delta_maxmin_on_absorbing_game_single_action():
    strat = delta_maxmin_strategy(g_abs(), 0, 0.01, ValueFunctionProxy(0, (F(-1),), 0.01))
    assert strat.tolist() == [[1.0]]


def test_stage_sums_are_probabilities():
    for game in (g_loop(), g_bm()):
        for s in range(game.n_states):
            for a1, a2 in itertools.product(range(game.n_actions[0]), range(game.n_actions[1])):
                assert sum(game.kernel.rows[s][a1][a2]) == 1
