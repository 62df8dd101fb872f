from fractions import Fraction

import pytest

from shiftgames.fixtures import avg_exit_document, g_abs, g_loop_document, rec_quit_document
from shiftgames.game import RecursiveAbsorbing, pure, uniform
from shiftgames.pipeline import load, run_pipeline
from shiftgames.recursive_game import (
    absorption_probability,
    b2_uniform,
    build_auxiliary,
    is_absorbing_pair,
    recursive_epsilon_equilibrium,
    recursive_values,
    stationary_payoffs,
)
from shiftgames.values import maxmin_values

F = Fraction


@pytest.fixture(scope="module")
def loop_run():
    game, family = load(g_loop_document())
    return run_pipeline(game, family, stop="aux")


def test_without_third_family_auxiliary_is_the_game_with_recursive_payoffs():
    game, _ = load(rec_quit_document())
    aux = build_auxiliary(game)
    assert aux.dummy == frozenset()
    assert aux.game.kernel.rows == game.kernel.rows
    assert aux.game.objectives == (RecursiveAbsorbing(F(0)), RecursiveAbsorbing(F(0)))


def test_loop_auxiliary_makes_both_states_dummy(loop_run):
    aux = loop_run.aux
    assert aux.dummy == {0, 1}
    half_exit_half_uniform = (F(1, 4), F(1, 4), F(1, 2))
    for s in (0, 1):
        for a1 in range(2):
            for a2 in range(2):
                assert aux.game.kernel.rows[s][a1][a2] == half_exit_half_uniform


def test_all_absorbing_game_is_absorbed_at_once():
    aux = build_auxiliary(g_abs())
    x = [pure(0, 1)]
    assert absorption_probability(aux, x, x) == [1]


def test_recursive_values_of_absorbing_game_are_gamma():
    game = g_abs()
    res = recursive_values(build_auxiliary(game), (maxmin_values(game, 0), maxmin_values(game, 1)))
    assert res.values[0].fractions() == (F(-1),)
    assert res.values[1].fractions() == (F(1),)


def test_loop_auxiliary_values_dominate_original(loop_run):
    # dummy chain: v(s) = 1/2 gamma + 1/4 v(1) + 1/4 v(2) on both states, so v = gamma
    v2_aux = loop_run.aux_values.values[1].fractions()
    assert v2_aux[:2] == (F(2), F(2))
    assert v2_aux[0] >= loop_run.values[1].fractions()[0]
    assert loop_run.aux_values.violations == []
    assert loop_run.aux_values.values[0].fractions()[:2] == (F(-1), F(-1))


def test_single_dummy_state_profile_has_no_gaps():
    game, family = load(avg_exit_document())
    run = run_pipeline(game, family, stop="aux")
    assert run.aux.dummy == {0}
    assert run.certificate.certified
    assert run.certificate.gaps == (0.0, 0.0)


def test_loop_certificate_absorbs(loop_run):
    cert = loop_run.certificate
    assert cert.certified
    assert absorption_probability(loop_run.aux, cert.x1, cert.x2) == [1, 1, 1]


def test_zero_sum_quitting_game_payoffs_match_values():
    # both players quitting is a saddle point with value -3/2 for player 1
    doc = rec_quit_document()
    doc["absorbing"] = {"u": {"g1": "-1", "g2": "1"}, "v": {"g1": "-2", "g2": "2"}, "w": {"g1": "-3/2", "g2": "3/2"}}
    game, family = load(doc)
    run = run_pipeline(game, family, stop="aux")
    eps = run.certificate.epsilon
    for i in (0, 1):
        v = run.aux_values.values[i].fractions()[0]
        assert abs(run.certificate.payoffs[i][0] - v) <= eps
    assert run.aux_values.values[0].fractions()[0] == F(-3, 2)


def test_dummy_cycle_with_half_exit_absorbs_surely(loop_run):
    x = [uniform(2)] * 3
    assert absorption_probability(loop_run.aux, x, x) == [1, 1, 1]


def test_closed_cycle_never_absorbs():
    game, _ = load(g_loop_document())
    refuse = [pure(1, 2)] * 3
    assert absorption_probability(game, refuse, refuse) == [0, 0, 1]
    assert not is_absorbing_pair(game, refuse, refuse)


def test_stationary_payoffs_use_default_when_not_absorbed():
    game, _ = load(g_loop_document())
    refuse = [pure(1, 2)] * 3
    p1, p2 = stationary_payoffs(game, refuse, refuse)
    assert p1[:2] == (F(-2), F(-2)) and p2[:2] == (F(1), F(1))


def test_b2_keeps_value_preserving_actions(loop_run):
    x1 = [pure(1, 2)] * 3
    out = b2_uniform(loop_run.aux, x1, loop_run.values[1])
    assert out[0] == uniform(2) and out[1] == uniform(2)


def test_uncertified_profile_is_flagged():
    # player 1 alone absorbs and prefers not to: the auxiliary game pays 0 forever, no absorbing profile is stable
    game, _ = load({
        "states": ["1", "s*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [{"from": "1", "a1": "a", "a2": "*", "to": "1", "prob": "1"},
                   {"from": "1", "a1": "b", "a2": "*", "to": "s*", "prob": "1"}],
        "absorbing": {"s*": {"g1": "-3/2", "g2": "1"}},
        "objective": {"p1": {"type": "recursive"}, "p2": {"type": "recursive"}},
    })
    cert = recursive_epsilon_equilibrium(build_auxiliary(game), 0.05)
    assert not cert.certified
    assert cert.status == "UNCERTIFIED"
