import pytest

from shiftgames.automaton import stationary
from shiftgames.equilibrium import Config
from shiftgames.fixtures import g_abs, g_abs_document, g_guard_document, g_loop, g_loop_document
from shiftgames.game import GameError, pure, uniform
from shiftgames.pipeline import load, run_pipeline
from shiftgames.simulate import (
    absorption_probabilities,
    best_response,
    on_path_values,
    simulate,
    verify_equilibrium,
)

A, B = pure(0, 2), pure(1, 2)
L, R = pure(0, 2), pure(1, 2)


@pytest.fixture(scope="module")
def loop_run():
    game, family = load(g_loop_document())
    return run_pipeline(game, family)


def test_absorbing_game_is_absorbed_at_first_stage():
    game = g_abs()
    one = stationary(game, 0, [pure(0, 1)])
    two = stationary(game, 1, [pure(0, 1)])
    stats = simulate(game, one, two, 0, 10, 5, seed=3)
    assert all(r.absorbed_at == 1 and r.payoff == (-1.0, 1.0) for r in stats.records)
    assert stats.absorption_rate == 1.0
    assert stats.half_width == (0.0, 0.0)


def test_same_seed_same_statistics(loop_run):
    game = loop_run.game
    a1 = stationary(game, 0, [uniform(2)] * 3)
    a2 = stationary(game, 1, [uniform(2)] * 3)
    first = simulate(game, a1, a2, 0, 50, 100, seed=11)
    again = simulate(game, a1, a2, 0, 50, 100, seed=11)
    other = simulate(game, a1, a2, 0, 50, 100, seed=12)
    assert first == again
    assert [r.absorbed_at for r in first.records] != [r.absorbed_at for r in other.records]


def test_global_pair_on_loop_absorbs(loop_run):
    eps = loop_run.certificate.epsilon
    stats = simulate(loop_run.game, *loop_run.strategies, 0, 200, 500, seed=0)
    assert stats.absorption_rate >= 1 - eps / 2


def test_exact_absorption_matches_closed_form():
    # uniform play exits state 1 a quarter of the time; state 2 always returns
    game = g_loop()
    a1 = stationary(game, 0, [uniform(2)] * 3)
    a2 = stationary(game, 1, [uniform(2)] * 3)
    probs = absorption_probabilities(game, a1, a2)
    assert probs[0] == pytest.approx(1.0) and probs[1] == pytest.approx(1.0)


def test_best_response_against_fixed_exiter():
    game = g_loop()
    always_a = stationary(game, 0, [A] * 3)
    always_b = stationary(game, 0, [B] * 3)
    # player 2 takes the exit worth 2 when it is open, otherwise collects the default 1
    assert best_response(game, always_a, 1).values[0] == pytest.approx(2.0)
    assert best_response(game, always_b, 1).values[0] == pytest.approx(1.0)


def test_on_path_values_of_refusal_use_defaults():
    game = g_loop()
    refuse1 = stationary(game, 0, [B] * 3)
    refuse2 = stationary(game, 1, [R] * 3)
    vals = on_path_values(game, refuse1, refuse2)
    assert vals[0] == pytest.approx((-2.0, 1.0))


def test_verify_trivial_absorbing_game():
    game, family = load(g_abs_document())
    run = run_pipeline(game, family, Config(epsilon=0.1))
    assert run.report.verdict == "PASS"
    assert run.report.gaps == (0.0, 0.0)


def test_verify_loop_pair(loop_run):
    assert loop_run.report.verdict == "PASS"
    assert loop_run.report.on_path[0] == pytest.approx((-1.0, 2.0))


def test_verify_flags_profitable_deviation():
    game = g_loop()
    refuse1 = stationary(game, 0, [B] * 3)
    exit2 = stationary(game, 1, [L] * 3)
    report = verify_equilibrium(game, refuse1, exit2, 0.05)
    # player 1 gets -2 but could absorb at -1
    assert report.verdict == "FAIL"
    assert report.gaps[0] == pytest.approx(1.0)


def test_corrupted_exit_fails_verification():
    for doc in (g_loop_document(), g_guard_document()):
        game, family = load(doc)
        run = run_pipeline(game, family, exit_override={0: [(0, A, R)]})
        assert run.report.verdict == "FAIL"


def test_simulation_rejects_bad_arguments():
    game = g_abs()
    one = stationary(game, 0, [pure(0, 1)])
    with pytest.raises(GameError):
        simulate(game, one, one, 0, 0, 5, seed=0)
