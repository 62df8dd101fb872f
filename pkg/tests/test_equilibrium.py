from fractions import Fraction
import itertools

import pytest

from oracle import zeta_brute_force
from shiftgames.automaton import stationary
from shiftgames.equilibrium import (
    Config,
    compress_history,
    compressed_is_valid,
    in_set_equilibrium,
    make_detectors,
    punishment_strategy,
    trim_strategy,
    zeta_expectation_identity,
    zeta_step,
)
from shiftgames.fixtures import g_abs, g_bm, g_guard_document, g_loop, g_loop_document, rec_p2_document
from shiftgames.game import GameError, load_game, pure, uniform
from shiftgames.pipeline import load, run_pipeline
from shiftgames.simulate import on_path_values, simulate
from shiftgames.values import maxmin_values

F = Fraction
A, B = pure(0, 2), pure(1, 2)
L, R = pure(0, 2), pure(1, 2)


@pytest.fixture(scope="module")
def loop_run():
    game, family = load(g_loop_document())
    return run_pipeline(game, family)


def test_trim_keeps_closed_supports():
    sigma = ([A, A, A], [R, R, R])
    out = trim_strategy(g_loop(), {0, 1}, sigma, F(1, 2))
    assert out.pi == ([A, A, A], [R, R, R])
    assert out.mass[0][0] == 0


def test_trim_drops_leaving_action_and_renormalizes():
    mixed = (F(3, 10), F(7, 10))
    sigma = ([mixed, A, mixed], [L, R, L])
    out = trim_strategy(g_loop(), {0, 1}, sigma, F(1, 2))
    assert out.removed[0][0] == (0,)
    assert out.pi[0][0] == B
    assert out.mass[0][0] == F(3, 10)
    # outside the set nothing changes
    assert out.pi[0][2] == mixed


def _trap():
    return load_game({
        "states": ["1", "2", "s*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [{"from": "1", "a1": "*", "a2": "*", "to": "1", "prob": "1"},
                   {"from": "2", "a1": "*", "a2": "*", "to": "s*", "prob": "1"}],
        "absorbing": {"s*": {"g1": "-1", "g2": "1"}},
        "objective": {"p1": {"type": "recursive"}, "p2": {"type": "recursive"}},
    })


def test_zeta_increment_zero_in_closed_state():
    assert zeta_step(_trap(), {0}, uniform(2), 1, 0, 0) == 0


def test_zeta_increment_is_kernel_lookup():
    assert zeta_step(g_loop(), {0, 1}, A, 0, 0, 0) == 1
    assert zeta_step(g_loop(), {0, 1}, uniform(2), 0, 0, 0) == F(1, 2)


def test_zeta_identity_on_loop_all_pure_pairs():
    game = g_loop()
    C = frozenset({0, 1})
    for p1, p2 in itertools.product(itertools.product(range(2), repeat=2), repeat=2):
        x1 = [pure(p1[0], 2), pure(p1[1], 2), A]
        x2 = [pure(p2[0], 2), pure(p2[1], 2), L]
        for player in (0, 1):
            lhs, rhs = zeta_expectation_identity(game, C, (x1, x2), 3, player, 0)
            assert lhs == rhs
            assert (lhs, rhs) == zeta_brute_force(game, C, x1, x2, 3, player, 0)


def test_zeta_identity_with_mixed_pair_matches_oracle():
    game = g_loop()
    C = frozenset({0, 1})
    x1 = [(F(1, 3), F(2, 3))] * 3
    x2 = [(F(1, 4), F(3, 4))] * 3
    lhs, rhs = zeta_expectation_identity(game, C, (x1, x2), 4, 1, 0)
    assert lhs == rhs == zeta_brute_force(game, C, x1, x2, 4, 1, 0)[0]


def _leaky():
    # at state 1, (a, L) leaves with probability 1/4 and otherwise moves on to state 2
    return load_game({
        "states": ["1", "2", "s*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [{"from": "1", "a1": "a", "a2": "L", "to": "s*", "prob": "1/4"},
                   {"from": "1", "a1": "a", "a2": "L", "to": "2", "prob": "3/4"},
                   {"from": "1", "a1": "a", "a2": "R", "to": "2", "prob": "1"},
                   {"from": "1", "a1": "b", "a2": "*", "to": "2", "prob": "1"},
                   {"from": "2", "a1": "*", "a2": "*", "to": "1", "prob": "1"}],
        "absorbing": {"s*": {"g1": "-1", "g2": "2"}},
        "objective": {"p1": {"type": "recursive", "default": "-2"}, "p2": {"type": "recursive", "default": "1"}},
    })


def test_compliant_steps_never_fire_support_detector():
    game = _leaky()
    sigma = ([A, A, A], [R, R, R])
    det = make_detectors(game, {0, 1}, sigma, 1e-2, 8, (F(-2), F(1)))
    memory = det.start()
    s = 0
    for _ in range(20):
        t = 1 - s
        memory = det.step(memory, s, 0, 1, t)
        s = t
    assert memory[2] is None


def test_repeated_leaving_action_fires_zeta_detector():
    game = _leaky()
    sigma = ([A, A, A], [uniform(2), R, R])
    mu = 1e-2
    det = make_detectors(game, {0, 1}, sigma, mu, 8, (F(-2), F(1)))
    bound = -(-(mu ** 0.5) // 0.25)  # ceil(sqrt(mu) / leave)
    memory, s, steps = det.start(), 0, 0
    while memory[2] is None:
        t = 1 - s
        memory = det.step(memory, s, 0, 0 if s == 0 else 1, t)
        s, steps = t, steps + 1
        assert steps <= 2 * bound
    assert memory[2] == ("theta2", 1)


def test_detectors_disarm_outside_set():
    game = _leaky()
    sigma = ([A, A, A], [R, R, R])
    det = make_detectors(game, {0, 1}, sigma, 1e-2, 8, (F(-2), F(1)))
    memory = det.start()
    assert det.step(memory, 2, 1, 0, 2) == memory


def test_make_detectors_validates_parameters():
    with pytest.raises(GameError):
        make_detectors(g_loop(), {0, 1}, ([A] * 3, [R] * 3), 1.5, 8, (F(-2), F(1)))
    with pytest.raises(GameError):
        make_detectors(g_loop(), {0, 1}, ([A] * 3, [R] * 3), 1e-2, 0, (F(-2), F(1)))


def test_in_set_plan_without_exits_never_punishes_compliant_play():
    game = g_loop()
    sigma = ([A] * 3, [R] * 3)
    values = (maxmin_values(game, 0), maxmin_values(game, 1))
    auto1, auto2 = in_set_equilibrium(game, {0, 1}, sigma, (F(-2), F(1)), Config(det_horizon=8), values)
    stats = simulate(game, auto1, auto2, 0, 200, 200, seed=5)
    assert all(r.trigger is None for r in stats.records)


def test_in_set_plan_on_single_state_equals_stationary_pair():
    game = _trap()
    sigma = ([A] * 3, [L] * 3)
    values = (maxmin_values(game, 0), maxmin_values(game, 1))
    auto1, _ = in_set_equilibrium(game, {0}, sigma, (F(0), F(0)), Config(det_horizon=4), values)
    memory = auto1.initial(0)
    assert tuple(auto1.action(memory, 0)) == A


def test_in_set_plan_punishes_detected_deviation():
    game = _leaky()
    sigma = ([A] * 3, [R] * 3)
    values = (maxmin_values(game, 0), maxmin_values(game, 1))
    auto1, auto2 = in_set_equilibrium(game, {0, 1}, sigma, (F(-2), F(1)), Config(det_horizon=8), values)
    deviator = stationary(game, 1, [L, R, L])
    stats = simulate(game, auto1, deviator, 0, 50, 100, seed=2)
    assert all(r.trigger == "theta0" for r in stats.records if r.trigger_stage is not None)
    assert any(r.trigger == "theta0" for r in stats.records)


def test_without_third_family_global_plan_is_the_certified_profile():
    game, family = load(rec_p2_document())
    run = run_pipeline(game, family, stop="equilibrium")
    assert run.decomposition.F3 == []
    auto1, auto2 = run.strategies
    m = auto1.initial(0)
    assert tuple(auto1.action(m, 0)) == tuple(run.certificate.x1[0])
    assert tuple(auto2.action(m, 0)) == tuple(run.certificate.x2[0])


def test_loop_global_plan_absorbs_with_exit_payoff(loop_run):
    auto1, auto2 = loop_run.strategies
    stats = simulate(loop_run.game, auto1, auto2, 0, 100, 200, seed=1)
    assert stats.absorption_rate == 1.0
    assert stats.mean_payoff == pytest.approx((-1.0, 2.0))


def test_refusing_the_exit_is_punished_to_maxmin(loop_run):
    game = loop_run.game
    auto1, _ = loop_run.strategies
    refuse = stationary(game, 1, [R, R, L])
    values = on_path_values(game, auto1, refuse, starts=[0])
    assert values[0][1] <= loop_run.values[1].values[0] + 1e-3


def test_punishment_on_absorbing_game_is_trivial():
    game = g_abs()
    p = punishment_strategy(game, 1, 1e-3, maxmin_values(game, 1))
    assert p.excess == 0 and p.strategy.table == ((F(1),),)


def test_big_match_punisher_uses_small_discount_mix():
    # stationary play of player 1 cannot hold player 2 below 1, half a unit above her maxmin value 1/2
    game = g_bm()
    p = punishment_strategy(game, 1, 1e-3, maxmin_values(game, 1))
    assert p.strategy.table[0] == (F(1, 513), F(512, 513))
    assert p.excess == pytest.approx(0.5, abs=1e-6)


def test_punishing_player_one_in_big_match_is_tight():
    game = g_bm()
    p = punishment_strategy(game, 0, 1e-3, maxmin_values(game, 0))
    assert p.excess <= 1e-3
    assert p.strategy.table[0] == (F(1, 2), F(1, 2))


def test_compressed_history_is_valid_on_loop(loop_run):
    game, dec = loop_run.game, loop_run.decomposition
    states, actions = [0, 1, 0, 2], [(1, 1), (0, 1), (0, 0)]
    compressed = compress_history(game, dec, states, actions)
    assert compressed_is_valid(game, dec, states, actions)
    assert compressed[0][-1] == 2


def test_exit_intensity_keeps_loop_exit_pure(loop_run):
    plan = loop_run.strategies[0].plan
    assert all(r.intensity == 1 for r in plan.routines.values())


def test_exit_intensity_reduced_when_pure_exit_invites_deviation():
    from shiftgames.corpus import corpus_document

    game, family = load(corpus_document(69, seed=1))
    run = run_pipeline(game, family)
    plan = run.strategies[0].plan
    assert all(r.intensity < 1 for r in plan.routines.values())
    assert run.report.verdict == "PASS"


def test_guard_needs_punishment():
    game, family = load(g_guard_document())
    assert run_pipeline(game, family).report.verdict == "PASS"
    assert run_pipeline(game, family, punish_enabled=False).report.verdict == "FAIL"


def test_config_validation():
    with pytest.raises(GameError):
        Config(epsilon=1.5)
    with pytest.raises(GameError):
        Config(mu=0)
