"""Small reference games used by tests, demos and the command line."""
from __future__ import annotations

from .corpus import corpus_document
from .game import StochasticGame, load_game


def g_abs_document() -> dict:
    """A single absorbing state with payoffs (-1, 1)."""
    return {
        "states": ["s*"],
        "actions": {"p1": ["-"], "p2": ["-"]},
        "kernel": [],
        "absorbing": {"s*": {"g1": "-1", "g2": "1"}},
        "objective": {"p1": {"type": "recursive"}, "p2": {"type": "recursive"}},
    }


def g_ex1_document() -> dict:
    """One-player game: T stays in 1, B moves to 2, then 2 and 3 alternate forever.

    Both players are paid 1 iff state 2 is first entered at an even stage.
    """
    parity = {"type": "entry_parity", "target": "2"}
    return {
        "states": ["1", "2", "3"],
        "actions": {"p1": ["T", "B"], "p2": ["-"]},
        "kernel": [
            {"from": "1", "a1": "T", "a2": "*", "to": "1", "prob": "1"},
            {"from": "1", "a1": "B", "a2": "*", "to": "2", "prob": "1"},
            {"from": "2", "a1": "*", "a2": "*", "to": "3", "prob": "1"},
            {"from": "3", "a1": "*", "a2": "*", "to": "2", "prob": "1"},
        ],
        "objective": {"p1": parity, "p2": dict(parity)},
    }


def g_bm_document() -> dict:
    """Big Match: T ends the game (win after L, lose after R), B continues.

    Stage payoffs of player 1 are 1 on (T,L) and (B,R), 0 otherwise; player 2
    receives one minus that. The absorbing states repeat the absorbing payoff.
    """
    return {
        "states": ["0", "win", "lose"],
        "actions": {"p1": ["T", "B"], "p2": ["L", "R"]},
        "kernel": [
            {"from": "0", "a1": "T", "a2": "L", "to": "win", "prob": "1"},
            {"from": "0", "a1": "T", "a2": "R", "to": "lose", "prob": "1"},
            {"from": "0", "a1": "B", "a2": "*", "to": "0", "prob": "1"},
        ],
        "absorbing": {"win": {"g1": "1", "g2": "0"}, "lose": {"g1": "0", "g2": "1"}},
        "objective": {
            "p1": {"type": "average", "stage": [
                {"state": "0", "a1": "T", "a2": "L", "value": "1"},
                {"state": "0", "a1": "B", "a2": "R", "value": "1"},
            ]},
            "p2": {"type": "average", "default_stage": "1", "stage": [
                {"state": "0", "a1": "T", "a2": "L", "value": "0"},
                {"state": "0", "a1": "B", "a2": "R", "value": "0"},
            ]},
        },
    }


def g_loop_document() -> dict:
    """States 1 and 2 swap under every action pair except (a, L) in state 1, which absorbs.

    The absorbing state pays (-1, 2); a run that never absorbs pays (-2, 1),
    so both players weakly prefer absorption and the sign convention holds on
    every run.
    """
    return {
        "states": ["1", "2", "s*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [
            {"from": "1", "a1": "a", "a2": "L", "to": "s*", "prob": "1"},
            {"from": "1", "a1": "a", "a2": "R", "to": "2", "prob": "1"},
            {"from": "1", "a1": "b", "a2": "*", "to": "2", "prob": "1"},
            {"from": "2", "a1": "*", "a2": "*", "to": "1", "prob": "1"},
        ],
        "absorbing": {"s*": {"g1": "-1", "g2": "2"}},
        "objective": {"p1": {"type": "recursive", "default": "-2"}, "p2": {"type": "recursive", "default": "1"}},
        "family": {
            "1": {"p1": [["1", "0"]], "p2": [["0", "1"]]},
            "2": {"p1": [["1", "0"]], "p2": [["0", "1"]]},
        },
    }


def g_guard_document() -> dict:
    """Like G_loop, but player 1 has a tempting action b at state 1.

    Against L, b reaches t* (paying (-1, 1)) with probability 1/10 and
    otherwise moves on to state 2; against R it just moves on. Compliant
    play absorbs in s* with (-2, 2). Player 1 prefers t*, and only the threat
    of player 2 switching to R for good (non-absorbed runs pay (-3, 1)) keeps
    her on a.
    """
    return {
        "states": ["1", "2", "s*", "t*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [
            {"from": "1", "a1": "a", "a2": "L", "to": "s*", "prob": "1"},
            {"from": "1", "a1": "a", "a2": "R", "to": "2", "prob": "1"},
            {"from": "1", "a1": "b", "a2": "L", "to": "t*", "prob": "1/10"},
            {"from": "1", "a1": "b", "a2": "L", "to": "2", "prob": "9/10"},
            {"from": "1", "a1": "b", "a2": "R", "to": "2", "prob": "1"},
            {"from": "2", "a1": "*", "a2": "*", "to": "1", "prob": "1"},
        ],
        "absorbing": {"s*": {"g1": "-2", "g2": "2"}, "t*": {"g1": "-1", "g2": "1"}},
        "objective": {"p1": {"type": "recursive", "default": "-3"}, "p2": {"type": "recursive", "default": "1"}},
        "family": {
            "1": {"p1": [["1", "0"]], "p2": [["0", "1"]]},
            "2": {"p1": [["1", "0"]], "p2": [["0", "1"]]},
        },
    }


def _entry(state, a1, a2, to, prob="1"):
    return {"from": state, "a1": a1, "a2": a2, "to": to, "prob": prob}


_RECURSIVE = {"p1": {"type": "recursive"}, "p2": {"type": "recursive"}}
_KEEP_A_R = {"p1": [["1", "0"]], "p2": [["0", "1"]]}


def avg_exit_document() -> dict:
    """One-state average-payoff game: (a, L) absorbs with (-1, 2), anything else repeats a (-2, 1) stage."""
    return {
        "states": ["1", "s*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [_entry("1", "a", "L", "s*"), _entry("1", "a", "R", "1"), _entry("1", "b", "*", "1")],
        "absorbing": {"s*": {"g1": "-1", "g2": "2"}},
        "objective": {"p1": {"type": "average", "default_stage": "-2"},
                      "p2": {"type": "average", "default_stage": "1"}},
        "family": {"1": _KEEP_A_R},
    }


def avg_cycle_document() -> dict:
    """Two states visited alternately whatever is played; player 1 picks her stage payoff at 1, player 2 at 2."""
    return {
        "states": ["1", "2"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [_entry("1", "*", "*", "2"), _entry("2", "*", "*", "1")],
        "objective": {
            "p1": {"type": "average", "default_stage": "-3/2",
                   "stage": [{"state": "1", "a1": "a", "value": "-1"}, {"state": "1", "a1": "b", "value": "-2"}]},
            "p2": {"type": "average", "default_stage": "3/2",
                   "stage": [{"state": "2", "a2": "L", "value": "2"}, {"state": "2", "a2": "R", "value": "1"}]},
        },
    }


def rec_refuse_document() -> dict:
    """Player 1 alone can absorb, into an outcome worse for her than never absorbing."""
    return {
        "states": ["1", "s*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [_entry("1", "a", "*", "1"), _entry("1", "b", "*", "s*")],
        "absorbing": {"s*": {"g1": "-3/2", "g2": "1"}},
        "objective": _RECURSIVE,
    }


def rec_p2_document() -> dict:
    """Player 2 alone decides whether to absorb."""
    return {
        "states": ["1", "s*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [_entry("1", "*", "L", "s*"), _entry("1", "*", "R", "1")],
        "absorbing": {"s*": {"g1": "-1", "g2": "2"}},
        "objective": _RECURSIVE,
    }


def rec_quit_document() -> dict:
    """Quitting game: either player may stop, and who stops decides the outcome."""
    return {
        "states": ["1", "u", "v", "w"],
        "actions": {"p1": ["c", "q"], "p2": ["c", "q"]},
        "kernel": [_entry("1", "c", "c", "1"), _entry("1", "q", "c", "u"), _entry("1", "c", "q", "v"),
                   _entry("1", "q", "q", "w")],
        "absorbing": {"u": {"g1": "-1", "g2": "2"}, "v": {"g1": "-2", "g2": "1"}, "w": {"g1": "-3/2", "g2": "3/2"}},
        "objective": _RECURSIVE,
    }


def rec_chance_document() -> dict:
    """Two-state loop where (a, L) at state 1 absorbs only half of the time."""
    return {
        "states": ["1", "2", "s*"],
        "actions": {"p1": ["a", "b"], "p2": ["L", "R"]},
        "kernel": [_entry("1", "a", "L", "s*", "1/2"), _entry("1", "a", "L", "2", "1/2"), _entry("1", "a", "R", "2"),
                   _entry("1", "b", "*", "2"), _entry("2", "*", "*", "1")],
        "absorbing": {"s*": {"g1": "-1", "g2": "2"}},
        "objective": {"p1": {"type": "recursive", "default": "-2"}, "p2": {"type": "recursive", "default": "1"}},
        "family": {"1": _KEEP_A_R, "2": _KEEP_A_R},
    }


def g_abs() -> StochasticGame:
    return load_game(g_abs_document())


def g_ex1() -> StochasticGame:
    return load_game(g_ex1_document())


def g_bm() -> StochasticGame:
    return load_game(g_bm_document())


def g_loop() -> StochasticGame:
    return load_game(g_loop_document())


def g_guard() -> StochasticGame:
    return load_game(g_guard_document())


DOCUMENTS = {
    "G_abs": g_abs_document,
    "G_ex1": g_ex1_document,
    "G_bm": g_bm_document,
    "G_loop": g_loop_document,
    "G_guard": g_guard_document,
}

# G_loop companions for end-to-end checks: hand-made games plus planted-cycle corpus draws (seed 1)
# whose exits need a reduced intensity or a long deadline.
CURATED = {
    "G_guard": g_guard_document,
    "avg_exit": avg_exit_document,
    "avg_cycle": avg_cycle_document,
    "rec_refuse": rec_refuse_document,
    "rec_p2": rec_p2_document,
    "rec_quit": rec_quit_document,
    "rec_chance": rec_chance_document,
    "corpus_57": lambda: corpus_document(57, seed=1),
    "corpus_69": lambda: corpus_document(69, seed=1),
    "corpus_157": lambda: corpus_document(157, seed=1),
}
DOCUMENTS.update(CURATED)
