"""Random small recursive games for property checks."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .game import ActionSets, StochasticGame, load_game, pure, uniform
from .values import candidate_family

PROBS = (Fraction(1), Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(1, 4), Fraction(3, 4))
# normalized absorbing payoffs: player 1 at most -1, player 2 at least 1, on a 1/4 grid
PAYOFFS1 = tuple(Fraction(-4 - k, 4) for k in range(5))
PAYOFFS2 = tuple(Fraction(4 + k, 4) for k in range(5))
# non-absorbed payoffs: 0 (a recursive game proper) or values making absorption attractive
DEFAULTS1 = (Fraction(0), Fraction(-5, 2))
DEFAULTS2 = (Fraction(0), Fraction(1))


def random_document(rng: np.random.Generator, max_states: int = 4, n_actions: int = 2) -> dict:
    """Random normalized recursive game: 1 to 3 non-absorbing states, at least one absorbing state, at most ``max_states``."""
    n_free = int(rng.integers(1, max_states))
    n_abs = int(rng.integers(1, max_states - n_free + 1))
    free = [f"s{k}" for k in range(n_free)]
    absorbing = [f"t{k}" for k in range(n_abs)]
    states = free + absorbing
    a1 = [f"a{k}" for k in range(n_actions)]
    a2 = [f"b{k}" for k in range(n_actions)]
    kernel = []
    for s in free:
        for x in a1:
            for y in a2:
                first = states[int(rng.integers(len(states)))]
                p = PROBS[int(rng.integers(len(PROBS)))]
                kernel.append({"from": s, "a1": x, "a2": y, "to": first, "prob": str(p)})
                if p < 1:
                    other = states[int(rng.integers(len(states)))]
                    kernel.append({"from": s, "a1": x, "a2": y, "to": other, "prob": str(1 - p)})
    gamma = {
        t: {"g1": str(PAYOFFS1[int(rng.integers(len(PAYOFFS1)))]), "g2": str(PAYOFFS2[int(rng.integers(len(PAYOFFS2)))])}
        for t in absorbing
    }
    d1 = DEFAULTS1[int(rng.integers(len(DEFAULTS1)))]
    d2 = DEFAULTS2[int(rng.integers(len(DEFAULTS2)))]
    return {
        "states": states,
        "actions": {"p1": a1, "p2": a2},
        "kernel": kernel,
        "absorbing": gamma,
        "objective": {"p1": {"type": "recursive", "default": str(d1)}, "p2": {"type": "recursive", "default": str(d2)}},
    }


def planted_document(rng: np.random.Generator, max_states: int = 4, n_actions: int = 2) -> dict:
    """Random game with a planted cycle: (a0, b1) walks the non-absorbing states in a cycle, (a0, b0) at one
    state leaves toward t0, and every other pair moves at random. The document carries the singleton family
    {a0} x {b1} under which the cycle is closed."""
    n_free = int(rng.integers(1, max_states))
    n_abs = int(rng.integers(1, max_states - n_free + 1))
    free = [f"s{k}" for k in range(n_free)]
    absorbing = [f"t{k}" for k in range(n_abs)]
    states = free + absorbing
    a1 = [f"a{k}" for k in range(n_actions)]
    a2 = [f"b{k}" for k in range(n_actions)]
    exit_at = int(rng.integers(n_free))
    kernel = []

    def entry(s, x, y, first, p):
        kernel.append({"from": s, "a1": x, "a2": y, "to": first, "prob": str(p)})
        if p < 1:
            kernel.append({"from": s, "a1": x, "a2": y, "to": states[int(rng.integers(len(states)))], "prob": str(1 - p)})

    for k, s in enumerate(free):
        nxt = free[(k + 1) % n_free]
        for x in a1:
            for y in a2:
                p = PROBS[int(rng.integers(len(PROBS)))]
                if (x, y) == (a1[0], a2[1]):
                    kernel.append({"from": s, "a1": x, "a2": y, "to": nxt, "prob": "1"})
                elif (x, y) == (a1[0], a2[0]) and k == exit_at:
                    kernel.append({"from": s, "a1": x, "a2": y, "to": absorbing[0], "prob": str(p)})
                    if p < 1:
                        kernel.append({"from": s, "a1": x, "a2": y, "to": nxt, "prob": str(1 - p)})
                else:
                    entry(s, x, y, states[int(rng.integers(len(states)))], p)
    doc = random_document(rng, max_states, n_actions)  # reuse payload draws for payoffs and defaults
    keep = {"p1": [[str(int(a == 0)) for a in range(n_actions)]], "p2": [[str(int(b == 1)) for b in range(n_actions)]]}
    return {
        "states": states,
        "actions": {"p1": a1, "p2": a2},
        "kernel": kernel,
        "absorbing": {t: doc["absorbing"].get(t, {"g1": "-1", "g2": "1"}) for t in absorbing},
        "objective": doc["objective"],
        "family": {s: keep for s in free},
    }


def corpus(size: int, seed: int = 0, max_states: int = 4) -> list:
    """``size`` reproducible game documents; game ``k`` uses its own child stream of ``seed``.

    Even indices are unstructured, odd ones carry a planted cycle and family.
    """
    return [corpus_document(k, seed, max_states) for k in range(size)]


def corpus_document(index: int, seed: int = 0, max_states: int = 4) -> dict:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))
    return planted_document(rng, max_states) if index % 2 else random_document(rng, max_states)


def singleton_family(game: StochasticGame, family: ActionSets | None = None) -> ActionSets:
    """Keep the first mixed action of each cell (a single stationary pair)."""
    family = family or candidate_family(game)
    return ActionSets({s: ((cells[0][0],), (cells[1][0],)) for s, cells in family.cells.items()})


def random_singleton_family(game: StochasticGame, rng: np.random.Generator) -> ActionSets:
    """One mixed action per cell, drawn from the pure actions and the uniform mix."""
    def draw(n):
        options = [pure(a, n) for a in range(n)] + ([uniform(n)] if n > 1 else [])
        return options[int(rng.integers(len(options)))]

    return ActionSets({s: ((draw(game.n_actions[0]),), (draw(game.n_actions[1]),)) for s in game.nonabsorbing})


def corpus_games(size: int, seed: int = 0, max_states: int = 4) -> list:
    return [load_game(doc) for doc in corpus(size, seed, max_states)]
