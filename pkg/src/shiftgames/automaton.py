"""Finite-memory behavior strategies.

An automaton starts with ``initial(s)``, prescribes ``action(memory, s)``
and moves to ``update(memory, s, a1, a2, t)`` after observing both actions
and the next state. Memories must be hashable so that product constructions
can enumerate them.
"""
from __future__ import annotations

from fractions import Fraction

from .game import GameError, StochasticGame, pure


class StrategyAutomaton:
    player: int = 0

    def initial(self, s: int):
        return None

    def action(self, memory, s: int) -> tuple:
        raise NotImplementedError

    def update(self, memory, s: int, a1: int, a2: int, t: int):
        return memory

    def triggers(self, memory) -> str | None:
        """Name of the detector that fired in ``memory`` (None while on path)."""
        return None

    def to_json(self, game: StochasticGame) -> dict:
        return {"type": type(self).__name__, "player": self.player + 1}


class StationaryAutomaton(StrategyAutomaton):
    def __init__(self, player: int, table):
        self.player = player
        self.table = [tuple(Fraction(w) for w in x) for x in table]

    def action(self, memory, s):
        return self.table[s]

    def to_json(self, game):
        return {
            "type": "stationary",
            "player": self.player + 1,
            "table": {game.states[s]: [str(w) for w in x] for s, x in enumerate(self.table)},
        }


def stationary(game: StochasticGame, player: int, table) -> StationaryAutomaton:
    """Wrap a per-state table; absorbing or missing states get the first action."""
    n = game.n_actions[player]
    full = []
    for s in range(game.n_states):
        x = table[s] if (isinstance(table, dict) and s in table) or (not isinstance(table, dict) and s < len(table)) else None
        full.append(tuple(x) if x is not None else pure(0, n))
        if len(full[-1]) != n:
            raise GameError(f"mixed action of player {player + 1} has wrong length at state {s}")
    return StationaryAutomaton(player, full)


class PlanView(StrategyAutomaton):
    """One player's side of a jointly specified plan with public memory.

    ``plan`` must provide ``initial(s)``, ``prescribe(memory, s) -> (x1, x2)``
    and ``update(memory, s, a1, a2, t)``. Both players can track the same
    memory because actions and states are publicly observed.
    """

    def __init__(self, plan, player: int):
        self.plan = plan
        self.player = player

    def initial(self, s):
        return self.plan.initial(s)

    def action(self, memory, s):
        return self.plan.prescribe(memory, s)[self.player]

    def update(self, memory, s, a1, a2, t):
        return self.plan.update(memory, s, a1, a2, t)

    def triggers(self, memory):
        return self.plan.triggers(memory)

    def to_json(self, game):
        out = self.plan.to_json(game)
        out["player"] = self.player + 1
        return out
