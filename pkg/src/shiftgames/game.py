"""Finite two-player stochastic games with exact rational kernels.

The model keeps kernels, payoffs and one-step expectations in
``fractions.Fraction`` so that structural checks (closure, exits) are exact.
Floating point appears only in the iterative solvers of other modules.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import jsonschema
import numpy as np


class GameError(ValueError):
    """Raised for malformed game documents or invalid arguments."""


def frac(value) -> Fraction:
    """Parse ints, fraction strings ("3/4"), decimal strings or floats exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise GameError(f"not a number: {value!r}")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    raise GameError(f"not a number: {value!r}")


# ---------------------------------------------------------------- mixed actions

MixedAction = tuple  # tuple of Fractions summing to 1


def mixed(weights: Iterable) -> MixedAction:
    x = tuple(frac(w) for w in weights)
    if not x or any(w < 0 for w in x) or sum(x) != 1:
        raise GameError(f"not a probability vector: {x}")
    return x


def pure(k: int, n: int) -> MixedAction:
    return tuple(Fraction(int(j == k)) for j in range(n))


def uniform(n: int, support: Iterable[int] | None = None) -> MixedAction:
    idx = list(range(n)) if support is None else sorted(set(support))
    w = Fraction(1, len(idx))
    return tuple(w if j in idx else Fraction(0) for j in range(n))


def support(x: Sequence) -> tuple[int, ...]:
    return tuple(k for k, w in enumerate(x) if w > 0)


def snap_mixed(x: Sequence[float], max_den: int = 10**6, floor: float = 1e-9) -> MixedAction:
    """Round a floating point mixed action to a nearby exact one.

    Entries below ``floor`` are dropped; the rest are rationalized and the
    largest entry absorbs the rounding residue so the result sums to 1.
    """
    arr = np.clip(np.asarray(x, dtype=float), 0.0, None)
    arr[arr < floor] = 0.0
    if arr.sum() <= 0:
        raise GameError("cannot snap an all-zero vector")
    arr = arr / arr.sum()
    out = [Fraction(float(w)).limit_denominator(max_den) if w > 0 else Fraction(0) for w in arr]
    top = int(np.argmax(arr))
    out[top] += 1 - sum(out)
    if out[top] <= 0:
        raise GameError("snapping produced a negative entry")
    return tuple(out)


# --------------------------------------------------------------------- kernels

@dataclass(frozen=True)
class Kernel:
    """Transition table ``rows[s][a1][a2]`` -> tuple of Fractions over states.

    ``tag`` is ``"p"`` for the game's own kernel and ``"p_hat"``/``"p_tilde"``
    for the rewritten kernels built by :mod:`shiftgames.structure`.
    """

    tag: str
    rows: tuple

    @cached_property
    def dense(self) -> np.ndarray:
        return np.array([[[[float(w) for w in dist] for dist in r2] for r2 in r1] for r1 in self.rows])

    def dist(self, s: int, a1: int, a2: int) -> tuple:
        return self.rows[s][a1][a2]

    def with_rows(self, tag: str, replacements: dict[int, tuple]) -> "Kernel":
        """Copy with the rows of selected states replaced by an action-independent distribution."""
        rows = list(self.rows)
        for s, d in replacements.items():
            rows[s] = tuple(tuple(d for _ in r2) for r2 in self.rows[s])
        return Kernel(tag, tuple(rows))

    def to_json(self, states: Sequence[str]) -> list:
        out = []
        for s, r1 in enumerate(self.rows):
            for a1, r2 in enumerate(r1):
                for a2, d in enumerate(r2):
                    for t, w in enumerate(d):
                        if w:
                            out.append({"from": states[s], "a1": a1, "a2": a2, "to": states[t], "prob": str(w)})
        return out


# ------------------------------------------------------------------ objectives

def _table(values) -> tuple:
    return tuple(tuple(tuple(frac(v) for v in r2) for r2 in r1) for r1 in values)


@dataclass(frozen=True)
class Discounted:
    """Normalized discounted payoff ``sum_t lam (1-lam)^(t-1) g(s_t, a_t)``."""

    lam: Fraction
    stage: tuple
    shift_invariant = False

    def data(self):
        return [v for r1 in self.stage for r2 in r1 for v in r2]

    def mapped(self, fn):
        return replace(self, stage=tuple(tuple(tuple(fn(v) for v in r2) for r2 in r1) for r1 in self.stage))


@dataclass(frozen=True)
class LongRunAverage:
    stage: tuple
    shift_invariant = True

    def data(self):
        return [v for r1 in self.stage for r2 in r1 for v in r2]

    def mapped(self, fn):
        return replace(self, stage=tuple(tuple(tuple(fn(v) for v in r2) for r2 in r1) for r1 in self.stage))


@dataclass(frozen=True)
class Buchi:
    """Pays ``win`` when ``target`` is visited infinitely often, else ``lose``."""

    target: frozenset
    win: Fraction = Fraction(1)
    lose: Fraction = Fraction(0)
    shift_invariant = True

    def data(self):
        return [self.win, self.lose]

    def mapped(self, fn):
        return replace(self, win=fn(self.win), lose=fn(self.lose))


@dataclass(frozen=True)
class CoBuchi:
    """Pays ``win`` when ``avoid`` is visited only finitely often, else ``lose``."""

    avoid: frozenset
    win: Fraction = Fraction(1)
    lose: Fraction = Fraction(0)
    shift_invariant = True

    def data(self):
        return [self.win, self.lose]

    def mapped(self, fn):
        return replace(self, win=fn(self.win), lose=fn(self.lose))


@dataclass(frozen=True)
class RecursiveAbsorbing:
    """Absorbing payoff gamma on absorption and ``default`` when play never absorbs.

    ``default`` is 0 for a recursive game proper; a nonzero value lets an
    original game satisfy the sign convention on every run.
    """

    default: Fraction = Fraction(0)
    shift_invariant = True

    def data(self):
        return [self.default]

    def mapped(self, fn):
        return replace(self, default=fn(self.default))


@dataclass(frozen=True)
class EntryParity:
    """Pays ``win`` iff ``target`` is first entered at an even stage (stage 1 is the start).

    This objective depends on the parity of the entry stage and is therefore
    not shift-invariant.
    """

    target: int
    win: Fraction = Fraction(1)
    lose: Fraction = Fraction(0)
    shift_invariant = False

    def data(self):
        return [self.win, self.lose]

    def mapped(self, fn):
        return replace(self, win=fn(self.win), lose=fn(self.lose))


Objective = Discounted | LongRunAverage | Buchi | CoBuchi | RecursiveAbsorbing | EntryParity


# ------------------------------------------------------------------------ game

@dataclass(frozen=True)
class StochasticGame:
    states: tuple
    actions: tuple  # (names of player 1 actions, names of player 2 actions)
    kernel: Kernel
    gamma: dict  # absorbing state index -> (gamma1, gamma2)
    objectives: tuple  # (objective of player 1, objective of player 2)
    solved: dict = field(default_factory=dict)
    offsets: tuple = (Fraction(0), Fraction(0))

    def __post_init__(self):
        n = len(self.states)
        m1, m2 = self.n_actions
        rows = self.kernel.rows
        if len(rows) != n or any(len(r1) != m1 or any(len(r2) != m2 for r2 in r1) for r1 in rows):
            raise GameError("kernel shape does not match states and actions")
        for s, r1 in enumerate(rows):
            for a1, r2 in enumerate(r1):
                for a2, d in enumerate(r2):
                    if len(d) != n or any(w < 0 for w in d) or sum(d) != 1:
                        raise GameError(f"kernel row not stochastic at ({self.states[s]}, {a1}, {a2})")
        for s in self.gamma:
            if any(rows[s][a1][a2][s] != 1 for a1 in range(m1) for a2 in range(m2)):
                raise GameError(f"absorbing state {self.states[s]} without self-loop")

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> tuple[int, int]:
        return len(self.actions[0]), len(self.actions[1])

    @property
    def absorbing(self) -> frozenset:
        return frozenset(self.gamma)

    @property
    def nonabsorbing(self) -> tuple:
        return tuple(s for s in range(self.n_states) if s not in self.gamma)

    def index(self, name) -> int:
        if isinstance(name, int):
            return name
        try:
            return self.states.index(name)
        except ValueError:
            raise GameError(f"unknown state {name!r}") from None

    def payoff_bound(self) -> Fraction:
        data = [abs(v) for obj in self.objectives for v in obj.data()]
        data += [abs(g) for pair in self.gamma.values() for g in pair]
        return max(data, default=Fraction(0))

    def stage_payoff(self, i: int, s: int, a1: int, a2: int) -> Fraction:
        """Stage payoff used by discounted and average objectives; absorbing states pay gamma."""
        if s in self.gamma:
            return self.gamma[s][i]
        obj = self.objectives[i]
        if isinstance(obj, (Discounted, LongRunAverage)):
            return obj.stage[s][a1][a2]
        if isinstance(obj, RecursiveAbsorbing):
            return obj.default
        raise GameError(f"objective {type(obj).__name__} has no stage payoffs")

    @cached_property
    def stage_arrays(self) -> tuple:
        """Float arrays ``g[i][s, a1, a2]`` of stage payoffs (absorbing states pay gamma)."""
        m1, m2 = self.n_actions
        out = []
        for i in (0, 1):
            g = np.zeros((self.n_states, m1, m2))
            for s in range(self.n_states):
                for a1 in range(m1):
                    for a2 in range(m2):
                        g[s, a1, a2] = float(self.stage_payoff(i, s, a1, a2))
            out.append(g)
        return tuple(out)

    def gamma_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.n_states)
        for s, pair in self.gamma.items():
            v[s] = float(pair[i])
        return v

    def with_kernel(self, kernel: Kernel) -> "StochasticGame":
        return replace(self, kernel=kernel)


def resolve_kernel(game: StochasticGame, kernel: Kernel | None) -> Kernel:
    return game.kernel if kernel is None else kernel


# ----------------------------------------------------------- one-step algebra

def _check_mixed(x, n: int, who: str):
    if len(x) != n:
        raise GameError(f"{who} mixed action has length {len(x)}, expected {n}")


def step_distribution(game: StochasticGame, s: int, x1, x2, kernel: Kernel | None = None) -> tuple:
    """Exact distribution of the next state given mixed actions at state ``s``."""
    kernel = resolve_kernel(game, kernel)
    m1, m2 = game.n_actions
    _check_mixed(x1, m1, "player 1")
    _check_mixed(x2, m2, "player 2")
    out = [Fraction(0)] * game.n_states
    for a1 in support(x1):
        for a2 in support(x2):
            w = x1[a1] * x2[a2]
            for t, p in enumerate(kernel.rows[s][a1][a2]):
                if p:
                    out[t] += w * p
    return tuple(out)


def expected_value(game: StochasticGame, g: Sequence, s: int, x1, x2, kernel: Kernel | None = None):
    """Expectation of the state function ``g`` at the next stage (exact when ``g`` is rational)."""
    if len(g) != game.n_states:
        raise GameError("valuation length does not match the number of states")
    dist = step_distribution(game, s, x1, x2, kernel)
    return sum((p * g[t] for t, p in enumerate(dist) if p), Fraction(0))


def prob_in(game: StochasticGame, target, s: int, x1, x2, kernel: Kernel | None = None) -> Fraction:
    dist = step_distribution(game, s, x1, x2, kernel)
    return sum((dist[t] for t in target), Fraction(0))


def as_mixed(game: StochasticGame, player: int, a) -> MixedAction:
    """Accept an action index or a mixed action and return a mixed action."""
    n = game.n_actions[player]
    if isinstance(a, int):
        return pure(a, n)
    return tuple(a)


# -------------------------------------------------------------------- history

@dataclass(frozen=True)
class History:
    """Alternating sequence s^1, a^1, ..., s^t of positive-probability transitions."""

    states: tuple
    actions: tuple  # tuple of (a1, a2), one shorter than ``states``

    @classmethod
    def build(cls, game: StochasticGame, states: Sequence[int], actions: Sequence[tuple] = (), kernel=None):
        states = tuple(game.index(s) for s in states)
        actions = tuple(tuple(a) for a in actions)
        if not states or len(actions) != len(states) - 1:
            raise GameError("a history needs t states and t-1 action pairs")
        kernel = resolve_kernel(game, kernel)
        for k, (a1, a2) in enumerate(actions):
            if kernel.rows[states[k]][a1][a2][states[k + 1]] == 0:
                raise GameError(f"zero-probability transition at stage {k + 1}")
        return cls(states, actions)

    @property
    def length(self) -> int:
        return len(self.states)

    @property
    def last(self) -> int:
        return self.states[-1]

    def extend(self, game: StochasticGame, a1: int, a2: int, t: int, kernel=None) -> "History":
        return History.build(game, self.states + (t,), self.actions + ((a1, a2),), kernel)


@dataclass(frozen=True)
class StationaryStrategy:
    """One mixed action per state for a single player."""

    player: int
    table: tuple

    def __call__(self, s: int):
        return self.table[s]

    def to_json(self):
        return [[str(w) for w in x] for x in self.table]


@dataclass(frozen=True)
class ActionSets:
    """Finite lists ``X_i(s)`` of mixed actions for each non-absorbing state.

    Stored as ``cells[s] = (X_1(s), X_2(s))``.
    """

    cells: dict

    def __post_init__(self):
        for s, (x1s, x2s) in self.cells.items():
            if not x1s or not x2s:
                raise GameError(f"empty action set cell at state {s}")

    def get(self, s: int, i: int) -> tuple:
        return self.cells[s][i]

    def pairs(self, s: int):
        for x1 in self.cells[s][0]:
            for x2 in self.cells[s][1]:
                yield x1, x2

    @classmethod
    def from_stationary(cls, game: StochasticGame, x1, x2) -> "ActionSets":
        return cls({s: ((tuple(x1[s]),), (tuple(x2[s]),)) for s in game.nonabsorbing})

    @classmethod
    def merge(cls, first: "ActionSets", second: "ActionSets") -> "ActionSets":
        """Player 1 lists from ``first``, player 2 lists from ``second``."""
        return cls({s: (first.cells[s][0], second.cells[s][1]) for s in first.cells})

    def to_json(self, game: StochasticGame):
        return {
            game.states[s]: {f"p{i + 1}": [[str(w) for w in x] for x in cells[i]] for i in (0, 1)}
            for s, cells in self.cells.items()
        }


# ------------------------------------------------------------ document loading

_NUM = {"type": ["string", "integer"]}
_STAGE = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["state", "value"],
        "properties": {"state": _NUM, "a1": _NUM, "a2": _NUM, "value": _NUM},
    },
}
_OBJECTIVE = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["discounted", "average", "buchi", "cobuchi", "recursive", "entry_parity"]},
        "lambda": _NUM,
        "stage": _STAGE,
        "default_stage": _NUM,
        "target": {},
        "avoid": {"type": "array"},
        "win": _NUM,
        "lose": _NUM,
        "default": _NUM,
    },
}
_PAIR = {"type": "object", "required": ["g1", "g2"], "properties": {"g1": _NUM, "g2": _NUM}}

GAME_SCHEMA = {
    "type": "object",
    "required": ["states", "actions", "kernel", "objective"],
    "properties": {
        "states": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        "actions": {
            "type": "object",
            "required": ["p1", "p2"],
            "properties": {
                "p1": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                "p2": {"type": "array", "minItems": 1, "items": {"type": "string"}},
            },
        },
        "kernel": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "a1", "a2", "to", "prob"],
                "properties": {"from": {"type": "string"}, "a1": _NUM, "a2": _NUM, "to": {"type": "string"}, "prob": _NUM},
            },
        },
        "absorbing": {"type": "object", "additionalProperties": _PAIR},
        "solved": {"type": "object", "additionalProperties": _PAIR},
        "family": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["p1", "p2"],
                "properties": {
                    "p1": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _NUM}},
                    "p2": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _NUM}},
                },
            },
        },
        "objective": {
            "type": "object",
            "required": ["p1", "p2"],
            "properties": {"p1": _OBJECTIVE, "p2": _OBJECTIVE},
        },
    },
}


def _action_ids(ref, names: Sequence[str]) -> list[int]:
    """``"*"`` expands to all actions; otherwise accept a name or an index."""
    if ref == "*":
        return list(range(len(names)))
    if isinstance(ref, int):
        if not 0 <= ref < len(names):
            raise GameError(f"action index {ref} out of range")
        return [ref]
    if ref in names:
        return [names.index(ref)]
    raise GameError(f"unknown action {ref!r}")


def _parse_objective(doc: dict, states, actions) -> Objective:
    kind = doc["type"]
    n, m1, m2 = len(states), len(actions[0]), len(actions[1])

    def state_set(key):
        return frozenset(states.index(x) for x in doc.get(key, []))

    def stage_table():
        base = frac(doc.get("default_stage", 0))
        table = [[[base] * m2 for _ in range(m1)] for _ in range(n)]
        for entry in doc.get("stage", []):
            s = states.index(entry["state"])
            for a1 in _action_ids(entry.get("a1", "*"), actions[0]):
                for a2 in _action_ids(entry.get("a2", "*"), actions[1]):
                    table[s][a1][a2] = frac(entry["value"])
        return _table(table)

    if kind == "discounted":
        lam = frac(doc["lambda"])
        if not 0 < lam < 1:
            raise GameError("discount must lie in (0, 1)")
        return Discounted(lam, stage_table())
    if kind == "average":
        return LongRunAverage(stage_table())
    win, lose = frac(doc.get("win", 1)), frac(doc.get("lose", 0))
    if kind == "buchi":
        return Buchi(state_set("target"), win, lose)
    if kind == "cobuchi":
        return CoBuchi(state_set("avoid"), win, lose)
    if kind == "recursive":
        return RecursiveAbsorbing(frac(doc.get("default", 0)))
    return EntryParity(states.index(doc["target"]), win, lose)


def load_game(document) -> StochasticGame:
    """Build a game from a JSON document (a dict, a JSON string, or a path)."""
    if isinstance(document, str):
        text = document
        if not document.lstrip().startswith("{"):
            with open(document) as fh:
                text = fh.read()
        document = json.loads(text)
    try:
        jsonschema.validate(document, GAME_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise GameError(f"schema violation: {exc.message}") from None

    states = list(document["states"])
    if len(set(states)) != len(states):
        raise GameError("duplicate state names")
    actions = (list(document["actions"]["p1"]), list(document["actions"]["p2"]))
    n, m1, m2 = len(states), len(actions[0]), len(actions[1])

    def sidx(name):
        if name not in states:
            raise GameError(f"unknown state {name!r}")
        return states.index(name)

    table = [[[[Fraction(0)] * n for _ in range(m2)] for _ in range(m1)] for _ in range(n)]
    touched = set()
    for entry in document["kernel"]:
        s, t = sidx(entry["from"]), sidx(entry["to"])
        for a1 in _action_ids(entry["a1"], actions[0]):
            for a2 in _action_ids(entry["a2"], actions[1]):
                table[s][a1][a2][t] += frac(entry["prob"])
                touched.add(s)

    gamma = {}
    for name, pair in document.get("absorbing", {}).items():
        s = sidx(name)
        gamma[s] = (frac(pair["g1"]), frac(pair["g2"]))
        if s not in touched:
            # an absorbing state may omit its rows; they are self-loops by definition
            for a1 in range(m1):
                for a2 in range(m2):
                    table[s][a1][a2][s] = Fraction(1)

    for s in range(n):
        for a1 in range(m1):
            for a2 in range(m2):
                if sum(table[s][a1][a2]) != 1:
                    raise GameError(f"kernel row not stochastic at ({states[s]}, {actions[0][a1]}, {actions[1][a2]})")

    solved = {sidx(k): (frac(v["g1"]), frac(v["g2"])) for k, v in document.get("solved", {}).items()}
    objectives = tuple(_parse_objective(document["objective"][p], states, actions) for p in ("p1", "p2"))
    kernel = Kernel("p", tuple(tuple(tuple(tuple(d) for d in r2) for r2 in r1) for r1 in table))
    return StochasticGame(tuple(states), (tuple(actions[0]), tuple(actions[1])), kernel, gamma, objectives, solved)


def load_family(document, game: StochasticGame) -> ActionSets | None:
    """The optional ``family`` field: mixed-action lists per non-absorbing state, or None when absent."""
    if isinstance(document, str):
        text = document
        if not document.lstrip().startswith("{"):
            with open(document) as fh:
                text = fh.read()
        document = json.loads(text)
    raw = document.get("family")
    if raw is None:
        return None
    cells = {}
    for name, lists in raw.items():
        s = game.index(name)
        if s in game.gamma:
            raise GameError(f"family given at absorbing state {name!r}")
        cells[s] = tuple(tuple(mixed(x) for x in lists[p]) for p in ("p1", "p2"))
        for i in (0, 1):
            if any(len(x) != game.n_actions[i] for x in cells[s][i]):
                raise GameError(f"family entry of player {i + 1} has wrong length at state {name!r}")
    missing = [game.states[s] for s in game.nonabsorbing if s not in cells]
    if missing:
        raise GameError(f"family misses states {missing}")
    return ActionSets(cells)


def _objective_json(obj, states) -> dict:
    def stage(table):
        return [
            {"state": states[s], "a1": a1, "a2": a2, "value": str(v)}
            for s, r1 in enumerate(table) for a1, r2 in enumerate(r1) for a2, v in enumerate(r2)
        ]

    if isinstance(obj, Discounted):
        return {"type": "discounted", "lambda": str(obj.lam), "stage": stage(obj.stage)}
    if isinstance(obj, LongRunAverage):
        return {"type": "average", "stage": stage(obj.stage)}
    if isinstance(obj, Buchi):
        return {"type": "buchi", "target": [states[s] for s in sorted(obj.target)], "win": str(obj.win), "lose": str(obj.lose)}
    if isinstance(obj, CoBuchi):
        return {"type": "cobuchi", "avoid": [states[s] for s in sorted(obj.avoid)], "win": str(obj.win), "lose": str(obj.lose)}
    if isinstance(obj, RecursiveAbsorbing):
        return {"type": "recursive", "default": str(obj.default)}
    return {"type": "entry_parity", "target": states[obj.target], "win": str(obj.win), "lose": str(obj.lose)}


def game_to_json(game: StochasticGame) -> dict:
    doc = {
        "states": list(game.states),
        "actions": {"p1": list(game.actions[0]), "p2": list(game.actions[1])},
        "kernel": game.kernel.to_json(game.states),
        "absorbing": {game.states[s]: {"g1": str(g[0]), "g2": str(g[1])} for s, g in sorted(game.gamma.items())},
        "objective": {f"p{i + 1}": _objective_json(game.objectives[i], game.states) for i in (0, 1)},
    }
    if game.solved:
        doc["solved"] = {game.states[s]: {"g1": str(g[0]), "g2": str(g[1])} for s, g in sorted(game.solved.items())}
    return doc


# --------------------------------------------------------------- normalization

def grid_floor(x: Fraction, eps: Fraction) -> Fraction:
    return math.floor(x / eps) * eps


def normalize(game: StochasticGame, eps) -> StochasticGame:
    """Round payoffs down to the ``eps`` grid, shift them into the sign convention, and absorb solved states.

    After normalization player 1's payoff data are at most -1 and player 2's
    at least 1. The applied shifts accumulate in ``game.offsets`` so that a
    normalized payoff ``f`` corresponds to ``f - offset`` in the input game.
    """
    eps = frac(eps)
    if eps <= 0:
        raise GameError("epsilon must be positive")
    gamma = {s: tuple(grid_floor(g, eps) for g in pair) for s, pair in game.gamma.items()}
    for s, pair in game.solved.items():
        if pair is None or len(pair) != 2:
            raise GameError(f"solved state {game.states[s]} lacks a payoff pair")
        gamma[s] = tuple(grid_floor(frac(g), eps) for g in pair)
    objectives = [obj.mapped(lambda v: grid_floor(v, eps)) for obj in game.objectives]

    # a non-absorption default never materializes when every state absorbs
    free = len(gamma) < game.n_states
    data = [([v for v in obj.data()] if free or not isinstance(obj, RecursiveAbsorbing) else [])
            + [pair[i] for pair in gamma.values()] for i, obj in enumerate(objectives)]
    shift1 = min(Fraction(0), -1 - max(data[0], default=Fraction(-1)))
    shift2 = max(Fraction(0), 1 - min(data[1], default=Fraction(1)))
    shifts = (shift1, shift2)
    objectives = tuple(obj.mapped(lambda v, d=shifts[i]: v + d) for i, obj in enumerate(objectives))
    gamma = {s: (pair[0] + shift1, pair[1] + shift2) for s, pair in gamma.items()}

    m1, m2 = game.n_actions
    rows = list(game.kernel.rows)
    for s in game.solved:
        loop = tuple(Fraction(int(t == s)) for t in range(game.n_states))
        rows[s] = tuple(tuple(loop for _ in range(m2)) for _ in range(m1))
    kernel = Kernel("p", tuple(rows))
    offsets = (game.offsets[0] + shift1, game.offsets[1] + shift2)
    return StochasticGame(game.states, game.actions, kernel, gamma, objectives, {}, offsets)


def prefix_payoff(game: StochasticGame, i: int, states: Sequence[int], actions: Sequence[tuple]) -> Fraction:
    """Payoff statistic of a finite run prefix for discounted and average objectives.

    Average objectives return the mean stage payoff; discounted objectives
    return the truncated normalized discounted sum.
    """
    obj = game.objectives[i]
    stages = [game.stage_payoff(i, s, a1, a2) for s, (a1, a2) in zip(states, actions)]
    if isinstance(obj, LongRunAverage):
        return sum(stages, Fraction(0)) / len(stages)
    if isinstance(obj, Discounted):
        return sum((obj.lam * (1 - obj.lam) ** t * g for t, g in enumerate(stages)), Fraction(0))
    raise GameError("prefix payoffs are defined for discounted and average objectives")
