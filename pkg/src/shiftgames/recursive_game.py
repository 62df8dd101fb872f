"""The auxiliary recursive game and its stationary equilibria.

States of the third family become dummy states: their transitions are the
action-independent rows of ``p_tilde``, and runs that never absorb pay 0.
Equilibria are searched heuristically among stationary profiles and accepted
only with an exact certificate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import mdp
from .automaton import stationary
from .game import (
    GameError,
    RecursiveAbsorbing,
    StochasticGame,
    expected_value,
    pure,
    snap_mixed,
    step_distribution,
    uniform,
)
from .simulate import best_response
from .structure import Decomposition, StructureError, _fracs, margin_for
from .values import ValueVector, maxmin_values, recursive_iteration


class ComparisonError(StructureError):
    """Auxiliary values fall below the original maxmin values."""


@dataclass
class AuxiliaryGame:
    game: StochasticGame
    dummy: frozenset
    source: StochasticGame

    @property
    def free(self) -> tuple:
        """Non-absorbing states where the players actually choose."""
        return tuple(s for s in self.game.nonabsorbing if s not in self.dummy)


def build_auxiliary(game: StochasticGame, dec: Decomposition | None = None) -> AuxiliaryGame:
    """Recursive game on the rewritten kernel; non-absorbed runs pay 0 to both players."""
    if dec is None or not dec.F3:
        kernel, dummy = game.kernel, frozenset()
    else:
        seen = set()
        for E, _, _ in dec.F3:
            if seen & E:
                raise StructureError("third-family sets overlap")
            seen |= E
        kernel, dummy = dec.p_tilde, frozenset(seen)
    objectives = (RecursiveAbsorbing(Fraction(0)), RecursiveAbsorbing(Fraction(0)))
    aux = replace(game, kernel=kernel, objectives=objectives)
    return AuxiliaryGame(aux, dummy, game)


def _canonical(aux: AuxiliaryGame, table, player: int) -> list:
    """Dummy and absorbing states get the first action; elsewhere keep ``table``."""
    n = aux.game.n_actions[player]
    return [tuple(table[s]) if s in aux.free else pure(0, n) for s in range(aux.game.n_states)]


# -------------------------------------------------------------------- values

@dataclass
class RecursiveValues:
    values: tuple  # ValueVector per player
    violations: list  # (player, state, v^R, v)

    def to_json(self, game):
        return {
            "values": [v.to_json() for v in self.values],
            "violations": [
                {"player": i + 1, "state": game.states[s], "auxiliary": float(a), "original": float(b)}
                for i, s, a, b in self.violations
            ],
        }


def recursive_values(aux: AuxiliaryGame, original: tuple, tol: float = 1e-6, check: bool = True) -> RecursiveValues:
    """Maxmin values of the auxiliary game, compared state by state with the original values."""
    vals = []
    for i in (0, 1):
        v = maxmin_values(aux.game, i)
        if not v.exact:
            recursive_iteration(aux.game, i, max_sweeps=20000, monotone_check=(i == 1))
        vals.append(v)
    violations = []
    for i in (0, 1):
        orig = original[i].values if isinstance(original[i], ValueVector) else original[i]
        for s in aux.game.nonabsorbing:
            if float(vals[i].values[s]) < float(orig[s]) - tol:
                violations.append((i, s, vals[i].values[s], orig[s]))
    result = RecursiveValues(tuple(vals), violations)
    if check and violations:
        i, s, a, b = violations[0]
        raise ComparisonError(
            f"auxiliary value {float(a):.6g} of player {i + 1} at state {aux.game.states[s]} "
            f"is below the original value {float(b):.6g}"
        )
    return result


# --------------------------------------------------------------- absorption

def induced_chain(game: StochasticGame, x1, x2, kernel=None) -> list:
    return [list(step_distribution(game, s, x1[s], x2[s], kernel)) for s in range(game.n_states)]


def absorption_probability(aux: AuxiliaryGame | StochasticGame, x1, x2, s: int | None = None):
    """Exact probability of eventual absorption under a stationary pair (all states, or one)."""
    game = aux.game if isinstance(aux, AuxiliaryGame) else aux
    matrix = induced_chain(game, x1, x2)
    probs = mdp.hitting_probabilities(matrix, set(game.gamma)) if game.gamma else [Fraction(0)] * game.n_states
    return probs if s is None else probs[s]


def is_absorbing_pair(game: StochasticGame, x1, x2) -> bool:
    return all(p == 1 for p in absorption_probability(game, x1, x2))


def stationary_payoffs(game: StochasticGame, x1, x2) -> tuple:
    """Exact recursive payoffs of both players from every state under a stationary pair."""
    matrix = induced_chain(game, x1, x2)
    out = []
    for i in (0, 1):
        default = game.objectives[i].default

        def value(cls, _stat, i=i, default=default):
            (s,) = cls if len(cls) == 1 else (None,)
            return game.gamma[s][i] if s is not None and s in game.gamma else default

        out.append(tuple(mdp.chain_values_exact(matrix, value)))
    return tuple(out)


def b2_uniform(aux: AuxiliaryGame, x1, v2, margin=None) -> list:
    """Player 2 mixes uniformly over the actions that keep her expected maxmin value from dropping.

    Iterative values get the usual strictness margin so round-off does not
    exclude value-preserving actions.
    """
    game = aux.game
    margin = Fraction(margin_for(v2) if margin is None else margin)
    v2 = _fracs(v2)
    m2 = game.n_actions[1]
    out = []
    for s in range(game.n_states):
        if s in game.gamma:
            out.append(pure(0, m2))
            continue
        good = [a2 for a2 in range(m2) if expected_value(game, v2, s, x1[s], pure(a2, m2)) >= v2[s] - margin]
        if not good:
            raise StructureError(f"no value-preserving action of player 2 at state {game.states[s]}")
        out.append(uniform(m2, good))
    return out


# -------------------------------------------------------------- equilibrium

@dataclass
class EquilibriumCertificate:
    x1: list
    x2: list
    payoffs: tuple  # per player, per state
    gaps: tuple  # per player: max over states of best-response excess
    absorption: tuple  # per state
    epsilon: float
    target: float
    certified: bool
    source: str
    exact: bool = True
    notes: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return "CERTIFIED" if self.certified else "UNCERTIFIED"

    @property
    def min_absorption(self):
        return min(self.absorption) if self.absorption else Fraction(1)

    def to_json(self, game: StochasticGame) -> dict:
        table = lambda x: {game.states[s]: [str(w) for w in x[s]] for s in range(game.n_states)}  # noqa: E731
        return {
            "status": self.status,
            "source": self.source,
            "epsilon": self.epsilon,
            "target_gap": self.target,
            "gaps": [float(g) for g in self.gaps],
            "min_absorption": str(self.min_absorption),
            "payoffs": [{game.states[s]: str(v) for s, v in enumerate(p)} for p in self.payoffs],
            "x1": table(self.x1),
            "x2": table(self.x2),
            "exact": self.exact,
            "notes": self.notes,
        }


def _pure_replies(game, player, free):
    n = game.n_actions[player]
    for choice in itertools.product(range(n), repeat=len(free)):
        yield dict(zip(free, choice))


def _exact_best(aux: AuxiliaryGame, responder: int, fixed, cap: int) -> tuple | None:
    """Exact best-response values against a stationary strategy, by enumerating pure stationary replies."""
    game = aux.game
    free = aux.free
    n = game.n_actions[responder]
    if n ** len(free) > cap:
        return None
    best = None
    for reply in _pure_replies(game, responder, free):
        own = [pure(reply[s], n) if s in reply else pure(0, n) for s in range(game.n_states)]
        pair = (own, fixed) if responder == 0 else (fixed, own)
        vals = stationary_payoffs(game, *pair)[responder]
        best = list(vals) if best is None else [max(a, b) for a, b in zip(best, vals)]
    return tuple(best)


def _float_best(aux: AuxiliaryGame, responder: int, fixed) -> tuple:
    game = aux.game
    opp = stationary(game, 1 - responder, fixed)
    br = best_response(game, opp, responder, starts=range(game.n_states))
    return tuple(br.values[s] for s in range(game.n_states))


def certify(aux: AuxiliaryGame, x1, x2, epsilon: float, ratio: float = 5.0, cap: int = 4096,
            source: str = "") -> EquilibriumCertificate:
    """Exact gaps and absorption of a stationary pair in the auxiliary game."""
    game = aux.game
    x1, x2 = _canonical(aux, x1, 0), _canonical(aux, x2, 1)
    target = epsilon / ratio
    payoffs = stationary_payoffs(game, x1, x2)
    gaps = []
    exact = True
    for i in (0, 1):
        fixed = x2 if i == 0 else x1
        best = _exact_best(aux, i, fixed, cap)
        if best is None:
            best = _float_best(aux, i, fixed)
            exact = False
        gaps.append(max((Fraction(best[s]) - payoffs[i][s] for s in game.nonabsorbing), default=Fraction(0)))
        gaps[-1] = max(gaps[-1], Fraction(0))
    absorption = tuple(absorption_probability(game, x1, x2))
    ok = all(g <= Fraction(target) for g in gaps) and min(absorption) >= 1 - Fraction(epsilon) / 2
    return EquilibriumCertificate(x1, x2, payoffs, tuple(gaps), absorption, epsilon, target, ok, source, exact)


def _quick_gap(aux: AuxiliaryGame, x1, x2) -> float:
    """Float screening score: worst best-response excess plus non-absorption mass."""
    game = aux.game
    pair = [np.array([[float(w) for w in x[s]] for s in range(game.n_states)]) for x in (x1, x2)]
    a1, a2 = stationary(game, 0, x1), stationary(game, 1, x2)
    from .simulate import absorption_probabilities, on_path_values
    on = on_path_values(game, a1, a2, starts=range(game.n_states))
    worst = 0.0
    for i, opp in ((0, a2), (1, a1)):
        br = best_response(game, opp, i, starts=range(game.n_states))
        worst = max(worst, max(br.values[s] - on[s][i] for s in game.nonabsorbing))
    absorb = absorption_probabilities(game, a1, a2, starts=range(game.n_states))
    del pair
    return worst + (1 - min(absorb.values()))


def _snap_table(game, player, arr) -> list:
    n = game.n_actions[player]
    out = []
    for s in range(game.n_states):
        try:
            out.append(snap_mixed(arr[s], 10**4, floor=1e-6))
        except GameError:
            out.append(pure(0, n))
    return out


def _best_reply_table(aux: AuxiliaryGame, responder: int, fixed) -> list:
    game = aux.game
    opp = stationary(game, 1 - responder, fixed)
    br = best_response(game, opp, responder, starts=range(game.n_states))
    n = game.n_actions[responder]
    return [pure(br.policy.get((s, None)) or 0, n) for s in range(game.n_states)]


def candidate_profiles(aux: AuxiliaryGame, v2=None, rounds: int = 60, damping: float = 0.3,
                       pure_cap: int = 256):
    """Stationary profiles in search order: zero-sum strategies, value-preserving completions, pure
    profiles of small games, and damped best-response iterates."""
    game = aux.game
    maxmin = []
    for i in (0, 1):
        _, _, _, (s1, s2) = recursive_iteration(game, i, tol=1e-10, max_sweeps=5000)
        maxmin.append(_snap_table(game, i, s1 if i == 0 else s2))
    yield "maxmin pair", maxmin[0], maxmin[1]
    if v2 is not None:
        try:
            yield "maxmin with value-preserving completion", maxmin[0], b2_uniform(aux, maxmin[0], v2)
        except StructureError:
            pass
    free = aux.free
    m1, m2 = game.n_actions
    if (m1 * m2) ** len(free) <= pure_cap:
        for c1 in itertools.product(range(m1), repeat=len(free)):
            x1 = [pure(dict(zip(free, c1)).get(s, 0), m1) for s in range(game.n_states)]
            for c2 in itertools.product(range(m2), repeat=len(free)):
                x2 = [pure(dict(zip(free, c2)).get(s, 0), m2) for s in range(game.n_states)]
                yield "pure profile", x1, x2
    x1 = np.array([[float(w) for w in x] for x in maxmin[0]])
    x2 = np.array([[float(w) for w in x] for x in maxmin[1]])
    for k in range(rounds):
        r1 = np.array([[float(w) for w in x] for x in _best_reply_table(aux, 0, _snap_table(game, 1, x2))])
        x1 = (1 - damping) * x1 + damping * r1
        r2 = np.array([[float(w) for w in x] for x in _best_reply_table(aux, 1, _snap_table(game, 0, x1))])
        x2 = (1 - damping) * x2 + damping * r2
        yield f"damped best response {k + 1}", _snap_table(game, 0, x1), _snap_table(game, 1, x2)


def recursive_epsilon_equilibrium(aux: AuxiliaryGame, epsilon: float, ratio: float = 5.0, v2=None,
                                  budget: int = 400, screen: float = 0.5) -> EquilibriumCertificate:
    """First candidate whose exact certificate meets gap <= epsilon/ratio and absorption >= 1 - epsilon/2.

    Candidates are screened in floating point first; if none certifies, the
    best-screened candidate is returned flagged UNCERTIFIED.
    """
    if epsilon <= 0:
        raise GameError("epsilon must be positive")
    game = aux.game
    if not aux.free:
        x1 = _canonical(aux, [pure(0, game.n_actions[0])] * game.n_states, 0)
        x2 = _canonical(aux, [pure(0, game.n_actions[1])] * game.n_states, 1)
        return certify(aux, x1, x2, epsilon, ratio, source="no decisions")
    best, best_score = None, None
    seen = set()
    for k, (source, x1, x2) in enumerate(candidate_profiles(aux, v2)):
        if k >= budget:
            break
        key = (tuple(map(tuple, _canonical(aux, x1, 0))), tuple(map(tuple, _canonical(aux, x2, 1))))
        if key in seen:
            continue
        seen.add(key)
        score = _quick_gap(aux, x1, x2)
        if best_score is None or score < best_score:
            best, best_score = (source, x1, x2), score
        if score <= epsilon / ratio * screen + 1e-12:
            cert = certify(aux, x1, x2, epsilon, ratio, source=source)
            if cert.certified:
                return cert
    source, x1, x2 = best
    cert = certify(aux, x1, x2, epsilon, ratio, source=source)
    cert.notes.append("no candidate met the certificate; best screened candidate returned")
    return cert
