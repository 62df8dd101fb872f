"""Communicating sets, exits, controlled/blocked classification and the set families.

Every predicate is exact over Fractions and takes an optional kernel, so the
same code evaluates the original kernel and the rewritten ones. Value
comparisons use a ``margin``: 0 for exact values and a small positive number
(default 1e-6) for values produced by iteration.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .game import (
    ActionSets,
    GameError,
    Kernel,
    StochasticGame,
    expected_value,
    pure,
    resolve_kernel,
    snap_mixed,
    step_distribution,
    support,
    uniform,
)
from .values import ValueVector

DEFAULT_MARGIN = 1e-6


class StructureError(GameError):
    """A structural guarantee failed; signals approximate values or an inconsistent action family."""


def _fracs(v) -> tuple:
    if isinstance(v, ValueVector):
        return v.fractions()
    return tuple(x if isinstance(x, Fraction) else Fraction(float(x)) for x in v)


def margin_for(*vectors) -> Fraction:
    exact = all(isinstance(v, ValueVector) and v.exact for v in vectors)
    return Fraction(0) if exact else Fraction(DEFAULT_MARGIN)


def _check_subset(game: StochasticGame, C) -> frozenset:
    C = frozenset(C)
    if not C:
        raise GameError("empty state set")
    if C & game.absorbing:
        raise GameError("set must lie in the non-absorbing states")
    return C


def stay_prob(game, kernel, C, s, x1, x2) -> Fraction:
    d = step_distribution(game, s, x1, x2, kernel)
    return sum((d[t] for t in C), Fraction(0))


# ------------------------------------------------------------------- closure

def is_closed(game: StochasticGame, C, X: ActionSets, kernel: Kernel | None = None) -> bool:
    C = _check_subset(game, C)
    kernel = resolve_kernel(game, kernel)
    return all(stay_prob(game, kernel, C, s, x1, x2) == 1 for s in C for x1, x2 in X.pairs(s))


# ------------------------------------------------------------- communication

def _safe_options(game, kernel, D, u, cells):
    """Support products at ``u`` whose every action pair stays in ``D`` and that contain a base pair's supports."""
    m1, m2 = game.n_actions
    bases1 = [frozenset(support(x)) for x in cells[0]]
    bases2 = [frozenset(support(x)) for x in cells[1]]
    rows = kernel.rows[u]
    safe = [[all(rows[a1][a2][t] == 0 for t in range(game.n_states) if t not in D) for a2 in range(m2)] for a1 in range(m1)]
    options = []
    for r1 in range(1, m1 + 1):
        for t1 in itertools.combinations(range(m1), r1):
            s1 = frozenset(t1)
            if not any(b <= s1 for b in bases1):
                continue
            for r2 in range(1, m2 + 1):
                for t2 in itertools.combinations(range(m2), r2):
                    s2 = frozenset(t2)
                    if not any(b <= s2 for b in bases2):
                        continue
                    if all(safe[a1][a2] for a1 in t1 for a2 in t2):
                        succ = frozenset(t for a1 in t1 for a2 in t2 for t, p in enumerate(rows[a1][a2]) if p)
                        options.append((t1, t2, succ))
    return options


def reach_witness(game: StochasticGame, D, cells: dict, target: int, kernel: Kernel | None = None):
    """States of ``D`` from which some perturbation stays in ``D`` and hits ``target`` almost surely.

    ``cells[u] = (base list of player 1, base list of player 2)``. Returns the
    winning set and, for each winning state, the support product used (the
    witness profile is uniform on it).
    """
    kernel = resolve_kernel(game, kernel)
    D = frozenset(D)
    opts = {u: _safe_options(game, kernel, D, u, cells[u]) for u in D}
    zone = set(D)
    while True:
        reach = {target}
        choice = {}
        if opts[target]:
            choice[target] = next((o for o in opts[target] if o[2] <= zone), None)
            if choice[target] is None:
                del choice[target]
        grew = True
        while grew:
            grew = False
            for u in sorted(zone - reach):
                for o in opts[u]:
                    if o[2] <= zone and o[2] & reach:
                        reach.add(u)
                        choice[u] = o
                        grew = True
                        break
        if target in reach and target not in choice:
            reach.discard(target)
        if reach == zone:
            return frozenset(zone), choice
        if not reach:
            return frozenset(), {}
        zone = reach


def _profile(game, choice) -> dict:
    m1, m2 = game.n_actions
    return {u: (uniform(m1, t1), uniform(m2, t2)) for u, (t1, t2, _) in choice.items()}


def communicates(game: StochasticGame, D, cells: dict, kernel: Kernel | None = None):
    """Perturbation communication within ``D`` (no closure precondition). Returns ``(bool, witnesses)``."""
    D = frozenset(D)
    witness = {}
    for target in sorted(D):
        zone, choice = reach_witness(game, D, cells, target, kernel)
        if zone != D:
            return False, {}
        witness[target] = _profile(game, choice)
    return True, witness


def is_communicating(game: StochasticGame, C, X: ActionSets, kernel: Kernel | None = None):
    """Closure plus almost-sure perturbation reachability between every ordered pair of states."""
    C = _check_subset(game, C)
    if not is_closed(game, C, X, kernel):
        raise GameError("closure failure")
    return communicates(game, C, {u: X.cells[u] for u in C}, kernel)


# --------------------------------------------------------------------- exits

@dataclass(frozen=True)
class UnilateralExit:
    state: int
    player: int  # the exiting player (0 or 1)
    action: int
    opponent: tuple  # opponent mixed action from the family
    keeper: tuple  # own mixed action from the family that keeps play in the set
    leave: Fraction

    def profile(self, game) -> tuple:
        mine = pure(self.action, game.n_actions[self.player])
        return (mine, self.opponent) if self.player == 0 else (self.opponent, mine)

    def to_json(self, game):
        return {
            "state": game.states[self.state],
            "player": self.player + 1,
            "action": game.actions[self.player][self.action],
            "opponent": [str(w) for w in self.opponent],
            "leave": str(self.leave),
        }


@dataclass(frozen=True)
class JointExit:
    state: int
    a1: int
    a2: int
    x1: tuple
    x2: tuple
    leave: Fraction

    def profile(self, game) -> tuple:
        return pure(self.a1, game.n_actions[0]), pure(self.a2, game.n_actions[1])

    def to_json(self, game):
        return {
            "state": game.states[self.state],
            "a1": game.actions[0][self.a1],
            "a2": game.actions[1][self.a2],
            "leave": str(self.leave),
        }


@dataclass(frozen=True)
class Exits:
    e1: tuple
    e2: tuple
    e12: tuple

    def unilateral(self, i: int) -> tuple:
        return self.e1 if i == 0 else self.e2


def enumerate_exits(game: StochasticGame, C, X: ActionSets, kernel: Kernel | None = None) -> Exits:
    C = _check_subset(game, C)
    kernel = resolve_kernel(game, kernel)
    m = game.n_actions
    uni = ([], [])
    joint = []
    for s in sorted(C):
        X1, X2 = X.cells[s]
        for i in (0, 1):
            own, opp = (X1, X2) if i == 0 else (X2, X1)
            for xj in opp:
                def pair(xi):
                    return (xi, xj) if i == 0 else (xj, xi)
                keeper = next((xi for xi in own if stay_prob(game, kernel, C, s, *pair(xi)) == 1), None)
                if keeper is None:
                    continue
                for a in range(m[i]):
                    stay = stay_prob(game, kernel, C, s, *pair(pure(a, m[i])))
                    if stay < 1:
                        uni[i].append(UnilateralExit(s, i, a, tuple(xj), tuple(keeper), 1 - stay))
        for a1 in range(m[0]):
            for a2 in range(m[1]):
                stay = stay_prob(game, kernel, C, s, pure(a1, m[0]), pure(a2, m[1]))
                if stay == 1:
                    continue
                for x1 in X1:
                    found = False
                    for x2 in X2:
                        if (stay_prob(game, kernel, C, s, x1, x2) == 1
                                and stay_prob(game, kernel, C, s, pure(a1, m[0]), x2) == 1
                                and stay_prob(game, kernel, C, s, x1, pure(a2, m[1])) == 1):
                            joint.append(JointExit(s, a1, a2, tuple(x1), tuple(x2), 1 - stay))
                            found = True
                            break
                    if found:
                        break
    return Exits(tuple(uni[0]), tuple(uni[1]), tuple(joint))


def exit_value(game, exit_, v, kernel=None) -> Fraction:
    x1, x2 = exit_.profile(game)
    return expected_value(game, v, exit_.state, x1, x2, kernel)


def exit_distribution(game, exit_, kernel=None) -> tuple:
    x1, x2 = exit_.profile(game)
    return step_distribution(game, exit_.state, x1, x2, kernel)


def H_value(game: StochasticGame, C, X: ActionSets, i: int, v, kernel: Kernel | None = None,
            tol: Fraction | float = 0):
    """Maximal expected continuation value of player ``i`` over states of ``C``, own actions and listed opponent mixes."""
    C = _check_subset(game, C)
    kernel = resolve_kernel(game, kernel)
    v = _fracs(v)
    m = game.n_actions[i]
    best, arg = None, None
    for s in sorted(C):
        for xj in X.cells[s][1 - i]:
            for a in range(m):
                prof = (pure(a, m), xj) if i == 0 else (xj, pure(a, m))
                val = expected_value(game, v, s, *prof, kernel)
                if best is None or val > best:
                    best, arg = val, (s, a, tuple(xj))
    top = max(v[s] for s in C)
    if best < top - Fraction(tol):
        raise StructureError(f"H value {float(best)} below the maximal value {float(top)} of the set")
    return best, arg


# ------------------------------------------------------------ classification

@dataclass
class Classification:
    C: frozenset
    exits: Exits
    H: tuple
    controlled_by: tuple  # per player: witnessing exit or None
    jointly_controlled: bool
    mu: tuple  # ((JointExit, weight), ...) when jointly controlled
    blocked_to: tuple
    best_exit: tuple  # per player: exit maximizing own expected value, or None
    margin: Fraction


def _feasible_mixture(values: list, H: tuple, margin: Fraction):
    """Find weights over joint exits with sum_e mu_e * values[e][k] >= H[k] - margin for both k."""
    n = len(values)
    lo = (H[0] - margin, H[1] - margin)
    for e in range(n):
        if values[e][0] >= lo[0] and values[e][1] >= lo[1]:
            return [(e, Fraction(1))]
    for e, f in itertools.combinations(range(n), 2):
        # t * a + (1 - t) * b >= lo for both coordinates, t in [0, 1]
        t_lo, t_hi = Fraction(0), Fraction(1)
        ok = True
        for k in (0, 1):
            a, b = values[e][k], values[f][k]
            if a == b:
                if a < lo[k]:
                    ok = False
                continue
            bound = (lo[k] - b) / (a - b)
            if a > b:
                t_lo = max(t_lo, bound)
            else:
                t_hi = min(t_hi, bound)
        if ok and t_lo <= t_hi:
            t = t_lo
            return [(e, t), (f, 1 - t)] if t > 0 else [(f, Fraction(1))]
    if n < 3:
        return None
    a = np.array([[float(v[k]) for v in values] for k in (0, 1)])
    res = linprog(np.zeros(n), A_ub=-a, b_ub=-np.array([float(x) for x in lo]), A_eq=np.ones((1, n)), b_eq=[1.0],
                  bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        return None
    w = snap_mixed(res.x, 10**6)
    if all(sum(w[e] * values[e][k] for e in range(n)) >= lo[k] for k in (0, 1)):
        return [(e, w[e]) for e in range(n) if w[e] > 0]
    return None


def classify_set(game: StochasticGame, C, X: ActionSets, v1, v2, kernel: Kernel | None = None,
                 margin=None, check: bool = True) -> Classification:
    """Controlled / jointly controlled / blocked flags of a communicating set."""
    C = _check_subset(game, C)
    if margin is None:
        margin = margin_for(v1, v2)
    margin = Fraction(margin)
    if check:
        ok, _ = is_communicating(game, C, X, kernel)
        if not ok:
            raise GameError("set is not communicating")
    v = (_fracs(v1), _fracs(v2))
    ex = enumerate_exits(game, C, X, kernel)
    H = tuple(H_value(game, C, X, k, v[k], kernel, margin)[0] for k in (0, 1))
    controlled = []
    best = []
    blocked = []
    for i in (0, 1):
        own = ex.unilateral(i)
        vals = [(exit_value(game, e, v[0], kernel), exit_value(game, e, v[1], kernel)) for e in own]
        good = [(vals[n][i], -n, e) for n, e in enumerate(own) if vals[n][0] >= H[0] - margin and vals[n][1] >= H[1] - margin]
        controlled.append(max(good, key=lambda t: (t[0], t[1]))[2] if good else None)
        best.append(max(zip(own, vals), key=lambda t: t[1][i])[0] if own else None)
        top = max(v[i][s] for s in C)
        blocked.append(all(val[i] < top - margin for val in vals))
    jvals = [(exit_value(game, e, v[0], kernel), exit_value(game, e, v[1], kernel)) for e in ex.e12]
    mix = _feasible_mixture(jvals, H, margin) if jvals else None
    mu = tuple((ex.e12[e], w) for e, w in mix) if mix else ()
    return Classification(C, ex, H, tuple(controlled), bool(mix), mu, tuple(blocked), tuple(best), margin)


# ------------------------------------------------------------------ families

@dataclass
class F1Set:
    C: frozenset
    controller: str  # "player2" or "joint"
    exit: object  # UnilateralExit, or tuple of (JointExit, weight)
    q: tuple
    funnel: dict  # target state -> witness profile


@dataclass
class F2Set:
    D: frozenset
    cells: dict  # state -> (Y1^D list, Y2 list)
    exit: UnilateralExit
    q: tuple
    funnel: dict  # witness profile steering to the exit state under the rewritten kernel
    funnel_p: dict  # the same steering requirement solved under the original kernel


@dataclass
class Decomposition:
    X: ActionSets
    v1: tuple
    v2: tuple
    margin: Fraction
    F1: list
    F2: list
    F3: list  # (set, "F1" | "F2", index into that family)
    p_hat: Kernel
    p_tilde: Kernel
    z1: dict
    skipped: list = field(default_factory=list)  # (set, reason) dropped in non-strict mode

    @property
    def S_F1(self) -> frozenset:
        return frozenset().union(*[c.C for c in self.F1]) if self.F1 else frozenset()

    @property
    def S_F2(self) -> frozenset:
        return frozenset().union(*[d.D for d in self.F2]) if self.F2 else frozenset()

    @property
    def S_F3(self) -> frozenset:
        return self.S_F1 | self.S_F2

    def set_of(self, s: int):
        """The F3 member containing ``s`` as ``(states, family, index)``, or None."""
        for item in self.F3:
            if s in item[0]:
                return item
        return None

    def to_json(self, game: StochasticGame) -> dict:
        names = game.states

        def dist(q):
            return {names[t]: str(w) for t, w in enumerate(q) if w}

        def sparse(kernel):
            out = {}
            for s, r1 in enumerate(kernel.rows):
                if s in game.gamma:
                    continue
                for a1, r2 in enumerate(r1):
                    for a2, d in enumerate(r2):
                        out[f"{names[s]}|{game.actions[0][a1]}|{game.actions[1][a2]}"] = dist(d)
            return out

        def exit_json(c):
            if isinstance(c.exit, UnilateralExit):
                return c.exit.to_json(game)
            return [{"exit": e.to_json(game), "weight": str(w)} for e, w in c.exit]

        return {
            "F1": [{"set": [names[s] for s in sorted(c.C)], "controller": c.controller, "exit": exit_json(c), "q": dist(c.q)} for c in self.F1],
            "F2": [{"set": [names[s] for s in sorted(d.D)], "exit": d.exit.to_json(game), "q": dist(d.q)} for d in self.F2],
            "F3": [{"set": [names[s] for s in sorted(e)], "family": fam} for e, fam, _ in self.F3],
            "z1": {names[s]: [str(w) for w in x] for s, x in sorted(self.z1.items())},
            "skipped": [{"set": [names[s] for s in sorted(C)], "reason": why} for C, why in self.skipped],
            "p_hat": sparse(self.p_hat),
            "p_tilde": sparse(self.p_tilde),
            "margin": str(self.margin),
        }


def _mixture(parts) -> tuple:
    n = len(parts[0][0])
    return tuple(sum((w * q[t] for q, w in parts), Fraction(0)) for t in range(n))


def _uniform_on(n: int, C) -> tuple:
    w = Fraction(1, len(C))
    return tuple(w if t in C else Fraction(0) for t in range(n))


def _half_mix(game, q, C) -> tuple:
    u = _uniform_on(game.n_states, C)
    return tuple(Fraction(1, 2) * a + Fraction(1, 2) * b for a, b in zip(q, u))


def _value_groups(game, vecs, margin):
    """Partition non-absorbing states into classes of (approximately) equal value vectors."""
    groups = []
    for s in game.nonabsorbing:
        key = tuple(v[s] for v in vecs)
        for g in groups:
            if all(abs(a - b) <= margin for a, b in zip(g[0], key)):
                g[1].append(s)
                break
        else:
            groups.append((key, [s]))
    return [sorted(g[1]) for g in groups]


def _maximal(sets: list) -> list:
    return [a for a in sets if not any(a < b for b in sets)]


def _subsets(states, max_states):
    if len(states) > max_states:
        raise GameError(f"subset enumeration capped at {max_states} states")
    for r in range(1, len(states) + 1):
        for c in itertools.combinations(states, r):
            yield frozenset(c)


def qualifies_F1(game, C, X, v, margin, kernel=None) -> bool:
    """(P1)-(P3): communicating under the family, constant values, blocked to player 1."""
    if not is_closed(game, C, X, kernel):
        return False
    if not communicates(game, C, {u: X.cells[u] for u in C}, kernel)[0]:
        return False
    ex = enumerate_exits(game, C, X, kernel)
    top = max(v[0][s] for s in C)
    return all(exit_value(game, e, v[0], kernel) < top - margin for e in ex.e1)


def _reject(skipped, C, game, reason):
    if skipped is None:
        raise StructureError(reason)
    skipped.append((frozenset(C), reason))


def build_F1(game: StochasticGame, X: ActionSets, v1, v2, margin=None, max_states: int = 20, skipped=None):
    """First family: maximal blocked-to-player-1 communicating sets with constant values, and the kernel p_hat.

    A set failing the controlled-or-joint dichotomy is a hard error unless a
    ``skipped`` list is given, in which case it is dropped and recorded there.
    """
    if margin is None:
        margin = margin_for(v1, v2)
    margin = Fraction(margin)
    v = (_fracs(v1), _fracs(v2))
    qualifying = []
    for group in _value_groups(game, v, margin):
        for C in _subsets(group, max_states):
            if qualifies_F1(game, C, X, v, margin):
                qualifying.append(C)
    family = sorted(_maximal(qualifying), key=lambda c: sorted(c))
    for a, b in itertools.combinations(family, 2):
        if a & b:
            raise StructureError("first-family sets overlap")
    result = []
    replacements = {}
    for C in family:
        cl = classify_set(game, C, X, v[0], v[1], margin=margin, check=False)
        if cl.controlled_by[1] is not None:
            e = cl.controlled_by[1]
            q = exit_distribution(game, e)
            item = F1Set(C, "player2", e, q, {})
            target = e.state
        elif cl.jointly_controlled:
            q = _mixture([(exit_distribution(game, e), w) for e, w in cl.mu])
            item = F1Set(C, "joint", cl.mu, q, {})
            target = cl.mu[0][0].state
        else:
            _reject(skipped, C, game,
                    f"set {sorted(game.states[s] for s in C)} is neither controlled by player 2 nor jointly controlled")
            continue
        ok, witness = communicates(game, C, {u: X.cells[u] for u in C})
        item.funnel = witness
        if not ok or target not in witness:
            _reject(skipped, C, game, "first-family set lost its communication witness")
            continue
        result.append(item)
        for s in C:
            replacements[s] = _half_mix(game, q, C)
    p_hat = game.kernel.with_rows("p_hat", replacements)
    return result, p_hat


def y1_restricted(game: StochasticGame, D, X: ActionSets, v2, S_F1, margin) -> dict:
    """Player 1's listed mixes that make every D-leaving reply of player 2 strictly costly for her."""
    m2 = game.n_actions[1]
    out = {}
    for s in D:
        if s in S_F1:
            out[s] = tuple(X.cells[s][0])
            continue
        keep = []
        for x1 in X.cells[s][0]:
            good = True
            for a2 in range(m2):
                y = pure(a2, m2)
                if stay_prob(game, game.kernel, D, s, x1, y) < 1:
                    if not expected_value(game, v2, s, x1, y) < v2[s] - margin:
                        good = False
                        break
            if good:
                keep.append(tuple(x1))
        out[s] = tuple(keep)
    return out


def build_F2(game: StochasticGame, p_hat: Kernel, X: ActionSets, v1, v2, F1: list, margin=None,
             max_states: int = 20, skipped=None):
    """Second family: maximal sets with constant v2 that communicate under p_hat with the restricted lists."""
    if margin is None:
        margin = margin_for(v1, v2)
    margin = Fraction(margin)
    v = (_fracs(v1), _fracs(v2))
    S_F1 = frozenset().union(*[c.C for c in F1]) if F1 else frozenset()
    qualifying = {}
    for group in _value_groups(game, (v[1],), margin):
        for D in _subsets(group, max_states):
            y1 = y1_restricted(game, D, X, v[1], S_F1, margin)
            if any(not y1[s] for s in D):
                continue
            cells = {s: (y1[s], X.cells[s][1]) for s in D}
            if communicates(game, D, cells, p_hat)[0]:
                qualifying[D] = cells
    family = sorted(_maximal(list(qualifying)), key=lambda d: sorted(d))
    for a, b in itertools.combinations(family, 2):
        if a & b:
            raise StructureError("second-family sets overlap")
    for D in family:
        for c in F1:
            if c.C & D and not c.C <= D:
                raise StructureError("a first-family set straddles a second-family set")
    result = []
    z1 = {}
    for D in family:
        cells = qualifying[D]
        YD = ActionSets(cells)
        ex = enumerate_exits(game, D, YD)
        H = tuple(H_value(game, D, YD, k, v[k], tol=margin)[0] for k in (0, 1))
        good = []
        for n, e in enumerate(ex.e1):
            ev = (exit_value(game, e, v[0]), exit_value(game, e, v[1]))
            if ev[0] >= H[0] - margin and ev[1] >= H[1] - margin:
                good.append((ev[0], -n, e))
        if not good:
            _reject(skipped, D, game, f"no value-respecting player-1 exit from {sorted(game.states[s] for s in D)}")
            continue
        e = max(good, key=lambda t: (t[0], t[1]))[2]
        if e.state in S_F1:
            _reject(skipped, D, game, "second-family exit state lies in a first-family set")
            continue
        zone, choice = reach_witness(game, D, cells, e.state, p_hat)
        if zone != D:
            _reject(skipped, D, game, "second-family set lost its communication witness")
            continue
        zone_p, choice_p = reach_witness(game, D, cells, e.state)
        funnel_p = _profile(game, choice_p) if zone_p == D else {}
        for u in D:
            if u == e.state:
                z1[u] = tuple(e.keeper) if e.keeper in cells[u][0] else cells[u][0][0]
                continue
            t1 = set(choice[u][0])
            base = next(x for x in cells[u][0] if set(support(x)) <= t1)
            z1[u] = tuple(base)
        result.append(F2Set(D, cells, e, exit_distribution(game, e), _profile(game, choice), funnel_p))
    return result, z1


def build_F3(game: StochasticGame, F1: list, F2: list):
    """Third family (second-family sets plus untouched first-family sets) and the kernel p_tilde."""
    S_F2 = frozenset().union(*[d.D for d in F2]) if F2 else frozenset()
    F3 = [(d.D, "F2", k) for k, d in enumerate(F2)]
    F3 += [(c.C, "F1", k) for k, c in enumerate(F1) if not c.C & S_F2]
    for (a, _, _), (b, _, _) in itertools.combinations(F3, 2):
        if a & b:
            raise StructureError("third-family sets overlap")
    replacements = {}
    for E, fam, k in F3:
        q = F2[k].q if fam == "F2" else F1[k].q
        for s in E:
            replacements[s] = _half_mix(game, q, E)
    p_tilde = game.kernel.with_rows("p_tilde", replacements)
    return F3, p_tilde


def decompose(game: StochasticGame, X: ActionSets, v1, v2, margin=None, max_states: int = 20,
              strict: bool = True) -> Decomposition:
    """All three families. With ``strict=False`` sets failing their exit property are dropped and listed in
    ``skipped`` instead of raising."""
    if margin is None:
        margin = margin_for(v1, v2)
    skipped = None if strict else []
    F1, p_hat = build_F1(game, X, v1, v2, margin, max_states, skipped)
    F2, z1 = build_F2(game, p_hat, X, v1, v2, F1, margin, max_states, skipped)
    F3, p_tilde = build_F3(game, F1, F2)
    dec = Decomposition(X, _fracs(v1), _fracs(v2), Fraction(margin), F1, F2, F3, p_hat, p_tilde, z1)
    dec.skipped = skipped or []
    return dec


# --------------------------------------------------------------------- audit

@dataclass
class Audit:
    first: list = field(default_factory=list)  # sets closed under p_hat, blocked to player 1, constant values
    third: list = field(default_factory=list)  # (set, x1) closed under p_tilde, blocked to player 2, constant v2

    @property
    def clean(self) -> bool:
        return not self.first and not self.third

    def to_json(self, game):
        return {
            "clean": self.clean,
            "first_family_witnesses": [[game.states[s] for s in sorted(D)] for D in self.first],
            "third_family_witnesses": [
                {"set": [game.states[s] for s in sorted(F)], "x1": {game.states[s]: [str(w) for w in x] for s, x in sorted(x1.items())}}
                for F, x1 in self.third
            ],
        }


def audit_structure(game: StochasticGame, dec: Decomposition, max_states: int = 12) -> Audit:
    """Exhaustively look for sets that the first and third families should have ruled out."""
    X, margin = dec.X, dec.margin
    v = (dec.v1, dec.v2)
    audit = Audit()
    states = list(game.nonabsorbing)
    for D in _subsets(states, max_states):
        if any(abs(v[k][s] - v[k][t]) > margin for k in (0, 1) for s in D for t in D):
            continue
        if not is_closed(game, D, X, dec.p_hat):
            continue
        ex = enumerate_exits(game, D, X)
        top = max(v[0][s] for s in D)
        if all(exit_value(game, e, v[0]) < top - margin for e in ex.e1):
            audit.first.append(D)
    S_F2 = dec.S_F2
    free = [s for s in states if s not in S_F2]
    for picks in itertools.product(*[X.cells[s][0] for s in free]):
        x1 = dict(zip(free, picks))
        x1.update({s: dec.z1[s] for s in S_F2})
        for F in _subsets(states, max_states):
            if any(abs(v[1][s] - v[1][t]) > margin for s in F for t in F):
                continue
            cells = {s: ((x1[s],), X.cells[s][1]) for s in states}
            fam = ActionSets(cells)
            if not is_closed(game, F, fam, dec.p_tilde):
                continue
            ex = enumerate_exits(game, F, fam, dec.p_tilde)
            top = max(v[1][s] for s in F)
            if all(exit_value(game, e, v[1], dec.p_tilde) < top - margin for e in ex.e2):
                audit.third.append((F, {s: x1[s] for s in F}))
    return audit
