"""Zero-sum value oracles.

Matrix games are solved by linear programming (with closed forms for the
degenerate and 2x2 cases). Discounted values use the Shapley operator with a
Hoffman-Karp warm start. Shift-invariant objectives dispatch to the
vanishing-discount extrapolation, the recursive (Everett) iteration or the
nested fixpoints for Buchi-type objectives.

Discounting convention: ``lam`` is the weight of the current stage, so the
discounted value solves ``v = val(lam * g + (1 - lam) * P v)`` and a constant
stage payoff ``c`` has value ``c``. Small ``lam`` means patient players.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from . import mdp
from .game import (
    ActionSets,
    Buchi,
    CoBuchi,
    Discounted,
    EntryParity,
    GameError,
    History,
    Kernel,
    LongRunAverage,
    RecursiveAbsorbing,
    StochasticGame,
    frac,
    resolve_kernel,
    snap_mixed,
)

MONOTONE_TOL = 1e-7  # slack for linear-programming round-off in the per-sweep monotonicity assertion
DEFAULT_GRID = tuple(2.0 ** -k for k in range(1, 11))


class NotShiftInvariant(GameError):
    pass


# ---------------------------------------------------------------- matrix games

@dataclass(frozen=True)
class MatrixSolution:
    value: float
    row: np.ndarray  # optimal mix of the maximizing row player
    col: np.ndarray  # optimal mix of the minimizing column player


def _unit(k: int, n: int) -> np.ndarray:
    e = np.zeros(n)
    e[k] = 1.0
    return e


def _clean(x: np.ndarray) -> np.ndarray:
    x = np.where(x < 1e-12, 0.0, x)
    return x / x.sum()


def solve_matrix_game(matrix, tol: float = 1e-9) -> MatrixSolution:
    """Value and optimal strategies of the zero-sum game where rows maximize.

    Pure saddle points are found first, scanning actions in index order, so
    ties resolve toward the lowest index. Otherwise a 2x2 game uses the
    indifference formulas and larger games go through two linear programs.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise GameError("empty payoff matrix")
    m, n = a.shape
    lower = a.min(axis=1)
    upper = a.max(axis=0)
    if upper.min() - lower.max() <= tol:
        i = int(np.argmax(lower >= lower.max() - tol))
        j = int(np.argmax(upper <= upper.min() + tol))
        return MatrixSolution(float(a[i, j]), _unit(i, m), _unit(j, n))
    if (m, n) == (2, 2):
        (p, q), (r, s) = a
        den = p - q - r + s
        x = (s - r) / den
        y = (s - q) / den
        value = float(np.clip((p * s - q * r) / den, lower.max(), upper.min()))
        return MatrixSolution(value, np.array([x, 1 - x]), np.array([y, 1 - y]))

    # rows: maximize v subject to x^T a >= v
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-a.T, np.ones((n, 1))])
    a_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
    bounds = [(0, None)] * m + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(n), A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"matrix game LP failed: {res.message}")
    row = _clean(res.x[:m])
    c2 = np.zeros(n + 1)
    c2[-1] = 1.0
    a_ub2 = np.hstack([a, -np.ones((m, 1))])
    a_eq2 = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    res2 = linprog(c2, A_ub=a_ub2, b_ub=np.zeros(m), A_eq=a_eq2, b_eq=[1.0], bounds=[(0, None)] * n + [(None, None)], method="highs")
    if res2.status != 0:
        raise RuntimeError(f"matrix game LP failed: {res2.message}")
    col = _clean(res2.x[:n])
    return MatrixSolution(float(-res.fun), row, col)


def solve_matrix_game_exact(matrix) -> tuple[Fraction, tuple, tuple] | None:
    """Exact value and strategies for a rational matrix, or ``None`` if not certified.

    Covers pure saddles and 2x2 games exactly; larger games are solved in
    floating point, rationalized, and accepted only if the guarantees match.
    """
    a = [[frac(v) for v in row] for row in matrix]
    m, n = len(a), len(a[0])
    lower = [min(row) for row in a]
    upper = [max(a[i][j] for i in range(m)) for j in range(n)]
    if min(upper) == max(lower):
        i = lower.index(max(lower))
        j = upper.index(min(upper))
        return a[i][j], tuple(Fraction(int(k == i)) for k in range(m)), tuple(Fraction(int(k == j)) for k in range(n))
    if (m, n) == (2, 2):
        (p, q), (r, s) = a
        den = p - q - r + s
        x = (s - r) / den
        y = (s - q) / den
        return (p * s - q * r) / den, (x, 1 - x), (y, 1 - y)
    sol = solve_matrix_game(np.array(a, dtype=float))
    for den in (10**3, 10**6):
        try:
            row = snap_mixed(sol.row, den)
            col = snap_mixed(sol.col, den)
        except GameError:
            continue
        low = min(sum(row[i] * a[i][j] for i in range(m)) for j in range(n))
        high = max(sum(a[i][j] * col[j] for j in range(n)) for i in range(m))
        if low == high:
            return low, row, col
    return None


# ------------------------------------------------------------------ value data

@dataclass(frozen=True)
class ValueVector:
    """Per-state values of one player, tagged exact or iterative with a tolerance."""

    player: int
    values: tuple
    exact: bool = False
    tol: float = 0.0
    note: str = ""

    def __getitem__(self, s: int):
        return self.values[s]

    def __len__(self):
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def fractions(self) -> tuple:
        return tuple(v if isinstance(v, Fraction) else Fraction(float(v)) for v in self.values)

    def to_json(self) -> dict:
        return {
            "player": self.player + 1,
            "values": [str(v) if self.exact else repr(float(v)) for v in self.values],
            "exact": self.exact,
            "tol": self.tol,
            "note": self.note,
        }


@dataclass(frozen=True)
class ValueFunctionProxy:
    """State-indexed stand-in for a history value function, certified for a given ``delta``."""

    player: int
    values: tuple
    delta: float


# ----------------------------------------------------------------- one-shot

def one_shot_matrix(game: StochasticGame, valuation, s: int, kernel: Kernel | None = None,
                    history: History | None = None) -> list:
    """Matrix ``E[valuation | s, a1, a2]``; ``valuation`` is per-state or a callable on extensions."""
    kernel = resolve_kernel(game, kernel)
    m1, m2 = game.n_actions
    out = []
    for a1 in range(m1):
        row = []
        for a2 in range(m2):
            total = Fraction(0)
            for t, p in enumerate(kernel.rows[s][a1][a2]):
                if p:
                    val = valuation(history, a1, a2, t) if callable(valuation) else valuation[t]
                    if val is None or (isinstance(val, float) and not np.isfinite(val)):
                        raise GameError("valuation is unbounded")
                    total += p * (val if isinstance(val, Fraction) else Fraction(val))
            row.append(total)
        out.append(row)
    return out


def one_shot_value(game: StochasticGame, valuation, where, player: int, kernel: Kernel | None = None,
                   exact: bool = False):
    """Value of the one-shot game at ``where`` (a state or a History) for the maximizing ``player``.

    Returns ``(value, optimal mixed action of player, optimal mixed action of the opponent)``.
    """
    history = where if isinstance(where, History) else None
    s = where.last if history is not None else where
    mat = one_shot_matrix(game, valuation, s, kernel, history)
    if player == 1:
        mat = [list(col) for col in zip(*mat)]
    if exact:
        res = solve_matrix_game_exact(mat)
        if res is not None:
            return res
    sol = solve_matrix_game(np.array(mat, dtype=float))
    return sol.value, sol.row, sol.col


# -------------------------------------------------------------- dense helpers

def _stage_for(game: StochasticGame, player: int) -> np.ndarray:
    obj = game.objectives[player]
    if not isinstance(obj, (Discounted, LongRunAverage, RecursiveAbsorbing)):
        raise GameError("missing stage payoffs for a discounted evaluation")
    return game.stage_arrays[player]


def _oriented(a: np.ndarray, player: int) -> np.ndarray:
    return a if player == 0 else a.T


def _shapley(game, kernel, lam, g, v, player):
    P = kernel.dense
    new = v.copy()
    smax, smin = {}, {}
    for s in game.nonabsorbing:
        mat = lam * g[s] + (1 - lam) * P[s] @ v
        sol = solve_matrix_game(_oriented(mat, player))
        new[s] = sol.value
        smax[s], smin[s] = sol.row, sol.col
    return new, smax, smin


def _opponent_response(game, kernel, lam, g, x, player, v0):
    """Exact discounted best response of the opponent (minimizer) to a stationary ``x``: policy iteration."""
    P = kernel.dense
    n = game.n_states
    nonabs = game.nonabsorbing
    other = game.n_actions[1 - player]
    # per state and opponent action: reward and transition row
    rew = np.zeros((n, other))
    trans = np.zeros((n, other, n))
    for s in range(n):
        if s in game.gamma:
            continue
        gs = _oriented(g[s], player)
        ps = P[s] if player == 0 else P[s].transpose(1, 0, 2)
        rew[s] = lam * x[s] @ gs
        trans[s] = (1 - lam) * np.einsum("a,abt->bt", x[s], ps)
    fixed = game.gamma_vector(player)
    v = v0.copy()
    choice = {s: int(np.argmin(rew[s] + trans[s] @ v)) for s in nonabs}
    for _ in range(200):
        a = np.eye(n)
        b = fixed.copy()
        for s in nonabs:
            a[s] -= trans[s, choice[s]]
            b[s] = rew[s, choice[s]]
        v = np.linalg.solve(a, b)
        improved = False
        for s in nonabs:
            q = rew[s] + trans[s] @ v
            best = int(np.argmin(q))
            if q[best] < q[choice[s]] - 1e-13:
                choice[s] = best
                improved = True
        if not improved:
            break
    return v


def discounted_value(game: StochasticGame, player: int, lam: float, tol: float = 1e-9,
                     kernel: Kernel | None = None, max_sweeps: int = 10**6):
    """Discounted value for ``player`` (maximizer) with stationary optimal strategies of both players.

    Returns ``(ValueVector, (x1, x2))`` where ``x1[s]``, ``x2[s]`` are float
    mixed actions. Iteration stops once the sup-norm change falls below
    ``tol * lam / (2 (1 - lam))``, which bounds the error by ``tol / 2``.
    """
    lam = float(lam)
    if not 0 < lam < 1:
        raise GameError("discount weight must lie in (0, 1)")
    kernel = resolve_kernel(game, kernel)
    g = _stage_for(game, player)
    v = game.gamma_vector(player)
    for s in game.nonabsorbing:
        v[s] = g[s].min() if player == 0 else g[s].min()
    # Hoffman-Karp warm start: alternate one-shot optimal strategies and exact opponent replies
    for _ in range(100):
        _, smax, _ = _shapley(game, kernel, lam, g, v, player)
        x = {s: smax[s] for s in game.nonabsorbing}
        full = np.zeros((game.n_states, game.n_actions[player]))
        for s, row in x.items():
            full[s] = row
        nv = _opponent_response(game, kernel, lam, g, full, player, v)
        if np.max(np.abs(nv - v), initial=0.0) < 1e-13:
            v = nv
            break
        v = nv
    stop = tol * lam / (2 * (1 - lam))
    diffs = []
    for _ in range(max_sweeps):
        nv, smax, smin = _shapley(game, kernel, lam, g, v, player)
        d = float(np.max(np.abs(nv - v), initial=0.0))
        diffs.append(d)
        v = nv
        if d < stop:
            break
    else:
        raise RuntimeError("Shapley iteration did not converge")
    strategies = _strategy_pair(game, player, smax, smin)
    return ValueVector(player, tuple(float(x) for x in v), False, tol, f"discounted lam={lam}"), strategies


def _strategy_pair(game, player, smax, smin):
    m1, m2 = game.n_actions
    x1 = np.zeros((game.n_states, m1))
    x2 = np.zeros((game.n_states, m2))
    x1[:, 0] = 1.0
    x2[:, 0] = 1.0
    for s in game.nonabsorbing:
        if player == 0:
            x1[s], x2[s] = smax[s], smin[s]
        else:
            x2[s], x1[s] = smax[s], smin[s]
    return x1, x2


def shapley_differences(game: StochasticGame, player: int, lam: float, sweeps: int) -> list[float]:
    """Successive sup-norm differences of plain Shapley iteration started at 0."""
    kernel = game.kernel
    g = _stage_for(game, player)
    v = game.gamma_vector(player)
    out = []
    for _ in range(sweeps):
        nv, _, _ = _shapley(game, kernel, lam, g, v, player)
        out.append(float(np.max(np.abs(nv - v), initial=0.0)))
        v = nv
    return out


# ------------------------------------------------------ shift-invariant values

def vanishing_discount(game: StochasticGame, player: int, grid: Sequence[float] = DEFAULT_GRID,
                       tol: float = 1e-10):
    """Discounted values along a decreasing grid and their Richardson extrapolation.

    With a geometric grid of ratio 1/2 the first-order extrapolation is
    ``2 v(lam/2) - v(lam)``. Returns ``(values per grid point, extrapolations, last delta)``.
    """
    if not grid:
        raise GameError("empty discount grid")
    series = [discounted_value(game, player, lam, tol)[0].array() for lam in grid]
    extrap = [2 * series[k + 1] - series[k] for k in range(len(series) - 1)]
    if len(extrap) >= 2:
        delta = float(np.max(np.abs(extrap[-1] - extrap[-2])))
    elif extrap:
        delta = float(np.max(np.abs(series[-1] - series[-2])))
    else:
        delta = float("nan")
    return series, extrap, delta


def recursive_iteration(game: StochasticGame, player: int, kernel: Kernel | None = None,
                        default=None, tol: float = 1e-12, max_sweeps: int = 10**5,
                        monotone_check: bool = False):
    """Everett-style value iteration for an absorbing-payoff objective.

    Absorbing states are fixed at gamma; non-absorbing states start at the
    non-absorption payoff ``default`` (0 for a recursive game proper). Returns
    ``(values, residual, sweeps, last one-shot strategies)``.
    """
    kernel = resolve_kernel(game, kernel)
    if default is None:
        obj = game.objectives[player]
        default = obj.default if isinstance(obj, RecursiveAbsorbing) else Fraction(0)
    P = kernel.dense
    v = game.gamma_vector(player)
    for s in game.nonabsorbing:
        v[s] = float(default)
    smax, smin = {}, {}
    residual = float("inf")
    sweeps = 0
    free = list(game.nonabsorbing)
    batched = max(game.n_actions) <= 2
    for sweeps in range(1, max_sweeps + 1):
        nv = v.copy()
        if batched and free:
            nv[free] = _batch_values(np.stack([_oriented(P[s] @ v, player) for s in free]))
        else:
            for s in free:
                sol = solve_matrix_game(_oriented(P[s] @ v, player))
                nv[s] = sol.value
                smax[s], smin[s] = sol.row, sol.col
        if monotone_check and np.any(nv < v - MONOTONE_TOL):
            raise AssertionError("recursive iteration is not monotone")
        residual = float(np.max(np.abs(nv - v), initial=0.0))
        v = nv
        if residual < tol:
            break
    if batched:
        for s in free:
            sol = solve_matrix_game(_oriented(P[s] @ v, player))
            smax[s], smin[s] = sol.row, sol.col
    return v, residual, sweeps, _strategy_pair(game, player, smax, smin)


def _batch_values(a: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Values of a stack of matrix games with at most two actions per side (same rules as the scalar solver)."""
    lower = a.min(axis=2).max(axis=1)
    upper = a.max(axis=1).min(axis=1)
    out = lower.copy()
    mixed_games = upper - lower > tol
    if a.shape[1:] == (2, 2) and mixed_games.any():
        b = a[mixed_games]
        p, q, r, s = b[:, 0, 0], b[:, 0, 1], b[:, 1, 0], b[:, 1, 1]
        out[mixed_games] = np.clip((p * s - q * r) / (p - q - r + s), lower[mixed_games], upper[mixed_games])
    return out


def _exact_guarantees(game: StochasticGame, player: int, strategy, kernel: Kernel, default: Fraction,
                      guarantor: bool, cap: int = 5000):
    """Exact payoff of ``player`` against every pure stationary reply, reduced by min (or max).

    ``strategy`` belongs to ``player`` when ``guarantor`` is true (the reply
    minimizes), otherwise to the opponent (the reply, by ``player``, maximizes).
    """
    nonabs = game.nonabsorbing
    mover = 1 - player if guarantor else player
    fixed = player if guarantor else 1 - player
    n_reply = game.n_actions[mover]
    if n_reply ** len(nonabs) > cap:
        return None
    best = None
    for choice in itertools.product(range(n_reply), repeat=len(nonabs)):
        reply = dict(zip(nonabs, choice))
        matrix = []
        for s in range(game.n_states):
            if s in game.gamma:
                matrix.append([Fraction(int(t == s)) for t in range(game.n_states)])
                continue
            row = [Fraction(0)] * game.n_states
            for a_fixed, w in enumerate(strategy[s]):
                if not w:
                    continue
                a1, a2 = (a_fixed, reply[s]) if fixed == 0 else (reply[s], a_fixed)
                for t, p in enumerate(kernel.rows[s][a1][a2]):
                    if p:
                        row[t] += w * p
            matrix.append(row)

        def class_value(cls, _stat):
            (s0,) = cls if len(cls) == 1 else (None,)
            if s0 is not None and s0 in game.gamma:
                return game.gamma[s0][player]
            return default

        vals = mdp.chain_values_exact(matrix, class_value)
        if best is None:
            best = vals
        elif guarantor:
            best = [min(a, b) for a, b in zip(best, vals)]
        else:
            best = [max(a, b) for a, b in zip(best, vals)]
    return best


def exact_absorbing_values(game: StochasticGame, player: int, kernel: Kernel | None = None,
                           default=None, approx=None, dens: Sequence[int] = (12, 100, 1000, 10**4)):
    """Try to certify exact rational values of an absorbing-payoff objective.

    A rational candidate near the iterated values is accepted when a
    stationary strategy of ``player`` guarantees it and a stationary strategy
    of the opponent holds ``player`` to it, both checked exactly against all
    pure stationary replies. Returns a tuple of Fractions or ``None``.
    """
    kernel = resolve_kernel(game, kernel)
    if default is None:
        obj = game.objectives[player]
        default = obj.default if isinstance(obj, RecursiveAbsorbing) else Fraction(0)
    default = frac(default)
    if approx is not None:
        return _certify_candidates(game, player, kernel, default, approx, None, dens)
    # convergence can be sublinear, so try cheap iterates first; certification is exact either way
    for budget in (500, 5000, 50000):
        approx, residual, _, last = recursive_iteration(game, player, kernel, default, max_sweeps=budget)
        found = _certify_candidates(game, player, kernel, default, approx, last, dens)
        if found is not None or residual < 1e-12:
            return found
    return None


def _certify_candidates(game, player, kernel, default, approx, last, dens):
    for den in dens:
        cand = [Fraction(float(x)).limit_denominator(den) for x in approx]
        for s, pair in game.gamma.items():
            cand[s] = pair[player]
        if max(abs(float(c) - float(a)) for c, a in zip(cand, approx)) > 1e-3:
            continue
        mine, theirs = _candidate_strategies(game, player, kernel, cand, last)
        for x in mine:
            low = _exact_guarantees(game, player, x, kernel, default, guarantor=True)
            if low is None:
                return None
            if any(low[s] < cand[s] for s in game.nonabsorbing):
                continue
            for y in theirs:
                high = _exact_guarantees(game, player, y, kernel, default, guarantor=False)
                if high is not None and all(high[s] <= cand[s] for s in game.nonabsorbing):
                    return tuple(cand)
            break
    return None


def _candidate_strategies(game, player, kernel, cand, last):
    mine_rows, their_rows = {}, {}
    for s in game.nonabsorbing:
        res = one_shot_value(game, cand, s, player, kernel, exact=True)
        mine_rows[s], their_rows[s] = [tuple(res[1])], [tuple(res[2])]
    if last is not None:
        x1, x2 = last
        mine_arr, their_arr = (x1, x2) if player == 0 else (x2, x1)
        for s in game.nonabsorbing:
            for store, arr in ((mine_rows, mine_arr), (their_rows, their_arr)):
                try:
                    snapped = snap_mixed(arr[s], 10**4)
                except GameError:
                    continue
                if snapped not in store[s]:
                    store[s].append(snapped)

    def assemble(rows, who):
        n = game.n_actions[who]
        out = []
        for pick in range(2):
            table = []
            for s in range(game.n_states):
                if s in rows:
                    table.append(rows[s][min(pick, len(rows[s]) - 1)])
                else:
                    table.append(tuple(Fraction(int(k == 0)) for k in range(n)))
            if table not in out:
                out.append(table)
        return out

    return assemble(mine_rows, player), assemble(their_rows, 1 - player)


def _pre(game, kernel, v, player):
    P = kernel.dense
    out = v.copy()
    for s in game.nonabsorbing:
        out[s] = solve_matrix_game(_oriented(P[s] @ v, player)).value
    return out


def _nested_fixpoint(game, kernel, player, marked, outer_start, inner_start, tol, cap):
    """Alternating fixpoint: states in ``marked`` read the outer iterate, the rest the inner one."""
    outer = outer_start.copy()
    for _ in range(cap):
        inner = inner_start.copy()
        for _ in range(cap):
            pre_inner = _pre(game, kernel, inner, player)
            pre_outer = _pre(game, kernel, outer, player)
            nxt = inner.copy()
            for s in game.nonabsorbing:
                nxt[s] = pre_outer[s] if s in marked else pre_inner[s]
            d = float(np.max(np.abs(nxt - inner), initial=0.0))
            inner = nxt
            if d < tol:
                break
        d = float(np.max(np.abs(inner - outer), initial=0.0))
        outer = inner
        if d < tol:
            return outer, d
    return outer, d


def omega_values(game: StochasticGame, player: int, tol: float = 1e-8, cap: int = 2000,
                 kernel: Kernel | None = None):
    """Approximate values of Buchi and co-Buchi objectives via nested one-shot fixpoints."""
    kernel = resolve_kernel(game, kernel)
    obj = game.objectives[player]
    if isinstance(obj, Buchi):
        marked, win, lose, kind = obj.target, float(obj.win), float(obj.lose), "buchi"
    elif isinstance(obj, CoBuchi):
        marked, win, lose, kind = obj.avoid, float(obj.win), float(obj.lose), "cobuchi"
    else:
        raise GameError("not a Buchi-type objective")
    if win < lose:
        # visiting infinitely often with a low payoff is the dual objective
        kind = "cobuchi" if kind == "buchi" else "buchi"
        win, lose = lose, win
    hi = game.gamma_vector(player)
    lo = game.gamma_vector(player)
    for s in game.nonabsorbing:
        hi[s], lo[s] = win, lose
    if kind == "buchi":
        return _nested_fixpoint(game, kernel, player, set(marked), hi, lo, tol, cap)
    return _nested_fixpoint(game, kernel, player, set(marked), lo, hi, tol, cap)


def maxmin_values(game: StochasticGame, player: int, method: str | None = None,
                  grid: Sequence[float] = DEFAULT_GRID, tol: float = 1e-10,
                  kernel: Kernel | None = None) -> ValueVector:
    """Maxmin values of ``player``, dispatched on the objective."""
    obj = game.objectives[player]
    if isinstance(obj, Discounted):
        return discounted_value(game, player, float(obj.lam), tol, kernel)[0]
    if not obj.shift_invariant:
        raise NotShiftInvariant("objective not shift-invariant")
    if isinstance(obj, LongRunAverage):
        series, extrap, delta = vanishing_discount(game, player, grid, tol)
        best = extrap[-1] if extrap else series[-1]
        vals = list(best)
        for s, pair in game.gamma.items():
            vals[s] = float(pair[player])
        return ValueVector(player, tuple(float(x) for x in vals), False, delta, "vanishing-discount extrapolation")
    if isinstance(obj, RecursiveAbsorbing):
        if method != "iterative":
            exact = exact_absorbing_values(game, player, kernel)
            if exact is not None:
                return ValueVector(player, exact, True, 0.0, "certified by exact stationary guarantees")
        v, residual, sweeps, _ = recursive_iteration(game, player, kernel)
        return ValueVector(player, tuple(float(x) for x in v), False, max(residual, 1e-12),
                           f"recursive iteration, {sweeps} sweeps")
    v, d = omega_values(game, player, kernel=kernel)
    return ValueVector(player, tuple(float(x) for x in v), False, max(d, 1e-8), "approximate nested fixpoint")


# ------------------------------------------------------------- Y approximation

def candidate_Y(game: StochasticGame, player: int, grid: Sequence[float] = DEFAULT_GRID,
                cluster_tol: float = 0.05, tail: int | None = None) -> dict:
    """Cluster discounted optimal mixed actions of ``player`` along a decreasing grid.

    Returns ``{state: (representative mixed actions, ...)}`` for non-absorbing
    states. ``tail`` keeps only the last grid points (closest to the limit).
    """
    if not grid:
        raise GameError("empty discount grid")
    if cluster_tol <= 0:
        raise GameError("cluster tolerance must be positive")
    pts = list(grid)[-tail:] if tail else list(grid)
    samples = []
    for lam in pts:
        _, (x1, x2) = discounted_value(game, player, lam)
        samples.append(x1 if player == 0 else x2)
    out = {}
    for s in game.nonabsorbing:
        clusters: list[list[np.ndarray]] = []
        for x in samples:
            for members in clusters:
                centre = np.mean(members, axis=0)
                if np.max(np.abs(centre - x[s])) <= cluster_tol:
                    members.append(x[s])
                    break
            else:
                clusters.append([x[s]])
        reps = []
        for members in clusters:
            rep = snap_mixed(np.mean(members, axis=0), 10**4, floor=1e-6)
            if rep not in reps:
                reps.append(rep)
        out[s] = tuple(reps)
    return out


def candidate_family(game: StochasticGame, grid: Sequence[float] = DEFAULT_GRID, cluster_tol: float = 0.05,
                     tail: int | None = 3) -> ActionSets:
    """Both players' clustered discounted optima as a family of action lists."""
    y1 = candidate_Y(game, 0, grid, cluster_tol, tail)
    y2 = candidate_Y(game, 1, grid, cluster_tol, tail)
    return ActionSets({s: (y1[s], y2[s]) for s in game.nonabsorbing})


def delta_maxmin_strategy(game: StochasticGame, player: int, delta: float, proxy: ValueFunctionProxy,
                          tol: float = 1e-9, kernel: Kernel | None = None) -> np.ndarray:
    """Stationary strategy optimal in the one-shot game on ``proxy`` at every state.

    Raises if the proxy fails its submartingale-generating invariant
    (one-shot value below the proxy at some state).
    """
    n = game.n_actions[player]
    out = np.zeros((game.n_states, n))
    out[:, 0] = 1.0
    for s in game.nonabsorbing:
        val, mine, _ = one_shot_value(game, proxy.values, s, player, kernel)
        if val < float(proxy.values[s]) - tol - delta:
            raise GameError(f"proxy invariant violated at state {game.states[s]}")
        out[s] = mine
    return out


# --------------------------------------------------------- entry-parity utility

def entry_parity_value(game: StochasticGame, history: History, player: int, max_rounds: int = 10**4) -> Fraction:
    """Exact subgame value of an entry-parity objective after ``history``.

    The objective pays ``win`` iff the target state is first entered at an
    even stage; a subgame is a product of state and stage parity, solved by
    exact iteration from the losing payoff.
    """
    obj = game.objectives[player]
    if not isinstance(obj, EntryParity):
        raise GameError("objective is not an entry-parity objective")
    for k, s in enumerate(history.states, start=1):
        if s == obj.target:
            return obj.win if k % 2 == 0 else obj.lose
    table = _parity_table(game, player, obj, max_rounds)
    return table[(history.last, history.length % 2)]


def _parity_table(game, player, obj, max_rounds):
    keys = [(s, par) for s in range(game.n_states) for par in (0, 1)]
    low, high = min(obj.win, obj.lose), max(obj.win, obj.lose)
    start = obj.lose if obj.win >= obj.lose else obj.win
    val = {k: start for k in keys}

    def nxt(par):
        return lambda _h, _a1, _a2, t: (
            (obj.win if (1 - par) == 0 else obj.lose) if t == obj.target else val[(t, 1 - par)]
        )

    for _ in range(max_rounds):
        new = {}
        for s, par in keys:
            if s == obj.target:
                new[(s, par)] = val[(s, par)]
                continue
            res = one_shot_value(game, nxt(par), s, player, exact=True)
            new[(s, par)] = frac(res[0])
        if new == val:
            break
        val = new
    assert all(low <= v <= high for v in val.values())
    return val
