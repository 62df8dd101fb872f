"""Monte Carlo runs, product-chain payoffs, best responses and equilibrium verification.

Randomness: run ``r`` of a simulation with master seed ``seed`` draws from
``Generator(Philox(SeedSequence(seed, spawn_key=(r,))))``. Philox is a
counter-based generator, so every run has its own reproducible stream that
does not depend on how many runs precede it or on the platform.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix

from . import mdp
from .automaton import StrategyAutomaton
from .game import (
    Buchi,
    CoBuchi,
    Discounted,
    GameError,
    Kernel,
    LongRunAverage,
    RecursiveAbsorbing,
    StochasticGame,
    resolve_kernel,
)

MAX_PRODUCT = 200_000


# -------------------------------------------------------------- product chain

@dataclass
class ProductChain:
    nodes: list  # (state, memory1, memory2)
    index: dict
    matrix: csr_matrix
    mixed: list  # per node: (x1 floats, x2 floats)


def _floats(x) -> np.ndarray:
    return np.array([float(w) for w in x])


def product_chain(game: StochasticGame, auto1: StrategyAutomaton, auto2: StrategyAutomaton, starts,
                  kernel: Kernel | None = None) -> ProductChain:
    """Reachable part of the Markov chain on (state, memory of player 1, memory of player 2)."""
    kernel = resolve_kernel(game, kernel)
    P = kernel.dense
    nodes, index, mixed = [], {}, []
    rows, cols, vals = [], [], []
    queue = deque()

    def visit(node):
        if node not in index:
            if len(nodes) >= MAX_PRODUCT:
                raise GameError("product chain exceeds the size cap")
            index[node] = len(nodes)
            nodes.append(node)
            queue.append(node)
        return index[node]

    for s in starts:
        visit((s, auto1.initial(s), auto2.initial(s)))
    while queue:
        node = queue.popleft()
        s, m1, m2 = node
        i = index[node]
        x1, x2 = auto1.action(m1, s), auto2.action(m2, s)
        mixed.append(None)
        mixed[i] = (_floats(x1), _floats(x2))
        acc = {}
        for a1, w1 in enumerate(x1):
            if not w1:
                continue
            for a2, w2 in enumerate(x2):
                if not w2:
                    continue
                w = float(w1) * float(w2)
                for t in np.nonzero(P[s, a1, a2])[0]:
                    t = int(t)
                    nxt = (t, auto1.update(m1, s, a1, a2, t), auto2.update(m2, s, a1, a2, t))
                    j = visit(nxt)
                    acc[j] = acc.get(j, 0.0) + w * P[s, a1, a2, t]
        for j, p in acc.items():
            rows.append(i)
            cols.append(j)
            vals.append(p)
    n = len(nodes)
    matrix = csr_matrix((vals, (rows, cols)), shape=(n, n))
    return ProductChain(nodes, index, matrix, mixed)


def _stage_reward(game: StochasticGame, i: int, s: int, x1, x2) -> float:
    g = game.stage_arrays[i][s]
    return float(x1 @ g @ x2)


def chain_payoffs(game: StochasticGame, chain: ProductChain, i: int) -> np.ndarray:
    """Expected payoff of player ``i`` from every node of a product chain."""
    obj = game.objectives[i]
    nodes = chain.nodes
    if isinstance(obj, Discounted):
        lam = float(obj.lam)
        from scipy.sparse import identity
        from scipy.sparse.linalg import spsolve
        r = np.array([_stage_reward(game, i, node[0], *chain.mixed[k]) for k, node in enumerate(nodes)])
        a = (identity(len(nodes), format="csc") - (1 - lam) * chain.matrix).tocsc()
        return np.atleast_1d(spsolve(a, lam * r))
    if isinstance(obj, RecursiveAbsorbing):
        def value(members, _stat):
            s = nodes[members[0]][0]
            return float(game.gamma[s][i]) if s in game.gamma else float(obj.default)
    elif isinstance(obj, LongRunAverage):
        def value(members, stat):
            pi = stat()
            r = np.array([_stage_reward(game, i, nodes[k][0], *chain.mixed[k]) for k in members])
            return float(pi @ r)
    elif isinstance(obj, (Buchi, CoBuchi)):
        marked = obj.target if isinstance(obj, Buchi) else obj.avoid
        hit_value, miss_value = (obj.win, obj.lose) if isinstance(obj, Buchi) else (obj.lose, obj.win)

        def value(members, _stat):
            hit = any(nodes[k][0] in marked for k in members)
            return float(hit_value if hit else miss_value)
    else:
        raise GameError(f"no chain payoff for objective {type(obj).__name__}")
    return mdp.chain_values(chain.matrix, value)


def on_path_values(game: StochasticGame, auto1, auto2, starts=None, kernel=None) -> dict:
    """``{s: (payoff1, payoff2)}`` for each initial state ``s``."""
    starts = list(game.nonabsorbing) if starts is None else list(starts)
    chain = product_chain(game, auto1, auto2, starts, kernel)
    u = [chain_payoffs(game, chain, i) for i in (0, 1)]
    out = {}
    for s in starts:
        k = chain.index[(s, auto1.initial(s), auto2.initial(s))]
        out[s] = (float(u[0][k]), float(u[1][k]))
    return out


def absorption_probabilities(game: StochasticGame, auto1, auto2, starts=None, kernel=None) -> dict:
    starts = list(game.nonabsorbing) if starts is None else list(starts)
    chain = product_chain(game, auto1, auto2, starts, kernel)
    nodes = chain.nodes
    vals = mdp.chain_values(chain.matrix, lambda members, _st: float(nodes[members[0]][0] in game.gamma))
    return {s: float(vals[chain.index[(s, auto1.initial(s), auto2.initial(s))]]) for s in starts}


# -------------------------------------------------------------- best response

@dataclass
class BestResponse:
    values: dict  # initial state -> best-response payoff
    policy: dict  # (state, opponent memory) -> action
    size: int


def best_response(game: StochasticGame, opponent: StrategyAutomaton, responder: int, starts=None,
                  kernel: Kernel | None = None, tol: float = 1e-10) -> BestResponse:
    """Optimal payoff of ``responder`` against a finite-memory opponent (product decision process)."""
    kernel = resolve_kernel(game, kernel)
    P = kernel.dense
    starts = list(game.nonabsorbing) if starts is None else list(starts)
    obj = game.objectives[responder]
    m_own = game.n_actions[responder]
    nodes, index = [], {}
    queue = deque()

    def visit(node):
        if node not in index:
            if len(nodes) >= MAX_PRODUCT:
                raise GameError("product decision process exceeds the size cap")
            index[node] = len(nodes)
            nodes.append(node)
            queue.append(node)
        return index[node]

    for s in starts:
        visit((s, opponent.initial(s)))
    actions = []
    g = game.stage_arrays[responder]
    while queue:
        node = queue.popleft()
        s, m = node
        y = opponent.action(m, s)
        acts = []
        for a in range(m_own):
            succ = {}
            reward = 0.0
            for b, w in enumerate(y):
                if not w:
                    continue
                a1, a2 = (a, b) if responder == 0 else (b, a)
                w = float(w)
                reward += w * g[s, a1, a2]
                for t in np.nonzero(P[s, a1, a2])[0]:
                    t = int(t)
                    j = visit((t, opponent.update(m, s, a1, a2, t)))
                    succ[j] = succ.get(j, 0.0) + w * P[s, a1, a2, t]
            acts.append((list(succ.items()), reward))
        actions.append(acts)
    n = len(nodes)
    if isinstance(obj, Discounted):
        values, policy = _discounted_mdp(actions, float(obj.lam), tol)
    else:
        terminal = {}
        objective = ("mean", None)
        if isinstance(obj, RecursiveAbsorbing):
            for k, (s, _) in enumerate(nodes):
                if s in game.gamma:
                    terminal[k] = float(game.gamma[s][responder])
            actions = [[(succ, float(obj.default)) for succ, _ in acts] for acts in actions]
        elif isinstance(obj, (Buchi, CoBuchi)):
            marked = obj.target if isinstance(obj, Buchi) else obj.avoid
            kind = "buchi" if isinstance(obj, Buchi) else "cobuchi"
            objective = (kind, ({k for k, (s, _) in enumerate(nodes) if s in marked}, obj.win, obj.lose))
        elif not isinstance(obj, LongRunAverage):
            raise GameError(f"no best response for objective {type(obj).__name__}")
        proc = mdp.DecisionProcess(n, actions, terminal, objective)
        sol = mdp.solve(proc)
        values, policy = sol.values, sol.policy
    return BestResponse(
        {s: float(values[index[(s, opponent.initial(s))]]) for s in starts},
        {nodes[k]: policy[k] for k in range(n)},
        n,
    )


def _discounted_mdp(actions, lam, tol):
    n = len(actions)
    v = np.zeros(n)
    while True:
        q = [[lam * r + (1 - lam) * sum(p * v[t] for t, p in succ) for succ, r in acts] for acts in actions]
        nv = np.array([max(row) for row in q])
        if np.max(np.abs(nv - v), initial=0.0) < tol * lam / max(1 - lam, 1e-12):
            return nv, [int(np.argmax(row)) for row in q]
        v = nv


# --------------------------------------------------------------- verification

@dataclass
class VerificationReport:
    gaps: tuple
    on_path: dict
    best: dict
    epsilon: float
    tol: float
    method: str
    verdict: str
    runtime: float
    worst_states: tuple = ()

    def to_json(self, game: StochasticGame) -> dict:
        return {
            "gaps": list(self.gaps),
            "on_path": {game.states[s]: list(v) for s, v in self.on_path.items()},
            "best_response": {game.states[s]: list(v) for s, v in self.best.items()},
            "epsilon": self.epsilon,
            "tol": self.tol,
            "method": self.method,
            "verdict": self.verdict,
            "runtime": self.runtime,
            "worst_states": [None if s is None else game.states[s] for s in self.worst_states],
        }


def verify_equilibrium(game: StochasticGame, auto1, auto2, epsilon: float, tol: float = 1e-6,
                       starts=None, kernel: Kernel | None = None) -> VerificationReport:
    """Best-response gaps of both players against a finite-memory pair, from every initial state."""
    t0 = time.perf_counter()
    starts = list(game.nonabsorbing) if starts is None else list(starts)
    if not starts:
        return VerificationReport((0.0, 0.0), {}, {}, epsilon, tol, "exact product decision process",
                                  "PASS", time.perf_counter() - t0, (None, None))
    on = on_path_values(game, auto1, auto2, starts, kernel)
    br = [best_response(game, auto2, 0, starts, kernel), best_response(game, auto1, 1, starts, kernel)]
    best = {s: (br[0].values[s], br[1].values[s]) for s in starts}
    gaps, worst = [], []
    for i in (0, 1):
        diffs = {s: best[s][i] - on[s][i] for s in starts}
        s_max = max(diffs, key=diffs.get)
        gaps.append(max(0.0, diffs[s_max]))
        worst.append(s_max)
    verdict = "PASS" if all(gap <= epsilon + tol for gap in gaps) else "FAIL"
    return VerificationReport(tuple(gaps), on, best, epsilon, tol, "exact product decision process",
                              verdict, time.perf_counter() - t0, tuple(worst))


# ----------------------------------------------------------------- simulation

@dataclass
class RunRecord:
    absorbed_at: int | None
    absorbing_state: int | None
    trigger: str | None
    trigger_stage: int | None
    payoff: tuple


@dataclass
class SimulationStats:
    seed: int
    horizon: int
    start: int
    records: list = field(default_factory=list)
    mean_payoff: tuple = (0.0, 0.0)
    half_width: tuple = (0.0, 0.0)
    absorption_rate: float = 0.0
    trigger_rates: dict = field(default_factory=dict)

    def to_json(self, game: StochasticGame) -> dict:
        out = asdict(self)
        out["start"] = game.states[self.start]
        out["method"] = "normal approximation, 1.96 standard errors"
        out["records"] = [
            {**asdict(r), "absorbing_state": None if r.absorbing_state is None else game.states[r.absorbing_state]}
            for r in self.records
        ]
        return out


def run_stream(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(run,))))


def _draw(rng, probs) -> int:
    u = rng.random()
    acc = 0.0
    for k, p in enumerate(probs):
        acc += p
        if u < acc:
            return k
    return int(np.flatnonzero(np.asarray(probs) > 0)[-1])


def _run_payoff(game, i, states, rewards, absorbed):
    obj = game.objectives[i]
    if isinstance(obj, RecursiveAbsorbing):
        return float(game.gamma[absorbed][i]) if absorbed is not None else float(obj.default)
    if isinstance(obj, LongRunAverage):
        return float(np.mean(rewards[i]))
    if isinstance(obj, Discounted):
        lam = float(obj.lam)
        return float(sum(lam * (1 - lam) ** t * r for t, r in enumerate(rewards[i])))
    if isinstance(obj, (Buchi, CoBuchi)):
        tail = states[len(states) // 2:]
        if isinstance(obj, Buchi):
            return float(obj.win if any(s in obj.target for s in tail) else obj.lose)
        return float(obj.lose if any(s in obj.avoid for s in tail) else obj.win)
    raise GameError(f"no run payoff for objective {type(obj).__name__}")


def simulate(game: StochasticGame, auto1, auto2, start: int, horizon: int, n_runs: int, seed: int,
             kernel: Kernel | None = None) -> SimulationStats:
    if horizon < 1 or n_runs < 1:
        raise GameError("horizon and number of runs must be positive")
    kernel = resolve_kernel(game, kernel)
    P = kernel.dense
    g = game.stage_arrays
    cache = {}

    def floats(x):
        key = tuple(x)
        if key not in cache:
            cache[key] = [float(w) for w in x]
        return cache[key]

    records = []
    for r in range(n_runs):
        rng = run_stream(seed, r)
        s = start
        m1, m2 = auto1.initial(s), auto2.initial(s)
        states = [s]
        rewards = ([], [])
        absorbed_at = None
        trigger, trigger_stage = None, None
        for t in range(1, horizon + 1):
            if s in game.gamma and absorbed_at is None:
                absorbed_at = t
                if not any(isinstance(o, (LongRunAverage, Discounted, Buchi, CoBuchi)) for o in game.objectives):
                    break
            a1 = _draw(rng, floats(auto1.action(m1, s)))
            a2 = _draw(rng, floats(auto2.action(m2, s)))
            rewards[0].append(g[0][s, a1, a2])
            rewards[1].append(g[1][s, a1, a2])
            nxt = _draw(rng, P[s, a1, a2])
            m1 = auto1.update(m1, s, a1, a2, nxt)
            m2 = auto2.update(m2, s, a1, a2, nxt)
            if trigger is None:
                fired = auto1.triggers(m1) or auto2.triggers(m2)
                if fired:
                    trigger, trigger_stage = fired, t
            s = nxt
            states.append(s)
        if absorbed_at is None and s in game.gamma:
            absorbed_at = len(states)
        absorbing_state = s if s in game.gamma else None
        payoff = tuple(_run_payoff(game, i, states, rewards, absorbing_state) for i in (0, 1))
        records.append(RunRecord(absorbed_at, absorbing_state, trigger, trigger_stage, payoff))
    pay = np.array([rec.payoff for rec in records])
    mean = tuple(float(x) for x in pay.mean(axis=0))
    sd = pay.std(axis=0, ddof=1) if n_runs > 1 else np.zeros(2)
    half = tuple(float(1.96 * x / math.sqrt(n_runs)) for x in sd)
    rates = {}
    for rec in records:
        if rec.trigger:
            rates[rec.trigger] = rates.get(rec.trigger, 0) + 1
    rates = {k: v / n_runs for k, v in sorted(rates.items())}
    absorption = sum(rec.absorbing_state is not None for rec in records) / n_runs
    return SimulationStats(seed, horizon, start, records, mean, half, absorption, rates)
