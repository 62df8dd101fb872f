"""Single-controller solvers for prefix-independent objectives.

A decision process here is a finite set of states, each with a list of
actions; an action is a sparse successor distribution plus a stage reward.
Terminal states carry fixed values. The objective of the non-terminal part
is one of

* ``("mean", None)``: long-run average of the stage rewards,
* ``("buchi", (targets, win, lose))``,
* ``("cobuchi", (avoid, win, lose))``.

Values are computed by the end-component method: every maximal end component
gets the best payoff achievable while staying inside it, and the value is
the optimal expected payoff of the component in which play settles, found
with one linear program. Chains are processes with one action per state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix


@dataclass
class DecisionProcess:
    n: int
    actions: list = field(default_factory=list)  # actions[s] = [(succ: list[(t, p)], reward)]
    terminal: dict = field(default_factory=dict)  # state -> fixed value
    objective: tuple = ("mean", None)

    def __post_init__(self):
        if not self.actions:
            self.actions = [[] for _ in range(self.n)]


# ------------------------------------------------------------- end components

def maximal_end_components(proc: DecisionProcess, allowed: set | None = None) -> list[tuple[frozenset, dict]]:
    """Maximal end components among non-terminal states (optionally restricted to ``allowed``).

    Returns ``(states, internal)`` pairs where ``internal[s]`` lists the action
    indices of ``s`` whose successors stay inside the component.
    """
    pool = {s for s in range(proc.n) if s not in proc.terminal}
    if allowed is not None:
        pool &= set(allowed)

    def succ(s, k):
        return [t for t, p in proc.actions[s][k][0] if p > 0]

    acts = {s: [k for k in range(len(proc.actions[s])) if all(t in pool for t in succ(s, k))] for s in pool}
    while True:
        live = {s for s in acts if acts[s]}
        g = nx.DiGraph()
        g.add_nodes_from(live)
        for s in live:
            for k in acts[s]:
                g.add_edges_from((s, t) for t in succ(s, k))
        label = {}
        for i, comp in enumerate(nx.strongly_connected_components(g)):
            for s in comp:
                label[s] = i
        changed = False
        for s in list(acts):
            if s not in live:
                del acts[s]
                changed = True
                continue
            keep = [k for k in acts[s] if all(t in label and label[t] == label[s] for t in succ(s, k))]
            if keep != acts[s]:
                acts[s] = keep
                changed = True
        if not changed:
            break
    groups = {}
    for s in acts:
        groups.setdefault(label[s], set()).add(s)
    result = [(frozenset(c), {s: acts[s] for s in c}) for c in groups.values()]
    result.sort(key=lambda item: min(item[0]))
    return result


def _component_value(proc: DecisionProcess, comp: frozenset, internal: dict) -> float:
    kind, data = proc.objective
    if kind == "mean":
        return _max_mean_in_component(proc, comp, internal)
    marked, win, lose = data
    win, lose = float(win), float(lose)
    options = []
    if kind == "buchi":
        if comp & set(marked):
            options.append(win)
        if maximal_end_components(_restricted(proc, comp, internal), comp - set(marked)):
            options.append(lose)
    else:
        if maximal_end_components(_restricted(proc, comp, internal), comp - set(marked)):
            options.append(win)
        if comp & set(marked):
            options.append(lose)
    return max(options)


def _restricted(proc: DecisionProcess, comp, internal) -> DecisionProcess:
    sub = DecisionProcess(proc.n, [[] for _ in range(proc.n)], {}, proc.objective)
    for s in comp:
        sub.actions[s] = [proc.actions[s][k] for k in internal[s]]
    for s in range(proc.n):
        if s not in comp:
            sub.terminal[s] = 0.0
    return sub


def _max_mean_in_component(proc: DecisionProcess, comp, internal) -> float:
    """Best average reward inside an end component: LP over state-action frequencies."""
    pairs = [(s, k) for s in sorted(comp) for k in internal[s]]
    rewards = np.array([float(proc.actions[s][k][1]) for s, k in pairs])
    if np.ptp(rewards) == 0:
        return float(rewards[0])
    index = {s: i for i, s in enumerate(sorted(comp))}
    rows, cols, vals = [], [], []
    for j, (s, k) in enumerate(pairs):
        rows.append(index[s])
        cols.append(j)
        vals.append(1.0)
        for t, p in proc.actions[s][k][0]:
            if p > 0:
                rows.append(index[t])
                cols.append(j)
                vals.append(-float(p))
    m = len(comp)
    a_eq = coo_matrix((vals, (rows, cols)), shape=(m, len(pairs))).toarray()
    a_eq = np.vstack([a_eq, np.ones(len(pairs))])
    b_eq = np.zeros(m + 1)
    b_eq[-1] = 1.0
    res = linprog(-rewards, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"component LP failed: {res.message}")
    return float(-res.fun)


# -------------------------------------------------------------------- solving

@dataclass
class Solution:
    values: np.ndarray
    policy: list  # per state: action index (or None for terminal states)
    components: list


def solve(proc: DecisionProcess, maximize: bool = True) -> Solution:
    """Optimal values (and a greedy optimal policy) of a decision process."""
    if not maximize:
        flipped = _negated(proc)
        sol = solve(flipped, True)
        return Solution(-sol.values, sol.policy, sol.components)

    comps = maximal_end_components(proc)
    comp_of = {}
    floor = {}
    for ci, (comp, internal) in enumerate(comps):
        w = _component_value(proc, comp, internal)
        for s in comp:
            comp_of[s] = ci
            floor[s] = w
    free = [s for s in range(proc.n) if s not in proc.terminal]
    pos = {s: i for i, s in enumerate(free)}
    values = np.zeros(proc.n)
    for s, v in proc.terminal.items():
        values[s] = float(v)
    if free:
        rows, cols, vals, rhs = [], [], [], []
        r = 0
        lower = np.full(len(free), -np.inf)
        for s in free:
            if s in floor:
                lower[pos[s]] = floor[s]
            for succ, _ in proc.actions[s]:
                # v(s) - sum_t p v(t) >= terminal contribution, written as <= for linprog
                const = 0.0
                rows.append(r)
                cols.append(pos[s])
                vals.append(-1.0)
                for t, p in succ:
                    if p <= 0:
                        continue
                    if t in proc.terminal:
                        const += float(p) * float(proc.terminal[t])
                    else:
                        rows.append(r)
                        cols.append(pos[t])
                        vals.append(float(p))
                rhs.append(-const)
                r += 1
        a_ub = coo_matrix((vals, (rows, cols)), shape=(r, len(free))).tocsr()
        bounds = [(None if not np.isfinite(lo) else lo, None) for lo in lower]
        res = linprog(np.ones(len(free)), A_ub=a_ub, b_ub=np.array(rhs), bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"reachability LP failed: {res.message}")
        for s in free:
            values[s] = res.x[pos[s]]
    policy = _greedy_policy(proc, values, comps, comp_of, floor)
    return Solution(values, policy, comps)


def _negated(proc: DecisionProcess) -> DecisionProcess:
    kind, data = proc.objective
    if kind != "mean":
        marked, win, lose = data
        data = (marked, -float(win), -float(lose))
    actions = [[(succ, -float(rew)) for succ, rew in acts] for acts in proc.actions]
    terminal = {s: -float(v) for s, v in proc.terminal.items()}
    return DecisionProcess(proc.n, actions, terminal, (kind, data))


def _greedy_policy(proc, values, comps, comp_of, floor, tol: float = 1e-7) -> list:
    """Optimal actions chosen so that play makes progress toward where the value is realized."""
    policy = [None] * proc.n
    done = set(proc.terminal)
    for s in range(proc.n):
        if s in comp_of and values[s] <= floor[s] + tol:
            done.add(s)
    optimal = {}
    for s in range(proc.n):
        if s in proc.terminal:
            continue
        opts = []
        for k, (succ, _) in enumerate(proc.actions[s]):
            q = sum(float(p) * values[t] for t, p in succ)
            if q >= values[s] - tol:
                opts.append(k)
        optimal[s] = opts or list(range(len(proc.actions[s])))
    # inside settled components pick an internal action (first one)
    for s in done - set(proc.terminal):
        internal = comps[comp_of[s]][1][s]
        policy[s] = internal[0] if internal else optimal[s][0]
    frontier = set(done)
    pending = [s for s in range(proc.n) if s not in done]
    while pending:
        progressed = False
        for s in list(pending):
            for k in optimal[s]:
                if any(t in frontier for t, p in proc.actions[s][k][0] if p > 0):
                    policy[s] = k
                    frontier.add(s)
                    pending.remove(s)
                    progressed = True
                    break
        if not progressed:
            for s in pending:
                policy[s] = optimal[s][0] if optimal[s] else None
            break
    return policy


# ---------------------------------------------------------------- exact chains

def solve_linear_exact(a: list, b: list) -> list:
    """Gauss-Jordan elimination over Fractions for a square nonsingular system."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def bottom_classes(matrix: list) -> list[frozenset]:
    """Closed recurrent classes of a finite chain given as a dense row list."""
    n = len(matrix)
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    for s in range(n):
        for t in range(n):
            if matrix[s][t] > 0:
                g.add_edge(s, t)
    cond = nx.condensation(g)
    out = []
    for c in cond.nodes:
        if cond.out_degree(c) == 0:
            out.append(frozenset(cond.nodes[c]["members"]))
    return sorted(out, key=min)


def stationary_exact(matrix: list, cls: frozenset) -> dict:
    """Stationary distribution of an irreducible class (exact)."""
    idx = sorted(cls)
    k = len(idx)
    a = [[(1 if i == j else 0) - matrix[idx[j]][idx[i]] for j in range(k)] for i in range(k)]
    a[-1] = [Fraction(1)] * k
    b = [Fraction(0)] * (k - 1) + [Fraction(1)]
    pi = solve_linear_exact(a, b)
    return dict(zip(idx, pi))


def hitting_probabilities(matrix: list, targets: set) -> list:
    """Exact probability of ever reaching ``targets`` from each state."""
    n = len(matrix)
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    for s in range(n):
        for t in range(n):
            if matrix[s][t] > 0:
                g.add_edge(t, s)
    can = set()
    for t in targets:
        can |= nx.descendants(g, t) | {t}
    unknown = sorted(can - set(targets))
    out = [Fraction(int(s in targets)) for s in range(n)]
    if unknown:
        pos = {s: i for i, s in enumerate(unknown)}
        a = [[(1 if i == j else 0) - matrix[s][unknown[j]] for j in range(len(unknown))] for i, s in enumerate(unknown)]
        b = [sum((matrix[s][t] for t in targets), Fraction(0)) for s in unknown]
        sol = solve_linear_exact(a, b)
        for s in unknown:
            out[s] = sol[pos[s]]
    return out


def chain_values_exact(matrix: list, class_value) -> list:
    """Expected value of ``class_value(cls, stationary)`` over the recurrent class where play settles."""
    n = len(matrix)
    values = [Fraction(0)] * n
    for cls in bottom_classes(matrix):
        val = class_value(cls, lambda c=cls: stationary_exact(matrix, c))
        hit = hitting_probabilities(matrix, set(cls))
        for s in range(n):
            values[s] += hit[s] * val
    return values


# ---------------------------------------------------------------- float chains

def _sparse_graph(matrix) -> nx.DiGraph:
    g = nx.DiGraph()
    n = matrix.shape[0]
    g.add_nodes_from(range(n))
    rows, cols = matrix.nonzero()
    g.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return g


def chain_values(matrix, class_value) -> np.ndarray:
    """Float counterpart of :func:`chain_values_exact` for a scipy sparse (or dense) transition matrix.

    ``class_value(cls, stationary)`` receives the sorted member list of a closed
    class and a thunk returning its stationary distribution as an array.
    """
    from scipy.sparse import csr_matrix, identity
    from scipy.sparse.linalg import spsolve

    P = csr_matrix(matrix)
    n = P.shape[0]
    g = _sparse_graph(P)
    cond = nx.condensation(g)
    values = np.zeros(n)
    reverse = g.reverse(copy=False)
    for c in cond.nodes:
        if cond.out_degree(c):
            continue
        members = sorted(cond.nodes[c]["members"])

        def stationary(members=members):
            k = len(members)
            if k == 1:
                return np.ones(1)
            sub = P[members][:, members].toarray()
            a = np.eye(k) - sub.T
            a[-1] = 1.0
            b = np.zeros(k)
            b[-1] = 1.0
            return np.linalg.solve(a, b)

        val = class_value(members, stationary)
        target = set(members)
        can = set()
        for t in members:
            can |= nx.descendants(reverse, t)
        unknown = sorted(can - target)
        values[members] += val
        if unknown:
            pos = np.array(unknown)
            Q = P[pos][:, pos]
            r = np.asarray(P[pos][:, members].sum(axis=1)).ravel()
            hit = spsolve((identity(len(unknown), format="csc") - Q).tocsc(), r)
            values[pos] += np.atleast_1d(hit) * val
    return values
