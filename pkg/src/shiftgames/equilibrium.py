"""Strategy transformers, deviation detectors and assembly of the global strategy pair.

The global pair is a plan with public memory: both players observe states
and actions, so each player's automaton tracks the same memory and plays its
own coordinate of the prescription. Phases:

* ``play``: outside the third family follow the auxiliary equilibrium; inside
  a set, steer to the designated exit state and implement the exit;
* ``("punish", j)``: the other player holds player ``j`` to her maxmin level;
* ``"mutual"``: both players punish each other.

A support violation sends the deviator to punishment. A global time limit
(the number of non-absorbed stages) sends both players to mutual punishment;
it is calibrated so that compliant play rarely reaches it and keeps the
memory finite.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .automaton import PlanView, StationaryAutomaton, stationary
from .game import (
    GameError,
    History,
    LongRunAverage,
    RecursiveAbsorbing,
    Discounted,
    StochasticGame,
    StationaryStrategy,
    pure,
    snap_mixed,
    step_distribution,
    support,
)
from .recursive_game import AuxiliaryGame, EquilibriumCertificate
from .simulate import best_response, product_chain
from .structure import Decomposition, F1Set, F2Set, StructureError, UnilateralExit, _fracs, reach_witness, _profile
from .values import DEFAULT_GRID, discounted_value, recursive_iteration


@dataclass
class Config:
    epsilon: float = 0.05
    mu: float = 1e-2
    rho: float = 1e-2
    delta: float = 1e-3
    det_horizon: int = 64
    stat_tol: float = 0.1
    deadline_share: float = 0.05  # share of epsilon that compliant play may lose to the time limit
    max_deadline: int = 5000

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise GameError("epsilon must lie in (0, 1)")
        for name in ("mu", "rho", "delta", "stat_tol", "deadline_share"):
            if getattr(self, name) <= 0:
                raise GameError(f"{name} must be positive")
        if self.mu >= 1:
            raise GameError("mu must lie in (0, 1)")
        if self.det_horizon < 1:
            raise GameError("detector horizon must be at least 1")


# ------------------------------------------------------------------ trimming

@dataclass
class Trimmed:
    pi: tuple  # (table of player 1, table of player 2)
    removed: tuple  # per player: {state: removed actions}
    mass: tuple  # per player: {state: trimmed probability mass}


def _leave(game, C, s, x1, x2) -> Fraction:
    d = step_distribution(game, s, x1, x2)
    return sum((w for t, w in enumerate(d) if t not in C), Fraction(0))


def trim_strategy(game: StochasticGame, C, sigma: tuple, rho) -> Trimmed:
    """Remove, inside ``C``, the actions that leave ``C`` with probability at least ``rho`` against the
    opponent's current mixed action, and renormalize the rest."""
    C = frozenset(C)
    rho = Fraction(rho)
    tables = [list(map(tuple, sigma[0])), list(map(tuple, sigma[1]))]
    out = [list(t) for t in tables]
    removed, mass = ({}, {}), ({}, {})
    for s in sorted(C):
        for i in (0, 1):
            x_opp = tables[1 - i][s]
            n = game.n_actions[i]
            bad = []
            for a in range(n):
                prof = (pure(a, n), x_opp) if i == 0 else (x_opp, pure(a, n))
                if _leave(game, C, s, *prof) >= rho:
                    bad.append(a)
            x = tables[i][s]
            cut = sum((x[a] for a in bad), Fraction(0))
            removed[i][s] = tuple(bad)
            mass[i][s] = cut
            if cut == 0:
                continue
            if cut == 1:
                raise GameError(f"trimming removes the whole support at state {game.states[s]}")
            out[i][s] = tuple(Fraction(0) if a in bad else w / (1 - cut) for a, w in enumerate(x))
    return Trimmed((out[0], out[1]), removed, mass)


def l_inf(x, y) -> Fraction:
    return max(abs(a - b) for a, b in zip(x, y))


# ---------------------------------------------------------------------- zeta

def zeta_step(game: StochasticGame, C, x_i, a_j: int, s: int, player: int) -> Fraction:
    """Fictitious leaving probability at ``s``: player ``player`` mixes ``x_i``, the other plays ``a_j``."""
    C = frozenset(C)
    if s not in C:
        raise GameError("state outside the set")
    n = game.n_actions[1 - player]
    prof = (x_i, pure(a_j, n)) if player == 0 else (pure(a_j, n), x_i)
    return _leave(game, C, s, *prof)


def zeta_expectation_identity(game: StochasticGame, C, sigma: tuple, horizon: int, player: int, start: int,
                              stop=None) -> tuple:
    """Both sides of the zeta identity by exhaustive tree expansion.

    ``sigma`` holds two stationary tables. The stopping time is the first
    stage ``t <= horizon`` at which ``stop(states, actions)`` holds (``horizon``
    otherwise). Returns ``(E[zeta(h^theta)], P(the play left C before stage theta))``,
    where leaving before stage theta means some ``s^k`` with ``k <= theta`` lies outside C.
    """
    C = frozenset(C)
    if start not in C:
        raise GameError("start state outside the set")
    if horizon < 1:
        raise GameError("horizon must be at least 1")
    lhs, rhs = Fraction(0), Fraction(0)
    # stack items: (states, actions, probability, zeta, left)
    stack = [((start,), (), Fraction(1), Fraction(0), False)]
    while stack:
        states, actions, prob, zeta, left = stack.pop()
        t = len(states)
        if t == horizon or (stop is not None and stop(states, actions)):
            lhs += prob * zeta
            rhs += prob * int(left)
            continue
        s = states[-1]
        x1, x2 = sigma[0][s], sigma[1][s]
        for a1, w1 in enumerate(x1):
            if not w1:
                continue
            for a2, w2 in enumerate(x2):
                if not w2:
                    continue
                if left:
                    inc = Fraction(0)
                else:
                    inc = zeta_step(game, C, sigma[player][s], a2 if player == 0 else a1, s, player)
                for nxt, p in enumerate(game.kernel.rows[s][a1][a2]):
                    if p:
                        stack.append((states + (nxt,), actions + ((a1, a2),), prob * w1 * w2 * p, zeta + inc,
                                      left or nxt not in C))
    return lhs, rhs


# ----------------------------------------------------------------- detectors

ZETA_GRID = 2 ** 32


def _quantize_up(x: Fraction) -> Fraction:
    return Fraction(math.ceil(x * ZETA_GRID), ZETA_GRID)


@dataclass
class DetectorBundle:
    C: frozenset
    sigma: tuple
    threshold: Fraction  # sqrt(mu), rounded down to the zeta grid
    match_prob: dict  # state -> probability of staying in C and matching the target statistic
    mu: float
    horizon: int
    target: tuple
    stat_tol: float = 0.1  # match tolerance after calibration on compliant play

    def start(self):
        return (Fraction(0), Fraction(0), None)  # zeta of player 1, zeta of player 2, trigger

    def step(self, memory, s, a1, a2, t):
        z1, z2, fired = memory
        if fired is not None or s not in self.C:
            return memory
        x1, x2 = self.sigma[0][s], self.sigma[1][s]
        if x1[a1] == 0 or x2[a2] == 0:
            return (z1, z2, ("theta0", 0 if x1[a1] == 0 else 1))
        game_state_left = t not in self.C
        z1 = _quantize_up(z1 + self._inc(s, 0, a2))
        z2 = _quantize_up(z2 + self._inc(s, 1, a1))
        if z1 > self.threshold:
            return (z1, z2, ("theta2", 1))
        if z2 > self.threshold:
            return (z1, z2, ("theta2", 0))
        if not game_state_left and self.match_prob[t] < 1 - self.mu:
            return (z1, z2, ("theta1", None))
        return (z1, z2, None)

    def _inc(self, s, player, a_other):
        return self._table[(s, player, a_other)]

    def prepare(self, game):
        self._table = {}
        for s in self.C:
            for player in (0, 1):
                for a in range(game.n_actions[1 - player]):
                    self._table[(s, player, a)] = zeta_step(game, self.C, self.sigma[player][s], a, s, player)
        return self


def _window_deviations(game, C, sigma, horizon, target) -> dict:
    """Per start state of C, the law of the largest distance between a window statistic and ``target``
    over runs that stay in C for ``horizon`` stages, as sorted ``(distance, probability)`` pairs.

    Averages are used for average payoffs; a recursive payoff contributes the
    distance of its non-absorbed payoff.
    """
    g = game.stage_arrays
    out = {}
    for s0 in C:
        dist = {(s0, 0.0, 0.0): 1.0}
        for _ in range(horizon):
            nxt = {}
            for (s, r1, r2), p in dist.items():
                x1 = [float(w) for w in sigma[0][s]]
                x2 = [float(w) for w in sigma[1][s]]
                for a1, w1 in enumerate(x1):
                    if not w1:
                        continue
                    for a2, w2 in enumerate(x2):
                        if not w2:
                            continue
                        for t, q in enumerate(game.kernel.rows[s][a1][a2]):
                            if not q or t not in C:
                                continue
                            key = (t, round(r1 + g[0][s, a1, a2], 9), round(r2 + g[1][s, a1, a2], 9))
                            nxt[key] = nxt.get(key, 0.0) + p * w1 * w2 * float(q)
            dist = nxt
        law = {}
        for (_, r1, r2), p in dist.items():
            d = 0.0
            for i, r in ((0, r1), (1, r2)):
                obj = game.objectives[i]
                if isinstance(obj, LongRunAverage):
                    d = max(d, abs(r / horizon - float(target[i])))
                elif isinstance(obj, RecursiveAbsorbing):
                    d = max(d, abs(float(obj.default) - float(target[i])))
            d = round(d, 9)
            law[d] = law.get(d, 0.0) + p
        out[s0] = sorted(law.items())
    return out


def _match_mass(law, tol) -> float:
    return sum(p for d, p in law if d <= tol)


def calibrated_tolerance(laws: dict, mu: float, floor: float) -> float:
    """Smallest tolerance, at least ``floor``, under which compliant play matches with probability >= 1 - mu
    from every state; ``floor`` when no tolerance achieves it (play then leaves the set too often)."""
    tol = floor
    for law in laws.values():
        if _match_mass(law, tol) >= 1 - mu:
            continue
        for d, _ in law:
            if d > tol and _match_mass(law, d) >= 1 - mu:
                tol = d
                break
    return tol


def make_detectors(game: StochasticGame, C, sigma: tuple, mu: float, horizon: int, target: tuple,
                   stat_tol: float = 0.1) -> DetectorBundle:
    if horizon < 1:
        raise GameError("detector horizon must be at least 1")
    if not 0 < mu < 1:
        raise GameError("mu must lie in (0, 1)")
    C = frozenset(C)
    threshold = Fraction(math.floor(math.sqrt(mu) * ZETA_GRID), ZETA_GRID)
    laws = _window_deviations(game, C, sigma, horizon, target)
    tol = calibrated_tolerance(laws, mu, stat_tol)
    match = {s: _match_mass(law, tol) for s, law in laws.items()}
    return DetectorBundle(C, sigma, threshold, match, mu, horizon, tuple(target), tol).prepare(game)


# --------------------------------------------------------------- punishment

@dataclass
class Punishment:
    player: int  # the punisher
    punished: int
    strategy: StationaryStrategy
    excess: float  # worst best-response payoff of the punished player minus her maxmin value
    values: tuple  # best-response payoffs of the punished player per state


def _min_tables(game, j):
    """Candidate stationary strategies of the opponent of ``j`` that hold ``j`` down."""
    obj = game.objectives[j]
    cands = []
    if isinstance(obj, RecursiveAbsorbing):
        for tol, sweeps in ((1e-10, 5000), (1e-6, 500)):
            _, _, _, (smax, smin) = recursive_iteration(game, j, tol=tol, max_sweeps=sweeps)
            cands.append(smin)
    if isinstance(obj, (RecursiveAbsorbing, LongRunAverage, Discounted)):
        lams = [float(obj.lam)] if isinstance(obj, Discounted) else list(DEFAULT_GRID[-3:])
        for lam in lams:
            _, (x1, x2) = discounted_value(game, j, lam)
            cands.append(x2 if j == 0 else x1)
    if not cands:
        raise GameError(f"no punishment oracle for objective {type(obj).__name__}")
    i = 1 - j
    n = game.n_actions[i]
    out = []
    for arr in cands:
        table = []
        for s in range(game.n_states):
            try:
                table.append(snap_mixed(arr[s], 10**4, floor=1e-6))
            except GameError:
                table.append(pure(0, n))
        if table not in out:
            out.append(table)
    return out


def punishment_strategy(game: StochasticGame, punished: int, delta: float, values, tol: float = 1e-6) -> Punishment:
    """Stationary strategy of the other player keeping ``punished`` within ``delta`` of her maxmin value,
    certified by a best-response computation."""
    v = [float(x) for x in (values.values if hasattr(values, "values") else values)]
    best = None
    for table in _min_tables(game, punished):
        auto = stationary(game, 1 - punished, table)
        br = best_response(game, auto, punished, starts=range(game.n_states))
        vals = tuple(br.values[s] for s in range(game.n_states))
        excess = max((vals[s] - v[s] for s in game.nonabsorbing), default=0.0)
        if best is None or excess < best.excess:
            best = Punishment(1 - punished, punished, StationaryStrategy(1 - punished, tuple(auto.table)), excess, vals)
    return best


# ----------------------------------------------------------- in-set equilibrium

class InSetPlan:
    """Follow a stationary pair inside ``C`` with detectors; any trigger starts mutual punishment."""

    def __init__(self, game, detectors: DetectorBundle, sigma, punish: tuple, enabled: bool = True):
        self.game = game
        self.det = detectors
        self.sigma = sigma
        self.punish = punish  # (table punishing player 2 played by 1, table punishing player 1 played by 2)
        self.enabled = enabled

    def initial(self, s):
        return self.det.start()

    def prescribe(self, memory, s):
        if memory[2] is not None and self.enabled:
            return self.punish[0][s], self.punish[1][s]
        return self.sigma[0][s], self.sigma[1][s]

    def update(self, memory, s, a1, a2, t):
        return self.det.step(memory, s, a1, a2, t)

    def triggers(self, memory):
        return None if memory[2] is None else memory[2][0]

    def to_json(self, game):
        return {
            "type": "in-set plan",
            "set": [game.states[s] for s in sorted(self.det.C)],
            "threshold": float(self.det.threshold),
            "mu": self.det.mu,
            "horizon": self.det.horizon,
            "stat_tol": self.det.stat_tol,
        }


def in_set_equilibrium(game: StochasticGame, C, sigma: tuple, target: tuple, config: Config, values: tuple,
                       enabled: bool = True):
    if values is None or len(values) != 2:
        raise GameError("punishment values are required")
    det = make_detectors(game, C, sigma, config.mu, config.det_horizon, target, config.stat_tol)
    p2 = punishment_strategy(game, 1, config.delta, values[1])  # player 1 punishes player 2
    p1 = punishment_strategy(game, 0, config.delta, values[0])
    plan = InSetPlan(game, det, sigma, (p2.strategy.table, p1.strategy.table), enabled)
    return PlanView(plan, 0), PlanView(plan, 1)


# ------------------------------------------------------------- global assembly

@dataclass
class ExitRoutine:
    states: frozenset
    exits: list  # (state, x1, x2) per cycle slot
    funnels: dict  # target state -> {state: (x1, x2)}
    nested: dict = field(default_factory=dict)  # state -> ExitRoutine of an inner first-family set
    make: object = None  # exit intensity -> exit slots
    intensity: Fraction = Fraction(1)
    compliant: tuple = (0.0, 0.0)  # per player, expected payoff of following the routine

    def rescale(self, eta: Fraction):
        if self.make is not None:
            self.intensity = eta
            self.exits = self.make(eta)

    def prescription(self, k: int, s: int):
        if s in self.nested:
            return self.nested[s].prescription(0, s)
        state, x1, x2 = self.exits[k]
        if s == state:
            return x1, x2
        return self.funnels[state][s]


def _funnels(game, E, cells, targets, kernel=None, skip=frozenset()):
    out = {}
    for tau in targets:
        zone, choice = reach_witness(game, E, cells, tau, kernel)
        if zone != E:
            return None
        out[tau] = _profile(game, {u: o for u, o in choice.items() if u not in skip})
    return out


def _mix(a, b, eta: Fraction):
    return tuple(eta * x + (1 - eta) * y for x, y in zip(a, b))


def _unilateral_slots(e: UnilateralExit, n: int):
    """Exit slot where the exiting player plays her exit action with weight eta and her keeper otherwise."""
    def make(eta):
        mine = _mix(pure(e.action, n), tuple(e.keeper), eta)
        pair = (tuple(e.opponent), mine) if e.player == 1 else (mine, tuple(e.opponent))
        return [(e.state, *pair)]
    return make


def _joint_slots(game, exits):
    m1, m2 = game.n_actions
    weights = [(e, w * e.leave) for e, w in exits]
    total = sum(w for _, w in weights)
    weights = [(e, w / total) for e, w in weights]
    base = min(e.leave for e, _ in weights)

    def make(eta):
        scale = eta * base
        out = []
        done = Fraction(0)
        for e, w in weights:
            pi = scale * w / (1 - scale * done)
            out.append((e.state, pure(e.a1, m1), _mix(pure(e.a2, m2), e.x2, pi / e.leave)))
            done += w
        return out
    return make


def _f1_routine(game, dec: Decomposition, c: F1Set) -> ExitRoutine:
    if isinstance(c.exit, UnilateralExit):
        make = _unilateral_slots(c.exit, game.n_actions[c.exit.player])
    else:
        make = _joint_slots(game, c.exit)
    exits = make(Fraction(1))
    cells = {u: dec.X.cells[u] for u in c.C}
    funnels = _funnels(game, c.C, cells, {x[0] for x in exits})
    if funnels is None:
        raise StructureError("first-family set has no funnel under the original kernel")
    return ExitRoutine(c.C, exits, funnels, make=make)


def _f2_routine(game, dec: Decomposition, d: F2Set, f1_routines: dict) -> ExitRoutine:
    e = d.exit
    make = _unilateral_slots(e, game.n_actions[e.player])
    exits = make(Fraction(1))
    funnels = _funnels(game, d.D, d.cells, [e.state])
    if funnels is not None:
        return ExitRoutine(d.D, exits, funnels, make=make)
    nested = {}
    for k, c in enumerate(dec.F1):
        if c.C <= d.D:
            r = f1_routines[k]
            if len(r.exits) > 1:
                raise StructureError("nested first-family set with a mixed joint exit is not supported")
            for u in c.C:
                nested[u] = r
    funnels = _funnels(game, d.D, d.cells, [e.state], dec.p_hat, skip=frozenset(nested))
    if funnels is None:
        raise StructureError("second-family set has no funnel")
    return ExitRoutine(d.D, exits, funnels, nested, make=make)


class GlobalPlan:
    """Public-memory plan: memory is ``(phase, stage counter, exit slot)``."""

    def __init__(self, game, routines: dict, sigma_r: tuple, punish: dict, own: tuple, deadline: int | None,
                 punish_enabled: bool = True, flag: str = "CERTIFIED"):
        self.game = game
        self.routines = routines  # state -> ExitRoutine
        self.sigma_r = sigma_r
        self.punish = punish  # punished player -> table of the punisher
        self.own = own  # per player: table played while being punished
        self.deadline = deadline
        self.punish_enabled = punish_enabled
        self.flag = flag

    def initial(self, s):
        return ("play", 0, 0)

    def prescribe(self, memory, s):
        phase, _, k = memory
        if phase == "mutual":
            return self.punish[1][s], self.punish[0][s]
        if isinstance(phase, tuple):
            j = phase[1]
            if j == 1:
                return self.punish[1][s], self.own[1][s]
            return self.own[0][s], self.punish[0][s]
        if s in self.game.gamma:
            return self.sigma_r[0][s], self.sigma_r[1][s]
        routine = self.routines.get(s)
        if routine is not None:
            return routine.prescription(k, s)
        return self.sigma_r[0][s], self.sigma_r[1][s]

    def update(self, memory, s, a1, a2, t):
        phase, count, k = memory
        if phase != "play" or s in self.game.gamma:
            return memory
        x1, x2 = self.prescribe(memory, s)
        if self.punish_enabled and (x1[a1] == 0 or x2[a2] == 0):
            if x1[a1] == 0 and x2[a2] == 0:
                return ("mutual", 0, 0)
            return (("punish", 0 if x1[a1] == 0 else 1), 0, 0)
        routine = self.routines.get(s)
        if routine is not None and s not in routine.nested:
            if t in routine.states:
                if s == routine.exits[k][0]:
                    k = (k + 1) % len(routine.exits)
            else:
                k = 0
        elif routine is None:
            k = 0
        if self.deadline is not None and t not in self.game.gamma:
            count += 1
        if self.deadline is not None and count >= self.deadline:
            return ("mutual", 0, 0) if self.punish_enabled else ("play", self.deadline, k)
        return ("play", count, k)

    def triggers(self, memory):
        phase = memory[0]
        if phase == "play":
            return None
        if phase == "mutual":
            return "deadline or joint deviation"
        return f"deviation of player {phase[1] + 1}"

    def to_json(self, game):
        return {
            "type": "global plan",
            "status": self.flag,
            "deadline": self.deadline,
            "punishment": self.punish_enabled,
            "sets": sorted({tuple(game.states[s] for s in sorted(r.states)) for r in self.routines.values()}),
            "auxiliary_strategy": [
                {game.states[s]: [str(w) for w in x] for s, x in enumerate(table)} for table in self.sigma_r
            ],
        }


def _deadline(game, plan: GlobalPlan, share: float, cap: int) -> int | None:
    """Smallest number of non-absorbed stages after which compliant play has absorbed with all but ``share``
    of its eventual absorption probability, from every initial state."""
    plan.deadline = None
    view1, view2 = PlanView(plan, 0), PlanView(plan, 1)
    starts = list(game.nonabsorbing)
    if not starts:
        return None
    chain = product_chain(game, view1, view2, starts)
    from .mdp import chain_values

    absorbed = np.array([float(node[0] in game.gamma) for node in chain.nodes])
    final = chain_values(chain.matrix, lambda members, _st: float(chain.nodes[members[0]][0] in game.gamma))
    idx = [chain.index[(s, plan.initial(s), plan.initial(s))] for s in starts]
    dist = np.zeros((len(idx), len(chain.nodes)))
    for r, k in enumerate(idx):
        dist[r, k] = 1.0
    P = chain.matrix.T.tocsr()
    for n in range(1, cap + 1):
        dist = (P @ dist.T).T
        if all(dist[r] @ absorbed >= final[k] - share for r, k in enumerate(idx)):
            return n
    return cap


def _deviation_worth(game, routine: ExitRoutine, values: tuple, delta: float) -> float:
    """Largest gain over compliant play that a detected deviation at an exit state can secure."""
    worth = []
    for j in (0, 1):
        vj = values[j].values if hasattr(values[j], "values") else values[j]
        worth.append([float(game.gamma[t][j]) if t in game.gamma else float(vj[t]) + delta
                      for t in range(game.n_states)])
    out = -math.inf
    for state, x1, x2 in routine.exits:
        mine = (x1, x2)
        for j in (0, 1):
            n = game.n_actions[j]
            for a in range(n):
                if mine[j][a]:
                    continue
                pair = (pure(a, n), x2) if j == 0 else (x1, pure(a, n))
                dist = step_distribution(game, state, *pair)
                gain = sum(float(p) * worth[j][t] for t, p in enumerate(dist) if p) - routine.compliant[j]
                out = max(out, gain)
    return out


def exit_intensity(game, routine: ExitRoutine, values: tuple, config: Config, floor: int = 12) -> Fraction:
    """Largest intensity 2^-k (k <= floor) at which no detected deviation at an exit state pays more than
    a quarter of epsilon over compliant play; the routine is rescaled in place."""
    eta = Fraction(1)
    for _ in range(floor + 1):
        routine.rescale(eta)
        if _deviation_worth(game, routine, values, config.delta) <= config.epsilon / 4:
            return eta
        eta /= 2
    routine.rescale(Fraction(1, 2**floor))
    return routine.intensity


def assemble_global(game: StochasticGame, dec: Decomposition | None, cert: EquilibriumCertificate, values: tuple,
                    config: Config, punish_enabled: bool = True, exit_override: dict | None = None):
    """Build both players' automata for the global strategy pair."""
    routines = {}
    if dec is not None:
        f1_routines = {k: _f1_routine(game, dec, c) for k, c in enumerate(dec.F1)}
        for E, fam, k in dec.F3:
            if fam == "F1":
                r = f1_routines[k]
            else:
                r = _f2_routine(game, dec, dec.F2[k], f1_routines)
            for s in E:
                routines[s] = r
    if exit_override:
        for s, exits in exit_override.items():
            routines[s].exits = exits
            routines[s].make = None
    for r in {id(r): r for r in routines.values()}.values():
        # compliant continuation inside the set is the auxiliary payoff of any of its states
        first = min(r.states)
        r.compliant = (float(cert.payoffs[0][first]), float(cert.payoffs[1][first]))
        if r.make is not None:
            exit_intensity(game, r, values, config)
    p2 = punishment_strategy(game, 1, config.delta, values[1])
    p1 = punishment_strategy(game, 0, config.delta, values[0])
    punish = {1: p2.strategy.table, 0: p1.strategy.table}
    own = (_own_tables(game, 0), _own_tables(game, 1))
    plan = GlobalPlan(game, routines, (cert.x1, cert.x2), punish, own, None, punish_enabled, cert.status)
    plan.deadline = _deadline(game, plan, config.deadline_share * config.epsilon, config.max_deadline)
    return PlanView(plan, 0), PlanView(plan, 1)


def _own_tables(game, i):
    """What a punished player keeps playing: her own recursive or discounted maxmin strategy."""
    obj = game.objectives[i]
    n = game.n_actions[i]
    if isinstance(obj, RecursiveAbsorbing):
        _, _, _, (smax, smin) = recursive_iteration(game, i, tol=1e-10, max_sweeps=5000)
        arr = smax
    else:
        _, (x1, x2) = discounted_value(game, i, DEFAULT_GRID[-1])
        arr = x1 if i == 0 else x2
    out = []
    for s in range(game.n_states):
        try:
            out.append(snap_mixed(arr[s], 10**4, floor=1e-6))
        except GameError:
            out.append(pure(0, n))
    return out


# ---------------------------------------------------------------- deletion map

def compress_history(game: StochasticGame, dec: Decomposition, states, actions) -> tuple:
    """Delete completed passages through third-family sets, keeping each entry state.

    Returns ``(states, actions)`` of the auxiliary-game history; dummy
    states carry the action pair ``(0, 0)``.
    """
    sets = {s: E for E, _, _ in dec.F3 for s in E}
    out_s, out_a = [states[0]], []
    k = 0
    while k < len(states) - 1:
        s = states[k]
        E = sets.get(s)
        if E is None:
            out_a.append(actions[k])
            out_s.append(states[k + 1])
            k += 1
            continue
        j = k
        while j + 1 < len(states) and states[j + 1] in E:
            j += 1
        if j + 1 >= len(states):
            break  # still inside: the passage is not completed
        out_a.append((0, 0))
        out_s.append(states[j + 1])
        k = j + 1
    return tuple(out_s), tuple(out_a)


def compressed_is_valid(game: StochasticGame, dec: Decomposition, states, actions) -> bool:
    cs, ca = compress_history(game, dec, states, actions)
    try:
        History.build(game, cs, ca, dec.p_tilde)
    except GameError:
        return False
    return cs[-1] == states[-1] or states[-1] in {s for E, _, _ in dec.F3 for s in E}
