"""End-to-end chaining of the value, structure, auxiliary-game and assembly steps."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .equilibrium import Config, assemble_global
from .game import ActionSets, StochasticGame, load_family, load_game
from .recursive_game import build_auxiliary, recursive_epsilon_equilibrium, recursive_values
from .simulate import verify_equilibrium
from .structure import audit_structure, decompose
from .values import DEFAULT_GRID, candidate_family, maxmin_values


@dataclass
class PipelineResult:
    game: StochasticGame
    family: ActionSets
    family_source: str
    values: tuple
    decomposition: object = None
    audit: object = None
    aux: object = None
    aux_values: object = None
    certificate: object = None
    strategies: tuple = None
    report: object = None
    timings: dict = field(default_factory=dict)


def load(document):
    """Game plus the document's action-set family (None when the document has none)."""
    game = load_game(document)
    return game, load_family(document, game)


def family_for(game, family=None, grid=DEFAULT_GRID, cluster_tol: float = 0.05) -> tuple:
    if family is not None:
        return family, "document"
    return candidate_family(game, grid, cluster_tol), "clustered discounted optima"


def run_pipeline(game: StochasticGame, family: ActionSets | None = None, config: Config | None = None,
                 grid=DEFAULT_GRID, cluster_tol: float = 0.05, stop: str = "verify", check_values: bool = False,
                 punish_enabled: bool = True, exit_override: dict | None = None,
                 strict: bool = False) -> PipelineResult:
    """Run the chain up to ``stop`` (one of values, decompose, aux, equilibrium, verify).

    Unless ``strict``, sets failing their exit property are dropped from the
    decomposition and listed in its ``skipped`` diagnostics.
    """
    config = config or Config()
    clock = {}
    t = time.perf_counter()
    values = (maxmin_values(game, 0, grid=grid), maxmin_values(game, 1, grid=grid))
    fam, source = family_for(game, family, grid, cluster_tol)
    clock["values"] = time.perf_counter() - t
    res = PipelineResult(game, fam, source, values, timings=clock)
    if stop == "values":
        return res
    t = time.perf_counter()
    res.decomposition = decompose(game, fam, *values, strict=strict)
    res.audit = audit_structure(game, res.decomposition)
    clock["decompose"] = time.perf_counter() - t
    if stop == "decompose":
        return res
    t = time.perf_counter()
    res.aux = build_auxiliary(game, res.decomposition)
    res.aux_values = recursive_values(res.aux, values, check=check_values)
    res.certificate = recursive_epsilon_equilibrium(res.aux, config.epsilon, v2=values[1])
    clock["aux"] = time.perf_counter() - t
    if stop == "aux":
        return res
    t = time.perf_counter()
    res.strategies = assemble_global(game, res.decomposition, res.certificate, values, config, punish_enabled,
                                     exit_override)
    clock["equilibrium"] = time.perf_counter() - t
    if stop == "equilibrium":
        return res
    t = time.perf_counter()
    res.report = verify_equilibrium(game, *res.strategies, config.epsilon, tol=1e-3)
    clock["verify"] = time.perf_counter() - t
    return res
