"""Command-line entry point: ``shiftgames <subcommand> --input game.json [options]``.

Every subcommand writes a JSON report to standard output (and to ``--out``
or ``$SHIFTGAMES_OUT`` when given). Exit codes: 0 success, 2 when the
auxiliary solver could not certify its profile, 1 on errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .equilibrium import Config
from .fixtures import DOCUMENTS
from .game import GameError, game_to_json
from .pipeline import load, run_pipeline
from .simulate import simulate
from .values import DEFAULT_GRID, candidate_Y

SUBCOMMANDS = ("values", "decompose", "aux", "equilibrium", "simulate", "verify", "audit")
OUT_ENV = "SHIFTGAMES_OUT"


def _grid(text: str) -> tuple:
    try:
        grid = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("lambda grid must be comma-separated numbers") from None
    if not grid or any(not 0 < x < 1 for x in grid):
        raise argparse.ArgumentTypeError("lambda grid values must lie in (0, 1)")
    return grid


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftgames", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--input", required=True, help="game JSON file, or the name of a built-in fixture")
    parser.add_argument("--epsilon", type=float, default=0.05)
    parser.add_argument("--mu", type=float, default=1e-2)
    parser.add_argument("--rho", type=float, default=1e-2)
    parser.add_argument("--delta", type=float, default=1e-3)
    parser.add_argument("--lambda-grid", type=_grid, default=DEFAULT_GRID)
    parser.add_argument("--cluster-tol", type=float, default=0.05)
    parser.add_argument("--det-horizon", type=int, default=64)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="output directory for the JSON report")
    parser.add_argument("--runs", type=int, default=1000)
    parser.add_argument("--horizon", type=int, default=1000)
    parser.add_argument("--start", default=None, help="initial state for simulate (default: first state)")
    parser.add_argument("--strict", action="store_true",
                        help="fail when a candidate set has no admissible exit instead of dropping it")
    return parser


def _read_input(ref: str):
    if ref in DOCUMENTS:
        return DOCUMENTS[ref]()
    path = Path(ref)
    if not path.exists():
        raise GameError(f"input file not found: {ref}")
    with path.open() as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameError(f"input is not valid JSON: {exc}") from None


def _values_report(res, args) -> dict:
    game = res.game
    y = [candidate_Y(game, i, args.lambda_grid, args.cluster_tol) for i in (0, 1)]
    return {
        "values": [v.to_json() for v in res.values],
        "candidate_Y": [
            {game.states[s]: [[str(w) for w in x] for x in reps] for s, reps in yi.items()} for yi in y
        ],
        "family": res.family.to_json(game),
        "family_source": res.family_source,
    }


def _structure_report(res) -> dict:
    return {"decomposition": res.decomposition.to_json(res.game), "audit": res.audit.to_json(res.game)}


def _aux_report(res) -> dict:
    aux_game = res.aux.game
    return {
        "auxiliary_game": game_to_json(aux_game),
        "dummy_states": [aux_game.states[s] for s in sorted(res.aux.dummy)],
        "values": res.aux_values.to_json(aux_game),
        "certificate": res.certificate.to_json(aux_game),
    }


def execute(args) -> tuple:
    """Run one subcommand; returns ``(report dict, exit code)``."""
    config = Config(epsilon=args.epsilon, mu=args.mu, rho=args.rho, delta=args.delta, det_horizon=args.det_horizon)
    if args.cluster_tol <= 0 or args.runs < 1 or args.horizon < 1:
        raise GameError("cluster tolerance, runs and horizon must be positive")
    game, family = load(_read_input(args.input))
    stop = {"values": "values", "decompose": "decompose", "audit": "decompose", "aux": "aux"}.get(args.command)
    stop = stop or ("equilibrium" if args.command == "simulate" else "verify")
    res = run_pipeline(game, family, config, args.lambda_grid, args.cluster_tol, stop=stop, strict=args.strict)
    out = {"command": args.command, "input": args.input, "epsilon": args.epsilon}
    out.update(_values_report(res, args))
    code = 0
    if args.command in ("decompose", "audit", "aux", "equilibrium", "simulate", "verify"):
        out.update(_structure_report(res))
        if args.command == "audit" and not res.audit.clean:
            out["audit_clean"] = False
    if args.command in ("aux", "equilibrium", "simulate", "verify"):
        out.update(_aux_report(res))
        if not res.certificate.certified:
            code = 2
    if args.command in ("equilibrium", "verify", "simulate"):
        out["strategies"] = [auto.to_json(game) for auto in res.strategies]
    if args.command in ("equilibrium", "verify"):
        out["verification"] = res.report.to_json(game)
    if args.command == "simulate":
        start = game.index(args.start) if args.start is not None else 0
        stats = simulate(game, *res.strategies, start, args.horizon, args.runs, args.seed)
        out["simulation"] = stats.to_json(game)
    return out, code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        report, code = execute(args)
    except (GameError, OSError) as exc:
        print(f"shiftgames: error: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    print(text)
    out_dir = args.out or os.environ.get(OUT_ENV)
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{args.command}.json").write_text(text + "\n")
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
