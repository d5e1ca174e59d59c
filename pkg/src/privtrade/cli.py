"""Command-line front end: ``privtrade {pce,one,simulate,poa,sweep,export}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

from .dynamics import run_bidding
from .efficiency import analyse, poa_sweep
from .equilibrium import (
    EquilibriumKind,
    individual_rationality,
    solve,
    verify_kkt,
)
from .errors import (
    DivergenceError,
    DomainError,
    NoEquilibriumError,
    PreconditionError,
    RejectedBidError,
    ResultMismatchError,
    ScenarioError,
)
from .exceptions import ScenarioNotFoundError
from .loader import ScenarioFile, export_scenario, load_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SCENARIO = 2
EXIT_SOLVER = 3
EXIT_DIVERGED = 4
EXIT_OUTPUT = 5

MODES = {"competitive": EquilibriumKind.PCE, "oligopoly": EquilibriumKind.ONE}
DEFAULT_SWEEP = (1.0, 10.0, 100.0, 1e3, 1e4, 1e6)


def _round(value: Any) -> Any:
    if isinstance(value, float):
        return float(format(value, ".12g"))
    if isinstance(value, dict):
        return {key: _round(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(item) for item in value]
    return value


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(_round(payload), indent=2))


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if getattr(args, "demand", None) is not None:
        overrides["demand"] = args.demand
    dynamics: Dict[str, Any] = {}
    for flag, key in (("p0", "p0"), ("step_size", "step_size"), ("max_iters", "max_iters")):
        value = getattr(args, flag, None)
        if value is not None:
            dynamics[key] = value
    tol = getattr(args, "tol", None)
    if tol is not None:
        dynamics["tol_abs"] = tol
        dynamics["tol_rel"] = tol
    if dynamics:
        overrides["dynamics"] = dynamics
    return overrides


def _load(args: argparse.Namespace) -> ScenarioFile:
    return load_scenario(args.scenario, overrides=_overrides(args) or None)


def _cmd_equilibrium(kind: EquilibriumKind) -> Callable[[argparse.Namespace], int]:
    def command(args: argparse.Namespace) -> int:
        loaded = _load(args)
        scenario = loaded.scenario
        result = solve(scenario, kind)
        kkt = verify_kkt(result, scenario)
        payload = result.as_dict()
        payload["labels"] = [loaded.label(i) for i in range(scenario.n)]
        payload["kkt_residual"] = max(kkt.max_residual, kkt.balance_residual)
        payload["kkt_passed"] = kkt.passed
        payload["net_revenue"] = individual_rationality(result, scenario).tolist()
        _emit(payload)
        return EXIT_OK
    return command


def _cmd_simulate(args: argparse.Namespace) -> int:
    loaded = _load(args)
    scenario = loaded.scenario
    kind = MODES[args.mode]
    try:
        trajectory = run_bidding(scenario, kind, loaded.dynamics)
    except DivergenceError as exc:
        if args.out:
            exc.trajectory.write_csv(args.out)
        raise

    if args.out:
        trajectory.write_csv(args.out)
    exact = solve(scenario, kind)
    record = trajectory.last
    _emit({
        "mode": args.mode,
        "converged": trajectory.converged,
        "iterations": trajectory.iterations,
        "step_size": trajectory.step_size,
        "final_price": record.price,
        "final_supply_gap": record.supply_gap,
        "exact_price": exact.benefit,
        "distance_to_exact": (trajectory.distance_to(exact)
                              if trajectory.final is not None else None),
    })
    if not trajectory.converged:
        print(f"privtrade: bidding did not converge in {trajectory.iterations} iterations; "
              f"final supply gap {record.supply_gap:.12g}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_poa(args: argparse.Namespace) -> int:
    report = analyse(_load(args).scenario)
    _emit(report.as_dict())
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    table = poa_sweep(args.r, args.c, args.d, n_jobs=args.jobs)
    if args.out:
        table.write_csv(args.out)
    _emit({
        "c": table.c,
        "d": table.d,
        "rows": [
            {"r": row.r, "price_ratio": row.price_ratio, "cost_ratio": row.cost_ratio}
            for row in table
        ],
    })
    return EXIT_OK


def _cmd_export(args: argparse.Namespace) -> int:
    loaded = _load(args)
    target = export_scenario(loaded, args.out)
    _emit({"written": str(target), "n": loaded.scenario.n, "demand": loaded.scenario.demand})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privtrade",
        description="Equilibria, bidding dynamics and efficiency loss of a privacy-trading market.",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="log INFO with -v, DEBUG with -vv (to stderr)")

    scenario = argparse.ArgumentParser(add_help=False)
    scenario.add_argument("--scenario", required=True, metavar="PATH",
                          help="scenario file (.json, .yaml or .toml)")
    scenario.add_argument("--demand", type=float, help="override the total demand d")

    sub = parser.add_subparsers(dest="command", required=True)

    pce = sub.add_parser("pce", parents=[common, scenario],
                         help="solve the perfectly competitive equilibrium")
    pce.set_defaults(handler=_cmd_equilibrium(EquilibriumKind.PCE))

    one = sub.add_parser("one", parents=[common, scenario],
                         help="solve the oligopolistic Nash equilibrium (n >= 3)")
    one.set_defaults(handler=_cmd_equilibrium(EquilibriumKind.ONE))

    simulate = sub.add_parser("simulate", parents=[common, scenario],
                              help="run the distributed bidding loop")
    simulate.add_argument("--mode", choices=sorted(MODES), default="competitive")
    simulate.add_argument("--out", metavar="CSV", help="write the trajectory here")
    simulate.add_argument("--step-size", dest="step_size", type=float)
    simulate.add_argument("--max-iters", dest="max_iters", type=int)
    simulate.add_argument("--tol", type=float, help="absolute and relative tolerance")
    simulate.add_argument("--p0", type=float, help="initial benefit per unit")
    simulate.set_defaults(handler=_cmd_simulate)

    poa = sub.add_parser("poa", parents=[common, scenario],
                         help="compare PCE and ONE against the efficiency bounds")
    poa.set_defaults(handler=_cmd_poa)

    sweep = sub.add_parser("sweep", parents=[common],
                           help="price of anarchy of the worst-case family over r")
    sweep.add_argument("--r", type=float, nargs="+", default=list(DEFAULT_SWEEP))
    sweep.add_argument("--c", type=float, default=1.0)
    sweep.add_argument("--d", type=float, default=1.0)
    sweep.add_argument("--jobs", type=int, default=1, help="joblib workers")
    sweep.add_argument("--out", metavar="CSV", help="write the sweep table here")
    sweep.set_defaults(handler=_cmd_sweep)

    export = sub.add_parser("export", parents=[common, scenario],
                            help="write the (overridden) scenario back to a file")
    export.add_argument("--out", required=True, metavar="PATH")
    export.set_defaults(handler=_cmd_export)

    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(list(argv) if argv is not None else None)
    _configure_logging(args.verbose)

    try:
        return args.handler(args)
    except (ScenarioNotFoundError, ScenarioError) as exc:
        return _fail(EXIT_SCENARIO, exc)
    except DivergenceError as exc:
        return _fail(EXIT_DIVERGED, exc)
    except (NoEquilibriumError, ResultMismatchError, PreconditionError,
            RejectedBidError, DomainError) as exc:
        return _fail(EXIT_SOLVER, exc)
    except OSError as exc:
        return _fail(EXIT_OUTPUT, exc)


def _fail(code: int, exc: Exception) -> int:
    logger.debug("command failed", exc_info=exc)
    print(f"privtrade: error: {exc}", file=sys.stderr)
    return code


__all__: List[str] = ["build_parser", "main"]
